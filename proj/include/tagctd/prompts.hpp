#pragma once

#include <span>
#include <string>

#include "tagctd/chat_client.hpp"
#include "tagctd/datagen.hpp"
#include "tagctd/provider.hpp"

namespace tagctd::prompts {

// Literal strings the parsers key on; changing them breaks reply handling.
inline constexpr const char* kNoRiskClueMarker = "No obvious risk clues identified";
inline constexpr const char* kMemoShape =
    "{risk item}->{normal item}, due to {the common relation between risk and normal item}, "
    "using {technique name}";

// Shared scaffold blocks.
std::string association_kind_catalog();
std::string single_step_rule();
std::string steganography_heuristics();

// Detection path (temperature 0).
ChatRequest extract_roots_request(const std::string& model, Modality modality,
                                  const std::string& content, int r_max);
ChatRequest expand_request(const std::string& model, const std::string& node_label,
                           const ExpansionContext& context, int k);
ChatRequest adjudicate_request(const std::string& model, std::span<const LabelPair> pairs,
                               const PairContext& context);
ChatRequest prefilter_request(const std::string& model, const TagGraph& g);
ChatRequest explain_request(const std::string& model, const std::string& detection_summary);

// Generation agents (temperature 0.8).
ChatRequest architect_request(const std::string& model, const SceneSpec& spec);
ChatRequest eraser_request(const std::string& model, const Scene& scene,
                           const std::optional<std::string>& feedback, int iteration);
// Prompt assembly is the information-flow boundary: blind judges never see
// the erasure memo, the reason-informed judge always does, and the
// forced-reasoning judge gets the risk assertion but not the memo.
ChatRequest judge_request(const std::string& model, const CandidateSample& sample,
                          JudgeProtocol protocol);

inline constexpr double kDetectionTemperature = 0.0;
inline constexpr double kAgentTemperature = 0.8;

}  // namespace tagctd::prompts
