#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagctd/graph.hpp"

namespace tagctd {

struct SceneSpec {
  std::string category;  // non-empty
  std::string short_desc;
  std::vector<std::string> references;  // optional pre-fetched source snippets
};

// The overt starting point the eraser then disguises.
struct Scene {
  std::string harmful_image_description;
  std::string harmful_text_description;
};

enum class JudgeProtocol { Blind, ReasonInformed, ForcedReasoning };
const char* to_string(JudgeProtocol p);

// Fixed panel wiring: judge 1 is reason-informed, judge 3 forced-reasoning,
// judges 2, 4, 5 and 6 are blind.
JudgeProtocol protocol_for_judge(int judge_id);
inline constexpr int kPanelSize = 6;

struct CandidateSample {
  std::string image_prompt;  // text-to-image prompt; synthesis itself is stubbed
  std::string caption;
  std::string text;
  std::string erasure_reason;  // "{risk item}->{normal item}, due to {relation}, using {technique}"
  int iteration = 1;
};

struct ErasureMemo {
  std::string risk_item;
  std::string normal_item;
  std::string common_relation;
  std::string technique;
};

// Parses the normative memo shape; nullopt when it does not match.
std::optional<ErasureMemo> parse_erasure_reason(const std::string& memo);

struct Verdict {
  int judge_id = 0;  // 1..6
  JudgeProtocol protocol = JudgeProtocol::Blind;
  bool has_risk = false;
  std::optional<std::string> risk_category;
  std::string reason;
};

struct GateDecision {
  bool accept = false;
  std::array<bool, kPanelSize> has_risk_lst{};  // judges 1..6 in order
  bool similarity_judge13 = false;              // recorded, never gates
  std::optional<std::string> feedback;          // present iff not accepted
  std::vector<Verdict> verdicts;
};

class ArchitectAgent {
 public:
  virtual ~ArchitectAgent() = default;
  virtual Scene architect(const SceneSpec& spec, CallStats& stats) = 0;
};

class EraserAgent {
 public:
  virtual ~EraserAgent() = default;
  virtual CandidateSample erase(const Scene& scene, const std::optional<std::string>& feedback,
                                int iteration, CallStats& stats) = 0;
};

class JudgeAgent {
 public:
  virtual ~JudgeAgent() = default;
  virtual Verdict judge(const CandidateSample& sample, JudgeProtocol protocol, int judge_id,
                        CallStats& stats) = 0;
};

// Image synthesis is out of band: the stub records nothing and returns no
// path, keeping the pipeline runnable without any image stack.
class TextToImage {
 public:
  virtual ~TextToImage() = default;
  virtual std::optional<std::string> synthesize(const std::string& prompt) {
    (void)prompt;
    return std::nullopt;
  }
};

// Scene validation: both descriptions non-empty with no sentence appearing
// verbatim in both. Throws MalformedProviderOutput.
void validate_scene(const Scene& scene);

// Runs the architect and validates its scene.
Scene run_architect(ArchitectAgent& agent, const SceneSpec& spec, CallStats& stats);

// Runs the eraser and enforces the memo shape, retrying once on a malformed
// memo before raising PatternViolation.
CandidateSample run_eraser(EraserAgent& agent, const Scene& scene,
                           const std::optional<std::string>& feedback, int iteration,
                           CallStats& stats);

// Runs one judge with the panel's protocol wiring enforced.
Verdict run_judge(JudgeAgent& agent, const CandidateSample& sample, int judge_id, CallStats& stats);

using CategorySimilarityFn = std::function<bool(const std::string&, const std::string&)>;

// Consolidates the six verdicts. Acceptance is a pure function of the
// has_risk booleans: both informed judges must see the risk and exactly one
// or two of the four blind judges may. Category similarity between judges 1
// and 3 is recorded but never gates. Throws WrongPanelShape.
GateDecision gatekeep(const std::vector<Verdict>& verdicts,
                      const CategorySimilarityFn& similarity = {});

struct AgentProviders {
  ArchitectAgent& architect;
  EraserAgent& eraser;
  JudgeAgent& judge;
  TextToImage* t2i = nullptr;
  CategorySimilarityFn similarity = {};
};

struct PipelineConfig {
  int max_iters = 5;
  std::string runs_dir = "runs";
  std::string run_id;  // derived from the spec and seed when empty
  int judge_workers = 1;
  std::optional<std::uint64_t> seed;
};

enum class PipelineStatus { Accepted, Exhausted };

struct IterationRecord {
  CandidateSample sample;
  std::vector<Verdict> verdicts;
  GateDecision decision;
};

struct PipelineResult {
  PipelineStatus status = PipelineStatus::Exhausted;
  Scene scene;
  std::optional<CandidateSample> accepted;
  std::vector<IterationRecord> trail;
  std::string run_dir;
  CallStats stats;
};

// generate-evaluate-feedback loop: erase, judge with the full panel,
// gatekeep, feed the feedback to the next erase. Every iteration's artifacts
// are persisted under runs_dir/<run_id>/iter_<n>/ as they happen, so an
// aborted run leaves a usable partial trail.
PipelineResult run_pipeline(const SceneSpec& spec, const PipelineConfig& cfg,
                            AgentProviders providers);

// Accepted samples join evaluation corpora as toxic-labeled entries.
InputPair sample_to_input(const CandidateSample& sample, const SceneSpec& spec,
                          const std::string& run_id);

}  // namespace tagctd
