#pragma once

#include <map>
#include <string>
#include <vector>

#include "tagctd/provider.hpp"

namespace tagctd {

// Shared output hygiene for extractors: trim, drop empties, dedup after
// normalization keeping first occurrence, cap at r_max. Throws
// EmptyExtraction when nothing survives.
std::vector<std::string> sanitize_root_labels(std::vector<std::string> raw, int r_max);

// Shared output hygiene for expanders: trim labels, drop empties and
// candidates equal to the node's own label, cap at k.
std::vector<ExpansionCandidate> sanitize_candidates(std::vector<ExpansionCandidate> raw,
                                                    const std::string& node_label, int k);

// Deterministic provider driven by a lookup script. Roots are keyed by the
// modality's input content; expansions by node label. Unknown content is an
// EmptyExtraction; unknown labels expand to nothing (the node is a leaf).
// Pure and reentrant, safe for concurrent calls.
class ScriptedProvider : public Extractor, public Expander {
 public:
  ScriptedProvider() = default;

  void script_roots(Modality m, const std::string& content, std::vector<std::string> labels);
  void script_expansion(const std::string& label, std::vector<ExpansionCandidate> candidates);

  std::vector<std::string> extract_roots(const InputPair& input, Modality modality, int r_max,
                                         CallStats& stats) override;
  std::vector<ExpansionCandidate> expand(const std::string& node_label,
                                         const ExpansionContext& context, int k,
                                         CallStats& stats) override;

  // Script document:
  // { "roots": {"visual": {content: [label]}, "textual": {...}},
  //   "expansions": {label: [{"label","kind","p"}]},
  //   "prefilter_pairs": [[visual label, textual label], ...] }
  static ScriptedProvider from_json(const std::string& bytes);
  static ScriptedProvider from_file(const std::string& path);

  const std::vector<std::pair<std::string, std::string>>& prefilter_pairs() const {
    return prefilter_pairs_;
  }

 private:
  std::map<std::string, std::vector<std::string>> roots_[2];
  std::map<std::string, std::vector<ExpansionCandidate>> expansions_;
  std::vector<std::pair<std::string, std::string>> prefilter_pairs_;
};

// Scripted prefilter: nominates every bipartite pair whose labels match one
// of the scripted label pairs.
class ScriptedPrefilter : public Prefilter {
 public:
  void script_pair(const std::string& visual_label, const std::string& textual_label);
  std::vector<NodePair> nominate(const TagGraph& g, CallStats& stats) override;

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
};

}  // namespace tagctd
