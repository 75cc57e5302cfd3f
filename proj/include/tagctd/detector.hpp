#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tagctd/graph.hpp"
#include "tagctd/provider.hpp"

namespace tagctd {

struct DetectorConfig {
  int batch_size = 1;
  bool prefilter_enabled = false;
  PairOrdering ordering = PairOrdering::DepthSumThenProb;

  void validate() const;
};

struct MatchedPair {
  NodeId visual = 0;
  NodeId textual = 0;
  std::string risk_category;
  std::string rationale;
};

struct PathStep {
  std::string label;
  std::optional<AssociationKind> kind;  // absent on the root step
  double prob = 1.0;
};

struct DetectionResult {
  int y = 0;
  double c = 1.0;  // exactly 1 when y = 0; 1 - joint cumulative probability when y = 1
  std::optional<MatchedPair> matched;
  std::vector<PathStep> path_visual;   // root-to-node chain of the matched pair
  std::vector<PathStep> path_textual;
  CallStats stats;  // build stats of the graph plus detection accounting
  std::optional<std::string> explanation;
};

// Covertness of a candidate pair: 1 minus the product of the two stored
// root-to-node cumulative probabilities. Zero exactly for a root-root pair.
double mtc(const TagGraph& g, const NodePair& pair);

// Hierarchical early-exit sweep over the bipartite candidate set. Pairs are
// adjudicated in order-contiguous batches; the scan stops at the first batch
// holding a toxic verdict and reports the toxic pair earliest in the order,
// so batch size never changes the outcome. An optional prefilter nominates
// pairs to adjudicate first; a toxic nominee only bounds the sweep, it never
// skips the shallower pairs, and a fruitless prefilter falls back to the
// full sweep.
DetectionResult detect(const TagGraph& g, Adjudicator& adjudicator, const DetectorConfig& cfg,
                       Prefilter* prefilter = nullptr);

// Deterministic explanation for a toxic result; when an explainer provider
// is given its free-text elaboration is prepended and the deterministic
// template kept as an audit suffix. Throws NotToxic for y = 0. Provider
// failures degrade to the template alone, with *degraded set when supplied.
std::string explain(const DetectionResult& result, const TagGraph& g, Explainer* explainer = nullptr,
                    bool* degraded = nullptr);

// One detection report object per input; the machine-readable CLI payload.
std::string detection_report_json(const DetectionResult& result, const TagGraph& g, int indent = 2);

}  // namespace tagctd
