#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagctd/graph.hpp"

namespace tagctd {

struct ExpansionCandidate {
  std::string label;
  AssociationKind kind = AssociationKind::Categorical;
  double prob = 0.0;  // > 0, possibly unnormalized
};

struct PairVerdict {
  bool toxic = false;
  std::optional<std::string> risk_category;  // absent when toxic is false
  std::string rationale;
};

struct LabelPair {
  std::string visual;
  std::string textual;
};

// What an expansion call is grounded in: the roots of both modalities plus
// the immediate parent, so each leap stays a single unmediated step.
struct ExpansionContext {
  std::vector<std::string> visual_roots;
  std::vector<std::string> textual_roots;
  std::optional<std::string> parent_label;
  Modality modality = Modality::Visual;
};

// Input summary handed to adjudication so verdicts can weigh the scene.
struct PairContext {
  std::string source_id;
  std::string caption;
  std::string text;
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  // 1..r_max labels, deduplicated after normalization, each non-empty.
  // Throws EmptyExtraction when the provider yields no entities.
  virtual std::vector<std::string> extract_roots(const InputPair& input, Modality modality,
                                                 int r_max, CallStats& stats) = 0;
};

class Expander {
 public:
  virtual ~Expander() = default;
  // Up to k candidates for one node; candidates matching the node's own
  // label are dropped. Probabilities may be unnormalized.
  virtual std::vector<ExpansionCandidate> expand(const std::string& node_label,
                                                 const ExpansionContext& context, int k,
                                                 CallStats& stats) = 0;
};

class Adjudicator {
 public:
  virtual ~Adjudicator() = default;
  // One verdict per pair, order-aligned. Model-backed implementations issue
  // ceil(|pairs| / batch_size) calls; a reply that cannot be aligned to its
  // pairs is a hard MalformedProviderOutput, never an all-benign default.
  virtual std::vector<PairVerdict> adjudicate_pairs(std::span<const LabelPair> pairs,
                                                    const PairContext& context, int batch_size,
                                                    CallStats& stats) = 0;
};

class Prefilter {
 public:
  virtual ~Prefilter() = default;
  // Nominates suspicious node pairs in one call. Purely an accelerator: the
  // detector still sweeps when nothing nominated turns out toxic.
  virtual std::vector<NodePair> nominate(const TagGraph& g, CallStats& stats) = 0;
};

class Explainer {
 public:
  virtual ~Explainer() = default;
  virtual std::string elaborate(const std::string& detection_summary, CallStats& stats) = 0;
};

// Scales probabilities by 1/sum so they total 1; relative order is kept.
// Throws EmptyCandidateList or NonPositiveProbability.
std::vector<ExpansionCandidate> normalize_probs(std::vector<ExpansionCandidate> cands);

}  // namespace tagctd
