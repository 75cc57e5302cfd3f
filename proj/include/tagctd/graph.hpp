#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagctd/errors.hpp"

namespace tagctd {

enum class Modality { Visual, Textual };

// The closed set of single-step association relations an edge can carry.
enum class AssociationKind {
  Categorical,
  Functional,
  Spatial,
  Temporal,
  Causal,
  Emotional,
  Similarity,
  Contrast,
  Cultural,
};

const char* to_string(Modality m);
const char* to_string(AssociationKind k);
Modality modality_from_string(const std::string& s);
AssociationKind association_kind_from_string(const std::string& s);

using NodeId = std::uint32_t;

struct ConceptNode {
  NodeId id = 0;
  std::string label;
  Modality modality = Modality::Visual;
  int depth = 0;
  std::optional<NodeId> parent;          // absent iff depth == 0
  std::optional<AssociationKind> kind;   // present iff depth > 0
  double transition_prob = 1.0;          // in (0,1]; 1 for roots
  double cumulative_prob = 1.0;          // product of transition probs along the root path
  std::vector<NodeId> children;
  // Audit only: how many siblings (incl. this node) the parent produced before
  // layer pruning. Not serialized.
  int sibling_count_before_prune = 1;

  bool is_root() const { return depth == 0; }
};

// Provider-call accounting. Batched adjudication makes adjudicated_pairs run
// ahead of adjudication_calls.
struct CallStats {
  std::uint64_t extraction_calls = 0;
  std::uint64_t expansion_calls = 0;
  std::uint64_t adjudication_calls = 0;
  std::uint64_t adjudicated_pairs = 0;
  std::uint64_t cache_hits = 0;

  CallStats& operator+=(const CallStats& o) {
    extraction_calls += o.extraction_calls;
    expansion_calls += o.expansion_calls;
    adjudication_calls += o.adjudication_calls;
    adjudicated_pairs += o.adjudicated_pairs;
    cache_hits += o.cache_hits;
    return *this;
  }
};

struct TagGraph;
TagGraph deserialize_graph(const std::string& bytes);

// Rooted probabilistic concept tree for one modality. Multiple roots are
// allowed as isolated subtrees, each with cumulative probability 1. Mutation
// is limited to insertion, frontier removal and per-layer reordering; all
// probability and structure invariants are enforced at the mutation boundary.
class AssociationTree {
 public:
  AssociationTree(Modality m, int depth_limit);

  NodeId add_root(const std::string& label);

  // Inserts a child under `parent`. `prob` is the conditional transition
  // probability of the new edge, already normalized across the sibling set by
  // the caller. Throws UnknownParent, DepthExceeded, InvalidProbability or
  // EmptyLabel.
  NodeId add_child(NodeId parent, const std::string& label, AssociationKind kind, double prob);

  const ConceptNode& node(NodeId id) const;
  bool contains(NodeId id) const { return nodes_.count(id) != 0; }

  // Stored cumulative transition probability from the root; equals the
  // product along the explicit root-to-node path.
  double cumulative_prob(NodeId id) const { return node(id).cumulative_prob; }

  // Root-to-node id chain, root first, `id` last.
  std::vector<NodeId> path_from_root(NodeId id) const;

  const std::vector<NodeId>& roots() const { return roots_; }
  const std::vector<NodeId>& layer(int depth) const;
  const std::map<NodeId, ConceptNode>& nodes() const { return nodes_; }

  Modality modality() const { return modality_; }
  int depth_limit() const { return depth_limit_; }
  int max_depth() const;
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  // Removes a childless node; used by layer pruning before the node is ever
  // expanded. Throws InvariantViolation if the node has children.
  void erase_leaf(NodeId id);

  // Reorders one layer in place; `order` must be a permutation of the layer.
  void set_layer_order(int depth, std::vector<NodeId> order);

  void set_sibling_count_before_prune(NodeId id, int count);

 private:
  Modality modality_;
  int depth_limit_;
  NodeId next_id_ = 0;
  std::map<NodeId, ConceptNode> nodes_;
  std::vector<NodeId> roots_;
  std::map<int, std::vector<NodeId>> layers_;

  // The document parser rebuilds trees with their original ids and layer
  // order preserved.
  friend TagGraph deserialize_graph(const std::string& bytes);
  static AssociationTree assemble_(Modality m, int depth_limit,
                                   std::vector<ConceptNode> nodes_layer_major,
                                   std::vector<NodeId> root_order);
};

// One evaluated image-text input. The visual side may be a pre-extracted
// caption; a vision endpoint is not required.
struct InputPair {
  std::string id;
  std::optional<std::string> image_path;
  std::optional<std::string> caption;
  std::string text;
  std::optional<int> label;  // ground truth, 0 or 1
  std::optional<std::string> category;
  std::optional<std::string> erasure_reason;

  // Content used to seed the given modality's tree.
  std::string modality_content(Modality m) const {
    if (m == Modality::Textual) return text;
    if (caption && !caption->empty()) return *caption;
    return image_path.value_or("");
  }
};

// The pair of association trees. The cross-modal bipartite candidate set is
// never materialized; enumerate_pairs produces it on demand.
struct TagGraph {
  AssociationTree visual;
  AssociationTree textual;
  InputPair source;
  CallStats build_stats;

  TagGraph(AssociationTree v, AssociationTree t, InputPair src)
      : visual(std::move(v)), textual(std::move(t)), source(std::move(src)) {}
};

enum class PairOrdering { DepthSumThenProb };

struct NodePair {
  NodeId visual = 0;
  NodeId textual = 0;
  bool operator==(const NodePair&) const = default;
};

// All |V_visual| x |V_textual| pairs under a deterministic total order:
// ascending depth sum, then descending joint cumulative probability, then
// (visual id, textual id). The first pair is always a root-root pair.
std::vector<NodePair> enumerate_pairs(const TagGraph& g,
                                      PairOrdering ordering = PairOrdering::DepthSumThenProb);

// Graph document, a single JSON object. Round-trips to structural equality
// with probabilities bit-exact.
std::string serialize_graph(const TagGraph& g);
TagGraph deserialize_graph(const std::string& bytes);

// Equality over the serialized structure: source id, roots order, node set,
// per-node fields (probabilities compared bit-exact) and layer order.
bool structurally_equal(const TagGraph& a, const TagGraph& b);

}  // namespace tagctd
