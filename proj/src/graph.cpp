#include "tagctd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

namespace tagctd {

using ordered_json = nlohmann::ordered_json;

const char* to_string(Modality m) { return m == Modality::Visual ? "visual" : "textual"; }

const char* to_string(AssociationKind k) {
  switch (k) {
    case AssociationKind::Categorical: return "categorical";
    case AssociationKind::Functional: return "functional";
    case AssociationKind::Spatial: return "spatial";
    case AssociationKind::Temporal: return "temporal";
    case AssociationKind::Causal: return "causal";
    case AssociationKind::Emotional: return "emotional";
    case AssociationKind::Similarity: return "similarity";
    case AssociationKind::Contrast: return "contrast";
    case AssociationKind::Cultural: return "cultural";
  }
  return "categorical";
}

Modality modality_from_string(const std::string& s) {
  if (s == "visual") return Modality::Visual;
  if (s == "textual") return Modality::Textual;
  fail(Errc::MalformedDocument, "unknown modality '" + s + "'");
}

AssociationKind association_kind_from_string(const std::string& s) {
  static const std::map<std::string, AssociationKind> table = {
      {"categorical", AssociationKind::Categorical}, {"functional", AssociationKind::Functional},
      {"spatial", AssociationKind::Spatial},         {"temporal", AssociationKind::Temporal},
      {"causal", AssociationKind::Causal},           {"emotional", AssociationKind::Emotional},
      {"similarity", AssociationKind::Similarity},   {"contrast", AssociationKind::Contrast},
      {"cultural", AssociationKind::Cultural},
  };
  auto it = table.find(s);
  if (it == table.end()) fail(Errc::MalformedDocument, "unknown association kind '" + s + "'");
  return it->second;
}

AssociationTree::AssociationTree(Modality m, int depth_limit) : modality_(m), depth_limit_(depth_limit) {
  if (depth_limit < 1) fail(Errc::InvalidArgument, "depth limit must be >= 1");
}

NodeId AssociationTree::add_root(const std::string& label) {
  std::string trimmed = trim(label);
  if (trimmed.empty()) fail(Errc::EmptyLabel, "root label is empty");
  ConceptNode n;
  n.id = next_id_++;
  n.label = std::move(trimmed);
  n.modality = modality_;
  NodeId id = n.id;
  roots_.push_back(id);
  layers_[0].push_back(id);
  nodes_.emplace(id, std::move(n));
  return id;
}

NodeId AssociationTree::add_child(NodeId parent, const std::string& label, AssociationKind kind,
                                  double prob) {
  auto pit = nodes_.find(parent);
  if (pit == nodes_.end()) fail(Errc::UnknownParent, "no node " + std::to_string(parent));
  const ConceptNode& p = pit->second;
  if (p.depth >= depth_limit_)
    fail(Errc::DepthExceeded, "parent at depth " + std::to_string(p.depth) + " is at the depth limit");
  if (!(prob > 0.0) || prob > 1.0 || !std::isfinite(prob))
    fail(Errc::InvalidProbability, "transition probability must be in (0,1], got " + format_double(prob));
  std::string trimmed = trim(label);
  if (trimmed.empty()) fail(Errc::EmptyLabel, "child label is empty");

  ConceptNode n;
  n.id = next_id_++;
  n.label = std::move(trimmed);
  n.modality = modality_;
  n.depth = p.depth + 1;
  n.parent = parent;
  n.kind = kind;
  n.transition_prob = prob;
  n.cumulative_prob = p.cumulative_prob * prob;
  NodeId id = n.id;
  layers_[n.depth].push_back(id);
  nodes_.emplace(id, std::move(n));
  pit->second.children.push_back(id);
  return id;
}

const ConceptNode& AssociationTree::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(Errc::UnknownNode, "no node " + std::to_string(id));
  return it->second;
}

std::vector<NodeId> AssociationTree::path_from_root(NodeId id) const {
  std::vector<NodeId> path;
  const ConceptNode* cur = &node(id);
  path.push_back(cur->id);
  while (cur->parent) {
    cur = &node(*cur->parent);
    path.push_back(cur->id);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

const std::vector<NodeId>& AssociationTree::layer(int depth) const {
  static const std::vector<NodeId> empty;
  auto it = layers_.find(depth);
  return it == layers_.end() ? empty : it->second;
}

int AssociationTree::max_depth() const {
  int d = -1;
  for (const auto& [depth, ids] : layers_)
    if (!ids.empty()) d = std::max(d, depth);
  return d;
}

void AssociationTree::erase_leaf(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(Errc::UnknownNode, "no node " + std::to_string(id));
  if (!it->second.children.empty())
    fail(Errc::InvariantViolation, "cannot prune node with children");
  if (it->second.parent) {
    auto& sibs = nodes_.at(*it->second.parent).children;
    sibs.erase(std::remove(sibs.begin(), sibs.end(), id), sibs.end());
  } else {
    roots_.erase(std::remove(roots_.begin(), roots_.end(), id), roots_.end());
  }
  auto& lay = layers_.at(it->second.depth);
  lay.erase(std::remove(lay.begin(), lay.end(), id), lay.end());
  nodes_.erase(it);
}

void AssociationTree::set_layer_order(int depth, std::vector<NodeId> order) {
  auto it = layers_.find(depth);
  if (it == layers_.end()) fail(Errc::InvalidArgument, "no layer " + std::to_string(depth));
  auto sorted_copy = [](std::vector<NodeId> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted_copy(order) != sorted_copy(it->second))
    fail(Errc::InvalidArgument, "layer order must be a permutation of the layer");
  it->second = std::move(order);
}

void AssociationTree::set_sibling_count_before_prune(NodeId id, int count) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(Errc::UnknownNode, "no node " + std::to_string(id));
  it->second.sibling_count_before_prune = count;
}

AssociationTree AssociationTree::assemble_(Modality m, int depth_limit,
                                           std::vector<ConceptNode> nodes_layer_major,
                                           std::vector<NodeId> root_order) {
  AssociationTree t(m, depth_limit);
  t.roots_ = std::move(root_order);
  for (ConceptNode& n : nodes_layer_major) {
    NodeId id = n.id;
    n.children.clear();
    t.layers_[n.depth].push_back(id);
    if (n.parent) t.nodes_.at(*n.parent).children.push_back(id);
    t.nodes_.emplace(id, std::move(n));
    t.next_id_ = std::max(t.next_id_, id + 1);
  }
  return t;
}

std::vector<NodePair> enumerate_pairs(const TagGraph& g, PairOrdering ordering) {
  (void)ordering;  // single ordering defined today
  if (g.visual.empty() || g.textual.empty()) fail(Errc::EmptyTree, "both trees must be non-empty");

  struct Keyed {
    int depth_sum;
    double joint;
    NodePair pair;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(g.visual.size() * g.textual.size());
  for (const auto& [vid, vn] : g.visual.nodes()) {
    for (const auto& [tid, tn] : g.textual.nodes()) {
      keyed.push_back({vn.depth + tn.depth, vn.cumulative_prob * tn.cumulative_prob, {vid, tid}});
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.depth_sum != b.depth_sum) return a.depth_sum < b.depth_sum;
    if (a.joint != b.joint) return a.joint > b.joint;
    if (a.pair.visual != b.pair.visual) return a.pair.visual < b.pair.visual;
    return a.pair.textual < b.pair.textual;
  });

  std::vector<NodePair> out;
  out.reserve(keyed.size());
  for (const Keyed& k : keyed) out.push_back(k.pair);
  return out;
}

namespace {

ordered_json tree_to_json(const AssociationTree& t) {
  ordered_json roots = ordered_json::array();
  for (NodeId id : t.roots()) roots.push_back(std::to_string(id));

  // Nodes are emitted layer by layer in layer order so the document carries
  // the layer ordering implicitly.
  ordered_json nodes = ordered_json::object();
  for (int d = 0; d <= t.max_depth(); ++d) {
    for (NodeId id : t.layer(d)) {
      const ConceptNode& n = t.node(id);
      ordered_json jn;
      jn["label"] = n.label;
      jn["depth"] = n.depth;
      jn["parent"] = n.parent ? ordered_json(std::to_string(*n.parent)) : ordered_json(nullptr);
      jn["kind"] = n.kind ? ordered_json(to_string(*n.kind)) : ordered_json(nullptr);
      jn["p"] = n.transition_prob;
      jn["cum_p"] = n.cumulative_prob;
      nodes[std::to_string(id)] = std::move(jn);
    }
  }
  ordered_json out;
  out["roots"] = std::move(roots);
  out["nodes"] = std::move(nodes);
  return out;
}

NodeId parse_node_id(const std::string& s) {
  if (s.empty()) fail(Errc::MalformedDocument, "empty node id");
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') fail(Errc::MalformedDocument, "node id '" + s + "' is not numeric");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
    if (v > 0xffffffffull) fail(Errc::MalformedDocument, "node id '" + s + "' out of range");
  }
  return static_cast<NodeId>(v);
}

double require_prob(const ordered_json& j, const char* field, NodeId id) {
  if (!j.contains(field) || !j[field].is_number())
    fail(Errc::MalformedDocument, std::string(field) + " missing on node " + std::to_string(id));
  double v = j[field].get<double>();
  if (!(v > 0.0) || v > 1.0 || !std::isfinite(v))
    fail(Errc::InvariantViolation,
         std::string(field) + " out of (0,1] on node " + std::to_string(id) + ": " + format_double(v));
  return v;
}

struct ParsedTree {
  std::vector<ConceptNode> nodes_layer_major;  // document order within each layer
  std::vector<NodeId> root_order;
  int max_depth = 0;
};

ParsedTree parse_tree_doc(const ordered_json& jt, Modality m) {
  if (!jt.is_object() || !jt.contains("roots") || !jt.contains("nodes"))
    fail(Errc::MalformedDocument, "tree must have roots and nodes");
  if (!jt["roots"].is_array() || jt["roots"].empty())
    fail(Errc::InvariantViolation, "tree roots must be non-empty");

  std::vector<ConceptNode> in_order;
  std::set<NodeId> ids;
  int max_depth = 0;
  for (const auto& [key, jn] : jt["nodes"].items()) {
    NodeId id = parse_node_id(key);
    if (!ids.insert(id).second) fail(Errc::MalformedDocument, "duplicate node id " + key);
    if (!jn.is_object() || !jn.contains("label") || !jn["label"].is_string() ||
        !jn.contains("depth") || !jn["depth"].is_number_integer())
      fail(Errc::MalformedDocument, "node " + key + " is malformed");
    ConceptNode n;
    n.id = id;
    n.label = trim(jn["label"].get<std::string>());
    if (n.label.empty()) fail(Errc::InvariantViolation, "node " + key + " has an empty label");
    n.modality = m;
    n.depth = jn["depth"].get<int>();
    if (n.depth < 0) fail(Errc::InvariantViolation, "node " + key + " has negative depth");
    max_depth = std::max(max_depth, n.depth);
    if (jn.contains("parent") && !jn["parent"].is_null())
      n.parent = parse_node_id(jn["parent"].get<std::string>());
    if (jn.contains("kind") && !jn["kind"].is_null())
      n.kind = association_kind_from_string(jn["kind"].get<std::string>());
    n.transition_prob = require_prob(jn, "p", id);
    n.cumulative_prob = require_prob(jn, "cum_p", id);
    in_order.push_back(std::move(n));
  }
  if (in_order.empty()) fail(Errc::InvariantViolation, "tree has no nodes");

  std::map<NodeId, const ConceptNode*> by_id;
  for (const ConceptNode& n : in_order) by_id[n.id] = &n;
  for (const ConceptNode& n : in_order) {
    if (n.depth == 0) {
      if (n.parent || n.kind)
        fail(Errc::InvariantViolation, "root node " + std::to_string(n.id) + " carries parent or kind");
      if (n.transition_prob != 1.0 || n.cumulative_prob != 1.0)
        fail(Errc::InvariantViolation, "root node " + std::to_string(n.id) + " must have p = cum_p = 1");
    } else {
      if (!n.parent || !n.kind)
        fail(Errc::InvariantViolation,
             "non-root node " + std::to_string(n.id) + " must carry parent and kind");
      auto pit = by_id.find(*n.parent);
      if (pit == by_id.end())
        fail(Errc::InvariantViolation, "node " + std::to_string(n.id) + " has an unknown parent");
      if (pit->second->depth != n.depth - 1)
        fail(Errc::InvariantViolation, "node " + std::to_string(n.id) + " parent depth mismatch");
      double expect = pit->second->cumulative_prob * n.transition_prob;
      if (std::abs(expect - n.cumulative_prob) > 1e-9)
        fail(Errc::InvariantViolation,
             "node " + std::to_string(n.id) + " cum_p does not match parent product");
    }
  }

  // Roots array must list exactly the depth-0 nodes.
  std::set<NodeId> root_set;
  std::vector<NodeId> root_order;
  for (const auto& jr : jt["roots"]) {
    if (!jr.is_string()) fail(Errc::MalformedDocument, "root ids must be strings");
    NodeId id = parse_node_id(jr.get<std::string>());
    if (!root_set.insert(id).second) fail(Errc::MalformedDocument, "duplicate root id");
    root_order.push_back(id);
  }
  std::set<NodeId> depth0;
  for (const ConceptNode& n : in_order)
    if (n.depth == 0) depth0.insert(n.id);
  if (root_set != depth0)
    fail(Errc::InvariantViolation, "roots array does not match the depth-0 node set");

  // Re-order layer-major (stable within a layer) so parents precede children
  // regardless of document order, and verify layer contiguity.
  ParsedTree out;
  out.root_order = std::move(root_order);
  out.max_depth = max_depth;
  for (int d = 0; d <= max_depth; ++d) {
    bool any = false;
    for (ConceptNode& n : in_order)
      if (n.depth == d) {
        out.nodes_layer_major.push_back(std::move(n));
        any = true;
      }
    if (!any) fail(Errc::InvariantViolation, "layer " + std::to_string(d) + " is empty");
  }
  return out;
}

}  // namespace

std::string serialize_graph(const TagGraph& g) {
  ordered_json doc;
  doc["version"] = 1;
  doc["source_id"] = g.source.id;
  doc["visual"] = tree_to_json(g.visual);
  doc["textual"] = tree_to_json(g.textual);
  return doc.dump(2) + "\n";
}

TagGraph deserialize_graph(const std::string& bytes) {
  ordered_json doc = ordered_json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(Errc::MalformedDocument, "not a JSON object");
  if (!doc.contains("version") || doc["version"] != 1)
    fail(Errc::MalformedDocument, "unsupported document version");
  if (!doc.contains("source_id") || !doc["source_id"].is_string())
    fail(Errc::MalformedDocument, "source_id missing");
  if (!doc.contains("visual") || !doc.contains("textual"))
    fail(Errc::MalformedDocument, "visual/textual trees missing");

  ParsedTree pv = parse_tree_doc(doc["visual"], Modality::Visual);
  ParsedTree pt = parse_tree_doc(doc["textual"], Modality::Textual);
  AssociationTree visual = AssociationTree::assemble_(
      Modality::Visual, pv.max_depth + 1, std::move(pv.nodes_layer_major), std::move(pv.root_order));
  AssociationTree textual = AssociationTree::assemble_(
      Modality::Textual, pt.max_depth + 1, std::move(pt.nodes_layer_major), std::move(pt.root_order));
  InputPair src;
  src.id = doc["source_id"].get<std::string>();
  return TagGraph(std::move(visual), std::move(textual), std::move(src));
}

namespace {

bool trees_equal(const AssociationTree& a, const AssociationTree& b) {
  if (a.modality() != b.modality()) return false;
  if (a.roots() != b.roots()) return false;
  if (a.size() != b.size()) return false;
  if (a.max_depth() != b.max_depth()) return false;
  for (int d = 0; d <= a.max_depth(); ++d)
    if (a.layer(d) != b.layer(d)) return false;
  for (const auto& [id, n] : a.nodes()) {
    if (!b.contains(id)) return false;
    const ConceptNode& o = b.node(id);
    if (n.label != o.label || n.depth != o.depth || n.parent != o.parent || n.kind != o.kind ||
        n.transition_prob != o.transition_prob || n.cumulative_prob != o.cumulative_prob)
      return false;
  }
  return true;
}

}  // namespace

bool structurally_equal(const TagGraph& a, const TagGraph& b) {
  return a.source.id == b.source.id && trees_equal(a.visual, b.visual) &&
         trees_equal(a.textual, b.textual);
}

}  // namespace tagctd
