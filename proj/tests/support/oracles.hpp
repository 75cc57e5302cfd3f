#pragma once

// Independent oracles used only by tests. They deliberately re-derive values
// from first principles instead of reusing the library's stored results.

#include <algorithm>
#include <vector>

#include "tagctd/graph.hpp"
#include "tagctd/kb.hpp"

namespace tagctd::testing {

// Cumulative probability by explicit root-to-node path walk.
inline double path_walk_cum(const AssociationTree& t, NodeId id) {
  std::vector<double> probs;
  const ConceptNode* cur = &t.node(id);
  while (true) {
    probs.push_back(cur->transition_prob);
    if (!cur->parent) break;
    cur = &t.node(*cur->parent);
  }
  double product = 1.0;
  for (auto it = probs.rbegin(); it != probs.rend(); ++it) product *= *it;
  return product;
}

// The bipartite order key, restated independently of enumerate_pairs.
struct OrderKey {
  int depth_sum;
  double joint;
  NodeId vis;
  NodeId tex;

  bool operator<(const OrderKey& o) const {
    if (depth_sum != o.depth_sum) return depth_sum < o.depth_sum;
    if (joint != o.joint) return joint > o.joint;
    if (vis != o.vis) return vis < o.vis;
    return tex < o.tex;
  }
};

inline OrderKey order_key(const TagGraph& g, NodeId vis, NodeId tex) {
  const ConceptNode& vn = g.visual.node(vis);
  const ConceptNode& tn = g.textual.node(tex);
  return {vn.depth + tn.depth, path_walk_cum(g.visual, vis) * path_walk_cum(g.textual, tex), vis,
          tex};
}

// Full Cartesian product sorted by the stated key.
inline std::vector<NodePair> brute_force_ordered_pairs(const TagGraph& g) {
  std::vector<std::pair<OrderKey, NodePair>> keyed;
  for (const auto& [vid, vn] : g.visual.nodes())
    for (const auto& [tid, tn] : g.textual.nodes())
      keyed.push_back({order_key(g, vid, tid), {vid, tid}});
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<NodePair> out;
  out.reserve(keyed.size());
  for (auto& [k, p] : keyed) out.push_back(p);
  return out;
}

// Order-minimal toxic pair by exhaustive sweep, or nullopt when benign.
inline std::optional<NodePair> brute_force_min_toxic(const TagGraph& g,
                                                     const ToxicKnowledgeBase& kb) {
  std::optional<OrderKey> best_key;
  std::optional<NodePair> best;
  for (const auto& [vid, vn] : g.visual.nodes()) {
    for (const auto& [tid, tn] : g.textual.nodes()) {
      if (!kb.lookup(vn.label, tn.label)) continue;
      OrderKey key = order_key(g, vid, tid);
      if (!best_key || key < *best_key) {
        best_key = key;
        best = NodePair{vid, tid};
      }
    }
  }
  return best;
}

// General F-beta, the cross-check route for the fixed-coefficient formula.
inline double fbeta(double tp, double fp, double fn, double beta) {
  double precision = tp / (tp + fp);
  double recall = tp / (tp + fn);
  double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

}  // namespace tagctd::testing
