#pragma once

#include <cstdint>
#include <optional>

#include "tagctd/graph.hpp"
#include "tagctd/provider.hpp"

namespace tagctd {

struct BuilderConfig {
  int l_max = 4;  // maximum layer count; a built tree reaches depth l_max - 1
  int k_max = 6;  // per-parent branching cap and per-layer capacity
  int r_max = 3;  // root cap
  // Reserved for stochastic providers; deterministic providers ignore it.
  std::optional<std::uint64_t> deterministic_seed;

  void validate() const;
};

struct BuildProviders {
  Extractor& extractor;
  Expander& expander;
};

// Keeps the k_max nodes with the highest cumulative probability in the given
// layer (earlier insertion wins ties) and removes the rest from the tree
// before they are ever expanded. Survivor transition probabilities are not
// renormalized. Returns the surviving ids in layer order.
std::vector<NodeId> prune_layer(AssociationTree& tree, int depth, int k_max);

// Layered expansion: extract roots, then expand layer by layer, normalizing
// each parent's candidate distribution and pruning every completed layer to
// k_max. Expansion calls within one layer run concurrently when workers > 1;
// the resulting tree is identical to the serial build.
AssociationTree build_tree(const InputPair& input, Modality modality, const BuilderConfig& cfg,
                           BuildProviders providers, CallStats& stats, int workers = 1);

// Builds both modality trees and aggregates their call accounting.
TagGraph build_tag(const InputPair& input, const BuilderConfig& cfg, BuildProviders providers,
                   int workers = 1);

}  // namespace tagctd
