#include "tagctd/builder.hpp"

#include <algorithm>
#include <numeric>

#include "tagctd/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tagctd {

void BuilderConfig::validate() const {
  if (l_max < 1 || k_max < 1 || r_max < 1)
    fail(Errc::InvalidArgument, "l_max, k_max and r_max must all be >= 1");
}

std::vector<NodeId> prune_layer(AssociationTree& tree, int depth, int k_max) {
  if (k_max < 1) fail(Errc::InvalidArgument, "k_max must be >= 1");
  const std::vector<NodeId> layer = tree.layer(depth);
  if (static_cast<int>(layer.size()) <= k_max) return layer;

  // Stable sort keeps insertion order among equal probabilities, so the
  // earlier-inserted node survives a tie.
  std::vector<std::size_t> idx(layer.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return tree.node(layer[a]).cumulative_prob > tree.node(layer[b]).cumulative_prob;
  });

  std::vector<bool> keep(layer.size(), false);
  for (int i = 0; i < k_max; ++i) keep[idx[static_cast<std::size_t>(i)]] = true;
  for (std::size_t i = 0; i < layer.size(); ++i)
    if (!keep[i]) tree.erase_leaf(layer[i]);
  return tree.layer(depth);
}

namespace {

// Final within-layer order: descending cumulative probability, insertion
// order on ties.
void sort_layer(AssociationTree& tree, int depth) {
  std::vector<NodeId> order = tree.layer(depth);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return tree.node(a).cumulative_prob > tree.node(b).cumulative_prob;
  });
  tree.set_layer_order(depth, std::move(order));
}

std::vector<std::string> root_labels(const AssociationTree& t) {
  std::vector<std::string> out;
  for (NodeId id : t.roots()) out.push_back(t.node(id).label);
  return out;
}

AssociationTree extract_phase(const InputPair& input, Modality modality, const BuilderConfig& cfg,
                              Extractor& extractor, CallStats& stats) {
  if (trim(input.modality_content(modality)).empty())
    fail(Errc::InvalidArgument,
         std::string(to_string(modality)) + " content is empty for input " + input.id);

  AssociationTree tree(modality, cfg.l_max);
  std::vector<std::string> roots;
  try {
    roots = extractor.extract_roots(input, modality, cfg.r_max, stats);
  } catch (const Error& e) {
    if (e.code() == Errc::EmptyExtraction)
      fail(Errc::ExtractionFailed,
           std::string(to_string(modality)) + " extraction yielded nothing for input " + input.id);
    throw;
  }
  for (const std::string& label : roots) tree.add_root(label);
  if (cfg.r_max > cfg.k_max) prune_layer(tree, 0, cfg.k_max);
  return tree;
}

void expand_phase(AssociationTree& tree, const BuilderConfig& cfg, Expander& expander,
                  const ExpansionContext& base_ctx, CallStats& stats, int workers) {
  for (int l = 0; l + 1 < cfg.l_max; ++l) {
    const std::vector<NodeId> frontier = tree.layer(l);
    if (frontier.empty()) break;

    std::vector<std::vector<ExpansionCandidate>> fetched(frontier.size());
    auto fetch_one = [&](std::size_t i, CallStats& s) {
      const ConceptNode& parent = tree.node(frontier[i]);
      ExpansionContext ctx = base_ctx;
      if (parent.depth > 0) ctx.parent_label = tree.node(*parent.parent).label;
      std::vector<ExpansionCandidate> cands = expander.expand(parent.label, ctx, cfg.k_max, s);
      if (cands.size() > static_cast<std::size_t>(cfg.k_max))
        cands.resize(static_cast<std::size_t>(cfg.k_max));
      if (!cands.empty()) cands = normalize_probs(std::move(cands));
      return cands;
    };

    bool parallel = false;
#ifdef _OPENMP
    parallel = workers > 1 && frontier.size() > 1;
#else
    (void)workers;
#endif
    if (parallel) {
#ifdef _OPENMP
      std::vector<CallStats> local(frontier.size());
      bool failed = false;
      std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
      for (std::size_t i = 0; i < frontier.size(); ++i) {
        try {
          fetched[i] = fetch_one(i, local[i]);
        } catch (...) {
#pragma omp critical
          {
            if (!failed) {
              failed = true;
              first_error = std::current_exception();
            }
          }
        }
      }
      for (const CallStats& s : local) stats += s;
      if (failed) std::rethrow_exception(first_error);
#endif
    } else {
      for (std::size_t i = 0; i < frontier.size(); ++i) fetched[i] = fetch_one(i, stats);
    }

    bool grew = false;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const std::vector<ExpansionCandidate>& cands = fetched[i];
      for (const ExpansionCandidate& c : cands) {
        NodeId child = tree.add_child(frontier[i], c.label, c.kind, c.prob);
        tree.set_sibling_count_before_prune(child, static_cast<int>(cands.size()));
        grew = true;
      }
    }
    if (!grew) break;
    prune_layer(tree, l + 1, cfg.k_max);
    sort_layer(tree, l + 1);
  }
}

}  // namespace

AssociationTree build_tree(const InputPair& input, Modality modality, const BuilderConfig& cfg,
                           BuildProviders providers, CallStats& stats, int workers) {
  cfg.validate();
  AssociationTree tree = extract_phase(input, modality, cfg, providers.extractor, stats);
  ExpansionContext ctx;
  ctx.modality = modality;
  (modality == Modality::Visual ? ctx.visual_roots : ctx.textual_roots) = root_labels(tree);
  expand_phase(tree, cfg, providers.expander, ctx, stats, workers);
  return tree;
}

TagGraph build_tag(const InputPair& input, const BuilderConfig& cfg, BuildProviders providers,
                   int workers) {
  cfg.validate();
  CallStats stats;
  // Both root sets are extracted first: every expansion is grounded in the
  // roots of both modalities.
  AssociationTree visual = extract_phase(input, Modality::Visual, cfg, providers.extractor, stats);
  AssociationTree textual =
      extract_phase(input, Modality::Textual, cfg, providers.extractor, stats);

  ExpansionContext ctx;
  ctx.visual_roots = root_labels(visual);
  ctx.textual_roots = root_labels(textual);

  ctx.modality = Modality::Visual;
  expand_phase(visual, cfg, providers.expander, ctx, stats, workers);
  ctx.modality = Modality::Textual;
  expand_phase(textual, cfg, providers.expander, ctx, stats, workers);

  TagGraph g(std::move(visual), std::move(textual), input);
  g.build_stats = stats;
  return g;
}

}  // namespace tagctd
