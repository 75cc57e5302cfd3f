#include <doctest.h>

#include <functional>

#include "support/counting.hpp"
#include "tagctd/builder.hpp"
#include "tagctd/scripted.hpp"

using namespace tagctd;
using namespace tagctd::testing;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a tagctd::Error");
  return Errc::IoError;
}

// Unbounded synthetic supply: every label expands into `supply` children.
class SyntheticExpander : public Expander {
 public:
  explicit SyntheticExpander(int supply) : supply_(supply) {}
  std::vector<ExpansionCandidate> expand(const std::string& node_label,
                                         const ExpansionContext&, int k,
                                         CallStats& stats) override {
    stats.expansion_calls += 1;
    std::vector<ExpansionCandidate> out;
    for (int i = 0; i < std::min(supply_, k); ++i)
      out.push_back({node_label + "/" + std::to_string(i), AssociationKind::Similarity,
                     1.0 / (1.0 + i)});
    return out;
  }

 private:
  int supply_;
};

class FixedExtractor : public Extractor {
 public:
  explicit FixedExtractor(std::vector<std::string> roots) : roots_(std::move(roots)) {}
  std::vector<std::string> extract_roots(const InputPair&, Modality, int r_max,
                                         CallStats& stats) override {
    stats.extraction_calls += 1;
    return sanitize_root_labels(roots_, r_max);
  }

 private:
  std::vector<std::string> roots_;
};

InputPair powder_input() {
  InputPair input;
  input.id = "powder";
  input.caption = "white powder in a bag, phone number on label";
  input.text = "line-xxx call to order";
  return input;
}

ScriptedProvider fixture_provider() {
  return ScriptedProvider::from_file(std::string(TAGCTD_FIXTURE_DIR) + "/script.json");
}

}  // namespace

TEST_CASE("l_max = 1 builds a roots-only tree with zero expansion calls") {
  FixedExtractor extractor({"a", "b"});
  SyntheticExpander expander(6);
  BuilderConfig cfg;
  cfg.l_max = 1;
  CallStats stats;
  AssociationTree t = build_tree(powder_input(), Modality::Visual, cfg, {extractor, expander},
                                 stats);
  CHECK(t.size() == 2);
  CHECK(t.max_depth() == 0);
  CHECK(stats.extraction_calls == 1);
  CHECK(stats.expansion_calls == 0);
}

TEST_CASE("full supply fills every layer to k_max and respects the depth cap") {
  FixedExtractor extractor({"r0", "r1", "r2"});
  SyntheticExpander expander(99);
  BuilderConfig cfg;  // l_max 4, k_max 6, r_max 3
  CallStats stats;
  AssociationTree t = build_tree(powder_input(), Modality::Visual, cfg, {extractor, expander},
                                 stats);
  CHECK(t.layer(0).size() == 3);
  CHECK(t.layer(1).size() == 6);
  CHECK(t.layer(2).size() == 6);
  CHECK(t.layer(3).size() == 6);
  CHECK(t.max_depth() == cfg.l_max - 1);
  CHECK(t.layer(4).empty());
  // expansion calls = expanded nodes = |L0| + |L1| + |L2|
  CHECK(stats.expansion_calls == 3 + 6 + 6);
  CHECK(stats.expansion_calls <=
        static_cast<std::uint64_t>((cfg.l_max - 1) * cfg.k_max + cfg.r_max));

  SUBCASE("every layer is ordered by descending cumulative probability") {
    for (int d = 0; d <= t.max_depth(); ++d) {
      const auto& layer = t.layer(d);
      for (std::size_t i = 1; i < layer.size(); ++i)
        CHECK(t.node(layer[i - 1]).cumulative_prob >= t.node(layer[i]).cumulative_prob);
    }
  }
}

TEST_CASE("prune_layer keeps the top k by cumulative probability") {
  AssociationTree t(Modality::Visual, 3);
  NodeId r = t.add_root("r");

  SUBCASE("under capacity survives untouched") {
    for (int i = 0; i < 4; ++i)
      t.add_child(r, "c" + std::to_string(i), AssociationKind::Causal, 0.25);
    CHECK(prune_layer(t, 1, 6).size() == 4);
    CHECK(t.layer(1).size() == 4);
  }

  SUBCASE("keeps 0.5 and 0.3 out of [0.5, 0.3, 0.2]") {
    NodeId a = t.add_child(r, "a", AssociationKind::Causal, 0.5);
    NodeId b = t.add_child(r, "b", AssociationKind::Causal, 0.3);
    t.add_child(r, "c", AssociationKind::Causal, 0.2);
    auto kept = prune_layer(t, 1, 2);
    CHECK(kept == std::vector<NodeId>{a, b});
    CHECK(t.size() == 3);
    // Survivor probabilities are not renormalized.
    CHECK(t.node(a).transition_prob == 0.5);
    CHECK(t.node(b).transition_prob == 0.3);
  }

  SUBCASE("ties resolve to the earlier insertion") {
    NodeId first = t.add_child(r, "first", AssociationKind::Causal, 0.5);
    t.add_child(r, "second", AssociationKind::Causal, 0.5);
    auto kept = prune_layer(t, 1, 1);
    CHECK(kept == std::vector<NodeId>{first});
  }
}

TEST_CASE("layer-0 pruning applies when r_max exceeds k_max") {
  FixedExtractor extractor({"a", "b", "c"});
  SyntheticExpander expander(0);
  BuilderConfig cfg;
  cfg.l_max = 2;
  cfg.k_max = 2;
  cfg.r_max = 3;
  CallStats stats;
  AssociationTree t = build_tree(powder_input(), Modality::Visual, cfg, {extractor, expander},
                                 stats);
  REQUIRE(t.roots().size() == 2);
  CHECK(t.node(t.roots()[0]).label == "a");
  CHECK(t.node(t.roots()[1]).label == "b");
}

TEST_CASE("hand-enumerated build with the fixture script") {
  ScriptedProvider provider = fixture_provider();
  BuilderConfig cfg;
  cfg.l_max = 2;
  cfg.k_max = 2;

  TagGraph g = build_tag(powder_input(), cfg, {provider, provider});
  // Visual: roots {white flour, phone number}; layer 1 from white flour's two
  // candidates plus phone number's one, pruned to the top 2 by cumulative
  // probability (0.55, 1.0 -> phone's child 1.0 and cocaine 0.55? contact
  // channel 1.0 > cocaine 0.55 > baking ingredient 0.45).
  CHECK(g.visual.layer(0).size() == 2);
  REQUIRE(g.visual.layer(1).size() == 2);
  CHECK(g.visual.node(g.visual.layer(1)[0]).label == "contact channel");
  CHECK(g.visual.node(g.visual.layer(1)[1]).label == "cocaine");
  // Textual: root line-xxx, children 0.7/0.3 both kept.
  CHECK(g.textual.layer(0).size() == 1);
  REQUIRE(g.textual.layer(1).size() == 2);
  CHECK(g.textual.node(g.textual.layer(1)[0]).label == "drug sale line");
  CHECK(g.textual.node(g.textual.layer(1)[0]).transition_prob == doctest::Approx(0.7));
  CHECK(g.build_stats.extraction_calls == 2);
  CHECK(g.build_stats.expansion_calls == 3);

  SUBCASE("depth-1 layer carries the cocaine association with its probability") {
    bool found = false;
    for (NodeId id : g.visual.layer(1)) {
      const ConceptNode& n = g.visual.node(id);
      if (n.label == "cocaine") {
        found = true;
        CHECK(n.transition_prob == doctest::Approx(0.55));
        CHECK(n.kind == AssociationKind::Similarity);
      }
    }
    CHECK(found);
  }
}

TEST_CASE("children probability sums and audit counts") {
  FixedExtractor extractor({"r"});
  BuilderConfig cfg;
  cfg.l_max = 3;
  cfg.k_max = 6;

  SUBCASE("prune-free build: every expanded node's children sum to 1") {
    SyntheticExpander expander(2);  // 1 -> 2 -> 4 nodes per layer, under the cap
    CallStats stats;
    AssociationTree t = build_tree(powder_input(), Modality::Visual, cfg, {extractor, expander},
                                   stats);
    REQUIRE(t.layer(2).size() == 4);
    for (const auto& [id, n] : t.nodes()) {
      if (n.children.empty()) continue;
      double sum = 0.0;
      for (NodeId c : n.children) sum += t.node(c).transition_prob;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      for (NodeId c : n.children)
        CHECK(t.node(c).sibling_count_before_prune == static_cast<int>(n.children.size()));
    }
  }

  SUBCASE("pruned build: audit field keeps the pre-prune sibling count") {
    SyntheticExpander expander(4);  // layer 2 would hold 16 nodes, pruned to 6
    CallStats stats;
    AssociationTree t = build_tree(powder_input(), Modality::Visual, cfg, {extractor, expander},
                                   stats);
    CHECK(t.layer(2).size() == 6);
    for (const auto& [id, n] : t.nodes()) {
      if (n.depth != 2) continue;
      CHECK(n.sibling_count_before_prune == 4);
      // Survivor transition probabilities are untouched by pruning.
      double sum = 0.0;
      for (NodeId sib : t.node(*n.parent).children) sum += t.node(sib).transition_prob;
      CHECK(sum <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("builds are deterministic and parallel builds match serial ones") {
  ScriptedProvider provider = fixture_provider();
  BuilderConfig cfg;
  TagGraph a = build_tag(powder_input(), cfg, {provider, provider});
  TagGraph b = build_tag(powder_input(), cfg, {provider, provider});
  CHECK(serialize_graph(a) == serialize_graph(b));

  TagGraph parallel = build_tag(powder_input(), cfg, {provider, provider}, 4);
  CHECK(serialize_graph(parallel) == serialize_graph(a));
}

TEST_CASE("empty extraction is fatal") {
  FixedExtractor good({"a"});
  ScriptedProvider empty_provider;  // knows no content at all
  SyntheticExpander expander(2);
  BuilderConfig cfg;
  CallStats stats;
  CHECK(code_of([&] {
    build_tree(powder_input(), Modality::Visual, cfg, {empty_provider, expander}, stats);
  }) == Errc::ExtractionFailed);

  InputPair no_text = powder_input();
  no_text.text.clear();
  CHECK(code_of([&] {
    build_tree(no_text, Modality::Textual, cfg, {good, expander}, stats);
  }) == Errc::InvalidArgument);

  BuilderConfig bad;
  bad.l_max = 0;
  CHECK(code_of([&] { build_tag(powder_input(), bad, {good, expander}); }) ==
        Errc::InvalidArgument);
}
