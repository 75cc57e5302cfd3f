#include <doctest.h>

#include <functional>
#include <random>

#include "support/counting.hpp"
#include "support/oracles.hpp"
#include "support/random_graph.hpp"
#include "tagctd/builder.hpp"
#include "tagctd/detector.hpp"
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

TagGraph flange_graph() {
  ScriptedProvider provider =
      ScriptedProvider::from_file(std::string(TAGCTD_FIXTURE_DIR) + "/script.json");
  InputPair input;
  input.id = "flange";
  input.caption = "industrial flange components on a workbench";
  input.text = "items with undefined function for sale, DM me";
  BuilderConfig cfg;
  cfg.l_max = 2;
  cfg.k_max = 2;
  return build_tag(input, cfg, {provider, provider});
}

ToxicKnowledgeBase weapon_kb() {
  ToxicKnowledgeBase kb;
  kb.add("weapon component", "selling weaponized components", "weapon");
  return kb;
}

}  // namespace

TEST_CASE("mtc") {
  TagGraph g = flange_graph();
  NodeId vis_root = g.visual.roots()[0];
  NodeId tex_root = g.textual.roots()[0];

  SUBCASE("root-root pair scores exactly zero") {
    CHECK(mtc(g, {vis_root, tex_root}) == 0.0);
  }

  SUBCASE("direct substitution") {
    AssociationTree vis(Modality::Visual, 3);
    NodeId r = vis.add_root("r");
    NodeId a = vis.add_child(r, "a", AssociationKind::Similarity, 0.5);
    AssociationTree tex(Modality::Textual, 3);
    NodeId rt = tex.add_root("rt");
    NodeId b = tex.add_child(rt, "b", AssociationKind::Cultural, 0.4);
    InputPair src;
    TagGraph g2(std::move(vis), std::move(tex), std::move(src));
    CHECK(mtc(g2, {a, b}) == doctest::Approx(0.8).epsilon(1e-15));
  }

  SUBCASE("random pairs match the path-walk oracle") {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 30; ++round) {
      TagGraph rg = random_graph(4, 3, rng, 40);
      for (const NodePair& p : enumerate_pairs(rg)) {
        double expected =
            1.0 - path_walk_cum(rg.visual, p.visual) * path_walk_cum(rg.textual, p.textual);
        CHECK(mtc(rg, p) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }

  SUBCASE("unknown node") {
    CHECK(code_of([&] { mtc(g, {9999, tex_root}); }) == Errc::UnknownNode);
  }
}

TEST_CASE("detect: overt root pair exits on the first batch") {
  TagGraph g = flange_graph();
  ToxicKnowledgeBase kb;
  kb.add("flange", "items with undefined function", "weapon");
  CountingAdjudicator adj(std::move(kb));
  DetectorConfig cfg;  // batch_size 1

  DetectionResult r = detect(g, adj, cfg);
  CHECK(r.y == 1);
  CHECK(r.c == 0.0);
  REQUIRE(r.matched.has_value());
  CHECK(g.visual.node(r.matched->visual).depth == 0);
  CHECK(g.textual.node(r.matched->textual).depth == 0);
  CHECK(r.stats.adjudicated_pairs == 1);
  CHECK(r.stats.adjudication_calls == 1);
  CHECK(r.path_visual.size() == 1);
  CHECK_FALSE(r.path_visual[0].kind.has_value());
}

TEST_CASE("detect: benign graphs exhaust the full candidate set") {
  TagGraph g = flange_graph();
  CountingAdjudicator adj{ToxicKnowledgeBase{}};
  DetectorConfig cfg;
  DetectionResult r = detect(g, adj, cfg);
  CHECK(r.y == 0);
  CHECK(r.c == 1.0);
  CHECK_FALSE(r.matched.has_value());
  CHECK(r.stats.adjudicated_pairs == g.visual.size() * g.textual.size());
}

TEST_CASE("detect: covert pair at depth 1+1") {
  TagGraph g = flange_graph();
  KbAdjudicator adj(weapon_kb());
  DetectorConfig cfg;
  DetectionResult r = detect(g, adj, cfg);
  CHECK(r.y == 1);
  REQUIRE(r.matched.has_value());
  CHECK(g.visual.node(r.matched->visual).label == "weapon component");
  CHECK(g.textual.node(r.matched->textual).label == "selling weaponized components");
  CHECK(r.matched->risk_category == "weapon");
  CHECK(r.c == doctest::Approx(1.0 - 0.6 * 0.5).epsilon(1e-12));
  CHECK(r.path_visual.size() == 2);
  CHECK(r.path_textual.size() == 2);
}

TEST_CASE("detect: batching is a pure performance knob") {
  TagGraph g = flange_graph();
  KbAdjudicator plain(weapon_kb());
  DetectorConfig base;
  DetectionResult reference = detect(g, plain, base);

  for (int batch : {2, 3, 8, 64}) {
    CountingAdjudicator adj(weapon_kb());
    DetectorConfig cfg;
    cfg.batch_size = batch;
    DetectionResult r = detect(g, adj, cfg);
    CHECK(r.y == reference.y);
    CHECK(r.c == reference.c);
    REQUIRE(r.matched.has_value());
    CHECK(r.matched->visual == reference.matched->visual);
    CHECK(r.matched->textual == reference.matched->textual);
    // pairs submitted never exceed the batch-rounded position of the hit
    std::size_t k = 0;
    auto pairs = enumerate_pairs(g);
    for (; k < pairs.size(); ++k)
      if (pairs[k].visual == reference.matched->visual &&
          pairs[k].textual == reference.matched->textual)
        break;
    std::size_t bound = ((k + 1 + static_cast<std::size_t>(batch) - 1) /
                         static_cast<std::size_t>(batch)) *
                        static_cast<std::size_t>(batch);
    CHECK(r.stats.adjudicated_pairs <= bound);
  }
}

TEST_CASE("detect: matched pair is order-minimal against brute force") {
  std::mt19937_64 rng(23);
  int toxic_seen = 0;
  int benign_seen = 0;
  for (int round = 0; round < 60; ++round) {
    TagGraph g = random_graph(3, 3, rng, 30);
    ToxicKnowledgeBase kb = random_kb(g, round % 2 == 0 ? 0.02 : 0.0, rng);
    auto expected = brute_force_min_toxic(g, kb);
    KbAdjudicator adj(kb);
    DetectorConfig cfg;
    cfg.batch_size = 1 + static_cast<int>(rng() % 7);
    DetectionResult r = detect(g, adj, cfg);
    if (expected) {
      ++toxic_seen;
      REQUIRE(r.y == 1);
      CHECK(r.matched->visual == expected->visual);
      CHECK(r.matched->textual == expected->textual);
    } else {
      ++benign_seen;
      CHECK(r.y == 0);
      CHECK(r.c == 1.0);
    }
  }
  CHECK(toxic_seen > 0);
  CHECK(benign_seen > 0);
}

TEST_CASE("detect: determinism") {
  TagGraph g = flange_graph();
  KbAdjudicator adj(weapon_kb());
  DetectorConfig cfg;
  DetectionResult a = detect(g, adj, cfg);
  DetectionResult b = detect(g, adj, cfg);
  CHECK(detection_report_json(a, g) == detection_report_json(b, g));
}

TEST_CASE("prefilter is an accelerator, never a gate") {
  TagGraph g = flange_graph();

  SUBCASE("a toxic nomination cannot preempt a shallower toxic pair") {
    ToxicKnowledgeBase kb = weapon_kb();
    kb.add("flange", "selling weaponized components", "weapon");  // depth sum 1 pair
    KbAdjudicator adj(kb);
    ScriptedPrefilter prefilter;
    prefilter.script_pair("weapon component", "selling weaponized components");  // depth sum 2
    DetectorConfig cfg;
    cfg.prefilter_enabled = true;
    DetectionResult r = detect(g, adj, cfg, &prefilter);
    REQUIRE(r.y == 1);
    CHECK(g.visual.node(r.matched->visual).label == "flange");
    CHECK(g.textual.node(r.matched->textual).label == "selling weaponized components");
  }

  SUBCASE("a toxic nomination bounds the sweep") {
    KbAdjudicator adj(weapon_kb());
    ScriptedPrefilter prefilter;
    prefilter.script_pair("weapon component", "selling weaponized components");
    DetectorConfig cfg;
    cfg.prefilter_enabled = true;
    DetectionResult with = detect(g, adj, cfg, &prefilter);
    DetectorConfig off;
    DetectionResult without = detect(g, adj, off);
    CHECK(with.y == without.y);
    CHECK(with.c == without.c);
    CHECK(with.matched->visual == without.matched->visual);
    CHECK(with.matched->textual == without.matched->textual);
  }

  SUBCASE("a fruitless prefilter still sweeps everything") {
    CountingAdjudicator adj{ToxicKnowledgeBase{}};
    ScriptedPrefilter prefilter;
    prefilter.script_pair("pipe fitting", "surplus hardware");  // nominated but benign
    DetectorConfig cfg;
    cfg.prefilter_enabled = true;
    DetectionResult r = detect(g, adj, cfg, &prefilter);
    CHECK(r.y == 0);
    CHECK(r.c == 1.0);
    // nominated pair adjudicated once up front, then the full sweep
    CHECK(r.stats.adjudicated_pairs == g.visual.size() * g.textual.size() + 1);
  }
}

TEST_CASE("explain") {
  TagGraph g = flange_graph();
  KbAdjudicator adj(weapon_kb());
  DetectorConfig cfg;
  DetectionResult r = detect(g, adj, cfg);

  SUBCASE("deterministic template matches the golden string byte for byte") {
    CHECK(explain(r, g) ==
          "Image concept 'flange' —[similarity:0.6]→ 'weapon component'; "
          "Text concept 'items with undefined function' —[cultural:0.5]→ "
          "'selling weaponized components'; "
          "association: Item weapon component may be associated with selling weaponized "
          "components, and their relationship is: weapon; MTC=0.7");
  }

  SUBCASE("y = 0 has nothing to explain") {
    DetectionResult benign;
    benign.y = 0;
    CHECK(code_of([&] { explain(benign, g); }) == Errc::NotToxic);
  }

  SUBCASE("explainer failures degrade to the template") {
    class FailingExplainer : public Explainer {
     public:
      std::string elaborate(const std::string&, CallStats&) override {
        fail(Errc::ProviderUnavailable, "down");
      }
    };
    FailingExplainer down;
    bool degraded = false;
    std::string text = explain(r, g, &down, &degraded);
    CHECK(degraded);
    CHECK(text.find("Image concept 'flange'") == 0);
  }

  SUBCASE("elaboration is prepended, template kept as audit suffix") {
    class CannedExplainer : public Explainer {
     public:
      std::string elaborate(const std::string&, CallStats&) override { return "Two chains meet."; }
    };
    CannedExplainer canned;
    std::string text = explain(r, g, &canned);
    CHECK(text.find("Two chains meet.\n") == 0);
    CHECK(text.find("Image concept 'flange'") != std::string::npos);
  }
}
