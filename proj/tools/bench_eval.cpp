// Times corpus evaluation with the serial path against the OpenMP worker
// pool on a synthetic scripted workload, and checks both produce the same
// report.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include "tagctd/builder.hpp"
#include "tagctd/detector.hpp"
#include "tagctd/evaluator.hpp"
#include "tagctd/kb.hpp"
#include "tagctd/scripted.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace tagctd;

namespace {

struct Workload {
  ScriptedProvider provider;
  ToxicKnowledgeBase kb;
  std::vector<InputPair> corpus;
};

// A few archetype concept trees, cycled over the corpus: benign ones and
// ones whose toxic pair sits at depth d on both sides.
Workload make_workload(int samples, int l_max, int k_max) {
  Workload w;
  const int archetypes = 8;
  for (int a = 0; a < archetypes; ++a) {
    std::string tag = "a" + std::to_string(a);
    std::string caption = "scene " + tag;
    std::string text = "note " + tag;
    w.provider.script_roots(Modality::Visual, caption, {"v-" + tag});
    w.provider.script_roots(Modality::Textual, text, {"t-" + tag});
    for (const char* side : {"v", "t"}) {
      std::string parent = std::string(side) + "-" + tag;
      for (int d = 1; d < l_max; ++d) {
        std::vector<ExpansionCandidate> cands;
        for (int c = 0; c < k_max; ++c)
          cands.push_back({parent + "-d" + std::to_string(d) + "c" + std::to_string(c),
                           AssociationKind::Similarity, 1.0 / (1.0 + c)});
        w.provider.script_expansion(parent, cands);
        parent = cands[0].label;  // the highest-probability spine survives pruning
      }
    }
    // Half the archetypes carry a planted toxic pair at the deepest layer.
    if (a % 2 == 0) {
      std::string vdeep = "v-" + tag;
      std::string tdeep = "t-" + tag;
      for (int d = 1; d < l_max; ++d) {
        vdeep += "-d" + std::to_string(d) + "c0";
        tdeep += "-d" + std::to_string(d) + "c0";
      }
      w.kb.add(vdeep, tdeep, "synthetic");
    }
    for (int i = a; i < samples; i += archetypes) {
      InputPair s;
      s.id = "s" + std::to_string(i);
      s.caption = caption;
      s.text = text;
      s.label = (a % 2 == 0) ? 1 : 0;
      w.corpus.push_back(std::move(s));
    }
  }
  return w;
}

double run_once(const Workload& w, const BuilderConfig& bcfg, int workers, std::string& report) {
  ScriptedProvider provider = w.provider;  // copies are independent and reentrant
  KbAdjudicator adjudicator(w.kb);
  DetectorConfig dcfg;
  DetectFn fn = [&](const InputPair& sample) {
    TagGraph g = build_tag(sample, bcfg, {provider, provider});
    return detect(g, adjudicator, dcfg);
  };
  auto t0 = std::chrono::steady_clock::now();
  MetricsReport r = evaluate(w.corpus, fn, {}, workers);
  auto t1 = std::chrono::steady_clock::now();
  r.timestamp.clear();  // wall-clock noise has no place in the comparison
  report = metrics_report_json(r);
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int samples = 400;
  int workers = 2;
#ifdef _OPENMP
  workers = omp_get_max_threads();
#endif
  BuilderConfig bcfg;
  for (int i = 1; i < argc; i += 2) {
    std::string key = argv[i];
    if (i + 1 >= argc) {
      std::cerr << "usage: tagctd_bench [--samples N] [--workers N] [--l-max N] [--k-max N]\n";
      return 2;
    }
    int value = std::atoi(argv[i + 1]);
    if (key == "--samples") samples = value;
    else if (key == "--workers") workers = value;
    else if (key == "--l-max") bcfg.l_max = value;
    else if (key == "--k-max") bcfg.k_max = value;
    else {
      std::cerr << "usage: tagctd_bench [--samples N] [--workers N] [--l-max N] [--k-max N]\n";
      return 2;
    }
  }

  Workload w = make_workload(samples, bcfg.l_max, bcfg.k_max);
  std::cout << "samples=" << samples << " l_max=" << bcfg.l_max << " k_max=" << bcfg.k_max
            << " workers=" << workers << "\n";

  std::string serial_report, parallel_report;
  double warm = run_once(w, bcfg, 1, serial_report);
  (void)warm;
  double serial_ms = run_once(w, bcfg, 1, serial_report);
  double parallel_ms = run_once(w, bcfg, workers, parallel_report);

  std::cout << "serial:   " << serial_ms << " ms\n";
  std::cout << "parallel: " << parallel_ms << " ms  (speedup " << serial_ms / parallel_ms << "x)\n";
  if (serial_report != parallel_report) {
    std::cerr << "reports differ between serial and parallel runs\n";
    return 1;
  }
  std::cout << "reports identical: yes\n";
  return 0;
}
