// tagctd - toxicity association graph toolkit.
// Subcommands: build, detect, eval, datagen, cache purge.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tagctd/builder.hpp"
#include "tagctd/config.hpp"
#include "tagctd/corpus.hpp"
#include "tagctd/datagen.hpp"
#include "tagctd/detector.hpp"
#include "tagctd/evaluator.hpp"
#include "tagctd/util.hpp"

namespace fs = std::filesystem;
using namespace tagctd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;
constexpr int kExitExtraction = 4;
constexpr int kExitBadGraph = 5;
constexpr int kExitBadCorpus = 6;
constexpr int kExitExhausted = 7;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::ConfigError:
    case Errc::InvalidArgument: return kExitConfig;
    case Errc::ProviderUnavailable:
    case Errc::AuthFailure:
    case Errc::MalformedProviderOutput: return kExitProvider;
    case Errc::ExtractionFailed:
    case Errc::EmptyExtraction: return kExitExtraction;
    case Errc::MalformedDocument:
    case Errc::InvariantViolation: return kExitBadGraph;
    case Errc::CorpusParse:
    case Errc::UnlabeledSample:
    case Errc::EmptyEvaluation: return kExitBadCorpus;
    default: return kExitFailure;
  }
}

struct GlobalFlags {
  std::string config_path;
  bool json = false;
  std::optional<std::uint64_t> seed;
  std::string provider;  // "", "offline" or "http"
};

struct PairArgs {
  std::string caption;
  std::string text;
  std::string image;
  std::string id = "cli-input";
  std::string corpus_id;
};

struct BuilderFlags {
  std::optional<int> l_max, k_max, r_max;
};

AppConfig resolve_config(const GlobalFlags& g) {
  AppConfig cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path);
  if (g.seed) cfg.seed = g.seed;
  if (g.provider == "offline") {
    cfg.roles.extractor = "scripted";
    cfg.roles.expander = "scripted";
    cfg.roles.adjudicator = "kb";
    cfg.roles.explainer = "none";
    cfg.roles.agents = "scripted";
    cfg.roles.agents_architect.clear();
    cfg.roles.agents_eraser.clear();
    cfg.roles.agents_judge.clear();
    if (cfg.roles.prefilter == "http") cfg.roles.prefilter = "scripted";
  } else if (g.provider == "http") {
    cfg.roles.extractor = "http";
    cfg.roles.expander = "http";
    cfg.roles.adjudicator = "http";
    cfg.roles.explainer = "http";
    cfg.roles.agents = "http";
    cfg.roles.agents_architect.clear();
    cfg.roles.agents_eraser.clear();
    cfg.roles.agents_judge.clear();
    if (cfg.detector.prefilter_enabled) cfg.roles.prefilter = "http";
  }
  cfg.builder.deterministic_seed = cfg.seed;
  return cfg;
}

void apply_builder_flags(AppConfig& cfg, const BuilderFlags& b) {
  if (b.l_max) cfg.builder.l_max = *b.l_max;
  if (b.k_max) cfg.builder.k_max = *b.k_max;
  if (b.r_max) cfg.builder.r_max = *b.r_max;
}

InputPair resolve_input(const PairArgs& args, const AppConfig& cfg) {
  if (!args.corpus_id.empty()) {
    if (cfg.corpus_path.empty())
      fail(Errc::ConfigError, "--corpus-id requires paths.corpus in the config");
    for (InputPair& s : load_corpus(cfg.corpus_path))
      if (s.id == args.corpus_id) return s;
    fail(Errc::ConfigError, "corpus has no sample with id " + args.corpus_id);
  }
  if (args.caption.empty() && args.text.empty() && args.image.empty())
    fail(Errc::ConfigError, "provide --caption/--text (or --image), or --corpus-id");
  InputPair input;
  input.id = args.id;
  if (!args.caption.empty()) input.caption = args.caption;
  if (!args.image.empty()) input.image_path = args.image;
  input.text = args.text;
  return input;
}

void write_text_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_stats(std::ostream& os, const CallStats& s) {
  os << "calls: extraction=" << s.extraction_calls << " expansion=" << s.expansion_calls
     << " adjudication=" << s.adjudication_calls << " adjudicated_pairs=" << s.adjudicated_pairs
     << " cache_hits=" << s.cache_hits << "\n";
}

int cmd_build(const GlobalFlags& g, const PairArgs& pair, const BuilderFlags& bflags,
              std::string out_path, int workers) {
  try {
    AppConfig cfg = resolve_config(g);
    apply_builder_flags(cfg, bflags);
    ProviderRuntime runtime(cfg);
    InputPair input = resolve_input(pair, cfg);

    TagGraph graph =
        build_tag(input, cfg.builder, {runtime.extractor(), runtime.expander()}, workers);
    std::string doc = serialize_graph(graph);

    if (out_path.empty())
      out_path = (fs::path(cfg.output_dir) / (input.id + ".graph.json")).string();
    write_text_file(out_path, doc);

    if (g.json) {
      std::cout << doc;
      print_stats(std::cerr, graph.build_stats);
    } else {
      std::cout << "wrote " << out_path << " (" << graph.visual.size() << " visual + "
                << graph.textual.size() << " textual nodes)\n";
      print_stats(std::cout, graph.build_stats);
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_detect(const GlobalFlags& g, const PairArgs& pair, const BuilderFlags& bflags,
               const std::string& graph_path, std::optional<int> batch_size,
               std::optional<bool> prefilter, const std::string& out_path) {
  try {
    AppConfig cfg = resolve_config(g);
    apply_builder_flags(cfg, bflags);
    if (batch_size) cfg.detector.batch_size = *batch_size;
    if (prefilter) cfg.detector.prefilter_enabled = *prefilter;
    ProviderRuntime runtime(cfg);

    std::optional<TagGraph> graph;
    if (!graph_path.empty()) {
      graph.emplace(deserialize_graph(read_text_file(graph_path)));
    } else {
      InputPair input = resolve_input(pair, cfg);
      graph.emplace(build_tag(input, cfg.builder, {runtime.extractor(), runtime.expander()}));
    }

    DetectionResult result =
        detect(*graph, runtime.adjudicator(), cfg.detector, runtime.prefilter());
    if (result.y == 1) result.explanation = explain(result, *graph, runtime.explainer());

    std::string report = detection_report_json(result, *graph);
    std::cout << report;
    if (!out_path.empty()) write_text_file(out_path, report);
    if (!g.json) print_stats(std::cerr, result.stats);
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_eval(const GlobalFlags& g, const BuilderFlags& bflags, std::string corpus_path,
             std::string out_dir, std::optional<int> batch_size, int workers) {
  try {
    AppConfig cfg = resolve_config(g);
    apply_builder_flags(cfg, bflags);
    if (batch_size) cfg.detector.batch_size = *batch_size;
    if (!corpus_path.empty()) cfg.corpus_path = corpus_path;
    if (cfg.corpus_path.empty()) fail(Errc::ConfigError, "no corpus given (--corpus or paths.corpus)");
    if (out_dir.empty()) out_dir = cfg.output_dir;
    ProviderRuntime runtime(cfg);

    std::vector<InputPair> corpus = load_corpus(cfg.corpus_path);

    // Bind the roles once: lazy provider construction must not race the
    // worker pool.
    Extractor& extractor = runtime.extractor();
    Expander& expander = runtime.expander();
    Adjudicator& adjudicator = runtime.adjudicator();
    Prefilter* prefilter = runtime.prefilter();
    const BuilderConfig builder_cfg = cfg.builder;
    const DetectorConfig detector_cfg = cfg.detector;

    DetectFn detect_fn = [&](const InputPair& sample) {
      TagGraph graph = build_tag(sample, builder_cfg, {extractor, expander});
      return detect(graph, adjudicator, detector_cfg, prefilter);
    };

    EvalMeta meta{cfg.digest(), cfg.provider_identity()};
    MetricsReport report = evaluate(corpus, detect_fn, meta, workers);

    std::string report_json = metrics_report_json(report);
    write_text_file((fs::path(out_dir) / "metrics.json").string(), report_json);
    write_text_file((fs::path(out_dir) / "histogram.csv").string(), histogram_csv(report));

    auto cell = [](const std::optional<double>& v) {
      return v ? format_double(*v) : std::string("null");
    };
    std::ostream& os = g.json ? std::cerr : std::cout;
    if (g.json) std::cout << report_json;
    os << "bin      n      accuracy  f2\n";
    os << "overall  " << report.overall.n << "  " << cell(report.overall.accuracy) << "  "
       << cell(report.overall.f2) << "\n";
    for (const auto& [bin, m] : report.per_bin)
      os << to_string(bin) << "  " << m.n << "  " << cell(m.accuracy) << "  " << cell(m.f2)
         << "\n";
    if (report.failures > 0) os << "failures: " << report.failures << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_datagen(const GlobalFlags& g, const std::string& category, const std::string& desc,
                int max_iters, const std::string& run_id, const std::string& runs_dir,
                const std::string& append_corpus) {
  try {
    if (category.empty()) fail(Errc::ConfigError, "--category is required");
    if (max_iters < 1) fail(Errc::ConfigError, "--max-iters must be >= 1");
    AppConfig cfg = resolve_config(g);
    ProviderRuntime runtime(cfg);

    SceneSpec spec;
    spec.category = category;
    spec.short_desc = desc;

    PipelineConfig pcfg;
    pcfg.max_iters = max_iters;
    pcfg.runs_dir = runs_dir.empty() ? cfg.runs_dir : runs_dir;
    pcfg.run_id = run_id;
    pcfg.seed = cfg.seed;

    AgentProviders agents{runtime.architect(), runtime.eraser(), runtime.judge()};
    PipelineResult result = run_pipeline(spec, pcfg, agents);

    if (result.accepted && !append_corpus.empty())
      append_corpus_line(append_corpus,
                         sample_to_input(*result.accepted, spec,
                                         fs::path(result.run_dir).filename().string()));

    nlohmann::ordered_json summary;
    summary["status"] = result.status == PipelineStatus::Accepted ? "accepted" : "exhausted";
    summary["run_dir"] = result.run_dir;
    summary["iterations"] = result.trail.size();
    if (result.accepted) summary["accepted_iteration"] = result.accepted->iteration;
    if (g.json)
      std::cout << summary.dump(2) << "\n";
    else
      std::cout << summary["status"].get<std::string>() << " after " << result.trail.size()
                << " iteration(s); trail in " << result.run_dir << "\n";
    return result.status == PipelineStatus::Accepted ? kExitOk : kExitExhausted;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_cache_purge(const GlobalFlags& g) {
  try {
    AppConfig cfg = resolve_config(g);
    if (cfg.cache_dir.empty()) fail(Errc::ConfigError, "cache.dir is not configured");
    ResponseCache cache(cfg.cache_dir);
    std::size_t removed = cache.purge();
    if (g.json)
      std::cout << "{\"purged\": " << removed << "}\n";
    else
      std::cout << "purged " << removed << " cache entr" << (removed == 1 ? "y" : "ies") << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxicity association graph toolkit"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "config file (JSON)");
  app.add_flag("--json", g.json, "machine-readable stdout, logs on stderr");
  app.add_option("--seed", g.seed, "deterministic seed");
  app.add_option("--provider", g.provider, "override all provider roles")
      ->check(CLI::IsMember({"offline", "http"}));

  PairArgs pair;
  BuilderFlags bflags;
  std::string out_path, graph_path, corpus_path, out_dir;
  std::optional<int> batch_size;
  std::optional<bool> prefilter_flag;
  int workers = 1;

  auto add_pair_options = [&](CLI::App* cmd) {
    cmd->add_option("--caption", pair.caption, "pre-extracted image caption");
    cmd->add_option("--text", pair.text, "text side of the pair");
    cmd->add_option("--image", pair.image, "image file path (used as content reference)");
    cmd->add_option("--id", pair.id, "input id");
    cmd->add_option("--corpus-id", pair.corpus_id, "take the input from paths.corpus by id");
  };
  auto add_builder_options = [&](CLI::App* cmd) {
    cmd->add_option("--l-max", bflags.l_max, "maximum layer count");
    cmd->add_option("--k-max", bflags.k_max, "branching and layer capacity");
    cmd->add_option("--r-max", bflags.r_max, "root cap");
  };

  CLI::App* cmd_build_p = app.add_subcommand("build", "build a graph for one input pair");
  add_pair_options(cmd_build_p);
  add_builder_options(cmd_build_p);
  cmd_build_p->add_option("--out", out_path, "graph document output path");
  cmd_build_p->add_option("--workers", workers, "concurrent expansion calls per layer");

  CLI::App* cmd_detect_p = app.add_subcommand("detect", "detect toxicity for a pair or graph");
  add_pair_options(cmd_detect_p);
  add_builder_options(cmd_detect_p);
  cmd_detect_p->add_option("--graph", graph_path, "prebuilt graph document");
  cmd_detect_p->add_option("--batch-size", batch_size, "adjudication batch size");
  cmd_detect_p->add_option("--prefilter", prefilter_flag, "enable the pair prefilter");
  cmd_detect_p->add_option("--out", out_path, "also write the report here");

  CLI::App* cmd_eval_p = app.add_subcommand("eval", "evaluate a labeled corpus");
  add_builder_options(cmd_eval_p);
  cmd_eval_p->add_option("--corpus", corpus_path, "corpus JSONL path");
  cmd_eval_p->add_option("--out-dir", out_dir, "directory for metrics.json and histogram.csv");
  cmd_eval_p->add_option("--batch-size", batch_size, "adjudication batch size");
  cmd_eval_p->add_option("--workers", workers, "concurrent sample evaluations");

  std::string category, desc, run_id, runs_dir, append_corpus;
  int max_iters = 5;
  CLI::App* cmd_datagen_p = app.add_subcommand("datagen", "run the covert-sample pipeline");
  cmd_datagen_p->add_option("--category", category, "risk category for the scene");
  cmd_datagen_p->add_option("--desc", desc, "short scene description");
  cmd_datagen_p->add_option("--max-iters", max_iters, "iteration budget");
  cmd_datagen_p->add_option("--run-id", run_id, "run directory name");
  cmd_datagen_p->add_option("--runs-dir", runs_dir, "base directory for runs");
  cmd_datagen_p->add_option("--append-corpus", append_corpus,
                            "append accepted samples to this corpus JSONL");

  CLI::App* cmd_cache_p = app.add_subcommand("cache", "response cache maintenance");
  cmd_cache_p->require_subcommand(1);
  CLI::App* cmd_purge_p = cmd_cache_p->add_subcommand("purge", "delete all cache entries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (cmd_build_p->parsed()) return cmd_build(g, pair, bflags, out_path, workers);
  if (cmd_detect_p->parsed())
    return cmd_detect(g, pair, bflags, graph_path, batch_size, prefilter_flag, out_path);
  if (cmd_eval_p->parsed()) return cmd_eval(g, bflags, corpus_path, out_dir, batch_size, workers);
  if (cmd_datagen_p->parsed())
    return cmd_datagen(g, category, desc, max_iters, run_id, runs_dir, append_corpus);
  if (cmd_cache_p->parsed() && cmd_purge_p->parsed()) return cmd_cache_purge(g);
  return kExitConfig;
}
