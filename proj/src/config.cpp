#include "tagctd/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

namespace tagctd {

namespace fs = std::filesystem;

namespace {

void check_role(const std::string& role, const std::string& value,
                const std::set<std::string>& allowed) {
  if (!allowed.count(value))
    fail(Errc::ConfigError, "provider.roles." + role + " cannot be '" + value + "'");
}

}  // namespace

void AppConfig::validate() const {
  builder.validate();
  detector.validate();
  check_role("extractor", roles.extractor, {"scripted", "http"});
  check_role("expander", roles.expander, {"scripted", "http"});
  check_role("adjudicator", roles.adjudicator, {"kb", "http"});
  check_role("prefilter", roles.prefilter, {"none", "scripted", "http"});
  check_role("explainer", roles.explainer, {"none", "http"});
  check_role("agents", roles.agents, {"scripted", "http"});
  for (const auto& [name, value] : {std::pair<const char*, const std::string&>{
                                        "agents.architect", roles.agents_architect},
                                    {"agents.eraser", roles.agents_eraser},
                                    {"agents.judge", roles.agents_judge}})
    if (!value.empty()) check_role(name, value, {"scripted", "http"});

  // Whatever is configured must exist; whether a role actually needs a file
  // is enforced when that role is first requested.
  for (const std::string& p : {kb_path, script_path}) {
    if (!p.empty() && !fs::exists(p)) fail(Errc::ConfigError, "referenced file missing: " + p);
  }
  if (!corpus_path.empty() && !fs::exists(corpus_path))
    fail(Errc::ConfigError, "referenced file missing: " + corpus_path);
}

namespace {

nlohmann::ordered_json config_to_json(const AppConfig& c) {
  nlohmann::ordered_json doc;
  doc["provider"] = {{"endpoint", c.endpoint},
                     {"model", c.model},
                     {"roles",
                      {{"extractor", c.roles.extractor},
                       {"expander", c.roles.expander},
                       {"adjudicator", c.roles.adjudicator},
                       {"prefilter", c.roles.prefilter},
                       {"explainer", c.roles.explainer},
                       {"agents", c.roles.agents}}}};
  doc["builder"] = {{"l_max", c.builder.l_max}, {"k_max", c.builder.k_max},
                    {"r_max", c.builder.r_max}};
  doc["detector"] = {{"batch_size", c.detector.batch_size},
                     {"prefilter", c.detector.prefilter_enabled},
                     {"ordering", "depth_sum_then_prob"}};
  doc["cache"] = {{"enabled", c.cache_enabled}, {"dir", c.cache_dir}};
  doc["paths"] = {{"kb", c.kb_path},
                  {"script", c.script_path},
                  {"corpus", c.corpus_path},
                  {"output_dir", c.output_dir},
                  {"runs_dir", c.runs_dir}};
  doc["seed"] = c.seed ? nlohmann::ordered_json(*c.seed) : nlohmann::ordered_json(nullptr);
  return doc;
}

}  // namespace

std::string AppConfig::digest() const { return hex64(fnv1a64(config_to_json(*this).dump())); }

std::string AppConfig::provider_identity() const {
  return "extractor=" + roles.extractor + ",expander=" + roles.expander +
         ",adjudicator=" + roles.adjudicator + ",prefilter=" + roles.prefilter +
         ",explainer=" + roles.explainer + ",agents=" + roles.agents +
         (endpoint.empty() ? "" : ",endpoint=" + endpoint);
}

AppConfig parse_config(const std::string& bytes, const std::string& origin) {
  nlohmann::json doc = nlohmann::json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    fail(Errc::ConfigError, origin + " is not a JSON object");

  AppConfig c;
  try {
    if (doc.contains("provider")) {
      const auto& p = doc["provider"];
      if (p.contains("endpoint") && !p["endpoint"].is_null())
        c.endpoint = p["endpoint"].get<std::string>();
      if (p.contains("model")) c.model = p["model"].get<std::string>();
      if (p.contains("roles")) {
        const auto& r = p["roles"];
        if (r.contains("extractor")) c.roles.extractor = r["extractor"].get<std::string>();
        if (r.contains("expander")) c.roles.expander = r["expander"].get<std::string>();
        if (r.contains("adjudicator")) c.roles.adjudicator = r["adjudicator"].get<std::string>();
        if (r.contains("prefilter")) c.roles.prefilter = r["prefilter"].get<std::string>();
        if (r.contains("explainer")) c.roles.explainer = r["explainer"].get<std::string>();
        if (r.contains("agents")) c.roles.agents = r["agents"].get<std::string>();
        if (r.contains("agents.architect"))
          c.roles.agents_architect = r["agents.architect"].get<std::string>();
        if (r.contains("agents.eraser"))
          c.roles.agents_eraser = r["agents.eraser"].get<std::string>();
        if (r.contains("agents.judge"))
          c.roles.agents_judge = r["agents.judge"].get<std::string>();
      }
    }
    if (doc.contains("builder")) {
      const auto& b = doc["builder"];
      if (b.contains("l_max")) c.builder.l_max = b["l_max"].get<int>();
      if (b.contains("k_max")) c.builder.k_max = b["k_max"].get<int>();
      if (b.contains("r_max")) c.builder.r_max = b["r_max"].get<int>();
    }
    if (doc.contains("detector")) {
      const auto& d = doc["detector"];
      if (d.contains("batch_size")) c.detector.batch_size = d["batch_size"].get<int>();
      if (d.contains("prefilter")) c.detector.prefilter_enabled = d["prefilter"].get<bool>();
      if (d.contains("ordering") && d["ordering"].get<std::string>() != "depth_sum_then_prob")
        fail(Errc::ConfigError, "unknown detector.ordering");
    }
    if (doc.contains("cache")) {
      const auto& k = doc["cache"];
      if (k.contains("enabled")) c.cache_enabled = k["enabled"].get<bool>();
      if (k.contains("dir") && !k["dir"].is_null()) c.cache_dir = k["dir"].get<std::string>();
    }
    if (doc.contains("paths")) {
      const auto& p = doc["paths"];
      auto get_path = [&](const char* field, std::string& out) {
        if (p.contains(field) && !p[field].is_null()) out = p[field].get<std::string>();
      };
      get_path("kb", c.kb_path);
      get_path("script", c.script_path);
      get_path("corpus", c.corpus_path);
      get_path("output_dir", c.output_dir);
      get_path("runs_dir", c.runs_dir);
    }
    if (doc.contains("seed") && !doc["seed"].is_null())
      c.seed = doc["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ConfigError, origin + ": " + e.what());
  }
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

ProviderRuntime::ProviderRuntime(const AppConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.cache_enabled) {
    if (cfg_.cache_dir.empty()) fail(Errc::ConfigError, "cache.dir is required when cache.enabled");
    cache_.emplace(cfg_.cache_dir);
  }
}

ChatClient& ProviderRuntime::require_chat() {
  if (!chat_) {
    if (cfg_.endpoint.empty())
      fail(Errc::ConfigError, "provider.endpoint is required for http roles");
    const char* key = std::getenv("TAGCTD_API_KEY");
    chat_.emplace(cfg_.endpoint, key ? key : "", RetryPolicy{}, cache(), Transport{});
  }
  return *chat_;
}

ScriptedProvider& ProviderRuntime::require_scripted() {
  if (!scripted_) {
    if (cfg_.script_path.empty())
      fail(Errc::ConfigError, "paths.script is required for scripted roles");
    try {
      scripted_.emplace(ScriptedProvider::from_file(cfg_.script_path));
    } catch (const Error& e) {
      if (e.code() == Errc::MalformedDocument)
        fail(Errc::ConfigError, std::string("bad script file: ") + e.what());
      throw;
    }
  }
  return *scripted_;
}

ScriptedAgentSet& ProviderRuntime::require_scripted_agents() {
  if (!scripted_agents_) {
    if (cfg_.script_path.empty())
      fail(Errc::ConfigError, "paths.script is required for scripted agents");
    try {
      scripted_agents_.emplace(scripted_agents_from_file(cfg_.script_path));
    } catch (const Error& e) {
      if (e.code() == Errc::MalformedDocument)
        fail(Errc::ConfigError, std::string("bad script file: ") + e.what());
      throw;
    }
  }
  return *scripted_agents_;
}

Extractor& ProviderRuntime::extractor() {
  if (cfg_.roles.extractor == "http") {
    if (!http_extractor_)
      http_extractor_ = std::make_unique<HttpExtractor>(require_chat(), cfg_.model);
    return *http_extractor_;
  }
  return require_scripted();
}

Expander& ProviderRuntime::expander() {
  if (cfg_.roles.expander == "http") {
    if (!http_expander_) http_expander_ = std::make_unique<HttpExpander>(require_chat(), cfg_.model);
    return *http_expander_;
  }
  return require_scripted();
}

Adjudicator& ProviderRuntime::adjudicator() {
  if (cfg_.roles.adjudicator == "http") {
    if (!http_adjudicator_)
      http_adjudicator_ = std::make_unique<HttpAdjudicator>(require_chat(), cfg_.model);
    return *http_adjudicator_;
  }
  if (!kb_adjudicator_) {
    if (cfg_.kb_path.empty()) fail(Errc::ConfigError, "paths.kb is required for the kb adjudicator");
    try {
      kb_adjudicator_.emplace(ToxicKnowledgeBase::from_file(cfg_.kb_path));
    } catch (const Error& e) {
      if (e.code() == Errc::MalformedDocument)
        fail(Errc::ConfigError, std::string("bad knowledge base file: ") + e.what());
      throw;
    }
  }
  return *kb_adjudicator_;
}

Prefilter* ProviderRuntime::prefilter() {
  if (cfg_.roles.prefilter == "http") {
    if (!http_prefilter_)
      http_prefilter_ = std::make_unique<HttpPrefilter>(require_chat(), cfg_.model);
    return http_prefilter_.get();
  }
  if (cfg_.roles.prefilter == "scripted") {
    if (!scripted_prefilter_) {
      scripted_prefilter_ = std::make_unique<ScriptedPrefilter>();
      // Nomination pairs come from the script file; with none scripted the
      // prefilter nominates nothing and detection falls back to the sweep.
      for (const auto& [vis, tex] : require_scripted().prefilter_pairs())
        scripted_prefilter_->script_pair(vis, tex);
    }
    return scripted_prefilter_.get();
  }
  return nullptr;
}

Explainer* ProviderRuntime::explainer() {
  if (cfg_.roles.explainer == "http") {
    if (!http_explainer_)
      http_explainer_ = std::make_unique<HttpExplainer>(require_chat(), cfg_.model);
    return http_explainer_.get();
  }
  return nullptr;
}

ArchitectAgent& ProviderRuntime::architect() {
  if (cfg_.roles.architect_role() == "http") {
    if (!http_architect_)
      http_architect_ = std::make_unique<HttpArchitect>(require_chat(), cfg_.model);
    return *http_architect_;
  }
  return require_scripted_agents().architect;
}

EraserAgent& ProviderRuntime::eraser() {
  if (cfg_.roles.eraser_role() == "http") {
    if (!http_eraser_) http_eraser_ = std::make_unique<HttpEraser>(require_chat(), cfg_.model);
    return *http_eraser_;
  }
  return require_scripted_agents().eraser;
}

JudgeAgent& ProviderRuntime::judge() {
  if (cfg_.roles.judge_role() == "http") {
    if (!http_judge_) http_judge_ = std::make_unique<HttpJudge>(require_chat(), cfg_.model);
    return *http_judge_;
  }
  return require_scripted_agents().judges;
}

}  // namespace tagctd
