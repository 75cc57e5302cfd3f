#pragma once

#include <memory>
#include <optional>
#include <string>

#include "tagctd/builder.hpp"
#include "tagctd/chat_client.hpp"
#include "tagctd/datagen.hpp"
#include "tagctd/detector.hpp"
#include "tagctd/http_providers.hpp"
#include "tagctd/kb.hpp"
#include "tagctd/scripted.hpp"
#include "tagctd/scripted_agents.hpp"

namespace tagctd {

// Provider kinds per role. Detection stays fully offline with scripted
// extraction/expansion and a knowledge-base adjudicator; any role can be
// pointed at a chat endpoint independently.
struct ProviderRoles {
  std::string extractor = "scripted";   // scripted | http
  std::string expander = "scripted";    // scripted | http
  std::string adjudicator = "kb";       // kb | http
  std::string prefilter = "none";       // none | scripted | http
  std::string explainer = "none";       // none | http
  std::string agents = "scripted";      // scripted | http; default for the three agent roles
  // Per-agent overrides ("agents.architect" etc.); empty means follow agents.
  std::string agents_architect;
  std::string agents_eraser;
  std::string agents_judge;

  std::string architect_role() const { return agents_architect.empty() ? agents : agents_architect; }
  std::string eraser_role() const { return agents_eraser.empty() ? agents : agents_eraser; }
  std::string judge_role() const { return agents_judge.empty() ? agents : agents_judge; }
};

struct AppConfig {
  std::string endpoint;       // provider.endpoint
  std::string model = "default-model";
  ProviderRoles roles;
  BuilderConfig builder;
  DetectorConfig detector;
  bool cache_enabled = false;
  std::string cache_dir;      // cache.dir
  std::string kb_path;
  std::string script_path;
  std::string corpus_path;
  std::string output_dir = ".";
  std::string runs_dir = "runs";
  std::optional<std::uint64_t> seed;

  void validate() const;  // bounds and referenced-file existence
  std::string digest() const;
  std::string provider_identity() const;
};

AppConfig load_config(const std::string& path);
AppConfig parse_config(const std::string& bytes, const std::string& origin);

// Owns the providers selected by the config and hands out role references.
// Build it once per process; it is safe to share across worker threads.
class ProviderRuntime {
 public:
  explicit ProviderRuntime(const AppConfig& cfg);

  Extractor& extractor();
  Expander& expander();
  Adjudicator& adjudicator();
  Prefilter* prefilter();    // nullptr when the role is none
  Explainer* explainer();    // nullptr when the role is none
  ArchitectAgent& architect();
  EraserAgent& eraser();
  JudgeAgent& judge();

  ResponseCache* cache() { return cache_ ? &*cache_ : nullptr; }

 private:
  ChatClient& require_chat();
  ScriptedProvider& require_scripted();
  ScriptedAgentSet& require_scripted_agents();

  AppConfig cfg_;
  std::optional<ResponseCache> cache_;
  std::optional<ChatClient> chat_;
  std::optional<ScriptedProvider> scripted_;
  std::optional<KbAdjudicator> kb_adjudicator_;
  std::optional<ScriptedAgentSet> scripted_agents_;
  std::unique_ptr<HttpExtractor> http_extractor_;
  std::unique_ptr<HttpExpander> http_expander_;
  std::unique_ptr<HttpAdjudicator> http_adjudicator_;
  std::unique_ptr<HttpPrefilter> http_prefilter_;
  std::unique_ptr<ScriptedPrefilter> scripted_prefilter_;
  std::unique_ptr<HttpExplainer> http_explainer_;
  std::unique_ptr<HttpArchitect> http_architect_;
  std::unique_ptr<HttpEraser> http_eraser_;
  std::unique_ptr<HttpJudge> http_judge_;
};

}  // namespace tagctd
