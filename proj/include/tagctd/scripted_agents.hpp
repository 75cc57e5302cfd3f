#pragma once

#include <map>
#include <string>
#include <vector>

#include "tagctd/datagen.hpp"

namespace tagctd {

// Deterministic datagen agents for offline runs and tests.

class ScriptedArchitect : public ArchitectAgent {
 public:
  void script_scene(const std::string& category, Scene scene);
  Scene architect(const SceneSpec& spec, CallStats& stats) override;

 private:
  std::map<std::string, Scene> scenes_;
};

// Replays one candidate sample per iteration; the last entry repeats when
// iterations outnumber entries. The risk lexicon is what the eraser promises
// to keep out of its outputs, so tests can assert the erasure held.
class ScriptedEraser : public EraserAgent {
 public:
  void script_iteration(CandidateSample sample);
  void set_risk_lexicon(std::vector<std::string> terms);
  const std::vector<std::string>& risk_lexicon() const { return lexicon_; }

  CandidateSample erase(const Scene& scene, const std::optional<std::string>& feedback,
                        int iteration, CallStats& stats) override;

  const std::vector<std::optional<std::string>>& feedback_log() const { return feedback_log_; }

 private:
  std::vector<CandidateSample> per_iteration_;
  std::vector<std::string> lexicon_;
  std::vector<std::optional<std::string>> feedback_log_;
};

// Replays one six-judge outcome row per iteration, keyed by the sample's
// iteration counter; the last row repeats.
class ScriptedJudgePanel : public JudgeAgent {
 public:
  struct PanelRow {
    std::array<bool, kPanelSize> has_risk{};
    std::array<std::string, kPanelSize> categories{};  // used when has_risk
  };

  void script_iteration(PanelRow row);
  Verdict judge(const CandidateSample& sample, JudgeProtocol protocol, int judge_id,
                CallStats& stats) override;

 private:
  std::vector<PanelRow> rows_;
};

struct ScriptedAgentSet {
  ScriptedArchitect architect;
  ScriptedEraser eraser;
  ScriptedJudgePanel judges;
};

// Script document section:
// { "scenes": {category: {"image": str, "text": str}},
//   "eraser": [{"image_prompt","caption","text","erasure_reason"}, ...],
//   "eraser_lexicon": [str, ...],
//   "judges": [{"has_risk": [6 bool], "categories": [6 str]}, ...] }
ScriptedAgentSet scripted_agents_from_json(const std::string& bytes);
ScriptedAgentSet scripted_agents_from_file(const std::string& path);

}  // namespace tagctd
