#include "tagctd/scripted_agents.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagctd/kb.hpp"
#include "tagctd/prompts.hpp"
#include "tagctd/util.hpp"

namespace tagctd {

void ScriptedArchitect::script_scene(const std::string& category, Scene scene) {
  scenes_[normalize_label(category)] = std::move(scene);
}

Scene ScriptedArchitect::architect(const SceneSpec& spec, CallStats& stats) {
  stats.expansion_calls += 1;
  auto it = scenes_.find(normalize_label(spec.category));
  if (it == scenes_.end())
    fail(Errc::MalformedProviderOutput, "no scripted scene for category '" + spec.category + "'");
  return it->second;
}

void ScriptedEraser::script_iteration(CandidateSample sample) {
  per_iteration_.push_back(std::move(sample));
}

void ScriptedEraser::set_risk_lexicon(std::vector<std::string> terms) {
  lexicon_ = std::move(terms);
}

CandidateSample ScriptedEraser::erase(const Scene& scene,
                                      const std::optional<std::string>& feedback, int iteration,
                                      CallStats& stats) {
  (void)scene;
  stats.expansion_calls += 1;
  feedback_log_.push_back(feedback);
  if (per_iteration_.empty()) fail(Errc::MalformedProviderOutput, "scripted eraser has no entries");
  std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(iteration),
                                          per_iteration_.size()) - 1;
  CandidateSample sample = per_iteration_[idx];
  sample.iteration = iteration;
  return sample;
}

void ScriptedJudgePanel::script_iteration(PanelRow row) { rows_.push_back(std::move(row)); }

Verdict ScriptedJudgePanel::judge(const CandidateSample& sample, JudgeProtocol protocol,
                                  int judge_id, CallStats& stats) {
  stats.adjudication_calls += 1;
  if (rows_.empty()) fail(Errc::MalformedProviderOutput, "scripted judge panel has no rows");
  if (judge_id < 1 || judge_id > kPanelSize)
    fail(Errc::WrongPanelShape, "judge id out of range: " + std::to_string(judge_id));
  std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(sample.iteration),
                                          rows_.size()) - 1;
  const PanelRow& row = rows_[idx];

  Verdict v;
  v.judge_id = judge_id;
  v.protocol = protocol;
  v.has_risk = row.has_risk[static_cast<std::size_t>(judge_id - 1)];
  if (v.has_risk) {
    std::string category = row.categories[static_cast<std::size_t>(judge_id - 1)];
    if (category.empty()) category = "unspecified";
    v.risk_category = category;
    ErasureMemo memo = parse_erasure_reason(sample.erasure_reason).value_or(ErasureMemo{});
    v.reason = toxic_pair_rationale(memo.normal_item.empty() ? "the depicted item" : memo.normal_item,
                                    memo.risk_item.empty() ? category : memo.risk_item,
                                    memo.common_relation.empty() ? category : memo.common_relation);
  } else if (protocol == JudgeProtocol::ForcedReasoning) {
    v.reason = prompts::kNoRiskClueMarker;
  } else {
    v.reason = "No synergistic risk found in the pair.";
  }
  return v;
}

ScriptedAgentSet scripted_agents_from_json(const std::string& bytes) {
  nlohmann::json doc = nlohmann::json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    fail(Errc::MalformedDocument, "agent script must be a JSON object");
  // Agent tables may live beside provider tables in one script file.
  if (doc.contains("agents") && doc["agents"].is_object()) doc = doc["agents"];
  ScriptedAgentSet set;
  if (doc.contains("scenes")) {
    for (const auto& [category, js] : doc["scenes"].items()) {
      if (!js.is_object() || !js.contains("image") || !js.contains("text"))
        fail(Errc::MalformedDocument, "scripted scenes need image and text");
      set.architect.script_scene(
          category, {js["image"].get<std::string>(), js["text"].get<std::string>()});
    }
  }
  if (doc.contains("eraser")) {
    for (const auto& je : doc["eraser"]) {
      CandidateSample s;
      s.image_prompt = je.at("image_prompt").get<std::string>();
      s.caption = je.at("caption").get<std::string>();
      s.text = je.at("text").get<std::string>();
      s.erasure_reason = je.at("erasure_reason").get<std::string>();
      set.eraser.script_iteration(std::move(s));
    }
  }
  if (doc.contains("eraser_lexicon")) {
    std::vector<std::string> terms;
    for (const auto& t : doc["eraser_lexicon"]) terms.push_back(t.get<std::string>());
    set.eraser.set_risk_lexicon(std::move(terms));
  }
  if (doc.contains("judges")) {
    for (const auto& jr : doc["judges"]) {
      ScriptedJudgePanel::PanelRow row;
      if (!jr.is_object() || !jr.contains("has_risk") || !jr["has_risk"].is_array() ||
          jr["has_risk"].size() != kPanelSize)
        fail(Errc::MalformedDocument, "scripted judge rows need a has_risk list of 6 booleans");
      for (std::size_t i = 0; i < kPanelSize; ++i)
        row.has_risk[i] = jr["has_risk"][i].get<bool>();
      if (jr.contains("categories")) {
        if (!jr["categories"].is_array() || jr["categories"].size() != kPanelSize)
          fail(Errc::MalformedDocument, "scripted judge categories must list 6 entries");
        for (std::size_t i = 0; i < kPanelSize; ++i)
          row.categories[i] = jr["categories"][i].get<std::string>();
      }
      set.judges.script_iteration(std::move(row));
    }
  }
  return set;
}

ScriptedAgentSet scripted_agents_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open agent script " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scripted_agents_from_json(ss.str());
}

}  // namespace tagctd
