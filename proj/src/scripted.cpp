#include "tagctd/scripted.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

namespace tagctd {

std::vector<std::string> sanitize_root_labels(std::vector<std::string> raw, int r_max) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::string& label : raw) {
    std::string trimmed = trim(label);
    if (trimmed.empty()) continue;
    if (!seen.insert(normalize_label(trimmed)).second) continue;
    out.push_back(std::move(trimmed));
    if (static_cast<int>(out.size()) == r_max) break;
  }
  if (out.empty()) fail(Errc::EmptyExtraction, "provider returned no entities");
  return out;
}

std::vector<ExpansionCandidate> sanitize_candidates(std::vector<ExpansionCandidate> raw,
                                                    const std::string& node_label, int k) {
  std::string self = normalize_label(node_label);
  std::vector<ExpansionCandidate> out;
  for (ExpansionCandidate& c : raw) {
    c.label = trim(c.label);
    if (c.label.empty()) continue;
    if (normalize_label(c.label) == self) continue;
    out.push_back(std::move(c));
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;
}

void ScriptedProvider::script_roots(Modality m, const std::string& content,
                                    std::vector<std::string> labels) {
  roots_[static_cast<int>(m)][normalize_label(content)] = std::move(labels);
}

void ScriptedProvider::script_expansion(const std::string& label,
                                        std::vector<ExpansionCandidate> candidates) {
  expansions_[normalize_label(label)] = std::move(candidates);
}

std::vector<std::string> ScriptedProvider::extract_roots(const InputPair& input, Modality modality,
                                                         int r_max, CallStats& stats) {
  std::string content = input.modality_content(modality);
  if (trim(content).empty())
    fail(Errc::InvalidArgument, "modality content is empty for input " + input.id);
  stats.extraction_calls += 1;
  const auto& table = roots_[static_cast<int>(modality)];
  auto it = table.find(normalize_label(content));
  if (it == table.end())
    fail(Errc::EmptyExtraction, "no scripted roots for " + std::string(to_string(modality)) +
                                    " content of input " + input.id);
  return sanitize_root_labels(it->second, r_max);
}

std::vector<ExpansionCandidate> ScriptedProvider::expand(const std::string& node_label,
                                                         const ExpansionContext& context, int k,
                                                         CallStats& stats) {
  (void)context;
  if (k < 1) fail(Errc::InvalidArgument, "k must be >= 1");
  if (trim(node_label).empty()) fail(Errc::EmptyLabel, "cannot expand an empty label");
  stats.expansion_calls += 1;
  auto it = expansions_.find(normalize_label(node_label));
  if (it == expansions_.end()) return {};
  return sanitize_candidates(it->second, node_label, k);
}

ScriptedProvider ScriptedProvider::from_json(const std::string& bytes) {
  nlohmann::json doc = nlohmann::json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    fail(Errc::MalformedDocument, "script must be a JSON object");
  ScriptedProvider p;
  if (doc.contains("roots")) {
    for (const char* mod : {"visual", "textual"}) {
      if (!doc["roots"].contains(mod)) continue;
      for (const auto& [content, labels] : doc["roots"][mod].items()) {
        if (!labels.is_array()) fail(Errc::MalformedDocument, "scripted roots must be arrays");
        std::vector<std::string> ls;
        for (const auto& l : labels) ls.push_back(l.get<std::string>());
        p.script_roots(modality_from_string(mod), content, std::move(ls));
      }
    }
  }
  if (doc.contains("prefilter_pairs")) {
    for (const auto& jp : doc["prefilter_pairs"]) {
      if (!jp.is_array() || jp.size() != 2)
        fail(Errc::MalformedDocument, "prefilter pairs must be [visual, textual] label pairs");
      p.prefilter_pairs_.emplace_back(jp[0].get<std::string>(), jp[1].get<std::string>());
    }
  }
  if (doc.contains("expansions")) {
    for (const auto& [label, cands] : doc["expansions"].items()) {
      if (!cands.is_array()) fail(Errc::MalformedDocument, "scripted expansions must be arrays");
      std::vector<ExpansionCandidate> cs;
      for (const auto& c : cands) {
        if (!c.contains("label") || !c.contains("kind") || !c.contains("p"))
          fail(Errc::MalformedDocument, "scripted candidates need label, kind, p");
        cs.push_back({c["label"].get<std::string>(),
                      association_kind_from_string(c["kind"].get<std::string>()),
                      c["p"].get<double>()});
      }
      p.script_expansion(label, std::move(cs));
    }
  }
  return p;
}

ScriptedProvider ScriptedProvider::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open script file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ScriptedPrefilter::script_pair(const std::string& visual_label,
                                    const std::string& textual_label) {
  pairs_.emplace_back(normalize_label(visual_label), normalize_label(textual_label));
}

std::vector<NodePair> ScriptedPrefilter::nominate(const TagGraph& g, CallStats& stats) {
  stats.adjudication_calls += 1;
  std::vector<NodePair> out;
  for (const auto& [vid, vn] : g.visual.nodes()) {
    for (const auto& [tid, tn] : g.textual.nodes()) {
      for (const auto& [pv, pt] : pairs_) {
        if (normalize_label(vn.label) == pv && normalize_label(tn.label) == pt) {
          out.push_back({vid, tid});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace tagctd
