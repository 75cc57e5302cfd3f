#include "tagctd/http_providers.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "tagctd/prompts.hpp"
#include "tagctd/scripted.hpp"
#include "tagctd/util.hpp"

namespace tagctd {

namespace {

// Models occasionally wrap JSON in fences or prose; accept the outermost
// object if the raw reply does not parse.
nlohmann::json parse_reply_object(const std::string& content) {
  nlohmann::json doc = nlohmann::json::parse(content, nullptr, false);
  if (doc.is_object()) return doc;
  auto open = content.find('{');
  auto close = content.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    doc = nlohmann::json::parse(content.substr(open, close - open + 1), nullptr, false);
    if (doc.is_object()) return doc;
  }
  fail(Errc::MalformedProviderOutput, "reply is not a JSON object");
}

std::optional<std::string> opt_reply_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || j[field].is_null()) return std::nullopt;
  if (!j[field].is_string())
    fail(Errc::MalformedProviderOutput, std::string(field) + " must be a string or null");
  return j[field].get<std::string>();
}

std::string require_reply_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    fail(Errc::MalformedProviderOutput, std::string("reply lacks string field ") + field);
  return j[field].get<std::string>();
}

NodeId parse_reply_node_id(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return j.get<NodeId>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s.empty()) fail(Errc::MalformedProviderOutput, "empty node id in reply");
    NodeId v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') fail(Errc::MalformedProviderOutput, "non-numeric node id " + s);
      v = v * 10 + static_cast<NodeId>(c - '0');
    }
    return v;
  }
  fail(Errc::MalformedProviderOutput, "node id must be a string or unsigned number");
}

}  // namespace

std::vector<std::string> HttpExtractor::extract_roots(const InputPair& input, Modality modality,
                                                      int r_max, CallStats& stats) {
  std::string content = input.modality_content(modality);
  if (trim(content).empty())
    fail(Errc::InvalidArgument, "modality content is empty for input " + input.id);
  ChatRequest req = prompts::extract_roots_request(model_, modality, content, r_max);
  ChatResponse res = client_.chat(req, &stats);
  stats.extraction_calls += 1;

  nlohmann::json doc = parse_reply_object(res.content);
  if (!doc.contains("roots") || !doc["roots"].is_array())
    fail(Errc::MalformedProviderOutput, "reply lacks a roots array");
  std::vector<std::string> raw;
  for (const auto& r : doc["roots"]) {
    if (!r.is_string()) fail(Errc::MalformedProviderOutput, "root entries must be strings");
    raw.push_back(r.get<std::string>());
  }
  return sanitize_root_labels(std::move(raw), r_max);
}

std::vector<ExpansionCandidate> HttpExpander::expand(const std::string& node_label,
                                                     const ExpansionContext& context, int k,
                                                     CallStats& stats) {
  if (k < 1) fail(Errc::InvalidArgument, "k must be >= 1");
  ChatRequest req = prompts::expand_request(model_, node_label, context, k);
  ChatResponse res = client_.chat(req, &stats);
  stats.expansion_calls += 1;

  nlohmann::json doc = parse_reply_object(res.content);
  if (!doc.contains("children") || !doc["children"].is_array())
    fail(Errc::MalformedProviderOutput, "reply lacks a children array");
  std::vector<ExpansionCandidate> raw;
  for (const auto& c : doc["children"]) {
    if (!c.is_object() || !c.contains("label") || !c["label"].is_string() || !c.contains("kind") ||
        !c["kind"].is_string() || !c.contains("p") || !c["p"].is_number())
      fail(Errc::MalformedProviderOutput, "child entries need label, kind, p");
    ExpansionCandidate cand;
    cand.label = c["label"].get<std::string>();
    try {
      cand.kind = association_kind_from_string(normalize_label(c["kind"].get<std::string>()));
    } catch (const Error&) {
      fail(Errc::MalformedProviderOutput, "unknown association kind in reply");
    }
    cand.prob = c["p"].get<double>();
    if (!(cand.prob > 0.0) || !std::isfinite(cand.prob))
      fail(Errc::MalformedProviderOutput, "child probability must be positive");
    raw.push_back(std::move(cand));
  }
  return sanitize_candidates(std::move(raw), node_label, k);
}

std::vector<PairVerdict> HttpAdjudicator::adjudicate_pairs(std::span<const LabelPair> pairs,
                                                           const PairContext& context,
                                                           int batch_size, CallStats& stats) {
  if (pairs.empty()) fail(Errc::InvalidArgument, "adjudicate_pairs needs at least one pair");
  if (batch_size < 1) fail(Errc::InvalidArgument, "batch_size must be >= 1");

  std::vector<PairVerdict> out;
  out.reserve(pairs.size());
  for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(batch_size)) {
    std::size_t count = std::min<std::size_t>(batch_size, pairs.size() - start);
    std::span<const LabelPair> chunk = pairs.subspan(start, count);
    ChatRequest req = prompts::adjudicate_request(model_, chunk, context);
    ChatResponse res = client_.chat(req, &stats);
    stats.adjudication_calls += 1;
    stats.adjudicated_pairs += chunk.size();

    nlohmann::json doc = parse_reply_object(res.content);
    if (!doc.contains("verdicts") || !doc["verdicts"].is_array() ||
        doc["verdicts"].size() != chunk.size())
      fail(Errc::MalformedProviderOutput,
           "verdict batch cannot be aligned to its pairs (expected " +
               std::to_string(chunk.size()) + ")");
    for (const auto& v : doc["verdicts"]) {
      if (!v.is_object() || !v.contains("toxic") || !v["toxic"].is_boolean())
        fail(Errc::MalformedProviderOutput, "verdict entries need a boolean toxic field");
      PairVerdict pv;
      pv.toxic = v["toxic"].get<bool>();
      if (pv.toxic) {
        pv.risk_category = opt_reply_string(v, "category");
        pv.rationale = v.contains("rationale") && v["rationale"].is_string()
                           ? v["rationale"].get<std::string>()
                           : "";
      }
      out.push_back(std::move(pv));
    }
  }
  return out;
}

std::vector<NodePair> HttpPrefilter::nominate(const TagGraph& g, CallStats& stats) {
  ChatRequest req = prompts::prefilter_request(model_, g);
  ChatResponse res = client_.chat(req, &stats);
  stats.adjudication_calls += 1;

  nlohmann::json doc = parse_reply_object(res.content);
  if (!doc.contains("pairs") || !doc["pairs"].is_array())
    fail(Errc::MalformedProviderOutput, "reply lacks a pairs array");
  std::vector<NodePair> out;
  for (const auto& p : doc["pairs"]) {
    if (!p.is_object() || !p.contains("visual") || !p.contains("textual"))
      fail(Errc::MalformedProviderOutput, "pair entries need visual and textual ids");
    NodePair np{parse_reply_node_id(p["visual"]), parse_reply_node_id(p["textual"])};
    if (!g.visual.contains(np.visual) || !g.textual.contains(np.textual))
      fail(Errc::MalformedProviderOutput, "prefilter nominated an unknown node id");
    out.push_back(np);
  }
  return out;
}

std::string HttpExplainer::elaborate(const std::string& detection_summary, CallStats& stats) {
  ChatRequest req = prompts::explain_request(model_, detection_summary);
  ChatResponse res = client_.chat(req, &stats);
  return res.content;
}

Scene HttpArchitect::architect(const SceneSpec& spec, CallStats& stats) {
  ChatRequest req = prompts::architect_request(model_, spec);
  ChatResponse res = client_.chat(req, &stats);
  stats.expansion_calls += 1;  // generation-side model call

  nlohmann::json doc = parse_reply_object(res.content);
  Scene scene;
  scene.harmful_image_description = require_reply_string(doc, "harmful_image_description");
  scene.harmful_text_description = require_reply_string(doc, "harmful_text_description");
  return scene;
}

CandidateSample HttpEraser::erase(const Scene& scene, const std::optional<std::string>& feedback,
                                  int iteration, CallStats& stats) {
  ChatRequest req = prompts::eraser_request(model_, scene, feedback, iteration);
  ChatResponse res = client_.chat(req, &stats);
  stats.expansion_calls += 1;  // generation-side model call

  nlohmann::json doc = parse_reply_object(res.content);
  CandidateSample sample;
  sample.image_prompt = require_reply_string(doc, "image_prompt");
  sample.caption = require_reply_string(doc, "caption");
  sample.text = require_reply_string(doc, "text");
  sample.erasure_reason = require_reply_string(doc, "erasure_reason");
  sample.iteration = iteration;
  return sample;
}

Verdict HttpJudge::judge(const CandidateSample& sample, JudgeProtocol protocol, int judge_id,
                         CallStats& stats) {
  ChatRequest req = prompts::judge_request(model_, sample, protocol);
  ChatResponse res = client_.chat(req, &stats);
  stats.adjudication_calls += 1;

  nlohmann::json doc = parse_reply_object(res.content);
  Verdict v;
  v.judge_id = judge_id;
  v.protocol = protocol;
  v.reason = require_reply_string(doc, "reason");
  if (protocol == JudgeProtocol::ForcedReasoning) {
    // Risk is asserted up front; only an explicit trace failure clears it.
    v.has_risk = v.reason.find(prompts::kNoRiskClueMarker) == std::string::npos;
  } else {
    if (!doc.contains("has_risk") || !doc["has_risk"].is_boolean())
      fail(Errc::MalformedProviderOutput, "judge reply needs a boolean has_risk");
    v.has_risk = doc["has_risk"].get<bool>();
  }
  if (v.has_risk) v.risk_category = opt_reply_string(doc, "risk_category");
  return v;
}

}  // namespace tagctd
