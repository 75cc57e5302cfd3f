#include "tagctd/detector.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

namespace tagctd {

using ordered_json = nlohmann::ordered_json;

void DetectorConfig::validate() const {
  if (batch_size < 1) fail(Errc::InvalidArgument, "batch_size must be >= 1");
}

double mtc(const TagGraph& g, const NodePair& pair) {
  double joint = g.visual.cumulative_prob(pair.visual) * g.textual.cumulative_prob(pair.textual);
  return 1.0 - joint;
}

namespace {

std::vector<PathStep> path_steps(const AssociationTree& t, NodeId id) {
  std::vector<PathStep> steps;
  for (NodeId nid : t.path_from_root(id)) {
    const ConceptNode& n = t.node(nid);
    steps.push_back({n.label, n.kind, n.transition_prob});
  }
  return steps;
}

PairContext context_of(const TagGraph& g) {
  PairContext ctx;
  ctx.source_id = g.source.id;
  ctx.caption = g.source.caption.value_or("");
  ctx.text = g.source.text;
  return ctx;
}

struct SweepHit {
  std::size_t position;
  PairVerdict verdict;
};

// Adjudicates pairs[first, limit) in order-contiguous batches, stopping at
// the first batch that contains a toxic verdict. Returns the earliest toxic
// position within that batch.
std::optional<SweepHit> sweep(const std::vector<NodePair>& pairs, std::size_t limit,
                              const TagGraph& g, Adjudicator& adjudicator, int batch_size,
                              const PairContext& ctx, CallStats& stats) {
  for (std::size_t start = 0; start < limit; start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(limit, start + static_cast<std::size_t>(batch_size));
    std::vector<LabelPair> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back({g.visual.node(pairs[i].visual).label, g.textual.node(pairs[i].textual).label});
    std::vector<PairVerdict> verdicts =
        adjudicator.adjudicate_pairs(batch, ctx, batch_size, stats);
    if (verdicts.size() != batch.size())
      fail(Errc::MalformedProviderOutput, "verdict count does not match pair count");
    for (std::size_t i = 0; i < verdicts.size(); ++i)
      if (verdicts[i].toxic) return SweepHit{start + i, std::move(verdicts[i])};
  }
  return std::nullopt;
}

}  // namespace

DetectionResult detect(const TagGraph& g, Adjudicator& adjudicator, const DetectorConfig& cfg,
                       Prefilter* prefilter) {
  cfg.validate();
  DetectionResult result;
  result.stats = g.build_stats;

  const std::vector<NodePair> pairs = enumerate_pairs(g, cfg.ordering);
  const PairContext ctx = context_of(g);

  // A toxic prefilter nominee bounds the sweep at its order position; the
  // shallower pairs are still adjudicated so the reported pair stays minimal
  // under the configured order.
  std::size_t limit = pairs.size();
  std::optional<SweepHit> nominee_hit;
  if (cfg.prefilter_enabled && prefilter != nullptr) {
    std::vector<NodePair> nominated = prefilter->nominate(g, result.stats);
    if (!nominated.empty()) {
      std::map<std::pair<NodeId, NodeId>, std::size_t> position;
      for (std::size_t i = 0; i < pairs.size(); ++i)
        position[{pairs[i].visual, pairs[i].textual}] = i;
      std::vector<std::size_t> order_positions;
      for (const NodePair& np : nominated) {
        auto it = position.find({np.visual, np.textual});
        if (it == position.end())
          fail(Errc::MalformedProviderOutput, "prefilter nominated an unknown pair");
        order_positions.push_back(it->second);
      }
      std::sort(order_positions.begin(), order_positions.end());
      order_positions.erase(std::unique(order_positions.begin(), order_positions.end()),
                            order_positions.end());

      std::vector<LabelPair> batch;
      for (std::size_t pos : order_positions)
        batch.push_back(
            {g.visual.node(pairs[pos].visual).label, g.textual.node(pairs[pos].textual).label});
      std::vector<PairVerdict> verdicts =
          adjudicator.adjudicate_pairs(batch, ctx, cfg.batch_size, result.stats);
      if (verdicts.size() != batch.size())
        fail(Errc::MalformedProviderOutput, "verdict count does not match pair count");
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i].toxic) {
          nominee_hit = SweepHit{order_positions[i], std::move(verdicts[i])};
          limit = order_positions[i];
          break;
        }
      }
    }
  }

  std::optional<SweepHit> hit =
      sweep(pairs, limit, g, adjudicator, cfg.batch_size, ctx, result.stats);
  if (!hit) hit = std::move(nominee_hit);

  if (!hit) {
    result.y = 0;
    result.c = 1.0;
    return result;
  }

  const NodePair& matched_pair = pairs[hit->position];
  result.y = 1;
  result.c = mtc(g, matched_pair);
  MatchedPair m;
  m.visual = matched_pair.visual;
  m.textual = matched_pair.textual;
  m.risk_category = hit->verdict.risk_category.value_or("");
  m.rationale = hit->verdict.rationale;
  result.matched = std::move(m);
  result.path_visual = path_steps(g.visual, matched_pair.visual);
  result.path_textual = path_steps(g.textual, matched_pair.textual);
  return result;
}

namespace {

void append_chain(std::string& out, const char* heading, const std::vector<PathStep>& steps) {
  out += heading;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i == 0) {
      out += " '" + steps[i].label + "'";
    } else {
      out += " —[" + std::string(to_string(*steps[i].kind)) + ":" +
             format_double(steps[i].prob) + "]→ '" + steps[i].label + "'";
    }
  }
}

}  // namespace

std::string explain(const DetectionResult& result, const TagGraph& g, Explainer* explainer,
                    bool* degraded) {
  if (degraded) *degraded = false;
  if (result.y != 1 || !result.matched)
    fail(Errc::NotToxic, "explanations are only defined for toxic results");
  (void)g;

  std::string text;
  append_chain(text, "Image concept", result.path_visual);
  text += "; ";
  append_chain(text, "Text concept", result.path_textual);
  text += "; association: " + result.matched->rationale;
  text += "; MTC=" + format_double(result.c);

  if (explainer != nullptr) {
    try {
      CallStats scratch;
      std::string elaboration = explainer->elaborate(text, scratch);
      if (!trim(elaboration).empty()) return trim(elaboration) + "\n" + text;
    } catch (const Error&) {
      if (degraded) *degraded = true;
    }
  }
  return text;
}

std::string detection_report_json(const DetectionResult& result, const TagGraph& g, int indent) {
  ordered_json doc;
  doc["id"] = g.source.id;
  doc["y"] = result.y;
  doc["c"] = result.c;
  if (result.matched) {
    const ConceptNode& vn = g.visual.node(result.matched->visual);
    const ConceptNode& tn = g.textual.node(result.matched->textual);
    doc["matched"] = {
        {"visual", {{"label", vn.label}, {"depth", vn.depth}}},
        {"textual", {{"label", tn.label}, {"depth", tn.depth}}},
        {"category", result.matched->risk_category},
        {"rationale", result.matched->rationale},
    };
  } else {
    doc["matched"] = nullptr;
  }
  auto steps_json = [](const std::vector<PathStep>& steps) {
    ordered_json arr = ordered_json::array();
    for (const PathStep& s : steps) {
      ordered_json js;
      js["label"] = s.label;
      js["kind"] = s.kind ? ordered_json(to_string(*s.kind)) : ordered_json(nullptr);
      js["p"] = s.prob;
      arr.push_back(std::move(js));
    }
    return arr;
  };
  doc["paths"] = {{"visual", steps_json(result.path_visual)},
                  {"textual", steps_json(result.path_textual)}};
  doc["stats"] = {{"extraction_calls", result.stats.extraction_calls},
                  {"expansion_calls", result.stats.expansion_calls},
                  {"adjudication_calls", result.stats.adjudication_calls},
                  {"adjudicated_pairs", result.stats.adjudicated_pairs},
                  {"cache_hits", result.stats.cache_hits}};
  doc["explanation"] =
      result.explanation ? ordered_json(*result.explanation) : ordered_json(nullptr);
  return doc.dump(indent) + "\n";
}

}  // namespace tagctd
