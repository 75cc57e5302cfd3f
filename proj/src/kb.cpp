#include "tagctd/kb.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

namespace tagctd {

void ToxicKnowledgeBase::add(const std::string& a, const std::string& b,
                             const std::string& category) {
  std::string na = normalize_label(a);
  std::string nb = normalize_label(b);
  if (na.empty() || nb.empty()) fail(Errc::EmptyLabel, "knowledge base concepts must be non-empty");
  if (nb < na) std::swap(na, nb);
  entries_[{na, nb}] = category;
}

std::optional<std::string> ToxicKnowledgeBase::lookup(const std::string& a,
                                                      const std::string& b) const {
  std::string na = normalize_label(a);
  std::string nb = normalize_label(b);
  if (nb < na) std::swap(na, nb);
  auto it = entries_.find({na, nb});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

ToxicKnowledgeBase ToxicKnowledgeBase::from_json(const std::string& bytes) {
  nlohmann::json doc = nlohmann::json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_array())
    fail(Errc::MalformedDocument, "knowledge base must be a JSON array");
  ToxicKnowledgeBase kb;
  for (const auto& e : doc) {
    if (!e.is_object() || !e.contains("a") || !e.contains("b") || !e.contains("category") ||
        !e["a"].is_string() || !e["b"].is_string() || !e["category"].is_string())
      fail(Errc::MalformedDocument, "knowledge base entries need string fields a, b, category");
    kb.add(e["a"].get<std::string>(), e["b"].get<std::string>(), e["category"].get<std::string>());
  }
  return kb;
}

ToxicKnowledgeBase ToxicKnowledgeBase::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open knowledge base file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string toxic_pair_rationale(const std::string& item_a, const std::string& item_b,
                                 const std::string& relationship) {
  return "Item " + item_a + " may be associated with " + item_b +
         ", and their relationship is: " + relationship;
}

std::vector<PairVerdict> KbAdjudicator::adjudicate_pairs(std::span<const LabelPair> pairs,
                                                         const PairContext& context,
                                                         int batch_size, CallStats& stats) {
  (void)context;
  if (pairs.empty()) fail(Errc::InvalidArgument, "adjudicate_pairs needs at least one pair");
  if (batch_size < 1) fail(Errc::InvalidArgument, "batch_size must be >= 1");
  std::vector<PairVerdict> out;
  out.reserve(pairs.size());
  for (const LabelPair& p : pairs) {
    PairVerdict v;
    if (auto cat = kb_.lookup(p.visual, p.textual)) {
      v.toxic = true;
      v.risk_category = *cat;
      v.rationale = toxic_pair_rationale(p.visual, p.textual, *cat);
    }
    out.push_back(std::move(v));
  }
  stats.adjudicated_pairs += pairs.size();
  return out;
}

}  // namespace tagctd
