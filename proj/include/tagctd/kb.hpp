#pragma once

#include <map>
#include <string>
#include <utility>

#include "tagctd/provider.hpp"

namespace tagctd {

// Static oracle set of toxic concept pairs. Lookups use normalized exact
// string equality and are symmetric in the two concepts.
class ToxicKnowledgeBase {
 public:
  ToxicKnowledgeBase() = default;

  void add(const std::string& a, const std::string& b, const std::string& category);

  // Risk category for (a, b) in either orientation, or nullopt.
  std::optional<std::string> lookup(const std::string& a, const std::string& b) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // JSON array of {"a": str, "b": str, "category": str}.
  static ToxicKnowledgeBase from_json(const std::string& bytes);
  static ToxicKnowledgeBase from_file(const std::string& path);

 private:
  // Key is the normalized pair with the two sides in lexicographic order, so
  // symmetry holds by construction.
  std::map<std::pair<std::string, std::string>, std::string> entries_;
};

// Adjudicator backed by the knowledge base. Pure and reentrant; issues zero
// model calls.
class KbAdjudicator : public Adjudicator {
 public:
  explicit KbAdjudicator(ToxicKnowledgeBase kb) : kb_(std::move(kb)) {}

  std::vector<PairVerdict> adjudicate_pairs(std::span<const LabelPair> pairs,
                                            const PairContext& context, int batch_size,
                                            CallStats& stats) override;

  const ToxicKnowledgeBase& kb() const { return kb_; }

 private:
  ToxicKnowledgeBase kb_;
};

// The rationale shape used for toxic verdicts throughout the system.
std::string toxic_pair_rationale(const std::string& item_a, const std::string& item_b,
                                 const std::string& relationship);

}  // namespace tagctd
