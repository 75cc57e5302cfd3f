#include "tagctd/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>

#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tagctd {

using ordered_json = nlohmann::ordered_json;

double f2(const ConfusionCounts& counts) {
  if (counts.total() == 0) fail(Errc::UndefinedMetric, "no samples");
  if (counts.tp + counts.fn == 0)
    fail(Errc::UndefinedMetric, "no actual positives; recall is undefined");
  if (counts.tp == 0) return 0.0;
  double precision = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp);
  double recall = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
  return 5.0 * precision * recall / (4.0 * precision + recall);
}

double accuracy(const ConfusionCounts& counts) {
  if (counts.total() == 0) fail(Errc::EmptyEvaluation, "no samples");
  return static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
}

CovertnessBin bin_covertness(double c) {
  if (!(c >= 0.0) || c > 1.0) fail(Errc::OutOfRange, "covertness " + format_double(c));
  if (c < 0.2) return CovertnessBin::Low;
  if (c < 0.8) return CovertnessBin::Medium;
  return CovertnessBin::High;
}

const char* to_string(CovertnessBin bin) {
  switch (bin) {
    case CovertnessBin::Low: return "low";
    case CovertnessBin::Medium: return "medium";
    case CovertnessBin::High: return "high";
  }
  return "low";
}

std::string run_timestamp() {
  if (const char* fixed = std::getenv("TAGCTD_RUN_TIMESTAMP")) return fixed;
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

struct Outcome {
  bool ok = false;
  int label = 0;
  int y = 0;
  double c = 1.0;
  std::string id;
};

MetricSet finish_metrics(const ConfusionCounts& counts, std::uint64_t n,
                         std::vector<std::string>* flags, const std::string& flag_name) {
  MetricSet m;
  m.counts = counts;
  m.n = n;
  if (counts.total() > 0) m.accuracy = accuracy(counts);
  try {
    if (counts.total() > 0) m.f2 = f2(counts);
  } catch (const Error& e) {
    if (e.code() != Errc::UndefinedMetric) throw;
    if (flags) flags->push_back(flag_name);
  }
  return m;
}

}  // namespace

MetricsReport evaluate(const std::vector<InputPair>& corpus, const DetectFn& detect_fn,
                       const EvalMeta& meta, int workers) {
  if (corpus.empty()) fail(Errc::EmptyEvaluation, "corpus is empty");
  for (const InputPair& s : corpus)
    if (!s.label || (*s.label != 0 && *s.label != 1))
      fail(Errc::UnlabeledSample, "sample " + s.id + " has no 0/1 label");

  std::vector<Outcome> outcomes(corpus.size());
  auto eval_one = [&](std::size_t i) {
    Outcome o;
    o.id = corpus[i].id;
    o.label = *corpus[i].label;
    try {
      DetectionResult r = detect_fn(corpus[i]);
      o.ok = true;
      o.y = r.y;
      o.c = r.c;
    } catch (const std::exception&) {
      o.ok = false;
    }
    outcomes[i] = std::move(o);
  };

#ifdef _OPENMP
  if (workers > 1 && corpus.size() > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::size_t i = 0; i < corpus.size(); ++i) eval_one(i);
  } else
#else
  (void)workers;
#endif
  {
    for (std::size_t i = 0; i < corpus.size(); ++i) eval_one(i);
  }

  MetricsReport report;
  report.config_digest = meta.config_digest;
  report.provider_identity = meta.provider_identity;
  report.timestamp = run_timestamp();

  ConfusionCounts overall;
  std::map<CovertnessBin, ConfusionCounts> bin_counts;
  std::map<CovertnessBin, std::uint64_t> bin_n;
  for (const Outcome& o : outcomes) {
    if (!o.ok) {
      report.failures += 1;
      report.failed_ids.push_back(o.id);
      continue;
    }
    if (o.label == 1 && o.y == 1) overall.tp += 1;
    if (o.label == 0 && o.y == 1) overall.fp += 1;
    if (o.label == 0 && o.y == 0) overall.tn += 1;
    if (o.label == 1 && o.y == 0) overall.fn += 1;

    if (o.label == 1) {
      CovertnessBin bin = bin_covertness(o.c);
      if (o.y == 1)
        bin_counts[bin].tp += 1;
      else
        bin_counts[bin].fn += 1;
      bin_n[bin] += 1;
      // The nudge keeps values like 0.7, whose quotient lands a hair under
      // the exact decimal edge, in their nominal bin.
      std::size_t idx = std::min<std::size_t>(
          kHistogramBins - 1, static_cast<std::size_t>(std::floor(o.c / 0.05 + 1e-9)));
      report.histogram[idx] += 1;
    }
  }
  std::sort(report.failed_ids.begin(), report.failed_ids.end());

  report.overall = finish_metrics(overall, overall.total(), &report.flags, "overall_f2_undefined");
  for (CovertnessBin bin : {CovertnessBin::Low, CovertnessBin::Medium, CovertnessBin::High}) {
    auto it = bin_counts.find(bin);
    if (it == bin_counts.end()) {
      report.per_bin[bin] = MetricSet{};
      continue;
    }
    report.per_bin[bin] = finish_metrics(it->second, bin_n[bin], nullptr, "");
  }
  report.notes.push_back(
      "covertness bins hold toxic-labeled samples only, stratified by the detector's computed c; "
      "per-bin accuracy therefore reduces to recall");
  return report;
}

namespace {

ordered_json metric_set_json(const MetricSet& m) {
  ordered_json j;
  j["accuracy"] = m.accuracy ? ordered_json(*m.accuracy) : ordered_json(nullptr);
  j["f2"] = m.f2 ? ordered_json(*m.f2) : ordered_json(nullptr);
  j["n"] = m.n;
  j["counts"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn}};
  return j;
}

std::string hundredths(std::size_t i) {
  // Exact decimal text for i * 0.05 without float rounding noise.
  std::size_t h = i * 5;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%zu.%02zu", h / 100, h % 100);
  return buf;
}

}  // namespace

std::string metrics_report_json(const MetricsReport& report, int indent) {
  ordered_json doc;
  doc["overall"] = metric_set_json(report.overall);
  ordered_json bins;
  for (const auto& [bin, m] : report.per_bin) bins[to_string(bin)] = metric_set_json(m);
  doc["per_bin"] = std::move(bins);
  ordered_json hist = ordered_json::array();
  for (std::size_t i = 0; i < kHistogramBins; ++i)
    hist.push_back({{"bin_left", hundredths(i)}, {"bin_right", hundredths(i + 1)},
                    {"count", report.histogram[i]}});
  doc["histogram"] = std::move(hist);
  doc["run_meta"] = {{"config_digest", report.config_digest},
                     {"provider", report.provider_identity},
                     {"timestamp", report.timestamp},
                     {"failures", report.failures},
                     {"failed_ids", report.failed_ids},
                     {"notes", report.notes},
                     {"flags", report.flags}};
  return doc.dump(indent) + "\n";
}

std::string histogram_csv(const MetricsReport& report) {
  std::string out = "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < kHistogramBins; ++i)
    out += hundredths(i) + "," + hundredths(i + 1) + "," + std::to_string(report.histogram[i]) + "\n";
  return out;
}

}  // namespace tagctd
