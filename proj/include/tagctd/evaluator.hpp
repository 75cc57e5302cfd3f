#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagctd/detector.hpp"
#include "tagctd/graph.hpp"

namespace tagctd {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
};

// F2 = 5PR / (4P + R); recall-weighted because a missed toxic item costs
// more than a false alarm. Throws UndefinedMetric when no actual positives
// exist (recall is undefined); callers surface that as null, never 0.
double f2(const ConfusionCounts& counts);

double accuracy(const ConfusionCounts& counts);

enum class CovertnessBin { Low, Medium, High };

// Low [0, 0.2), Medium [0.2, 0.8), High [0.8, 1.0]. The top interval is
// closed so c = 1 (non-toxic verdicts) stays binnable.
CovertnessBin bin_covertness(double c);
const char* to_string(CovertnessBin bin);

struct MetricSet {
  std::optional<double> accuracy;
  std::optional<double> f2;
  std::uint64_t n = 0;
  ConfusionCounts counts;
};

inline constexpr std::size_t kHistogramBins = 20;  // fixed width 0.05 over [0,1]

struct MetricsReport {
  MetricSet overall;
  std::map<CovertnessBin, MetricSet> per_bin;  // toxic-labeled samples, binned by computed c
  std::array<std::uint64_t, kHistogramBins> histogram{};  // c over toxic-labeled samples
  std::string config_digest;
  std::string provider_identity;
  std::string timestamp;
  std::uint64_t failures = 0;
  std::vector<std::string> failed_ids;
  std::vector<std::string> notes;
  std::vector<std::string> flags;
};

struct EvalMeta {
  std::string config_digest;
  std::string provider_identity;
};

using DetectFn = std::function<DetectionResult(const InputPair&)>;

// Runs detection over a fully labeled corpus and aggregates metrics. The
// aggregation is a commutative reduction, so the report is identical for any
// corpus order and for any worker count; workers > 1 evaluates samples
// concurrently. Per-sample detector failures are recorded and skipped.
MetricsReport evaluate(const std::vector<InputPair>& corpus, const DetectFn& detect_fn,
                       const EvalMeta& meta = {}, int workers = 1);

std::string metrics_report_json(const MetricsReport& report, int indent = 2);
std::string histogram_csv(const MetricsReport& report);

// RFC3339 UTC now, overridable via TAGCTD_RUN_TIMESTAMP for reproducible runs.
std::string run_timestamp();

}  // namespace tagctd
