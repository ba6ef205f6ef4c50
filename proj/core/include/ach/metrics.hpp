#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ach {

struct MetricRecord {
  std::uint64_t step = 0;
  std::string phase;  // "offline" | "online" | "eval" etc.
  std::string name;
  double value = 0.0;
};

// Append-only run log. Steps must be monotone nondecreasing — metric order
// is part of the reproducibility contract (two identical runs must emit
// byte-identical files).
class MetricLog {
 public:
  void log(std::uint64_t step, const std::string& phase, const std::string& name, double value);

  const std::vector<MetricRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  // All values of one (phase, name) series in log order.
  std::vector<double> series(const std::string& phase, const std::string& name) const;
  // Steps of that series, aligned with series().
  std::vector<std::uint64_t> series_steps(const std::string& phase, const std::string& name) const;
  // Final value of a series; errors if the series is empty.
  double last(const std::string& phase, const std::string& name) const;

  // NDJSON: header {"version":"ach-metrics-v1"} then one record per line.
  void save_ndjson(const std::string& path) const;
  static MetricLog load_ndjson(const std::string& path);
  // Flat CSV: "step,metric,value" with metric = "<phase>/<name>", prefixed
  // by a "# ach-metrics-csv-v1" comment line.
  void save_csv(const std::string& path) const;

 private:
  std::vector<MetricRecord> records_;
};

}  // namespace ach
