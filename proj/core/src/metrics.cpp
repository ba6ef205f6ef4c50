#include "ach/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace ach {
namespace {

constexpr const char* kMetricsVersion = "ach-metrics-v1";
constexpr const char* kCsvVersion = "# ach-metrics-csv-v1";

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("metrics: " + msg);
}

}  // namespace

void MetricLog::log(std::uint64_t step, const std::string& phase, const std::string& name,
                    double value) {
  if (!records_.empty() && step < records_.back().step)
    fail("step " + std::to_string(step) + " would go backwards from " +
         std::to_string(records_.back().step));
  records_.push_back({step, phase, name, value});
}

std::vector<double> MetricLog::series(const std::string& phase, const std::string& name) const {
  std::vector<double> out;
  for (const MetricRecord& r : records_)
    if (r.phase == phase && r.name == name) out.push_back(r.value);
  return out;
}

std::vector<std::uint64_t> MetricLog::series_steps(const std::string& phase,
                                                   const std::string& name) const {
  std::vector<std::uint64_t> out;
  for (const MetricRecord& r : records_)
    if (r.phase == phase && r.name == name) out.push_back(r.step);
  return out;
}

double MetricLog::last(const std::string& phase, const std::string& name) const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it)
    if (it->phase == phase && it->name == name) return it->value;
  fail("no records for " + phase + "/" + name);
}

void MetricLog::save_ndjson(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path + "' for writing");
  nlohmann::json header;
  header["version"] = kMetricsVersion;
  out << header.dump() << "\n";
  for (const MetricRecord& r : records_) {
    nlohmann::json j;
    j["step"] = r.step;
    j["phase"] = r.phase;
    j["name"] = r.name;
    j["value"] = r.value;
    out << j.dump() << "\n";
  }
  if (!out) fail("write to '" + path + "' failed");
}

MetricLog MetricLog::load_ndjson(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail("'" + path + "' is empty");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    fail("'" + path + "' header is not valid JSON: " + e.what());
  }
  const std::string version = header.at("version").get<std::string>();
  if (version != kMetricsVersion)
    fail("'" + path + "' has version '" + version + "', this reader requires '" +
         kMetricsVersion + "'");
  MetricLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    log.log(j.at("step").get<std::uint64_t>(), j.at("phase").get<std::string>(),
            j.at("name").get<std::string>(), j.at("value").get<double>());
  }
  return log;
}

void MetricLog::save_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path + "' for writing");
  out << kCsvVersion << "\n";
  out << "step,metric,value\n";
  char buf[32];
  for (const MetricRecord& r : records_) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.value);
    out << r.step << "," << r.phase << "/" << r.name << "," << buf << "\n";
  }
  if (!out) fail("write to '" + path + "' failed");
}

}  // namespace ach
