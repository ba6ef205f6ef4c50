#include "ach/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ach/env.hpp"

namespace ach {
namespace {

constexpr const char* kDatasetVersion = "ach-dataset-v1";

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("dataset: " + msg);
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

}  // namespace

const Transition& Dataset::get(std::size_t i) const {
  if (i >= items_.size()) fail("index " + std::to_string(i) + " out of range");
  return items_[i];
}

bool Dataset::linked(std::size_t i) const {
  return i + 1 < items_.size() && !items_[i].ends_episode();
}

void Dataset::add(Transition tr) {
  if (tr.obs.size() != obs_dim_ || tr.next_obs.size() != obs_dim_)
    fail("transition obs dim mismatch");
  if (tr.action.size() != act_dim_) fail("transition action dim mismatch");
  if (tr.terminal && tr.truncated) fail("transition cannot be both terminal and truncated");
  items_.push_back(std::move(tr));
}

void Dataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path + "' for writing");
  nlohmann::json header;
  header["version"] = kDatasetVersion;
  header["obs_dim"] = obs_dim_;
  header["act_dim"] = act_dim_;
  header["count"] = items_.size();
  header["spec_hash"] = hash_hex(spec_hash_);
  out << header.dump() << "\n";
  for (const Transition& tr : items_) {
    nlohmann::json j;
    j["obs"] = tr.obs;
    j["action"] = tr.action;
    j["reward"] = tr.reward;
    j["next_obs"] = tr.next_obs;
    j["terminal"] = tr.terminal;
    j["truncated"] = tr.truncated;
    out << j.dump() << "\n";
  }
  if (!out) fail("write to '" + path + "' failed");
}

Dataset Dataset::load(const std::string& path) {
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
  if (version != kDatasetVersion)
    fail("'" + path + "' has version '" + version + "', this reader requires '" + kDatasetVersion + "'");

  Dataset ds(header.at("obs_dim").get<std::size_t>(), header.at("act_dim").get<std::size_t>(),
             std::stoull(header.at("spec_hash").get<std::string>(), nullptr, 16));
  const auto count = header.at("count").get<std::size_t>();
  ds.items_.reserve(count);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      fail("'" + path + "' line " + std::to_string(line_no) + " is not valid JSON: " + e.what());
    }
    Transition tr;
    tr.obs = j.at("obs").get<std::vector<double>>();
    tr.action = j.at("action").get<std::vector<double>>();
    tr.reward = j.at("reward").get<double>();
    tr.next_obs = j.at("next_obs").get<std::vector<double>>();
    tr.terminal = j.at("terminal").get<bool>();
    tr.truncated = j.at("truncated").get<bool>();
    ds.add(std::move(tr));
  }
  if (ds.size() != count)
    fail("'" + path + "' header count " + std::to_string(count) + " does not match " +
         std::to_string(ds.size()) + " transitions");
  return ds;
}

CollectStats scripted_collect(const MazeSpec& spec,
                              const std::vector<std::pair<std::size_t, std::size_t>>& waypoints,
                              const CollectConfig& cfg, std::uint64_t seed, Dataset& out) {
  if (waypoints.empty()) fail("scripted_collect: waypoint list is empty");
  const auto goal = spec.goal_cell();
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const auto [r, c] = waypoints[i];
    if (r >= spec.height() || c >= spec.width() || spec.is_wall(r, c))
      fail("scripted_collect: waypoint " + std::to_string(i) + " is a wall or out of range");
    if (i > 0) {
      const auto [pr, pc] = waypoints[i - 1];
      const std::size_t dr = r > pr ? r - pr : pr - r;
      const std::size_t dc = c > pc ? c - pc : pc - c;
      if (dr + dc > 1) fail("scripted_collect: waypoints " + std::to_string(i - 1) + " and " +
                            std::to_string(i) + " are not adjacent");
    }
  }
  if (waypoints.back() != goal) fail("scripted_collect: last waypoint must be the goal cell");
  if (cfg.episodes == 0) fail("scripted_collect: episodes must be positive");
  if (cfg.action_noise < 0.0) fail("scripted_collect: action_noise must be non-negative");
  if (cfg.gain <= 0.0) fail("scripted_collect: gain must be positive");
  if (out.obs_dim() != 2 || out.act_dim() != 2) fail("scripted_collect: dataset dims must be 2/2");

  MazeEnv env(spec);
  const double advance = cfg.advance_radius_cells * spec.cell_size;
  CollectStats stats;
  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    const std::string tag = std::to_string(e);
    std::vector<double> obs = env.reset(derive_stream_seed(seed, "collect.env." + tag));
    RngStream noise(derive_stream_seed(seed, "collect.noise." + tag));
    std::size_t wp = 0;
    bool done = false;
    while (!done) {
      const auto& st = env.state();
      while (wp + 1 < waypoints.size()) {
        const auto [tx, ty] = spec.cell_center(waypoints[wp].first, waypoints[wp].second);
        const double d = std::hypot(tx - st.x, ty - st.y);
        if (d > advance) break;
        ++wp;
      }
      const auto [tx, ty] = spec.cell_center(waypoints[wp].first, waypoints[wp].second);
      double ax = cfg.gain * (tx - st.x) / spec.action_scale;
      double ay = cfg.gain * (ty - st.y) / spec.action_scale;
      if (cfg.action_noise > 0.0) {
        ax += cfg.action_noise * noise.normal();
        ay += cfg.action_noise * noise.normal();
      }
      const std::vector<double> action = {clamp1(ax), clamp1(ay)};
      StepResult res = env.step(action);
      Transition tr;
      tr.obs = std::move(obs);
      tr.action = action;
      tr.reward = res.reward;
      tr.next_obs = res.obs;
      tr.terminal = res.terminal;
      tr.truncated = res.truncated;
      out.add(std::move(tr));
      obs = std::move(res.obs);
      done = res.terminal || res.truncated;
      if (res.terminal) ++stats.successes;
      ++stats.transitions;
    }
    ++stats.episodes;
  }
  return stats;
}

}  // namespace ach
