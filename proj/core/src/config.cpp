#include "ach/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ach/rng.hpp"

namespace ach {
namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("config: " + msg);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double_field(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    fail("field '" + key + "' has non-numeric value '" + value + "'");
  }
  if (pos != value.size()) fail("field '" + key + "' has trailing junk in '" + value + "'");
  if (!std::isfinite(out)) fail("field '" + key + "' must be finite");
  return out;
}

std::uint64_t parse_u64_field(const std::string& key, const std::string& value) {
  // std::stoull happily wraps negative inputs around; reject them up front.
  if (value.empty() || value[0] == '-' || value[0] == '+')
    fail("field '" + key + "' needs a nonnegative integer, got '" + value + "'");
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(value, &pos);
  } catch (const std::exception&) {
    fail("field '" + key + "' needs a nonnegative integer, got '" + value + "'");
  }
  if (pos != value.size()) fail("field '" + key + "' has trailing junk in '" + value + "'");
  return out;
}

std::size_t parse_size_field(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64_field(key, value));
}

bool parse_bool_field(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail("field '" + key + "' needs true/false, got '" + value + "'");
}

// Parses "fixed-<N>" into N; returns 0 when the mode is not fixed.
std::size_t fixed_mode_len(const std::string& mode) {
  if (mode.rfind("fixed-", 0) != 0) return 0;
  const std::string num = mode.substr(6);
  if (num.empty()) fail("mode 'fixed-' is missing its length");
  return parse_size_field("mode", num);
}

}  // namespace

PolicyConfig RunConfig::policy_config(std::size_t obs_dim, std::size_t act_dim) const {
  PolicyConfig pc;
  pc.obs_dim = obs_dim;
  pc.act_dim = act_dim;
  pc.h = h;
  pc.flow_steps = flow_steps;
  pc.hidden.assign(mlp_depth, mlp_width);
  return pc;
}

CriticConfig RunConfig::critic_config(std::size_t obs_dim, std::size_t act_dim) const {
  CriticConfig cc;
  cc.obs_dim = obs_dim;
  cc.act_dim = act_dim;
  cc.h = h;
  cc.d = d_model;
  cc.heads = n_heads;
  cc.blocks = n_blocks;
  cc.ff = ff_dim;
  cc.ensemble = ensemble;
  return cc;
}

LengthSelectConfig RunConfig::select_config() const {
  LengthSelectConfig sel;
  sel.beta = beta;
  if (mode == "soft") {
    sel.mode = LengthMode::kSoft;
  } else if (mode == "greedy") {
    sel.mode = LengthMode::kGreedy;
  } else if (mode == "random") {
    sel.mode = LengthMode::kRandom;
  } else if (mode == "uniform") {
    sel.mode = LengthMode::kUniform;
  } else if (std::size_t len = fixed_mode_len(mode); len > 0) {
    sel.mode = LengthMode::kFixed;
    sel.fixed_len = len;
  } else {
    fail("unknown mode '" + mode + "'");
  }
  return sel;
}

LengthSelectConfig RunConfig::eval_select_config() const {
  LengthSelectConfig sel = select_config();
  if (sel.mode != LengthMode::kFixed) sel.mode = LengthMode::kGreedy;
  return sel;
}

RunConfig profile_defaults(const std::string& profile) {
  if (profile == "desk") {
    return RunConfig{};  // the struct defaults ARE the desk profile
  }
  if (profile == "paper") {
    RunConfig cfg;
    cfg.profile = "paper";
    cfg.lr = 3e-4;
    cfg.batch = 256;
    cfg.mlp_width = 512;
    cfg.mlp_depth = 4;
    cfg.d_model = 256;
    cfg.n_heads = 8;
    cfg.n_blocks = 2;
    cfg.ff_dim = 1024;
    cfg.ensemble = 2;
    cfg.offline_steps = 1000000;
    cfg.online_steps = 1000000;
    cfg.eval_every = 25000;
    cfg.eval_episodes = 50;
    cfg.log_every = 1000;
    cfg.replay_capacity = 2500000;
    return cfg;
  }
  fail("unknown profile '" + profile + "' (expected paper or desk)");
}

void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "h") cfg.h = parse_size_field(key, value);
  else if (key == "beta") cfg.beta = parse_double_field(key, value);
  else if (key == "alpha") cfg.alpha = parse_double_field(key, value);
  else if (key == "gamma") cfg.gamma = parse_double_field(key, value);
  else if (key == "tau") cfg.tau = parse_double_field(key, value);
  else if (key == "flow_steps") cfg.flow_steps = parse_size_field(key, value);
  else if (key == "lr") cfg.lr = parse_double_field(key, value);
  else if (key == "batch") cfg.batch = parse_size_field(key, value);
  else if (key == "offline_steps") cfg.offline_steps = parse_size_field(key, value);
  else if (key == "online_steps") cfg.online_steps = parse_size_field(key, value);
  else if (key == "utd") cfg.utd = parse_size_field(key, value);
  else if (key == "seed") cfg.seed = parse_u64_field(key, value);
  else if (key == "mode") cfg.mode = value;
  else if (key == "eval_every") cfg.eval_every = parse_size_field(key, value);
  else if (key == "eval_episodes") cfg.eval_episodes = parse_size_field(key, value);
  else if (key == "log_every") cfg.log_every = parse_size_field(key, value);
  else if (key == "profile") cfg = profile_defaults(value);
  else if (key == "maze") cfg.maze = value;
  else if (key == "replay_capacity") cfg.replay_capacity = parse_size_field(key, value);
  else if (key == "symmetric_replay") cfg.symmetric_replay = parse_bool_field(key, value);
  else if (key == "update_on_commit_only") cfg.update_on_commit_only = parse_bool_field(key, value);
  else if (key == "mlp_width") cfg.mlp_width = parse_size_field(key, value);
  else if (key == "mlp_depth") cfg.mlp_depth = parse_size_field(key, value);
  else if (key == "d_model") cfg.d_model = parse_size_field(key, value);
  else if (key == "n_heads") cfg.n_heads = parse_size_field(key, value);
  else if (key == "n_blocks") cfg.n_blocks = parse_size_field(key, value);
  else if (key == "ff_dim") cfg.ff_dim = parse_size_field(key, value);
  else if (key == "ensemble") cfg.ensemble = parse_size_field(key, value);
  else fail("unknown field '" + key + "'");
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string profile_value;
  bool saw_profile = false;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;  // blank
    if (!(ls >> value)) fail("line '" + line + "' is missing a value");
    if (ls >> extra) fail("line '" + line + "' has more than two tokens");
    if (key == "profile") {
      if (saw_profile) fail("duplicate field 'profile'");
      saw_profile = true;
      profile_value = value;
    } else {
      pairs.emplace_back(key, value);
    }
  }
  RunConfig cfg = saw_profile ? profile_defaults(profile_value) : base;
  for (const auto& [key, value] : pairs) apply_config_override(cfg, key, value);
  return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), base);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "h " << cfg.h << "\n";
  out << "beta " << fmt_double(cfg.beta) << "\n";
  out << "alpha " << fmt_double(cfg.alpha) << "\n";
  out << "gamma " << fmt_double(cfg.gamma) << "\n";
  out << "tau " << fmt_double(cfg.tau) << "\n";
  out << "flow_steps " << cfg.flow_steps << "\n";
  out << "lr " << fmt_double(cfg.lr) << "\n";
  out << "batch " << cfg.batch << "\n";
  out << "offline_steps " << cfg.offline_steps << "\n";
  out << "online_steps " << cfg.online_steps << "\n";
  out << "utd " << cfg.utd << "\n";
  out << "seed " << cfg.seed << "\n";
  out << "mode " << cfg.mode << "\n";
  out << "eval_every " << cfg.eval_every << "\n";
  out << "eval_episodes " << cfg.eval_episodes << "\n";
  out << "log_every " << cfg.log_every << "\n";
  out << "profile " << cfg.profile << "\n";
  out << "maze " << cfg.maze << "\n";
  out << "replay_capacity " << cfg.replay_capacity << "\n";
  out << "symmetric_replay " << (cfg.symmetric_replay ? "true" : "false") << "\n";
  out << "update_on_commit_only " << (cfg.update_on_commit_only ? "true" : "false") << "\n";
  out << "mlp_width " << cfg.mlp_width << "\n";
  out << "mlp_depth " << cfg.mlp_depth << "\n";
  out << "d_model " << cfg.d_model << "\n";
  out << "n_heads " << cfg.n_heads << "\n";
  out << "n_blocks " << cfg.n_blocks << "\n";
  out << "ff_dim " << cfg.ff_dim << "\n";
  out << "ensemble " << cfg.ensemble << "\n";
  return out.str();
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(serialize_config(cfg)); }

void validate_config(const RunConfig& cfg) {
  if (cfg.beta < 0.0) fail("beta must be >= 0");
  if (cfg.alpha < 0.0) fail("alpha must be >= 0");
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0) fail("gamma must be in [0, 1]");
  if (cfg.tau <= 0.0 || cfg.tau > 1.0) fail("tau must be in (0, 1]");
  if (cfg.flow_steps == 0) fail("flow_steps must be >= 1");
  if (cfg.lr <= 0.0) fail("lr must be > 0");
  if (cfg.batch == 0) fail("batch must be >= 1");
  if (cfg.utd == 0) fail("utd must be >= 1");
  if (cfg.eval_episodes == 0) fail("eval_episodes must be >= 1");
  if (cfg.log_every == 0) fail("log_every must be >= 1");
  if (cfg.replay_capacity == 0) fail("replay_capacity must be >= 1");
  if (cfg.mlp_width == 0) fail("mlp_width must be >= 1");
  if (cfg.mlp_depth == 0) fail("mlp_depth must be >= 1");
  if (cfg.d_model == 0) fail("d_model must be >= 1");
  if (cfg.n_heads == 0) fail("n_heads must be >= 1");
  if (cfg.d_model % cfg.n_heads != 0) fail("n_heads must divide d_model");
  if (cfg.n_blocks == 0) fail("n_blocks must be >= 1");
  if (cfg.ff_dim == 0) fail("ff_dim must be >= 1");
  if (cfg.ensemble == 0) fail("ensemble must be >= 1");
  if (cfg.profile != "paper" && cfg.profile != "desk")
    fail("profile must be paper or desk, got '" + cfg.profile + "'");
  if (cfg.maze.empty()) fail("maze must name a file");

  const LengthSelectConfig sel = [&] {
    try {
      return cfg.select_config();
    } catch (const std::exception& e) {
      fail(std::string("mode is invalid: ") + e.what());
    }
  }();
  if (sel.mode == LengthMode::kFixed && (sel.fixed_len == 0 || sel.fixed_len > cfg.h + 1))
    fail("mode fixed-<N> needs N in [1, h+1]");
}

}  // namespace ach
