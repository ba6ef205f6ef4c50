#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ach/checkpoint.hpp"
#include "ach/chunking.hpp"
#include "ach/config.hpp"
#include "ach/critic.hpp"
#include "ach/dataset.hpp"
#include "ach/env.hpp"
#include "ach/maze.hpp"
#include "ach/metrics.hpp"
#include "ach/policy.hpp"
#include "ach/rng.hpp"
#include "ach/trainer.hpp"

namespace {

namespace fs = std::filesystem;

// Exit contract: 0 success, 1 usage error, 2 runtime failure.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_seed_text(const std::string& text, const std::string& origin) {
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw UsageError(origin + " needs a nonnegative integer, got '" + text + "'");
  }
  if (pos != text.size() || text.empty() || text[0] == '-' || text[0] == '+')
    throw UsageError(origin + " needs a nonnegative integer, got '" + text + "'");
  return out;
}

// Documented precedence: --seed flag > ACH_SEED environment > config file.
std::uint64_t resolve_seed(bool flag_given, std::uint64_t flag_seed, std::uint64_t file_seed) {
  if (flag_given) return flag_seed;
  if (const char* env = std::getenv("ACH_SEED")) return parse_seed_text(env, "ACH_SEED");
  return file_seed;
}

ach::RunConfig load_run_config(const std::string& path) {
  ach::RunConfig cfg;
  if (!path.empty()) cfg = ach::load_config(path, ach::RunConfig{});
  return cfg;
}

// Config files keep repo-relative maze paths; when one does not resolve from
// the current directory, fall back to the bundled data tree.
std::string resolve_data_path(const std::string& path) {
  if (fs::exists(path)) return path;
  const fs::path p(path);
  if (p.is_relative()) {
    const fs::path fallback = fs::path(ACH_DATA_DIR).parent_path() / p;
    if (fs::exists(fallback)) return fallback.string();
  }
  return path;
}

ach::MazeSpec load_maze_resolved(const std::string& path) {
  return ach::load_maze(resolve_data_path(path));
}

void ensure_parent_dir(const std::string& file_path) {
  const fs::path parent = fs::path(file_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text_file(const std::string& path, const std::string& text) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

// Every command leaves the settings that produced an output beside it.
void write_resolved_config(const std::string& path, const ach::RunConfig& cfg) {
  write_text_file(path, ach::serialize_config(cfg));
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nan("");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// 95% normal CI half-width over seeds: 1.96 * sd / sqrt(n), Bessel sd.
double ci95_half(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  std::string maze;
  std::string out;
  std::size_t episodes = 100;
  double noise = 0.3;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void cmd_gen_data(const GenDataArgs& args) {
  const ach::MazeSpec spec = load_maze_resolved(args.maze);
  const std::uint64_t seed = resolve_seed(args.seed_given, args.seed, 0);

  ach::Dataset ds(2, 2, ach::maze_hash(spec));
  ach::CollectConfig cc;
  cc.episodes = args.episodes;
  cc.action_noise = args.noise;
  ach::CollectStats stats;
  if (args.episodes > 0) {
    const auto waypoints = ach::shortest_cell_path(spec);
    stats = ach::scripted_collect(spec, waypoints, cc, seed, ds);
  }
  ensure_parent_dir(args.out);
  ds.save(args.out);

  std::ostringstream meta;
  meta << "maze " << args.maze << "\n"
       << "episodes " << args.episodes << "\n"
       << "noise " << fmt17(args.noise) << "\n"
       << "gain " << fmt17(cc.gain) << "\n"
       << "advance_radius_cells " << fmt17(cc.advance_radius_cells) << "\n"
       << "seed " << seed << "\n";
  write_text_file(args.out + ".config", meta.str());

  std::printf("gen-data: wrote %s\n", args.out.c_str());
  std::printf("episodes %zu  transitions %zu  success_rate %.3f\n", stats.episodes,
              stats.transitions, args.episodes > 0 ? stats.success_rate() : 0.0);
}

// ---------------------------------------------------------------------------
// train / ablate

struct TrainOutcome {
  bool evaluated = false;
  double final_success = 0.0;
  double final_return = 0.0;
  double final_chunk_len = 0.0;
};

TrainOutcome run_train_cell(const ach::RunConfig& cfg, const ach::Dataset& ds,
                            const std::string& out_dir) {
  const ach::MazeSpec spec = load_maze_resolved(cfg.maze);
  if (ds.size() > 0 && ds.spec_hash() != ach::maze_hash(spec))
    throw std::runtime_error("train: dataset spec_hash does not match maze '" + cfg.maze + "'");

  fs::create_directories(out_dir);
  write_resolved_config(out_dir + "/run.config", cfg);

  ach::Trainer trainer(cfg, spec);
  trainer.set_dump_path(out_dir + "/nan-dump.json");
  if (ds.size() > 0) trainer.seed_replay(ds);
  trainer.run_offline();
  trainer.run_online();

  trainer.metrics().save_ndjson(out_dir + "/metrics.ndjson");
  trainer.metrics().save_csv(out_dir + "/metrics.csv");
  trainer.save(out_dir + "/checkpoint");

  TrainOutcome out;
  for (const char* phase : {"online", "offline"}) {
    const auto s = trainer.metrics().series(phase, "eval_success");
    if (!s.empty()) {
      out.evaluated = true;
      out.final_success = s.back();
      out.final_return = trainer.metrics().last(phase, "eval_return");
      out.final_chunk_len = trainer.metrics().last(phase, "eval_chunk_len");
      break;
    }
  }
  return out;
}

struct TrainArgs {
  std::string config;
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void cmd_train(const TrainArgs& args) {
  ach::RunConfig cfg = load_run_config(args.config);
  cfg.seed = resolve_seed(args.seed_given, args.seed, cfg.seed);
  const ach::Dataset ds = ach::Dataset::load(args.dataset);
  const TrainOutcome out = run_train_cell(cfg, ds, args.out);
  std::printf("train: wrote %s\n", args.out.c_str());
  if (out.evaluated)
    std::printf("final eval: success %.3f  return %.2f  chunk_len %.2f\n", out.final_success,
                out.final_return, out.final_chunk_len);
  else
    std::printf("final eval: none (offline_steps and online_steps are both 0)\n");
}

struct AblateArgs {
  std::string config;
  std::string dataset;
  std::string out;
  std::string modes = "soft,greedy,random,uniform,fixed-1,fixed-5,fixed-10";
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void cmd_ablate(const AblateArgs& args) {
  if (args.seeds == 0) throw UsageError("--seeds must be >= 1");
  std::vector<std::string> modes;
  std::stringstream ss(args.modes);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) modes.push_back(item);
  if (modes.empty()) throw UsageError("--modes needs at least one mode");

  const ach::RunConfig base_cfg = load_run_config(args.config);
  const std::uint64_t base_seed = resolve_seed(args.seed_given, args.seed, base_cfg.seed);
  const ach::Dataset ds = ach::Dataset::load(args.dataset);
  fs::create_directories(args.out);

  std::vector<std::string> failures;
  std::ostringstream csv;
  csv << "# ach-ablate-csv-v1\n";
  csv << "mode,seeds,mean_success,ci95_half\n";

  for (const std::string& mode : modes) {
    std::vector<double> finals;
    for (std::size_t s = 0; s < args.seeds; ++s) {
      ach::RunConfig cfg = base_cfg;
      cfg.mode = mode;
      cfg.seed = base_seed + s;
      const std::string cell = mode + "-s" + std::to_string(cfg.seed);
      try {
        const TrainOutcome out = run_train_cell(cfg, ds, args.out + "/" + cell);
        if (!out.evaluated) throw std::runtime_error("cell produced no evaluation");
        finals.push_back(out.final_success);
        std::printf("ablate %-16s success %.3f\n", cell.c_str(), out.final_success);
      } catch (const std::exception& e) {
        failures.push_back(cell + ": " + e.what());
        std::fprintf(stderr, "ablate %-16s FAILED: %s\n", cell.c_str(), e.what());
      }
    }
    csv << mode << "," << finals.size() << "," << fmt17(mean_of(finals)) << ","
        << fmt17(ci95_half(finals)) << "\n";
  }

  write_text_file(args.out + "/aggregate.csv", csv.str());
  if (!failures.empty()) {
    std::ostringstream body;
    for (const std::string& f : failures) body << f << "\n";
    write_text_file(args.out + "/failures.txt", body.str());
    throw std::runtime_error(std::to_string(failures.size()) + " ablation cell(s) failed (see " +
                             args.out + "/failures.txt)");
  }
  std::printf("ablate: wrote %s/aggregate.csv\n", args.out.c_str());
}

// ---------------------------------------------------------------------------
// eval / probe-values / trace: rollout tooling on a saved checkpoint

struct RolloutSetup {
  ach::RunConfig cfg;
  ach::MazeSpec spec;
  ach::Checkpoint ckpt;
};

RolloutSetup load_rollout_setup(const std::string& config_path, const std::string& ckpt_dir,
                                const std::string& maze_override, bool seed_given,
                                std::uint64_t seed_flag) {
  RolloutSetup s{load_run_config(config_path), {}, ach::load_checkpoint(ckpt_dir)};
  if (!maze_override.empty()) s.cfg.maze = maze_override;
  s.cfg.seed = resolve_seed(seed_given, seed_flag, s.cfg.seed);
  s.spec = load_maze_resolved(s.cfg.maze);
  ach::validate_config(s.cfg);
  return s;
}

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string maze;
  std::string out;
  std::string mode;  // empty = evaluation default (greedy / fixed)
  std::size_t episodes = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void cmd_eval(const EvalArgs& args) {
  RolloutSetup s = load_rollout_setup(args.config, args.checkpoint, args.maze, args.seed_given,
                                      args.seed);
  if (!args.mode.empty()) s.cfg.mode = args.mode;
  if (args.episodes > 0) s.cfg.eval_episodes = args.episodes;
  ach::validate_config(s.cfg);
  // An explicit --mode is taken literally; otherwise the evaluation default
  // applies (greedy selection, or the fixed length of a fixed-mode config).
  const ach::LengthSelectConfig sel =
      args.mode.empty() ? s.cfg.eval_select_config() : s.cfg.select_config();

  const ach::PolicyConfig pol_cfg = s.cfg.policy_config(2, 2);
  const ach::CriticConfig cri_cfg = s.cfg.critic_config(2, 2);
  const std::uint64_t env_base = ach::derive_stream_seed(s.cfg.seed, "eval.env");
  const std::uint64_t z_base = ach::derive_stream_seed(s.cfg.seed, "eval.z");
  const std::uint64_t len_base = ach::derive_stream_seed(s.cfg.seed, "eval.len");

  ensure_parent_dir(args.out);
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + args.out + "'");
  nlohmann::json header;
  header["version"] = "ach-eval-v1";
  header["episodes"] = s.cfg.eval_episodes;
  header["maze_hash"] = ach::maze_hash(s.spec);
  out << header.dump() << "\n";

  double mean_success = 0.0, mean_return = 0.0, mean_len = 0.0;
  double len_sum = 0.0, commits = 0.0;
  for (std::size_t r = 0; r < s.cfg.eval_episodes; ++r) {
    ach::MazeEnv env(s.spec);
    std::vector<double> obs = env.reset(env_base + r);
    ach::RngStream z_rng(z_base + r);
    ach::RngStream len_rng(len_base + r);
    ach::ChunkBuffer buf;
    double ret = 0.0;
    double ep_len_sum = 0.0, ep_commits = 0.0;
    std::size_t steps = 0;
    bool success = false;
    while (true) {
      const ach::ActResult ar =
          ach::act(buf, s.ckpt.policy, s.ckpt.critic, pol_cfg, cri_cfg, obs, sel, z_rng, len_rng);
      const ach::StepResult sr = env.step(ar.action);
      ret += sr.reward;
      ++steps;
      if (ar.committed_len > 0) {
        ep_len_sum += static_cast<double>(ar.committed_len);
        ep_commits += 1.0;
      }
      obs = sr.obs;
      if (sr.done()) {
        success = sr.terminal;
        break;
      }
    }
    nlohmann::json rec;
    rec["episode"] = r;
    rec["success"] = success ? 1 : 0;
    rec["return"] = ret;
    rec["steps"] = steps;
    rec["mean_chunk_len"] = ep_commits > 0.0 ? ep_len_sum / ep_commits : 0.0;
    out << rec.dump() << "\n";

    mean_success += success ? 1.0 : 0.0;
    mean_return += ret;
    len_sum += ep_len_sum;
    commits += ep_commits;
  }
  const double n = static_cast<double>(s.cfg.eval_episodes);
  mean_success /= n;
  mean_return /= n;
  mean_len = commits > 0.0 ? len_sum / commits : 0.0;

  write_resolved_config(args.out + ".config", s.cfg);
  std::printf("eval: success %.3f  return %.2f  chunk_len %.2f  (%zu episodes)\n", mean_success,
              mean_return, mean_len, s.cfg.eval_episodes);
}

struct ProbeArgs {
  std::string checkpoint;
  std::string config;
  std::string maze;
  std::string states;  // file of "x y" lines
  bool rollout = false;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

std::vector<std::pair<double, double>> read_states_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open states file '" + path + "'");
  std::vector<std::pair<double, double>> states;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x = 0.0, y = 0.0;
    if (!(ls >> x)) continue;
    if (!(ls >> y)) throw std::runtime_error("states file line '" + line + "' is missing y");
    states.emplace_back(x, y);
  }
  if (states.empty()) throw std::runtime_error("states file '" + path + "' holds no states");
  return states;
}

void cmd_probe_values(const ProbeArgs& args) {
  if (args.rollout == !args.states.empty())
    throw UsageError("pass exactly one of --states <file> or --rollout");
  RolloutSetup s = load_rollout_setup(args.config, args.checkpoint, args.maze, args.seed_given,
                                      args.seed);
  const ach::PolicyConfig pol_cfg = s.cfg.policy_config(2, 2);
  const ach::CriticConfig cri_cfg = s.cfg.critic_config(2, 2);

  // Probed positions are world coordinates; observations normalize them.
  std::vector<std::pair<double, double>> states;
  if (!args.states.empty()) {
    states = read_states_file(args.states);
  } else {
    ach::MazeEnv env(s.spec);
    std::vector<double> obs = env.reset(ach::derive_stream_seed(s.cfg.seed, "probe.env"));
    ach::RngStream z_rng(ach::derive_stream_seed(s.cfg.seed, "probe.roll.z"));
    ach::RngStream len_rng(ach::derive_stream_seed(s.cfg.seed, "probe.roll.len"));
    ach::LengthSelectConfig sel = s.cfg.eval_select_config();
    ach::ChunkBuffer buf;
    while (true) {
      states.emplace_back(env.state().x, env.state().y);
      const ach::ActResult ar =
          ach::act(buf, s.ckpt.policy, s.ckpt.critic, pol_cfg, cri_cfg, obs, sel, z_rng, len_rng);
      const ach::StepResult sr = env.step(ar.action);
      obs = sr.obs;
      if (sr.done()) break;
    }
  }

  ach::RngStream z_rng(ach::derive_stream_seed(s.cfg.seed, "probe.z"));
  const double w = static_cast<double>(s.spec.width()) * s.spec.cell_size;
  const double hgt = static_cast<double>(s.spec.height()) * s.spec.cell_size;

  ensure_parent_dir(args.out);
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + args.out + "'");
  nlohmann::json header;
  header["version"] = "ach-probe-v1";
  header["h"] = s.cfg.h;
  header["beta"] = s.cfg.beta;
  header["states"] = states.size();
  out << header.dump() << "\n";

  for (const auto& [x, y] : states) {
    const std::vector<double> obs = {x / w, y / hgt};
    const ach::Array obs_row = ach::Array::row(obs);
    ach::Array z({1, pol_cfg.chunk_dim()});
    z_rng.fill_normal(z.data);
    const ach::Array chunk = ach::onestep_apply_with_noise(s.ckpt.policy, pol_cfg, obs_row, z);
    const ach::PrefixValues pv = ach::critic_values(s.ckpt.critic, cri_cfg, obs, chunk);
    const ach::LengthDistribution dist =
        ach::length_distribution(pv.q, s.cfg.beta, ach::LengthMode::kSoft);
    const std::size_t argmax =
        static_cast<std::size_t>(std::max_element(pv.q.begin(), pv.q.end()) - pv.q.begin());

    nlohmann::json rec;
    rec["x"] = x;
    rec["y"] = y;
    rec["v"] = pv.v;
    rec["q"] = pv.q;
    rec["pi_l"] = dist.probs;
    rec["argmax_len"] = argmax + 1;  // committed actions at the greedy choice
    out << rec.dump() << "\n";
  }

  write_resolved_config(args.out + ".config", s.cfg);
  std::printf("probe-values: wrote %zu state records to %s\n", states.size(), args.out.c_str());
}

struct TraceArgs {
  std::string checkpoint;
  std::string config;
  std::string maze;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void cmd_trace(const TraceArgs& args) {
  RolloutSetup s = load_rollout_setup(args.config, args.checkpoint, args.maze, args.seed_given,
                                      args.seed);
  const ach::PolicyConfig pol_cfg = s.cfg.policy_config(2, 2);
  const ach::CriticConfig cri_cfg = s.cfg.critic_config(2, 2);
  const ach::LengthSelectConfig sel = s.cfg.eval_select_config();

  ach::MazeEnv env(s.spec);
  std::vector<double> obs = env.reset(ach::derive_stream_seed(s.cfg.seed, "trace.env"));
  ach::RngStream z_rng(ach::derive_stream_seed(s.cfg.seed, "trace.z"));
  ach::RngStream len_rng(ach::derive_stream_seed(s.cfg.seed, "trace.len"));
  ach::ChunkBuffer buf;

  std::ostringstream csv;
  csv << "# ach-trace-csv-v1\n";
  csv << "t,x,y,committed_len\n";
  std::size_t t = 0;
  bool success = false;
  while (true) {
    // The row holds the position the action was taken from.
    csv << t << "," << fmt17(env.state().x) << "," << fmt17(env.state().y) << ",";
    const ach::ActResult ar =
        ach::act(buf, s.ckpt.policy, s.ckpt.critic, pol_cfg, cri_cfg, obs, sel, z_rng, len_rng);
    csv << ar.committed_len << "\n";
    const ach::StepResult sr = env.step(ar.action);
    obs = sr.obs;
    ++t;
    if (sr.done()) {
      success = sr.terminal;
      break;
    }
  }
  write_text_file(args.out, csv.str());
  write_resolved_config(args.out + ".config", s.cfg);
  std::printf("trace: %zu steps, %s, wrote %s\n", t, success ? "success" : "no success",
              args.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive action-chunking toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "collect a scripted-controller dataset");
  gen_cmd->add_option("--maze", gen.maze, "maze file")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--episodes", gen.episodes, "episodes to collect");
  gen_cmd->add_option("--noise", gen.noise, "controller action noise");
  gen_cmd->add_option("--out", gen.out, "output dataset path")->required();
  CLI::Option* gen_seed = gen_cmd->add_option("--seed", gen.seed, "collection seed");
  gen_cmd->callback([&] {
    gen.seed_given = gen_seed->count() > 0;
    cmd_gen_data(gen);
  });

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "run the offline then online phases");
  train_cmd->add_option("--config", train.config, "run config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--dataset", train.dataset, "offline dataset")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "output directory")->required();
  CLI::Option* train_seed = train_cmd->add_option("--seed", train.seed, "run seed");
  train_cmd->callback([&] {
    train.seed_given = train_seed->count() > 0;
    cmd_train(train);
  });

  AblateArgs ablate;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "fan out runs over modes and seeds");
  ablate_cmd->add_option("--config", ablate.config, "run config file")->check(CLI::ExistingFile);
  ablate_cmd->add_option("--dataset", ablate.dataset, "offline dataset")
      ->required()
      ->check(CLI::ExistingFile);
  ablate_cmd->add_option("--out", ablate.out, "output directory")->required();
  ablate_cmd->add_option("--modes", ablate.modes, "comma-separated length modes");
  ablate_cmd->add_option("--seeds", ablate.seeds, "seeds per mode");
  CLI::Option* ablate_seed = ablate_cmd->add_option("--seed", ablate.seed, "base seed");
  ablate_cmd->callback([&] {
    ablate.seed_given = ablate_seed->count() > 0;
    cmd_ablate(ablate);
  });

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "roll out a checkpoint and report success");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--config", eval.config, "run config file")->check(CLI::ExistingFile);
  eval_cmd->add_option("--maze", eval.maze, "maze file (default: the config's maze)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", eval.episodes, "episodes (default: config eval_episodes)");
  eval_cmd->add_option("--mode", eval.mode, "length mode (default: greedy, or the fixed length)");
  eval_cmd->add_option("--out", eval.out, "per-episode NDJSON output")->required();
  CLI::Option* eval_seed = eval_cmd->add_option("--seed", eval.seed, "evaluation seed");
  eval_cmd->callback([&] {
    eval.seed_given = eval_seed->count() > 0;
    cmd_eval(eval);
  });

  ProbeArgs probe;
  CLI::App* probe_cmd =
      app.add_subcommand("probe-values", "emit prefix values and length distributions");
  probe_cmd->add_option("--checkpoint", probe.checkpoint, "checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  probe_cmd->add_option("--config", probe.config, "run config file")->check(CLI::ExistingFile);
  probe_cmd->add_option("--maze", probe.maze, "maze file (default: the config's maze)")
      ->check(CLI::ExistingFile);
  probe_cmd->add_option("--states", probe.states, "file of 'x y' world positions")
      ->check(CLI::ExistingFile);
  probe_cmd->add_flag("--rollout", probe.rollout, "probe the states of a greedy rollout");
  probe_cmd->add_option("--out", probe.out, "NDJSON output")->required();
  CLI::Option* probe_seed = probe_cmd->add_option("--seed", probe.seed, "probe seed");
  probe_cmd->callback([&] {
    probe.seed_given = probe_seed->count() > 0;
    cmd_probe_values(probe);
  });

  TraceArgs trace;
  CLI::App* trace_cmd = app.add_subcommand("trace", "emit a per-step rollout trace");
  trace_cmd->add_option("--checkpoint", trace.checkpoint, "checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  trace_cmd->add_option("--config", trace.config, "run config file")->check(CLI::ExistingFile);
  trace_cmd->add_option("--maze", trace.maze, "maze file (default: the config's maze)")
      ->check(CLI::ExistingFile);
  trace_cmd->add_option("--out", trace.out, "CSV output")->required();
  CLI::Option* trace_seed = trace_cmd->add_option("--seed", trace.seed, "rollout seed");
  trace_cmd->callback([&] {
    trace.seed_given = trace_seed->count() > 0;
    cmd_trace(trace);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
