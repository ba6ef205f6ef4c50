#include "ach/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace ach {
namespace {

constexpr const char* kCheckpointVersion = "ach-checkpoint-v1";
const char* kStoreNames[] = {"behavior", "policy", "critic", "critic_target"};

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("checkpoint: " + msg);
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void save_checkpoint(const std::string& dir, const ParamStore& behavior, const ParamStore& policy,
                     const ParamStore& critic, const ParamStore& critic_target,
                     const CheckpointState& state) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail("cannot create directory '" + dir + "': " + ec.message());

  const ParamStore* stores[] = {&behavior, &policy, &critic, &critic_target};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string base = dir + "/" + kStoreNames[i];
    stores[i]->save(base + ".manifest", base + ".blob");
  }

  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["global_step"] = state.global_step;
  j["config_hash"] = hash_hex(state.config_hash);
  nlohmann::json rng = nlohmann::json::object();
  for (const auto& [name, s] : state.rng_states) {
    rng[name] = {{"counter", s.counter}, {"spare", s.spare}, {"has_spare", s.has_spare}};
  }
  j["rng"] = rng;
  std::ofstream out(dir + "/state.json", std::ios::binary);
  if (!out) fail("cannot write '" + dir + "/state.json'");
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream in(dir + "/state.json", std::ios::binary);
  if (!in) fail("cannot open '" + dir + "/state.json'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("'" + dir + "/state.json' is not valid JSON: " + e.what());
  }
  const std::string version = j.at("version").get<std::string>();
  if (version != kCheckpointVersion)
    fail("'" + dir + "' has version '" + version + "', this reader requires '" +
         kCheckpointVersion + "'");

  Checkpoint ck;
  ck.state.global_step = j.at("global_step").get<std::uint64_t>();
  ck.state.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  for (const auto& [name, s] : j.at("rng").items()) {
    RngStream::State st;
    st.counter = s.at("counter").get<std::uint64_t>();
    st.spare = s.at("spare").get<double>();
    st.has_spare = s.at("has_spare").get<bool>();
    ck.state.rng_states[name] = st;
  }

  ParamStore* stores[] = {&ck.behavior, &ck.policy, &ck.critic, &ck.critic_target};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string base = dir + "/" + kStoreNames[i];
    *stores[i] = ParamStore::load(base + ".manifest", base + ".blob");
  }
  return ck;
}

}  // namespace ach
