#include "ach/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ach/error.hpp"

namespace ach {

namespace {

constexpr const char* kManifestMagic = "ach-params";
constexpr int kManifestVersion = 1;

void write_le_f64(std::ostream& os, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_le_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  require(static_cast<bool>(is), "parameter blob: unexpected end of file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

Param& ParamStore::create(const std::string& name, const std::vector<std::size_t>& shape) {
  require(!has(name), "ParamStore::create: duplicate parameter '" + name + "'");
  Param p;
  p.value = Array(shape);
  p.grad = Array(shape);
  p.adam_m = Array(shape);
  p.adam_v = Array(shape);
  auto [it, ok] = params_.emplace(name, std::move(p));
  (void)ok;
  return it->second;
}

Param& ParamStore::create_xavier(const std::string& name, std::size_t fan_in,
                                 std::size_t fan_out, RngStream& rng) {
  Param& p = create(name, {fan_in, fan_out});
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& x : p.value.data) x = rng.uniform(-bound, bound);
  return p;
}

Param& ParamStore::create_const(const std::string& name, const std::vector<std::size_t>& shape,
                                double fill) {
  Param& p = create(name, shape);
  for (double& x : p.value.data) x = fill;
  return p;
}

Param& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  require(it != params_.end(), "ParamStore::get: unknown parameter '" + name + "'");
  return it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  require(it != params_.end(), "ParamStore::get: unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& kv : params_) n += kv.second.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& kv : params_) out.push_back(kv.first);
  return out;
}

void ParamStore::zero_grads() {
  for (auto& kv : params_) {
    std::fill(kv.second.grad.data.begin(), kv.second.grad.data.end(), 0.0);
  }
}

void ParamStore::adam_step(const AdamConfig& cfg, std::uint64_t step_index) {
  require(cfg.lr > 0.0, "adam_step: learning rate must be positive");
  require(step_index >= 1, "adam_step: step_index is 1-based");
  const double b1t = std::pow(cfg.beta1, static_cast<double>(step_index));
  const double b2t = std::pow(cfg.beta2, static_cast<double>(step_index));
  const double mc = 1.0 / (1.0 - b1t);
  const double vc = 1.0 / (1.0 - b2t);
  for (auto& kv : params_) {
    Param& p = kv.second;
    const std::size_t n = p.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = p.grad.data[i];
      p.adam_m.data[i] = cfg.beta1 * p.adam_m.data[i] + (1.0 - cfg.beta1) * g;
      p.adam_v.data[i] = cfg.beta2 * p.adam_v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p.adam_m.data[i] * mc;
      const double vhat = p.adam_v.data[i] * vc;
      p.value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    check_finite(p.value, "adam_step result for '" + kv.first + "'");
  }
}

void ParamStore::polyak_blend(const ParamStore& online, ParamStore& target, double tau) {
  require(tau >= 0.0 && tau <= 1.0, "polyak_blend: tau outside [0, 1]");
  require(online.count() == target.count(),
          "polyak_blend: parameter count mismatch between online and target");
  auto ot = online.params_.begin();
  auto tt = target.params_.begin();
  for (; ot != online.params_.end(); ++ot, ++tt) {
    require(ot->first == tt->first, "polyak_blend: name mismatch '" + ot->first + "' vs '" +
                                        tt->first + "'");
    require(ot->second.value.same_shape(tt->second.value),
            "polyak_blend: shape mismatch for '" + ot->first + "'");
    const std::size_t n = ot->second.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      tt->second.value.data[i] =
          (1.0 - tau) * tt->second.value.data[i] + tau * ot->second.value.data[i];
    }
  }
}

void ParamStore::copy_values(const ParamStore& src, ParamStore& dst) {
  dst.params_.clear();
  for (const auto& kv : src.params_) {
    Param p;
    p.value = kv.second.value;
    p.grad = Array(kv.second.value.shape);
    p.adam_m = Array(kv.second.value.shape);
    p.adam_v = Array(kv.second.value.shape);
    dst.params_.emplace(kv.first, std::move(p));
  }
}

void ParamStore::save(const std::string& manifest_path, const std::string& blob_path) const {
  std::ofstream mf(manifest_path);
  require(static_cast<bool>(mf), "cannot open manifest for writing: " + manifest_path);
  std::ofstream bf(blob_path, std::ios::binary);
  require(static_cast<bool>(bf), "cannot open blob for writing: " + blob_path);

  mf << kManifestMagic << " v" << kManifestVersion << " " << params_.size() << "\n";
  std::size_t offset = 0;
  for (const auto& kv : params_) {
    mf << kv.first << " ";
    const auto& shape = kv.second.value.shape;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) mf << ",";
      mf << shape[i];
    }
    mf << " " << offset << "\n";
    for (double v : kv.second.value.data) write_le_f64(bf, v);
    offset += kv.second.value.size() * 8;
  }
  require(static_cast<bool>(mf) && static_cast<bool>(bf),
          "failed while writing parameter files");
}

ParamStore ParamStore::load(const std::string& manifest_path, const std::string& blob_path) {
  std::ifstream mf(manifest_path);
  require(static_cast<bool>(mf), "cannot open manifest: " + manifest_path);
  std::string magic, version;
  std::size_t count = 0;
  mf >> magic >> version >> count;
  require(magic == kManifestMagic,
          "manifest " + manifest_path + ": bad magic '" + magic + "'");
  require(version == "v" + std::to_string(kManifestVersion),
          "manifest " + manifest_path + ": unsupported version '" + version + "'");

  std::ifstream bf(blob_path, std::ios::binary);
  require(static_cast<bool>(bf), "cannot open blob: " + blob_path);

  ParamStore store;
  for (std::size_t r = 0; r < count; ++r) {
    std::string name, shape_str;
    std::size_t offset = 0;
    mf >> name >> shape_str >> offset;
    require(static_cast<bool>(mf), "manifest " + manifest_path + ": truncated record");
    std::vector<std::size_t> shape;
    std::stringstream ss(shape_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) shape.push_back(std::stoull(tok));
    require(!shape.empty(), "manifest record for '" + name + "': empty shape");
    Param& p = store.create(name, shape);
    bf.seekg(static_cast<std::streamoff>(offset));
    for (double& v : p.value.data) v = read_le_f64(bf);
  }
  return store;
}

double ParamStore::grad_l2_norm() const {
  double s = 0.0;
  for (const auto& kv : params_) {
    for (double g : kv.second.grad.data) s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace ach
