#include "ach/chunking.hpp"

#include <cmath>

#include "ach/critic.hpp"
#include "ach/error.hpp"
#include "ach/policy.hpp"

namespace ach {

LengthDistribution length_distribution(const std::vector<double>& prefix_q, double beta,
                                       LengthMode mode) {
  const std::size_t n = prefix_q.size();
  require(n > 0, "length_distribution: empty prefix values");
  for (double q : prefix_q) {
    require(std::isfinite(q), "length_distribution: non-finite prefix value");
  }
  LengthDistribution dist;
  dist.mode = mode;
  dist.probs.assign(n, 0.0);
  switch (mode) {
    case LengthMode::kGreedy: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (prefix_q[i] > prefix_q[best]) best = i;  // ties keep the smaller l
      }
      dist.probs[best] = 1.0;
      break;
    }
    case LengthMode::kRandom: {
      const double p = 1.0 / static_cast<double>(n);
      for (double& x : dist.probs) x = p;
      break;
    }
    case LengthMode::kSoft:
    case LengthMode::kUniform: {
      require(beta >= 0.0, "length_distribution: beta must be >= 0 in soft mode");
      double m = beta * prefix_q[0];
      for (std::size_t i = 1; i < n; ++i) m = std::max(m, beta * prefix_q[i]);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dist.probs[i] = std::exp(beta * prefix_q[i] - m);
        sum += dist.probs[i];
      }
      for (double& x : dist.probs) x /= sum;
      break;
    }
    case LengthMode::kFixed:
      fail("length_distribution: fixed mode has no distribution");
  }
  return dist;
}

std::size_t sample_length(const LengthDistribution& dist, RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    cum += dist.probs[i];
    if (u < cum) return i;
  }
  return dist.probs.size() - 1;  // guard against rounding in the final bin
}

double expected_q(const std::vector<double>& prefix_q, const LengthDistribution& dist) {
  require(prefix_q.size() == dist.probs.size(), "expected_q: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < prefix_q.size(); ++i) s += dist.probs[i] * prefix_q[i];
  return s;
}

std::vector<double> length_weights_train(const std::vector<double>& prefix_q, double beta,
                                         LengthMode mode) {
  if (mode == LengthMode::kUniform) {
    return std::vector<double>(prefix_q.size(), 1.0 / static_cast<double>(prefix_q.size()));
  }
  return length_distribution(prefix_q, beta, LengthMode::kSoft).probs;
}

double distribution_entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void ChunkBuffer::push_chunk(const Array& chunk, std::size_t count, std::size_t act_dim) {
  require(act_dim > 0 && chunk.size() % act_dim == 0, "push_chunk: bad chunk layout");
  require(count >= 1 && count * act_dim <= chunk.size(),
          "push_chunk: count exceeds chunk length");
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> a(act_dim);
    for (std::size_t c = 0; c < act_dim; ++c) a[c] = chunk.data[i * act_dim + c];
    pending_.push_back(std::move(a));
  }
}

std::vector<double> ChunkBuffer::pop() {
  require(!pending_.empty(), "ChunkBuffer::pop: buffer empty");
  std::vector<double> a = std::move(pending_.front());
  pending_.pop_front();
  return a;
}

void ChunkBuffer::on_episode_end() {
  discarded_ += pending_.size();
  pending_.clear();
}

ActResult act(ChunkBuffer& buffer, ParamStore& policy, ParamStore& critic,
              const PolicyConfig& pol_cfg, const CriticConfig& cri_cfg,
              const std::vector<double>& obs, const LengthSelectConfig& sel, RngStream& z_rng,
              RngStream& len_rng) {
  ActResult res;
  if (buffer.empty()) {
    Array obs_row = Array::row(obs);
    Array chunk = onestep_sample(policy, pol_cfg, obs_row, z_rng);  // (1, (h+1)*A)
    std::size_t commit;
    if (sel.mode == LengthMode::kFixed) {
      require(sel.fixed_len >= 1 && sel.fixed_len <= pol_cfg.h + 1,
              "act: fixed_len outside 1..h+1");
      commit = sel.fixed_len;
    } else {
      const PrefixValues pv = critic_values(critic, cri_cfg, obs, chunk);
      const LengthMode dist_mode =
          sel.mode == LengthMode::kUniform ? LengthMode::kSoft : sel.mode;
      const LengthDistribution dist = length_distribution(pv.q, sel.beta, dist_mode);
      const std::size_t l = sample_length(dist, len_rng);
      res.entropy = distribution_entropy(dist.probs);
      commit = l + 1;
    }
    buffer.push_chunk(chunk, commit, pol_cfg.act_dim);
    res.committed_len = commit;
  }
  res.action = buffer.pop();
  return res;
}

}  // namespace ach
