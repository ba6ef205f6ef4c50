#include "ach/segment.hpp"

#include "ach/error.hpp"

namespace ach {

TransitionSegment build_segment(const TransitionSource& source, std::size_t h, std::size_t t) {
  require(t < source.size(), "build_segment: start index out of range");
  const Transition& first = source.get(t);
  const std::size_t obs_dim = first.obs.size();
  const std::size_t act_dim = first.action.size();

  TransitionSegment seg;
  seg.obs_seq = Array({h + 1, obs_dim});
  seg.act_seq = Array({h + 1, act_dim});
  seg.rew_seq.assign(h + 1, 0.0);
  seg.valid.assign(h + 1, 0);
  seg.bootstrap_obs = Array({1, obs_dim});
  seg.bootstrap_valid = false;

  std::size_t k = 0;
  bool saw_terminal = false;
  for (std::size_t j = 0; j <= h; ++j) {
    const Transition& tr = source.get(t + j);
    for (std::size_t c = 0; c < obs_dim; ++c) seg.obs_seq.data[j * obs_dim + c] = tr.obs[c];
    for (std::size_t c = 0; c < act_dim; ++c) seg.act_seq.data[j * act_dim + c] = tr.action[c];
    seg.rew_seq[j] = tr.reward;
    seg.valid[j] = 1;
    k = j + 1;
    if (tr.ends_episode()) {
      saw_terminal = tr.terminal;
      break;
    }
    if (!source.linked(t + j)) break;  // data edge or replay seam: cut here
  }

  // The window-ending successor state.
  const Transition& last = source.get(t + k - 1);
  if (k <= h) {
    for (std::size_t c = 0; c < obs_dim; ++c) {
      seg.obs_seq.data[k * obs_dim + c] = last.next_obs[c];
    }
  } else {
    for (std::size_t c = 0; c < obs_dim; ++c) seg.bootstrap_obs.data[c] = last.next_obs[c];
  }
  seg.bootstrap_valid = !saw_terminal;
  return seg;
}

std::vector<TransitionSegment> sample_segments(const TransitionSource& source, std::size_t h,
                                               std::size_t batch, RngStream& rng) {
  require(source.size() > 0, "sample_segments: empty source");
  require(batch > 0, "sample_segments: batch must be positive");
  std::vector<TransitionSegment> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t t = rng.uniform_index(source.size());
    out.push_back(build_segment(source, h, t));
  }
  return out;
}

}  // namespace ach
