#include "dea/replay.hpp"

#include <algorithm>
#include <cmath>

#include "dea/errors.hpp"

namespace dea::replay {

namespace {

bool finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0 || obs_dim <= 0 || act_dim <= 0) {
    throw ConfigError("replay: capacity and dimensions must be positive");
  }
  // Storage grows on demand up to capacity.
  const std::size_t reserve = std::min<std::size_t>(capacity, 1 << 16);
  s_.reserve(reserve * obs_dim);
  s_next_.reserve(reserve * obs_dim);
  a_.reserve(reserve * act_dim);
  r_.reserve(reserve);
}

void ReplayBuffer::push(const Transition& t) {
  if (static_cast<int>(t.s.size()) != obs_dim_ || static_cast<int>(t.s_next.size()) != obs_dim_ ||
      static_cast<int>(t.a.size()) != act_dim_) {
    throw ConfigError("replay: transition dimensions do not match buffer");
  }
  if (!finite(t.s) || !finite(t.a) || !finite(t.s_next) || !std::isfinite(t.r)) {
    throw ConfigError("replay: non-finite transition");
  }
  if (size_ < capacity_) {
    s_.insert(s_.end(), t.s.begin(), t.s.end());
    a_.insert(a_.end(), t.a.begin(), t.a.end());
    r_.push_back(t.r);
    s_next_.insert(s_next_.end(), t.s_next.begin(), t.s_next.end());
    ++size_;
  } else {
    std::copy(t.s.begin(), t.s.end(), s_.begin() + write_ * obs_dim_);
    std::copy(t.a.begin(), t.a.end(), a_.begin() + write_ * act_dim_);
    r_[write_] = t.r;
    std::copy(t.s_next.begin(), t.s_next.end(), s_next_.begin() + write_ * obs_dim_);
  }
  write_ = (write_ + 1) % capacity_;
}

Transition ReplayBuffer::slot(std::size_t k) const {
  Transition t;
  t.s.assign(s_.begin() + k * obs_dim_, s_.begin() + (k + 1) * obs_dim_);
  t.a.assign(a_.begin() + k * act_dim_, a_.begin() + (k + 1) * act_dim_);
  t.r = r_[k];
  t.s_next.assign(s_next_.begin() + k * obs_dim_, s_next_.begin() + (k + 1) * obs_dim_);
  return t;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw SamplingError("replay: index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : write_;
  return slot((oldest + i) % capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw SamplingError("replay: cannot sample from an empty buffer");
  if (batch_size == 0) throw SamplingError("replay: batch size must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> out;
  for (std::size_t k : sample_indices(batch_size, rng)) out.push_back(slot(k));
  return out;
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& slots) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  Batch b{Eigen::MatrixXd(obs_dim_, n), Eigen::MatrixXd(act_dim_, n), Eigen::VectorXd(n),
          Eigen::MatrixXd(obs_dim_, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t k = slots[j];
    if (k >= size_) throw SamplingError("replay: slot out of range");
    for (int d = 0; d < obs_dim_; ++d) {
      b.s(d, j) = s_[k * obs_dim_ + d];
      b.s_next(d, j) = s_next_[k * obs_dim_ + d];
    }
    for (int d = 0; d < act_dim_; ++d) b.a(d, j) = a_[k * act_dim_ + d];
    b.r(j) = r_[k];
  }
  return b;
}

Batch ReplayBuffer::sample_batch(std::size_t batch_size, Rng& rng) const {
  return gather(sample_indices(batch_size, rng));
}

}  // namespace dea::replay
