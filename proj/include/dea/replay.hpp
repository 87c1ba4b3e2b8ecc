#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dea/rng.hpp"

namespace dea::replay {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// Column-major mini-batch: one column per sampled transition.
struct Batch {
  Eigen::MatrixXd s;       // obs_dim x B
  Eigen::MatrixXd a;       // act_dim x B
  Eigen::VectorXd r;       // B
  Eigen::MatrixXd s_next;  // obs_dim x B

  Eigen::Index size() const { return r.size(); }
};

// Fixed-capacity FIFO ring of transitions, stored flat.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  // Throws ConfigError on dimension mismatch or a non-finite entry.
  void push(const Transition& t);

  // i-th oldest stored transition, 0 <= i < size().
  Transition at(std::size_t i) const;

  // batch_size uniform draws with replacement, as slot indices.
  // Throws SamplingError when empty.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;
  Batch sample_batch(std::size_t batch_size, Rng& rng) const;
  Batch gather(const std::vector<std::size_t>& slots) const;

 private:
  Transition slot(std::size_t k) const;

  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::size_t size_ = 0;
  std::size_t write_ = 0;
  std::vector<double> s_;
  std::vector<double> a_;
  std::vector<double> r_;
  std::vector<double> s_next_;
};

}  // namespace dea::replay
