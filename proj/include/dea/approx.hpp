#pragma once

// Multilayer perceptrons with CReLU hidden activations, reverse-mode
// gradients and Adam. All arithmetic is double precision.
//
// Batches are column-major: an input batch is (input_dim x batch) and each
// column is one sample.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dea/rng.hpp"

namespace dea::approx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// concat(max(0, x), max(0, -x)); output has twice the rows of the input.
Vector crelu(const Vector& x);
Matrix crelu(const Matrix& x);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Per-parameter partial derivatives, shaped like the network's layers.
struct Gradients {
  std::vector<Layer> layers;

  bool all_finite() const;
  double max_abs() const;
};

class Mlp {
 public:
  // Intermediate values of one batched forward pass, consumed by backward().
  struct Tape {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> activations;  // pre-activation output of each layer
  };

  Mlp() = default;

  // Weights and biases uniform in +-1/sqrt(fan_in). A hidden layer of width h
  // feeds 2h inputs to the next layer.
  Mlp(int input_dim, const std::vector<int>& hidden_sizes, int output_dim, Rng& rng);

  // Throws ConfigError unless consecutive layers respect the CReLU width law.
  explicit Mlp(std::vector<Layer> layers);

  int input_dim() const;
  int output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Vector forward(const Vector& input) const;
  Matrix forward(const Matrix& inputs) const;
  Matrix forward(const Matrix& inputs, Tape& tape) const;

  // Backpropagates dL/d(output) through a recorded pass. When grad_input is
  // non-null it receives dL/d(input). Throws NumericError on non-finite
  // gradients.
  Gradients backward(const Tape& tape, const Matrix& grad_output,
                     Matrix* grad_input = nullptr) const;

  // dL/d(input) only; parameter gradients are not formed.
  Matrix backward_input(const Tape& tape, const Matrix& grad_output) const;

  bool all_finite() const;

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<Layer> layers_;
};

// Gradient of a scalar loss of the network output. loss_grad maps the
// output batch to dL/d(output).
Gradients mlp_gradient(const Mlp& net, const Matrix& inputs,
                       const std::function<Matrix(const Matrix&)>& loss_grad);

struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const Mlp& net);

// Bias-corrected Adam step, in place.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state, double lr);

}  // namespace dea::approx
