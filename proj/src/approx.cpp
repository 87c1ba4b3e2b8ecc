#include "dea/approx.hpp"

#include <cmath>
#include <sstream>

#include "dea/errors.hpp"

namespace dea::approx {

Vector crelu(const Vector& x) {
  Vector out(2 * x.size());
  out.head(x.size()) = x.cwiseMax(0.0);
  out.tail(x.size()) = (-x).cwiseMax(0.0);
  return out;
}

Matrix crelu(const Matrix& x) {
  Matrix out(2 * x.rows(), x.cols());
  out.topRows(x.rows()) = x.cwiseMax(0.0);
  out.bottomRows(x.rows()) = (-x).cwiseMax(0.0);
  return out;
}

bool Gradients::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    if (l.weight.size() > 0) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

Mlp::Mlp(int input_dim, const std::vector<int>& hidden_sizes, int output_dim, Rng& rng) {
  if (input_dim <= 0 || output_dim <= 0) {
    throw ConfigError("mlp: input and output widths must be positive");
  }
  int fan_in = input_dim;
  auto add_layer = [&](int out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer{Matrix(out, fan_in), Vector(out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = dist(rng);
    layers_.push_back(std::move(layer));
  };
  for (int h : hidden_sizes) {
    if (h <= 0) throw ConfigError("mlp: hidden widths must be positive");
    add_layer(h);
    fan_in = 2 * h;
  }
  add_layer(output_dim);
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("mlp: at least one layer required");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() != l.bias.size() || l.weight.rows() == 0 || l.weight.cols() == 0) {
      std::ostringstream msg;
      msg << "mlp: layer " << i << " has weight " << l.weight.rows() << "x" << l.weight.cols()
          << " and bias " << l.bias.size();
      throw ConfigError(msg.str());
    }
    if (i > 0 && l.weight.cols() != 2 * layers_[i - 1].weight.rows()) {
      std::ostringstream msg;
      msg << "mlp: layer " << i << " expects " << l.weight.cols() << " inputs but CReLU of layer "
          << i - 1 << " yields " << 2 * layers_[i - 1].weight.rows();
      throw ConfigError(msg.str());
    }
  }
}

int Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::check_input(Eigen::Index rows) const {
  if (layers_.empty()) throw ConfigError("mlp: network has no layers");
  if (rows != layers_.front().weight.cols()) {
    std::ostringstream msg;
    msg << "mlp: input width " << rows << " does not match expected " << layers_.front().weight.cols();
    throw ConfigError(msg.str());
  }
}

Vector Mlp::forward(const Vector& input) const {
  check_input(input.size());
  Vector x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vector z = layers_[i].weight * x + layers_[i].bias;
    x = (i + 1 < layers_.size()) ? crelu(z) : std::move(z);
  }
  return x;
}

Matrix Mlp::forward(const Matrix& inputs) const {
  check_input(inputs.rows());
  Matrix x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = layers_[i].weight * x;
    z.colwise() += layers_[i].bias;
    x = (i + 1 < layers_.size()) ? crelu(z) : std::move(z);
  }
  return x;
}

Matrix Mlp::forward(const Matrix& inputs, Tape& tape) const {
  check_input(inputs.rows());
  tape.inputs.clear();
  tape.activations.clear();
  Matrix x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = layers_[i].weight * x;
    z.colwise() += layers_[i].bias;
    tape.inputs.push_back(std::move(x));
    x = (i + 1 < layers_.size()) ? crelu(z) : z;
    tape.activations.push_back(std::move(z));
  }
  return x;
}

Gradients Mlp::backward(const Tape& tape, const Matrix& grad_output, Matrix* grad_input) const {
  if (tape.inputs.size() != layers_.size()) throw ConfigError("mlp: tape does not match network");
  if (grad_output.rows() != output_dim() || grad_output.cols() != tape.inputs.front().cols()) {
    throw ConfigError("mlp: output gradient shape mismatch");
  }
  Gradients grads;
  grads.layers.resize(layers_.size());
  Matrix g = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    grads.layers[k].weight = g * tape.inputs[k].transpose();
    grads.layers[k].bias = g.rowwise().sum();
    if (k == 0 && grad_input == nullptr) break;
    Matrix upstream = layers_[k].weight.transpose() * g;
    if (k == 0) {
      *grad_input = std::move(upstream);
      break;
    }
    // CReLU backward; the subgradient at 0 is 0 on both halves.
    const Matrix& pre = tape.activations[k - 1];
    const Eigen::Index h = pre.rows();
    g = upstream.topRows(h).cwiseProduct((pre.array() > 0.0).cast<double>().matrix()) -
        upstream.bottomRows(h).cwiseProduct((pre.array() < 0.0).cast<double>().matrix());
  }
  if (!grads.all_finite()) throw NumericError("mlp: non-finite gradient");
  return grads;
}

Matrix Mlp::backward_input(const Tape& tape, const Matrix& grad_output) const {
  if (tape.inputs.size() != layers_.size()) throw ConfigError("mlp: tape does not match network");
  Matrix g = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    Matrix upstream = layers_[k].weight.transpose() * g;
    if (k == 0) {
      if (!upstream.allFinite()) throw NumericError("mlp: non-finite input gradient");
      return upstream;
    }
    const Matrix& pre = tape.activations[k - 1];
    const Eigen::Index h = pre.rows();
    g = upstream.topRows(h).cwiseProduct((pre.array() > 0.0).cast<double>().matrix()) -
        upstream.bottomRows(h).cwiseProduct((pre.array() < 0.0).cast<double>().matrix());
  }
  return g;
}

Gradients mlp_gradient(const Mlp& net, const Matrix& inputs,
                       const std::function<Matrix(const Matrix&)>& loss_grad) {
  Mlp::Tape tape;
  const Matrix out = net.forward(inputs, tape);
  return net.backward(tape, loss_grad(out));
}

AdamState make_adam_state(const Mlp& net) {
  AdamState s;
  for (const auto& l : net.layers()) {
    s.m.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    s.v.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return s;
}

namespace {

template <typename P, typename G>
void adam_update(P& param, const G& grad, P& m, P& v, double b1, double b2, double lr_t, double eps) {
  m = b1 * m + (1.0 - b1) * grad;
  v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
  param.array() -= lr_t * m.array() / (v.array().sqrt() + eps);
}

}  // namespace

void adam_step(Mlp& net, const Gradients& grads, AdamState& state, double lr) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || state.m.size() != layers.size()) {
    throw ConfigError("adam: gradient/state shape mismatch");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.layers[i].weight.rows() != layers[i].weight.rows() ||
        grads.layers[i].weight.cols() != layers[i].weight.cols() ||
        grads.layers[i].bias.size() != layers[i].bias.size()) {
      throw ConfigError("adam: gradient/state shape mismatch");
    }
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  // Folding both bias corrections into the step size: lr * sqrt(c2) / c1,
  // with eps scaled so the update equals lr * m_hat / (sqrt(v_hat) + eps).
  const double lr_t = lr * std::sqrt(c2) / c1;
  const double eps_t = state.eps * std::sqrt(c2);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    adam_update(layers[i].weight, grads.layers[i].weight, state.m[i].weight, state.v[i].weight,
                state.beta1, state.beta2, lr_t, eps_t);
    adam_update(layers[i].bias, grads.layers[i].bias, state.m[i].bias, state.v[i].bias,
                state.beta1, state.beta2, lr_t, eps_t);
  }
}

}  // namespace dea::approx
