#include <doctest.h>

#include <cmath>
#include <random>

#include "dea/approx.hpp"
#include "dea/errors.hpp"

using namespace dea;
using approx::Layer;
using approx::Matrix;
using approx::Mlp;
using approx::Vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Scalar reference forward pass written without Eigen products.
std::vector<double> reference_forward(const Mlp& net, std::vector<double> x) {
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& L = layers[l];
    std::vector<double> y(static_cast<std::size_t>(L.weight.rows()));
    for (Eigen::Index i = 0; i < L.weight.rows(); ++i) {
      double acc = L.bias(i);
      for (Eigen::Index j = 0; j < L.weight.cols(); ++j) acc += L.weight(i, j) * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = acc;
    }
    if (l + 1 == layers.size()) return y;
    std::vector<double> c(2 * y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      c[i] = std::max(0.0, y[i]);
      c[i + y.size()] = std::max(0.0, -y[i]);
    }
    x = std::move(c);
  }
  return x;
}

double mse(const Mlp& net, const Matrix& x, const Matrix& target) {
  return (net.forward(x) - target).squaredNorm() / static_cast<double>(x.cols());
}

}  // namespace

TEST_CASE("crelu splits signs into twice the width") {
  CHECK(approx::crelu(vec({1, -2})) == vec({1, 0, 0, 2}));
  CHECK(approx::crelu(vec({0, 0})) == vec({0, 0, 0, 0}));
  CHECK(approx::crelu(vec({3})) == vec({3, 0}));

  Rng rng(3);
  std::normal_distribution<double> n;
  for (int d = 1; d < 8; ++d) {
    Matrix x(d, 5);
    for (auto& v : x.reshaped()) v = n(rng);
    const Matrix y = approx::crelu(x);
    CHECK(y.rows() == 2 * d);
    CHECK(y.cols() == 5);
    CHECK((y.topRows(d) - y.bottomRows(d)).isApprox(x));
  }
}

TEST_CASE("single affine layer and zero network") {
  Layer L{Matrix::Constant(1, 1, 2.0), vec({1.0})};
  const Mlp net(std::vector<Layer>{L});
  CHECK(net.forward(vec({3.0}))(0) == 7.0);

  Rng rng(1);
  Mlp zero(4, {8, 8}, 3, rng);
  for (auto& layer : zero.layers()) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  CHECK(zero.forward(vec({1.0, -2.0, 3.0, 0.5})).isZero(0.0));
}

TEST_CASE("layer widths follow the crelu doubling law") {
  Rng rng(2);
  const Mlp net(3, {5, 7}, 2, rng);
  REQUIRE(net.num_layers() == 3);
  CHECK(net.layers()[0].weight.cols() == 3);
  CHECK(net.layers()[1].weight.cols() == 10);
  CHECK(net.layers()[2].weight.cols() == 14);
  CHECK(net.output_dim() == 2);

  std::vector<Layer> bad{{Matrix::Zero(4, 3), Vector::Zero(4)}, {Matrix::Zero(1, 4), Vector::Zero(1)}};
  CHECK_THROWS_AS(Mlp{bad}, ConfigError);
  CHECK_THROWS_AS(net.forward(Vector(Vector::Zero(4))), ConfigError);
}

TEST_CASE("initial weights stay inside the fan-in bound") {
  Rng rng(9);
  const Mlp net(6, {16, 16}, 2, rng);
  for (const auto& L : net.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.weight.cols()));
    CHECK(L.weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(L.bias.cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("1-2-1 network matches scalar evaluation") {
  Rng rng(12345);
  const Mlp net(1, {2}, 1, rng);
  for (double x : {-1.5, -0.2, 0.0, 0.7, 2.0}) {
    const double expected = reference_forward(net, {x})[0];
    // Hand expansion of the same chain.
    const auto& L0 = net.layers()[0];
    const auto& L1 = net.layers()[1];
    const double h0 = L0.weight(0, 0) * x + L0.bias(0);
    const double h1 = L0.weight(1, 0) * x + L0.bias(1);
    const double hand = L1.bias(0) + L1.weight(0, 0) * std::max(0.0, h0) + L1.weight(0, 1) * std::max(0.0, h1) +
                        L1.weight(0, 2) * std::max(0.0, -h0) + L1.weight(0, 3) * std::max(0.0, -h1);
    CHECK(net.forward(vec({x}))(0) == doctest::Approx(hand).epsilon(1e-14));
    CHECK(expected == doctest::Approx(hand).epsilon(1e-14));
  }
}

TEST_CASE("batched forward matches per-sample forward bit-exactly and repeats") {
  Rng rng(4);
  const Mlp net(3, {6, 6}, 2, rng);
  Matrix x(3, 7);
  std::normal_distribution<double> n;
  for (auto& v : x.reshaped()) v = n(rng);
  const Matrix a = net.forward(x);
  const Matrix b = net.forward(x);
  CHECK(a == b);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vector col = x.col(j);
    const auto ref = reference_forward(net, std::vector<double>(col.data(), col.data() + col.size()));
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(a(i, j) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("constant loss gives zero gradients") {
  Rng rng(5);
  const Mlp net(3, {4}, 2, rng);
  const Matrix x = Matrix::Random(3, 6);
  const auto g = approx::mlp_gradient(net, x, [](const Matrix& out) { return Matrix::Zero(out.rows(), out.cols()); });
  CHECK(g.max_abs() == 0.0);
}

TEST_CASE("single-layer squared loss has the closed-form gradient") {
  Layer L{Matrix::Constant(1, 2, 0.0), vec({0.5})};
  L.weight << 1.5, -0.25;
  const Mlp net(std::vector<Layer>{L});
  Matrix x(2, 1);
  x << 2.0, 4.0;
  const double y = 1.0;
  const double pred = 1.5 * 2.0 - 0.25 * 4.0 + 0.5;
  const auto g = approx::mlp_gradient(net, x, [&](const Matrix& out) { return Matrix::Constant(1, 1, 2.0 * (out(0, 0) - y)); });
  CHECK(g.layers[0].weight(0, 0) == doctest::Approx(2.0 * (pred - y) * 2.0));
  CHECK(g.layers[0].weight(0, 1) == doctest::Approx(2.0 * (pred - y) * 4.0));
  CHECK(g.layers[0].bias(0) == doctest::Approx(2.0 * (pred - y)));
}

TEST_CASE("reverse-mode gradients match central finite differences on random networks") {
  std::normal_distribution<double> n;
  double worst = 0.0;
  int nets = 0;
  for (int trial = 0; trial < 24; ++trial) {
    Rng rng(100 + trial);
    std::uniform_int_distribution<int> width(2, 6);
    const int in = width(rng), out = width(rng) % 3 + 1;
    std::vector<int> hidden(static_cast<std::size_t>(1 + trial % 3));
    for (int& h : hidden) h = width(rng);
    Mlp net(in, hidden, out, rng);
    Matrix x(in, 5), target(out, 5);
    for (auto& v : x.reshaped()) v = n(rng);
    for (auto& v : target.reshaped()) v = n(rng);

    const auto g = approx::mlp_gradient(net, x, [&](const Matrix& o) {
      return Matrix(2.0 * (o - target) / static_cast<double>(x.cols()));
    });

    const double h = 1e-5;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto probe = [&](double& p, double analytic) {
        const double keep = p;
        p = keep + h;
        const double up = mse(net, x, target);
        p = keep - h;
        const double down = mse(net, x, target);
        p = keep;
        const double fd = (up - down) / (2 * h);
        const double rel = std::abs(fd - analytic) / std::max(1e-6, std::abs(fd) + std::abs(analytic));
        worst = std::max(worst, rel);
      };
      auto& L = net.layers()[l];
      for (Eigen::Index i = 0; i < L.weight.size(); ++i) probe(L.weight.data()[i], g.layers[l].weight.data()[i]);
      for (Eigen::Index i = 0; i < L.bias.size(); ++i) probe(L.bias(i), g.layers[l].bias(i));
    }
    ++nets;
  }
  CHECK(nets >= 20);
  CHECK(worst < 1e-4);
}

TEST_CASE("input gradient matches finite differences") {
  Rng rng(77);
  const Mlp net(3, {5}, 1, rng);
  Matrix x = Matrix::Random(3, 1);
  Mlp::Tape tape;
  net.forward(x, tape);
  const Matrix gi = net.backward_input(tape, Matrix::Ones(1, 1));
  for (int i = 0; i < 3; ++i) {
    Matrix up = x, down = x;
    up(i, 0) += 1e-6;
    down(i, 0) -= 1e-6;
    const double fd = (net.forward(up)(0, 0) - net.forward(down)(0, 0)) / 2e-6;
    CHECK(gi(i, 0) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("non-finite gradient is reported") {
  Rng rng(8);
  const Mlp net(2, {3}, 1, rng);
  Mlp::Tape tape;
  net.forward(Matrix::Ones(2, 1), tape);
  Matrix bad(1, 1);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(net.backward(tape, bad), NumericError);
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  auto one_param = [](double g) {
    Layer L{Matrix::Constant(1, 1, 0.3), vec({0.0})};
    Mlp net(std::vector<Layer>{L});
    auto st = approx::make_adam_state(net);
    approx::Gradients grads{{Layer{Matrix::Constant(1, 1, g), vec({0.0})}}};
    approx::adam_step(net, grads, st, 1e-3);
    CHECK(st.t == 1);
    return net.layers()[0].weight(0, 0) - 0.3;
  };
  CHECK(one_param(1.0) == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(one_param(-2.0) == doctest::Approx(1e-3).epsilon(1e-6));

  Rng rng(6);
  Mlp net(3, {4}, 2, rng);
  const Mlp before = net;
  auto st = approx::make_adam_state(net);
  approx::Gradients zero;
  for (const auto& L : net.layers()) zero.layers.push_back({Matrix::Zero(L.weight.rows(), L.weight.cols()), Vector::Zero(L.bias.size())});
  approx::adam_step(net, zero, st, 1e-3);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(net.layers()[l].weight == before.layers()[l].weight);
    CHECK(net.layers()[l].bias == before.layers()[l].bias);
  }
  for (const auto& v : st.v) CHECK(v.weight.minCoeff() >= 0.0);
}

TEST_CASE("adam drives a quadratic to its minimum") {
  Layer L{Matrix::Constant(1, 1, 5.0), vec({-3.0})};
  Mlp net(std::vector<Layer>{L});
  auto st = approx::make_adam_state(net);
  for (int k = 0; k < 3000; ++k) {
    const auto& P = net.layers()[0];
    approx::Gradients g{{Layer{Matrix::Constant(1, 1, 2.0 * (P.weight(0, 0) - 1.0)), vec({2.0 * (P.bias(0) + 2.0)})}}};
    approx::adam_step(net, g, st, 1e-2);
  }
  CHECK(net.layers()[0].weight(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(net.layers()[0].bias(0) == doctest::Approx(-2.0).epsilon(1e-3));
}
