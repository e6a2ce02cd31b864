#pragma once

#include <cmath>
#include <functional>

#include "pomarl/mlp.hpp"

namespace pomarl::test {

using nn::Gradient;
using nn::Mat;
using nn::Mlp;
using nn::Vec;

// Relative error with a unit floor so near-zero gradients compare absolutely.
inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// Central finite differences over every parameter of `net` against the
// analytic gradient. `eval` recomputes the scalar loss from the current
// parameters. Returns the worst relative error.
inline double fd_check(Mlp<double>& net, const Gradient<double>& analytic,
                       const std::function<double()>& eval, double h = 1e-5) {
  double worst = 0.0;
  auto probe = [&](double& p, double a) {
    const double saved = p;
    p = saved + h;
    net.bump_version();
    const double up = eval();
    p = saved - h;
    net.bump_version();
    const double down = eval();
    p = saved;
    net.bump_version();
    worst = std::max(worst, rel_err(a, (up - down) / (2.0 * h)));
  };
  for (int l = 0; l < 3; ++l) {
    auto& w = net.weight(l);
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) probe(w(r, c), analytic.w[l](r, c));
    auto& b = net.bias(l);
    for (int i = 0; i < b.size(); ++i) probe(b(i), analytic.b[l](i));
  }
  return worst;
}

// Builds a net computing exactly y = V x + b for all x (the two hidden
// layers split positive and negative parts, so the ReLUs never clip).
template <class S>
Mlp<S> make_linear_mlp(const Mat<S>& v, const Vec<S>& b, Rng& rng) {
  const int in = static_cast<int>(v.cols());
  const int out = static_cast<int>(v.rows());
  Mlp<S> net(in, 2 * in, out, nn::OutputActivation::linear, rng);
  net.weight(0).setZero();
  net.weight(0).topRows(in) = Mat<S>::Identity(in, in);
  net.weight(0).bottomRows(in) = -Mat<S>::Identity(in, in);
  net.bias(0).setZero();
  net.weight(1) = Mat<S>::Identity(2 * in, 2 * in);
  net.bias(1).setZero();
  net.weight(2).leftCols(in) = v;
  net.weight(2).rightCols(in) = -v;
  net.bias(2) = b;
  net.bump_version();
  return net;
}

inline Mat<double> random_mat(int rows, int cols, Rng& rng, double scale = 1.0) {
  Mat<double> m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.gaussian();
  return m;
}

// Gradient checks need generic points. Zero-init biases put pre-activations
// exactly on the ReLU kink whenever a sample deactivates a whole layer, so
// test nets get small random biases.
template <class S>
void randomize_biases(Mlp<S>& net, Rng& rng, double scale = 0.1) {
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < net.bias(l).size(); ++i)
      net.bias(l)(i) = static_cast<S>(scale * rng.gaussian());
  net.bump_version();
}

}  // namespace pomarl::test
