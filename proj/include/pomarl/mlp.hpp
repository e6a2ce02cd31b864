#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <istream>
#include <ostream>

#include "pomarl/contract.hpp"
#include "pomarl/rng.hpp"

namespace pomarl::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class OutputActivation : std::uint8_t { linear = 0, tanh_squash = 1 };

// Parameter-shaped gradient container.
template <class S>
struct Gradient {
  std::array<Mat<S>, 3> w;
  std::array<Vec<S>, 3> b;

  void set_zero() {
    for (auto& m : w) m.setZero();
    for (auto& v : b) v.setZero();
  }

  bool all_finite() const {
    for (const auto& m : w)
      if (!m.allFinite()) return false;
    for (const auto& v : b)
      if (!v.allFinite()) return false;
    return true;
  }

  Gradient& operator+=(const Gradient& o) {
    for (int i = 0; i < 3; ++i) {
      w[i] += o.w[i];
      b[i] += o.b[i];
    }
    return *this;
  }

  Gradient& operator*=(S c) {
    for (int i = 0; i < 3; ++i) {
      w[i] *= c;
      b[i] *= c;
    }
    return *this;
  }
};

template <class S>
struct AdamState {
  std::array<Mat<S>, 3> m_w, v_w;
  std::array<Vec<S>, 3> m_b, v_b;
  std::int64_t t = 0;
};

// Rescales the gradient so its global L2 norm is at most max_norm.
template <class S>
void clip_gradient_norm(Gradient<S>& g, S max_norm) {
  S sq = S(0);
  for (const auto& m : g.w) sq += m.squaredNorm();
  for (const auto& v : g.b) sq += v.squaredNorm();
  const S norm = std::sqrt(sq);
  if (norm > max_norm && norm > S(0)) g *= max_norm / norm;
}

// Cached activations from a forward pass. Rows are batch samples.
template <class S>
struct Tape {
  Mat<S> x;        // input
  Mat<S> z1, z2;   // hidden pre-activations (ReLU masks derive from sign)
  Mat<S> h1, h2;   // hidden post-activations
  Mat<S> y;        // output post-activation
  std::uint64_t version = 0;
};

// Three-layer dense network: in -> hidden -> hidden -> out, ReLU on the two
// hidden layers, linear or tanh output. Forward/backward are batched (rows =
// samples). Parameters carry their own Adam state. A version counter ties
// tapes to the parameter snapshot they were produced from.
template <class S>
class Mlp {
 public:
  Mlp() = default;

  Mlp(int in, int hidden, int out, OutputActivation act, Rng& rng)
      : out_act_(act) {
    POMARL_CHECK(in > 0 && hidden > 0 && out > 0);
    w_[0] = glorot(hidden, in, rng);
    w_[1] = glorot(hidden, hidden, rng);
    w_[2] = glorot(out, hidden, rng);
    for (int i = 0; i < 3; ++i) b_[i] = Vec<S>::Zero(w_[i].rows());
    reset_adam();
  }

  int in_dim() const { return static_cast<int>(w_[0].cols()); }
  int hidden_dim() const { return static_cast<int>(w_[0].rows()); }
  int out_dim() const { return static_cast<int>(w_[2].rows()); }
  OutputActivation output_activation() const { return out_act_; }
  std::uint64_t version() const { return version_; }
  const AdamState<S>& adam() const { return adam_; }

  Mat<S>& weight(int layer) { return w_[layer]; }
  const Mat<S>& weight(int layer) const { return w_[layer]; }
  Vec<S>& bias(int layer) { return b_[layer]; }
  const Vec<S>& bias(int layer) const { return b_[layer]; }

  // Direct parameter edits (tests, hand-built nets) invalidate old tapes.
  void bump_version() { ++version_; }

  Mat<S> forward(const Mat<S>& x) const {
    Tape<S> tape;
    return forward(x, tape);
  }

  Mat<S> forward(const Mat<S>& x, Tape<S>& tape) const {
    POMARL_CHECK_MSG(x.cols() == in_dim(), "input width mismatch");
    tape.x = x;
    tape.z1 = (x * w_[0].transpose()).rowwise() + b_[0].transpose();
    tape.h1 = tape.z1.cwiseMax(S(0));
    tape.z2 = (tape.h1 * w_[1].transpose()).rowwise() + b_[1].transpose();
    tape.h2 = tape.z2.cwiseMax(S(0));
    Mat<S> z3 = (tape.h2 * w_[2].transpose()).rowwise() + b_[2].transpose();
    tape.y = (out_act_ == OutputActivation::tanh_squash)
                 ? z3.array().tanh().matrix()
                 : std::move(z3);
    tape.version = version_;
    return tape.y;
  }

  // Accumulates d(sum_b cotangent_b . y_b)/d(params) into `grads` and returns
  // the same derivative with respect to the input (batch x in).
  Mat<S> backward(const Tape<S>& tape, const Mat<S>& cotangent, Gradient<S>& grads) const {
    POMARL_CHECK_MSG(tape.version == version_, "stale tape");
    POMARL_CHECK(cotangent.rows() == tape.y.rows() && cotangent.cols() == tape.y.cols());
    ensure_shape(grads);
    Mat<S> dz3 = (out_act_ == OutputActivation::tanh_squash)
                     ? (cotangent.array() * (S(1) - tape.y.array().square())).matrix()
                     : cotangent;
    grads.w[2].noalias() += dz3.transpose() * tape.h2;
    grads.b[2] += dz3.colwise().sum().transpose();
    Mat<S> dz2 = (dz3 * w_[2]).cwiseProduct(relu_mask(tape.z2));
    grads.w[1].noalias() += dz2.transpose() * tape.h1;
    grads.b[1] += dz2.colwise().sum().transpose();
    Mat<S> dz1 = (dz2 * w_[1]).cwiseProduct(relu_mask(tape.z1));
    grads.w[0].noalias() += dz1.transpose() * tape.x;
    grads.b[0] += dz1.colwise().sum().transpose();
    return dz1 * w_[0];
  }

  // Per-sample gradient of the scalar output with respect to the input.
  // Only valid for scalar linear-output nets (WGAN discriminator).
  Mat<S> input_gradient(const Tape<S>& tape) const {
    POMARL_CHECK_MSG(tape.version == version_, "stale tape");
    POMARL_CHECK_MSG(out_dim() == 1 && out_act_ == OutputActivation::linear,
                     "input_gradient requires a scalar linear head");
    Mat<S> u2 = relu_mask(tape.z2).array().rowwise() * w_[2].row(0).array();
    Mat<S> u1 = (u2 * w_[1]).cwiseProduct(relu_mask(tape.z1));
    return u1 * w_[0];
  }

  // Backpropagates a cotangent on input_gradient() into the parameters.
  // With g_b = W1^T (m1 (.) W2^T (m2 (.) W3^T)) and the ReLU masks held
  // fixed, d(sum_b q_b . g_b) splits into three outer-product terms; the
  // biases only enter through the masks, so their gradient is zero a.e.
  void input_gradient_backward(const Tape<S>& tape, const Mat<S>& cotangent,
                               Gradient<S>& grads) const {
    POMARL_CHECK_MSG(tape.version == version_, "stale tape");
    POMARL_CHECK(cotangent.rows() == tape.x.rows() && cotangent.cols() == tape.x.cols());
    ensure_shape(grads);
    Mat<S> mask1 = relu_mask(tape.z1);
    Mat<S> mask2 = relu_mask(tape.z2);
    Mat<S> u2 = mask2.array().rowwise() * w_[2].row(0).array();
    Mat<S> u1 = (u2 * w_[1]).cwiseProduct(mask1);
    Mat<S> w1m = (cotangent * w_[0].transpose()).cwiseProduct(mask1);
    Mat<S> w2m = (w1m * w_[1].transpose()).cwiseProduct(mask2);
    grads.w[0].noalias() += u1.transpose() * cotangent;
    grads.w[1].noalias() += u2.transpose() * w1m;
    grads.w[2].row(0) += w2m.colwise().sum();
  }

  // One Adam step with bias correction. Non-finite gradients are rejected
  // without touching parameters or moments; returns whether the step applied.
  bool adam_step(const Gradient<S>& g, S lr, S beta1 = S(0.9), S beta2 = S(0.999),
                 S eps = S(1e-8)) {
    POMARL_CHECK(congruent(g));
    if (!g.all_finite()) return false;
    ++adam_.t;
    const S c1 = S(1) - std::pow(beta1, S(adam_.t));
    const S c2 = S(1) - std::pow(beta2, S(adam_.t));
    for (int i = 0; i < 3; ++i) {
      adam_.m_w[i] = beta1 * adam_.m_w[i] + (S(1) - beta1) * g.w[i];
      adam_.v_w[i] = beta2 * adam_.v_w[i] + (S(1) - beta2) * g.w[i].cwiseProduct(g.w[i]);
      w_[i].array() -=
          lr * (adam_.m_w[i].array() / c1) / ((adam_.v_w[i].array() / c2).sqrt() + eps);
      adam_.m_b[i] = beta1 * adam_.m_b[i] + (S(1) - beta1) * g.b[i];
      adam_.v_b[i] = beta2 * adam_.v_b[i] + (S(1) - beta2) * g.b[i].cwiseProduct(g.b[i]);
      b_[i].array() -=
          lr * (adam_.m_b[i].array() / c1) / ((adam_.v_b[i].array() / c2).sqrt() + eps);
    }
    ++version_;
    return true;
  }

  Gradient<S> zero_gradient() const {
    Gradient<S> g;
    for (int i = 0; i < 3; ++i) {
      g.w[i] = Mat<S>::Zero(w_[i].rows(), w_[i].cols());
      g.b[i] = Vec<S>::Zero(b_[i].size());
    }
    return g;
  }

  bool congruent(const Gradient<S>& g) const {
    for (int i = 0; i < 3; ++i) {
      if (g.w[i].rows() != w_[i].rows() || g.w[i].cols() != w_[i].cols()) return false;
      if (g.b[i].size() != b_[i].size()) return false;
    }
    return true;
  }

  void reset_adam() {
    for (int i = 0; i < 3; ++i) {
      adam_.m_w[i] = Mat<S>::Zero(w_[i].rows(), w_[i].cols());
      adam_.v_w[i] = Mat<S>::Zero(w_[i].rows(), w_[i].cols());
      adam_.m_b[i] = Vec<S>::Zero(b_[i].size());
      adam_.v_b[i] = Vec<S>::Zero(b_[i].size());
    }
    adam_.t = 0;
  }

  // target <- (1 - tau) * target + tau * online. Adam state is not touched;
  // target networks never take optimizer steps.
  friend void polyak_update(Mlp& target, const Mlp& online, S tau) {
    POMARL_CHECK(tau > S(0) && tau <= S(1));
    POMARL_CHECK(target.in_dim() == online.in_dim() &&
                 target.hidden_dim() == online.hidden_dim() &&
                 target.out_dim() == online.out_dim());
    for (int i = 0; i < 3; ++i) {
      target.w_[i] = (S(1) - tau) * target.w_[i] + tau * online.w_[i];
      target.b_[i] = (S(1) - tau) * target.b_[i] + tau * online.b_[i];
    }
    ++target.version_;
  }

  // Binary checkpoint layout (little-endian):
  //   magic "PMLP", u32 format version, u8 sizeof(S), u8 output activation,
  //   u32 in, u32 hidden, u32 out, then W1,b1,W2,b2,W3,b3 raw row-major S,
  //   i64 adam step counter, then adam m/v for the same tensors in order.
  void save(std::ostream& os) const {
    os.write("PMLP", 4);
    write_pod<std::uint32_t>(os, 1);
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(sizeof(S)));
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(out_act_));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(in_dim()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(hidden_dim()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(out_dim()));
    for (int i = 0; i < 3; ++i) {
      write_mat(os, w_[i]);
      write_vec(os, b_[i]);
    }
    write_pod<std::int64_t>(os, adam_.t);
    for (int i = 0; i < 3; ++i) {
      write_mat(os, adam_.m_w[i]);
      write_mat(os, adam_.v_w[i]);
      write_vec(os, adam_.m_b[i]);
      write_vec(os, adam_.v_b[i]);
    }
  }

  static Mlp load(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    POMARL_CHECK_MSG(is && magic[0] == 'P' && magic[1] == 'M' && magic[2] == 'L' && magic[3] == 'P',
                     "bad checkpoint magic");
    POMARL_CHECK_MSG(read_pod<std::uint32_t>(is) == 1, "unsupported checkpoint version");
    POMARL_CHECK_MSG(read_pod<std::uint8_t>(is) == sizeof(S), "checkpoint scalar width mismatch");
    Mlp net;
    net.out_act_ = static_cast<OutputActivation>(read_pod<std::uint8_t>(is));
    const int in = static_cast<int>(read_pod<std::uint32_t>(is));
    const int hidden = static_cast<int>(read_pod<std::uint32_t>(is));
    const int out = static_cast<int>(read_pod<std::uint32_t>(is));
    const int rows[3] = {hidden, hidden, out};
    const int cols[3] = {in, hidden, hidden};
    for (int i = 0; i < 3; ++i) {
      net.w_[i] = read_mat(is, rows[i], cols[i]);
      net.b_[i] = read_vec(is, rows[i]);
    }
    net.adam_.t = read_pod<std::int64_t>(is);
    for (int i = 0; i < 3; ++i) {
      net.adam_.m_w[i] = read_mat(is, rows[i], cols[i]);
      net.adam_.v_w[i] = read_mat(is, rows[i], cols[i]);
      net.adam_.m_b[i] = read_vec(is, rows[i]);
      net.adam_.v_b[i] = read_vec(is, rows[i]);
    }
    POMARL_CHECK_MSG(static_cast<bool>(is), "truncated checkpoint");
    return net;
  }

 private:
  static Mat<S> relu_mask(const Mat<S>& z) {
    return (z.array() > S(0)).template cast<S>().matrix();
  }

  static Mat<S> glorot(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    Mat<S> m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = static_cast<S>(rng.uniform(-bound, bound));
    return m;
  }

  void ensure_shape(Gradient<S>& g) const {
    if (!congruent(g)) g = zero_gradient();
  }

  template <class T>
  static void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  static T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  static void write_mat(std::ostream& os, const Mat<S>& m) {
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) write_pod<S>(os, m(r, c));
  }
  static void write_vec(std::ostream& os, const Vec<S>& v) {
    for (int i = 0; i < v.size(); ++i) write_pod<S>(os, v(i));
  }
  static Mat<S> read_mat(std::istream& is, int rows, int cols) {
    Mat<S> m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = read_pod<S>(is);
    return m;
  }
  static Vec<S> read_vec(std::istream& is, int n) {
    Vec<S> v(n);
    for (int i = 0; i < n; ++i) v(i) = read_pod<S>(is);
    return v;
  }

  std::array<Mat<S>, 3> w_;
  std::array<Vec<S>, 3> b_;
  OutputActivation out_act_ = OutputActivation::linear;
  AdamState<S> adam_;
  std::uint64_t version_ = 0;
};

}  // namespace pomarl::nn
