#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "pomarl/contract.hpp"
#include "pomarl/mlp.hpp"
#include "pomarl/rng.hpp"
#include "pomarl/scenario.hpp"

namespace pomarl::gan {

using nn::Gradient;
using nn::Mat;
using nn::Mlp;
using nn::Tape;
using nn::Vec;

// What goes dark when an agent drops out: per agent j, the flattened joint
// indices covering j's own vector and every reference to j elsewhere.
struct MaskingRule {
  int n_agents = 0;
  int joint_dim = 0;
  std::vector<std::vector<int>> missing_slices;
};

inline MaskingRule masking_rule_from(const env::ScenarioSpec& spec) {
  MaskingRule rule;
  rule.n_agents = spec.n_agents;
  rule.joint_dim = spec.joint_dim();
  rule.missing_slices.resize(spec.n_agents);
  for (int j = 0; j < spec.n_agents; ++j) rule.missing_slices[j] = spec.missing_agent_slice(j);
  return rule;
}

// Synthetic streams: n contiguous per-agent blocks with no cross references.
inline MaskingRule block_masking_rule(int n_agents, int per_agent_dim) {
  MaskingRule rule;
  rule.n_agents = n_agents;
  rule.joint_dim = n_agents * per_agent_dim;
  rule.missing_slices.resize(n_agents);
  for (int j = 0; j < n_agents; ++j)
    for (int k = 0; k < per_agent_dim; ++k)
      rule.missing_slices[j].push_back(j * per_agent_dim + k);
  return rule;
}

// Ring buffer of flattened joint observations (B_G), uniform sampling.
class ObsReplayBuffer {
 public:
  explicit ObsReplayBuffer(int dim, std::size_t capacity) : dim_(dim), capacity_(capacity) {
    POMARL_CHECK(dim > 0 && capacity > 0);
  }

  void push(const std::vector<double>& obs) {
    POMARL_CHECK(static_cast<int>(obs.size()) == dim_);
    if (size_ < capacity_) {
      data_.insert(data_.end(), obs.begin(), obs.end());
      ++size_;
    } else {
      std::copy(obs.begin(), obs.end(),
                data_.begin() + static_cast<std::ptrdiff_t>(cursor_ * dim_));
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return size_; }
  int dim() const { return dim_; }
  const double* row(std::size_t i) const { return data_.data() + i * dim_; }

  std::vector<double> sample(Rng& rng) const {
    POMARL_CHECK(size_ > 0);
    const double* r = row(rng.uniform_int(size_));
    return std::vector<double>(r, r + dim_);
  }

 private:
  int dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> data_;
};

struct MaskedSample {
  std::vector<double> full;     // o
  std::vector<double> partial;  // o-tilde: noise where masked
  std::vector<double> mask;     // m in {0,1}^d
  std::vector<int> masked_agents;
};

// o-hat = m (.) o + (1 - m) (.) o_G, branch form so visible entries stay
// bit-identical to the source.
inline std::vector<double> combine(const std::vector<double>& o, const std::vector<double>& mask,
                                   const std::vector<double>& generated) {
  POMARL_CHECK(o.size() == mask.size() && o.size() == generated.size());
  std::vector<double> out(o.size());
  for (std::size_t k = 0; k < o.size(); ++k) out[k] = (mask[k] != 0.0) ? o[k] : generated[k];
  return out;
}

inline double reconstruction_mse(const std::vector<double>& o, const std::vector<double>& o_hat) {
  POMARL_CHECK(o.size() == o_hat.size() && !o.empty());
  double s = 0.0;
  for (std::size_t k = 0; k < o.size(); ++k) {
    const double d = o[k] - o_hat[k];
    s += d * d;
  }
  return s / static_cast<double>(o.size());
}

struct GanConfig {
  int hidden = 64;
  int n_critic = 5;
  int batch_size = 256;
  double lambda_gp = 10.0;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  // Adam moments per the standard WGAN-GP recipe
  double beta1 = 0.0;
  double beta2 = 0.9;
};

// Context-conditional WGAN-GP over joint observations. The generator maps
// the concatenation (o-tilde || m) to a full-length output; the
// discriminator scores full-length vectors only. Training masks 1..n-1
// random agents per sample, mirroring the distance-visibility rule used at
// execution time.
template <class S>
class CcWgan {
 public:
  struct Metrics {
    bool updated = false;
    double d_loss = std::numeric_limits<double>::quiet_NaN();
    double g_loss = std::numeric_limits<double>::quiet_NaN();
    double recon_mse = std::numeric_limits<double>::quiet_NaN();
    double w_estimate = std::numeric_limits<double>::quiet_NaN();  // d_loss minus the penalty
    long update_index = 0;
  };

  struct DLossParts {
    S wasserstein = S(0);  // (1/m) sum [D(o) - D(o-hat)], the printed form
    S gp = S(0);
  };

  CcWgan(MaskingRule rule, GanConfig cfg, Rng& init_rng) : rule_(std::move(rule)), cfg_(cfg) {
    POMARL_CHECK_MSG(rule_.n_agents >= 2, "CC-WGAN needs at least two agents");
    g_ = Mlp<S>(2 * rule_.joint_dim, cfg_.hidden, rule_.joint_dim, nn::OutputActivation::linear,
                init_rng);
    d_ = Mlp<S>(rule_.joint_dim, cfg_.hidden, 1, nn::OutputActivation::linear, init_rng);
  }

  const MaskingRule& rule() const { return rule_; }
  const GanConfig& config() const { return cfg_; }
  Mlp<S>& generator() { return g_; }
  const Mlp<S>& generator() const { return g_; }
  Mlp<S>& discriminator() { return d_; }
  const Mlp<S>& discriminator() const { return d_; }
  long long generator_calls() const { return generator_calls_; }
  long update_count() const { return update_count_; }

  // Draws x ~ U{1..n-1} missing agents and noise-fills their slices.
  MaskedSample mask_random(const std::vector<double>& o, Rng& rng) const {
    POMARL_CHECK(static_cast<int>(o.size()) == rule_.joint_dim);
    MaskedSample s;
    s.full = o;
    s.partial = o;
    s.mask.assign(o.size(), 1.0);
    const int n = rule_.n_agents;
    const int x = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - 1)));
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int k = 0; k < x; ++k) {
      const int pick = k + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - k)));
      std::swap(pool[k], pool[pick]);
      s.masked_agents.push_back(pool[k]);
    }
    for (int j : s.masked_agents) {
      for (int idx : rule_.missing_slices[j]) {
        s.mask[idx] = 0.0;
        s.partial[idx] = rng.gaussian();
      }
    }
    return s;
  }

  // o_G = G(o-tilde || m). Deterministic given inputs and parameters.
  std::vector<double> generate(const std::vector<double>& partial,
                               const std::vector<double>& mask) const {
    POMARL_CHECK(static_cast<int>(partial.size()) == rule_.joint_dim &&
                 partial.size() == mask.size());
    Mat<S> in(1, 2 * rule_.joint_dim);
    for (int k = 0; k < rule_.joint_dim; ++k) {
      in(0, k) = static_cast<S>(partial[k]);
      in(0, rule_.joint_dim + k) = static_cast<S>(mask[k]);
    }
    Mat<S> out = g_.forward(in);
    ++generator_calls_;
    std::vector<double> o_g(rule_.joint_dim);
    for (int k = 0; k < rule_.joint_dim; ++k) o_g[k] = static_cast<double>(out(0, k));
    return o_g;
  }

  // o-hat = combine(o-tilde, m, G(o-tilde, m)); skips the generator when
  // nothing is masked.
  std::vector<double> infer(const std::vector<double>& partial,
                            const std::vector<double>& mask) const {
    bool complete = true;
    for (double m : mask)
      if (m == 0.0) {
        complete = false;
        break;
      }
    if (complete) return partial;
    return combine(partial, mask, generate(partial, mask));
  }

  // Reported discriminator loss in the printed form
  //   (1/m) sum [D(o) - D(o-hat)] + lambda_gp * GP.
  double d_loss(const Mat<S>& real, const Mat<S>& fake, Rng& rng) const {
    POMARL_CHECK_MSG(real.rows() >= 1 && real.rows() == fake.rows(), "empty or ragged batch");
    DLossParts parts;
    d_training_loss(real, fake, draw_eps(static_cast<int>(real.rows()), rng), nullptr, &parts);
    return static_cast<double>(parts.wasserstein) +
           cfg_.lambda_gp * static_cast<double>(parts.gp);
  }

  // mean over the batch of (||grad_x D|| - 1)^2 at eps-interpolated points
  // between real and fake rows. When d_grads is given, the penalty's
  // parameter gradient (unscaled) is accumulated via the second-order path.
  S gradient_penalty(const Mat<S>& real, const Mat<S>& fake, const Vec<S>& eps,
                     Gradient<S>* d_grads = nullptr) const {
    POMARL_CHECK(real.rows() == fake.rows() && real.cols() == fake.cols());
    POMARL_CHECK(eps.size() == real.rows());
    const int batch = static_cast<int>(real.rows());
    Mat<S> mix(batch, real.cols());
    for (int b = 0; b < batch; ++b)
      mix.row(b) = eps(b) * real.row(b) + (S(1) - eps(b)) * fake.row(b);
    Tape<S> tape;
    d_.forward(mix, tape);
    Mat<S> g = d_.input_gradient(tape);
    Vec<S> norms = g.rowwise().norm();
    S penalty = S(0);
    for (int b = 0; b < batch; ++b) penalty += (norms(b) - S(1)) * (norms(b) - S(1));
    penalty /= S(batch);
    if (d_grads) {
      Mat<S> dg = g;
      for (int b = 0; b < batch; ++b) {
        const S n = std::max(norms(b), S(1e-12));
        dg.row(b) *= S(2) * (norms(b) - S(1)) / (n * S(batch));
      }
      d_.input_gradient_backward(tape, dg, *d_grads);
    }
    return penalty;
  }

  S gradient_penalty(const Mat<S>& real, const Mat<S>& fake, Rng& rng) const {
    return gradient_penalty(real, fake, draw_eps(static_cast<int>(real.rows()), rng), nullptr);
  }

  // Discriminator training objective (descended):
  //   mean D(o-hat) - mean D(o) + lambda_gp * GP.
  // o-hat enters as a constant input; gradients flow to D only.
  S d_training_loss(const Mat<S>& real, const Mat<S>& fake, const Vec<S>& eps,
                    Gradient<S>* d_grads, DLossParts* parts = nullptr) const {
    POMARL_CHECK_MSG(real.rows() >= 1 && real.rows() == fake.rows(), "empty or ragged batch");
    const int batch = static_cast<int>(real.rows());
    Tape<S> tape_r, tape_f;
    Mat<S> yr = d_.forward(real, tape_r);
    Mat<S> yf = d_.forward(fake, tape_f);
    S loss = (yf.sum() - yr.sum()) / S(batch);
    if (parts) parts->wasserstein = -loss;
    if (d_grads) {
      d_.backward(tape_f, Mat<S>::Constant(batch, 1, S(1) / S(batch)), *d_grads);
      d_.backward(tape_r, Mat<S>::Constant(batch, 1, S(-1) / S(batch)), *d_grads);
    }
    if (cfg_.lambda_gp != 0.0) {
      S gp;
      if (d_grads) {
        Gradient<S> gp_grads = d_.zero_gradient();
        gp = gradient_penalty(real, fake, eps, &gp_grads);
        gp_grads *= S(cfg_.lambda_gp);
        *d_grads += gp_grads;
      } else {
        gp = gradient_penalty(real, fake, eps, nullptr);
      }
      if (parts) parts->gp = gp;
      loss += S(cfg_.lambda_gp) * gp;
    }
    return loss;
  }

  // Generator objective mean D(o-hat) with o-hat = m (.) o + (1-m) (.) G(...).
  // The generator ascends it; accumulated gradients are of the descended
  // form (negated mean) and flow only through the generated entries.
  S g_objective(const Mat<S>& partial, const Mat<S>& mask, const Mat<S>& full,
                Gradient<S>* g_grads) const {
    POMARL_CHECK_MSG(partial.rows() >= 1, "empty batch");
    POMARL_CHECK(partial.rows() == mask.rows() && partial.rows() == full.rows());
    const int batch = static_cast<int>(partial.rows());
    Mat<S> gin(batch, 2 * rule_.joint_dim);
    gin << partial, mask;
    Tape<S> tape_g;
    Mat<S> o_g = g_.forward(gin, tape_g);
    Mat<S> ones = Mat<S>::Ones(batch, rule_.joint_dim);
    Mat<S> o_hat = mask.cwiseProduct(full) + (ones - mask).cwiseProduct(o_g);
    Tape<S> tape_d;
    Mat<S> score = d_.forward(o_hat, tape_d);
    const S objective = score.sum() / S(batch);
    if (g_grads) {
      Mat<S> d_in = d_.input_gradient(tape_d);
      Mat<S> cot = (ones - mask).cwiseProduct(d_in) * (S(-1) / S(batch));
      g_.backward(tape_g, cot, *g_grads);
    }
    return objective;
  }

  // One update: n_critic discriminator steps on fresh randomly-masked
  // batches, then one generator step. Empty buffer is a warning no-op.
  Metrics train_step(const ObsReplayBuffer& buffer, Rng& rng) {
    Metrics m;
    if (buffer.size() == 0) return m;
    const int batch = cfg_.batch_size;
    for (int it = 0; it < cfg_.n_critic; ++it) {
      Mat<S> real(batch, rule_.joint_dim), partial(batch, rule_.joint_dim),
          mask(batch, rule_.joint_dim);
      assemble_batch(buffer, rng, real, partial, mask);
      Mat<S> fake = make_fake(real, partial, mask);
      Gradient<S> grads = d_.zero_gradient();
      Vec<S> eps = draw_eps(batch, rng);
      DLossParts parts;
      d_training_loss(real, fake, eps, &grads, &parts);
      if (it == cfg_.n_critic - 1) {
        m.w_estimate = static_cast<double>(parts.wasserstein);
        m.d_loss = m.w_estimate + cfg_.lambda_gp * static_cast<double>(parts.gp);
      }
      d_.adam_step(grads, S(cfg_.lr_d), S(cfg_.beta1), S(cfg_.beta2));
    }
    {
      Mat<S> real(batch, rule_.joint_dim), partial(batch, rule_.joint_dim),
          mask(batch, rule_.joint_dim);
      assemble_batch(buffer, rng, real, partial, mask);
      Gradient<S> grads = g_.zero_gradient();
      m.g_loss = static_cast<double>(g_objective(partial, mask, real, &grads));
      g_.adam_step(grads, S(cfg_.lr_g), S(cfg_.beta1), S(cfg_.beta2));
      Mat<S> o_hat = make_fake(real, partial, mask);
      m.recon_mse = static_cast<double>((o_hat - real).squaredNorm()) /
                    static_cast<double>(batch * rule_.joint_dim);
    }
    m.updated = true;
    m.update_index = ++update_count_;
    return m;
  }

 private:
  Vec<S> draw_eps(int batch, Rng& rng) const {
    Vec<S> eps(batch);
    for (int b = 0; b < batch; ++b) eps(b) = static_cast<S>(rng.uniform());
    return eps;
  }

  void assemble_batch(const ObsReplayBuffer& buffer, Rng& rng, Mat<S>& real, Mat<S>& partial,
                      Mat<S>& mask) const {
    const int batch = static_cast<int>(real.rows());
    for (int b = 0; b < batch; ++b) {
      MaskedSample s = mask_random(buffer.sample(rng), rng);
      for (int k = 0; k < rule_.joint_dim; ++k) {
        real(b, k) = static_cast<S>(s.full[k]);
        partial(b, k) = static_cast<S>(s.partial[k]);
        mask(b, k) = static_cast<S>(s.mask[k]);
      }
    }
  }

  Mat<S> make_fake(const Mat<S>& real, const Mat<S>& partial, const Mat<S>& mask) const {
    Mat<S> gin(static_cast<int>(real.rows()), 2 * rule_.joint_dim);
    gin << partial, mask;
    Mat<S> o_g = g_.forward(gin);
    return mask.cwiseProduct(real) +
           (Mat<S>::Ones(real.rows(), rule_.joint_dim) - mask).cwiseProduct(o_g);
  }

  MaskingRule rule_;
  GanConfig cfg_;
  Mlp<S> g_, d_;
  mutable long long generator_calls_ = 0;
  long update_count_ = 0;
};

}  // namespace pomarl::gan
