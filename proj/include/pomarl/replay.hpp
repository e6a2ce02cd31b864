#pragma once

#include <cmath>
#include <vector>

#include "pomarl/contract.hpp"
#include "pomarl/rng.hpp"

namespace pomarl::rl {

// One environment transition. Observations may be inferred (o-hat); the
// masks record which entries were inferred (0) versus real (1).
struct Transition {
  std::vector<double> obs;       // joint, possibly inferred
  std::vector<double> actions;   // 2n, components in [-1,1]
  std::vector<double> rewards;   // n
  std::vector<double> next_obs;  // joint, possibly inferred
  std::vector<double> mask;      // joint
  std::vector<double> next_mask; // joint
};

// Flat ring buffer of transitions with uniform sampling.
class RlReplayBuffer {
 public:
  RlReplayBuffer(int n_agents, int joint_dim, std::size_t capacity)
      : n_agents_(n_agents),
        joint_dim_(joint_dim),
        stride_(4 * joint_dim + 3 * n_agents),
        capacity_(capacity) {
    POMARL_CHECK(n_agents > 0 && joint_dim > 0 && capacity > 0);
  }

  int n_agents() const { return n_agents_; }
  int joint_dim() const { return joint_dim_; }
  std::size_t size() const { return size_; }

  void push(const Transition& t) {
    POMARL_CHECK(static_cast<int>(t.obs.size()) == joint_dim_ &&
                 static_cast<int>(t.next_obs.size()) == joint_dim_ &&
                 static_cast<int>(t.mask.size()) == joint_dim_ &&
                 static_cast<int>(t.next_mask.size()) == joint_dim_);
    POMARL_CHECK(static_cast<int>(t.actions.size()) == 2 * n_agents_ &&
                 static_cast<int>(t.rewards.size()) == n_agents_);
    for (double a : t.actions) POMARL_CHECK_MSG(a >= -1.0 && a <= 1.0, "action out of range");
    for (double v : t.obs) POMARL_CHECK_MSG(std::isfinite(v), "non-finite observation");
    for (double v : t.next_obs) POMARL_CHECK_MSG(std::isfinite(v), "non-finite observation");
    if (size_ < capacity_) {
      data_.resize(data_.size() + stride_);
      write(size_, t);
      ++size_;
    } else {
      write(cursor_, t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  struct Row {
    const double* obs;
    const double* actions;
    const double* rewards;
    const double* next_obs;
    const double* mask;
    const double* next_mask;
  };

  Row row(std::size_t i) const {
    const double* base = data_.data() + i * stride_;
    Row r;
    r.obs = base;
    r.actions = base + joint_dim_;
    r.rewards = r.actions + 2 * n_agents_;
    r.next_obs = r.rewards + n_agents_;
    r.mask = r.next_obs + joint_dim_;
    r.next_mask = r.mask + joint_dim_;
    return r;
  }

  std::size_t sample_index(Rng& rng) const {
    POMARL_CHECK(size_ > 0);
    return rng.uniform_int(size_);
  }

 private:
  void write(std::size_t slot, const Transition& t) {
    double* base = data_.data() + slot * stride_;
    auto copy = [&base](const std::vector<double>& v) {
      std::copy(v.begin(), v.end(), base);
      base += v.size();
    };
    copy(t.obs);
    copy(t.actions);
    copy(t.rewards);
    copy(t.next_obs);
    copy(t.mask);
    copy(t.next_mask);
  }

  int n_agents_;
  int joint_dim_;
  std::size_t stride_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> data_;
};

// Discounted return sum_t gamma^t r_t.
inline double compute_return(const std::vector<double>& rewards, double gamma) {
  double acc = 0.0;
  double g = 1.0;
  for (double r : rewards) {
    acc += g * r;
    g *= gamma;
  }
  return acc;
}

}  // namespace pomarl::rl
