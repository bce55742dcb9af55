// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ulsched/channel.hpp"
#include "ulsched/rng.hpp"

namespace ulsched {

// Two-timescale stepsizes: a fast sequence for the value updates and a
// slow one for the multiplier ascent, with e_n / f_n -> 0.
struct StepsizeSchedule {
  std::function<double(long long)> fast;
  std::function<double(long long)> slow;
};

// Defaults f_n = n^-0.6, e_n = n^-0.9. The scale constants keep the required
// e_n / f_n -> 0 separation; a small slow scale makes the multiplier track
// the converged value function adiabatically instead of overshooting it.
StepsizeSchedule stepsize_defaults(double fast_exponent = 0.6, double slow_exponent = 0.9,
                                   double fast_scale = 1.0, double slow_scale = 1.0);

struct LearnerConfig {
  int q_max = 200;
  double multiplier_cap = 1000.0;   // K
  double delay_target_queue = 0.0;  // delta-bar, fragments
  int bid_bits = 3;
  StepsizeSchedule stepsizes;       // defaults applied when empty
  bool per_state_stepsizes = false; // index stepsizes by per-state visit counts
  double epsilon = 0.0;             // optional epsilon-greedy exploration
};

// P(x, r) + lambda * (q - delta_bar).
double lagrangian_cost(double lambda, int queue, double state_gain, int rate,
                       const ChannelModel& channel, double delay_target_queue);

// {0, ..., min(max_rate(x), q, 2^bid_bits - 1)}.
std::vector<int> feasible_set(int queue, double state_gain, const ChannelModel& channel,
                              int bid_bits);

// Per-user online primal-dual learner: post-decision-state value table on
// the fast timescale, Lagrange multiplier ascent on the slow one.
class Learner {
 public:
  Learner(const ChannelModel& channel, LearnerConfig config);

  // Rate for the current slot given this slot's (capped) arrivals and the
  // fresh channel state. Ties break toward the smallest rate.
  int choose_rate(int arrivals, int channel_state, RngStream* explore_rng = nullptr);

  // Primal iteration: rewrites exactly the previous post-decision entry.
  void update_value(int arrivals, int channel_state, int chosen_rate);

  // Dual iteration: lambda <- clamp(lambda + e_n (Q_n - delta_bar), 0, K).
  void update_multiplier(int current_queue);

  // Post-decision state advance and slot counter increment.
  void advance(int post_queue, int channel_state);

  double multiplier() const { return multiplier_; }
  double reference_value() const { return value_[index(0, reference_state_)]; }
  double value(int post_queue, int state) const { return value_[index(post_queue, state)]; }
  double value_sup_norm() const;
  int post_queue() const { return post_queue_; }
  int post_state() const { return post_state_; }
  long long slot_count() const { return slot_count_; }
  const LearnerConfig& config() const { return config_; }

  void dump_value_table(const std::string& path) const;

 private:
  std::size_t index(int q, int x) const {
    return static_cast<std::size_t>(q) * num_states_ + x;
  }
  double fast_step(int q, int x) const;
  double score(int rate, int arrivals, int channel_state, double f) const;

  ChannelModel channel_;
  LearnerConfig config_;
  int num_states_;
  std::vector<double> value_;        // (q_max+1) x num_states
  std::vector<long long> visits_;    // per-state counters (optional schedule)
  double multiplier_ = 0.0;
  long long slot_count_ = 1;
  int post_queue_ = 0;
  int post_state_ = 0;
  int reference_state_ = 0;          // reference post-decision state (0, x^1)
};

}  // namespace ulsched
