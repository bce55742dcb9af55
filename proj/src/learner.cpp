// SPDX-License-Identifier: Apache-2.0
#include "ulsched/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ulsched {

StepsizeSchedule stepsize_defaults(double fast_exponent, double slow_exponent,
                                   double fast_scale, double slow_scale) {
  StepsizeSchedule s;
  s.fast = [fast_exponent, fast_scale](long long n) {
    return fast_scale * std::pow(static_cast<double>(n), -fast_exponent);
  };
  s.slow = [slow_exponent, slow_scale](long long n) {
    return slow_scale * std::pow(static_cast<double>(n), -slow_exponent);
  };
  return s;
}

double lagrangian_cost(double lambda, int queue, double state_gain, int rate,
                       const ChannelModel& channel, double delay_target_queue) {
  if (rate > queue || rate > max_rate(state_gain, channel))
    throw std::invalid_argument("rate infeasible for (queue, state)");
  return power_required(state_gain, rate, channel) + lambda * (queue - delay_target_queue);
}

std::vector<int> feasible_set(int queue, double state_gain, const ChannelModel& channel,
                              int bid_bits) {
  const int cap = std::min({max_rate(state_gain, channel), queue, (1 << bid_bits) - 1});
  std::vector<int> actions(cap + 1);
  for (int r = 0; r <= cap; ++r) actions[r] = r;
  return actions;
}

Learner::Learner(const ChannelModel& channel, LearnerConfig config)
    : channel_(channel), config_(std::move(config)), num_states_(channel.num_states()) {
  if (!config_.stepsizes.fast) config_.stepsizes = stepsize_defaults();
  if (config_.q_max <= 0) throw std::invalid_argument("q_max must be > 0");
  value_.assign(static_cast<std::size_t>(config_.q_max + 1) * num_states_, 0.0);
  if (config_.per_state_stepsizes) visits_.assign(value_.size(), 0);
}

double Learner::fast_step(int q, int x) const {
  if (config_.per_state_stepsizes) {
    const long long v = visits_[index(q, x)] + 1;
    return config_.stepsizes.fast(v);
  }
  return config_.stepsizes.fast(slot_count_);
}

double Learner::score(int rate, int arrivals, int channel_state, double f) const {
  const int queue = post_queue_ + arrivals;
  const double x = channel_.bin_states[channel_state];
  const double cost = power_required(x, rate, channel_) +
                      multiplier_ * (queue - config_.delay_target_queue);
  return (1.0 - f) * value_[index(post_queue_, post_state_)] +
         f * (cost + value_[index(queue - rate, channel_state)] -
              value_[index(0, reference_state_)]);
}

int Learner::choose_rate(int arrivals, int channel_state, RngStream* explore_rng) {
  if (arrivals < 0) throw std::invalid_argument("arrivals must be >= 0");
  const int queue = post_queue_ + arrivals;
  if (queue > config_.q_max) throw std::invalid_argument("queue exceeds q_max; cap arrivals first");
  const double x = channel_.bin_states[channel_state];
  const int cap = std::min({max_rate(x, channel_), queue, (1 << config_.bid_bits) - 1});
  if (config_.epsilon > 0.0 && explore_rng &&
      explore_rng->next_uniform() < config_.epsilon) {
    return static_cast<int>(explore_rng->next_index(cap + 1));
  }
  const double f = fast_step(post_queue_, post_state_);
  int best = 0;
  double best_score = score(0, arrivals, channel_state, f);
  for (int r = 1; r <= cap; ++r) {
    const double s = score(r, arrivals, channel_state, f);
    if (s < best_score) {
      best = r;
      best_score = s;
    }
  }
  return best;
}

void Learner::update_value(int arrivals, int channel_state, int chosen_rate) {
  const int queue = post_queue_ + arrivals;
  if (queue > config_.q_max) throw std::invalid_argument("queue exceeds q_max");
  const double x = channel_.bin_states[channel_state];
  const int cap = std::min({max_rate(x, channel_), queue, (1 << config_.bid_bits) - 1});
  if (chosen_rate < 0 || chosen_rate > cap)
    throw std::invalid_argument("chosen_rate outside the feasible set");
  const double f = fast_step(post_queue_, post_state_);
  value_[index(post_queue_, post_state_)] = score(chosen_rate, arrivals, channel_state, f);
  if (config_.per_state_stepsizes) ++visits_[index(post_queue_, post_state_)];
}

void Learner::update_multiplier(int current_queue) {
  if (current_queue < 0) throw std::invalid_argument("queue must be >= 0");
  const double e = config_.stepsizes.slow(slot_count_);
  multiplier_ = std::clamp(
      multiplier_ + e * (current_queue - config_.delay_target_queue), 0.0,
      config_.multiplier_cap);
}

void Learner::advance(int post_queue, int channel_state) {
  post_queue_ = post_queue;
  post_state_ = channel_state;
  ++slot_count_;
}

double Learner::value_sup_norm() const {
  double sup = 0.0;
  for (double v : value_) sup = std::max(sup, std::abs(v));
  return sup;
}

void Learner::dump_value_table(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "post_queue,channel_state,value\n";
  for (int q = 0; q <= config_.q_max; ++q)
    for (int x = 0; x < num_states_; ++x)
      out << q << ',' << x << ',' << value_[index(q, x)] << '\n';
}

}  // namespace ulsched
