// SPDX-License-Identifier: Apache-2.0
#include "ulsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ulsched {

namespace {

ScheduleDecision make_decision(int user, std::size_t n) {
  ScheduleDecision d;
  d.scheduled_user = user;
  d.indicator.assign(n, 0);
  d.indicator[user] = 1;
  return d;
}

template <typename T>
ScheduleDecision pick_argmax(const std::vector<T>& values, RngStream& rng) {
  const T best = *std::max_element(values.begin(), values.end());
  std::vector<int> winners;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == best) winners.push_back(static_cast<int>(i));
  int user = winners.front();
  if (winners.size() > 1) user = winners[rng.next_index(winners.size())];
  return make_decision(user, values.size());
}

}  // namespace

ScheduleDecision select_highest_rate(const BidVector& bids, RngStream& rng) {
  if (bids.rates.empty()) throw std::invalid_argument("empty bid vector");
  return pick_argmax(bids.rates, rng);
}

ScheduleDecision select_softmax(const BidVector& bids, double sharpness, RngStream& rng) {
  if (bids.rates.empty()) throw std::invalid_argument("empty bid vector");
  if (sharpness <= 0.0) throw std::invalid_argument("sharpness must be > 0");
  // g(r) = r + 1; normalize in log space against the largest bid to keep
  // g(r)^m finite for large m.
  const int max_bid = *std::max_element(bids.rates.begin(), bids.rates.end());
  std::vector<double> weights(bids.rates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < bids.rates.size(); ++i) {
    weights[i] = std::exp(sharpness * (std::log1p(bids.rates[i]) - std::log1p(max_bid)));
    total += weights[i];
  }
  const double u = rng.next_uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return make_decision(static_cast<int>(i), bids.rates.size());
  }
  return make_decision(static_cast<int>(bids.rates.size()) - 1, bids.rates.size());
}

ScheduleDecision select_mlwdf(const std::vector<double>& hol_delays,
                              const std::vector<int>& achievable_rates,
                              const std::vector<double>& delay_targets,
                              const std::vector<double>& avg_rates, RngStream& rng) {
  const std::size_t n = hol_delays.size();
  if (n == 0 || achievable_rates.size() != n || delay_targets.size() != n ||
      avg_rates.size() != n)
    throw std::invalid_argument("M-LWDF input lists must have equal nonzero length");
  std::vector<double> priority(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (avg_rates[i] <= 0.0) throw std::invalid_argument("avg_rates must be > 0");
    priority[i] = hol_delays[i] / (delay_targets[i] * avg_rates[i]) * achievable_rates[i];
  }
  return pick_argmax(priority, rng);
}

int quantize_bid(int rate, int bid_bits) {
  if (rate < 0) throw std::invalid_argument("rate must be >= 0");
  if (bid_bits < 1) throw std::invalid_argument("bid_bits must be >= 1");
  return std::min(rate, (1 << bid_bits) - 1);
}

}  // namespace ulsched
