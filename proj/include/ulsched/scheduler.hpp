// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ulsched/rng.hpp"

namespace ulsched {

struct BidVector {
  std::vector<int> rates;  // one bid per user
};

struct ScheduleDecision {
  int scheduled_user = 0;
  std::vector<int> indicator;  // exactly one bit set
};

// Highest bid wins; ties uniform at random. Consumes one uniform draw
// iff the argmax set has more than one member.
ScheduleDecision select_highest_rate(const BidVector& bids, RngStream& rng);

// Soft-max selection: user i with probability g(R^i)^m / sum_j g(R^j)^m,
// g(r) = r + 1.
ScheduleDecision select_softmax(const BidVector& bids, double sharpness, RngStream& rng);

// M-LWDF baseline: argmax of (hol_delay / (delay_target * avg_rate)) *
// achievable_rate, ties uniform.
ScheduleDecision select_mlwdf(const std::vector<double>& hol_delays,
                              const std::vector<int>& achievable_rates,
                              const std::vector<double>& delay_targets,
                              const std::vector<double>& avg_rates, RngStream& rng);

// Clamp a rate to the configured bid width.
int quantize_bid(int rate, int bid_bits);

}  // namespace ulsched
