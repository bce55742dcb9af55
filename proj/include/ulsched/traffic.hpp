// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ulsched/rng.hpp"

namespace ulsched {

// Per-slot arrival process: Poisson packet counts with truncated-Pareto
// packet sizes, fragmented into fixed-size MAC fragments. When
// fragment_pmf is non-empty it overrides the generative model and arrivals
// are drawn i.i.d. from that pmf over fragment counts (one uniform per
// slot), which is what the exact oracle instances use.
struct TrafficModel {
  double packet_rate = 0.1;  // Poisson mean, packets/slot
  double shape = 1.2;        // xi > 1
  int mode_bits = 2000;      // nu
  int cutoff_bits = 10000;   // g
  int fragment_bits = 2000;  // tau
  std::vector<double> fragment_pmf;  // optional direct mode, pmf over {0,1,...}

  void validate() const;
};

struct FragmentBatch {
  int count = 0;
  long long arrival_slot = 0;
};

// Inverse-CDF draw from the Pareto density renormalized to [nu, g).
int sample_packet_size(RngStream& rng, const TrafficModel& model);

// ceil(bits / tau); 0 for 0 bits.
int fragment(long long bits, int fragment_bits);

FragmentBatch arrivals(RngStream& rng, const TrafficModel& model, long long slot);

// Analytic mean of the renormalized truncated-Pareto size (bits).
double mean_packet_bits(const TrafficModel& model);

// Exact pmf of fragments per packet, index j = fragments (j >= 1 nonzero).
std::vector<double> fragments_per_packet_pmf(const TrafficModel& model);

// Exact pmf of fragments per slot (compound Poisson), truncated where the
// tail mass drops below tail_tol and renormalized.
std::vector<double> fragments_per_slot_pmf(const TrafficModel& model,
                                           double tail_tol = 1e-12);

// Mean fragments per slot. Analytic for both modes.
double mean_fragments_per_slot(const TrafficModel& model);

// Monte-Carlo mean fragments per slot (the brute-force cross-check used
// for Little's-law conversions).
double monte_carlo_mean_fragments(const TrafficModel& model, long long draws,
                                  std::uint64_t seed = 0xA11CEULL);

}  // namespace ulsched
