// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "ulsched/rng.hpp"

namespace ulsched {

double db_to_linear(double db);
double linear_to_db(double linear);

// Block-fading Rayleigh channel: |H|^2 is exponential with mean
// mean_gain_linear, quantized into equal-probability bins of the
// unit-mean exponential. Power-rate law is convex in the fragment count.
struct ChannelModel {
  double mean_gain_linear = 1.0;       // alpha, linear power ratio
  std::vector<double> bin_boundaries;  // ascending, linear
  std::vector<double> bin_states;      // representative gains, linear
  double max_power = 10.0;             // watts
  int fragment_bits = 2000;            // tau
  double bandwidth_slots = 2000.0;     // W_slot in bits; exponent is z*tau/W_slot

  int num_states() const { return static_cast<int>(bin_states.size()); }
  void validate() const;
};

// Equal-probability quantiles of the unit-mean exponential:
// boundaries b_k = -ln(1 - k/num_states). For num_states == 8 the
// representative states are the published 8-state set starting at -13 dB;
// otherwise bin lower edges with a floor state for the lowest bin.
std::pair<std::vector<double>, std::vector<double>> make_bins(int num_states);

ChannelModel make_channel(double mean_gain_db, double max_power,
                          int fragment_bits = 2000, double bandwidth_slots = 2000.0,
                          int num_states = 8);

// One exponential draw with mean alpha; consumes exactly one uniform.
double sample_gain(RngStream& rng, const ChannelModel& model);

// Bin index containing the gain; lower-inclusive, upper-exclusive.
int quantize(double gain, const ChannelModel& model);

// (1/x) * (2^{z*tau/W_slot} - 1) with W*N0 normalized to 1.
double power_required(double state_gain, int fragments, const ChannelModel& model);

// Largest z with power_required(x, z) <= max_power.
int max_rate(double state_gain, const ChannelModel& model);

// Probability of each bin under the model's own mean gain.
std::vector<double> bin_probabilities(const ChannelModel& model);

}  // namespace ulsched
