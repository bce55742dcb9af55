// SPDX-License-Identifier: Apache-2.0
#include "ulsched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ulsched {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

void ChannelModel::validate() const {
  if (mean_gain_linear <= 0.0) throw std::invalid_argument("mean_gain_linear must be > 0");
  if (max_power <= 0.0) throw std::invalid_argument("max_power must be > 0");
  if (fragment_bits <= 0) throw std::invalid_argument("fragment_bits must be > 0");
  if (bandwidth_slots <= 0.0) throw std::invalid_argument("bandwidth_slots must be > 0");
  if (bin_states.size() != bin_boundaries.size() + 1)
    throw std::invalid_argument("bin_states must have one more entry than bin_boundaries");
  for (std::size_t k = 0; k < bin_boundaries.size(); ++k) {
    if (bin_boundaries[k] <= 0.0) throw std::invalid_argument("bin boundaries must be positive");
    if (k > 0 && bin_boundaries[k] <= bin_boundaries[k - 1])
      throw std::invalid_argument("bin boundaries must be strictly increasing");
  }
}

namespace {
// Published representative states for the 8-bin discretization, in dB.
constexpr double kEightStateDb[8] = {-13.0, -8.47, -5.41, -3.28, -1.59, -0.08, 1.42, 3.18};
}  // namespace

std::pair<std::vector<double>, std::vector<double>> make_bins(int num_states) {
  if (num_states < 2) throw std::invalid_argument("num_states must be >= 2");
  std::vector<double> boundaries(num_states - 1);
  for (int k = 1; k < num_states; ++k)
    boundaries[k - 1] = -std::log(1.0 - static_cast<double>(k) / num_states);
  std::vector<double> states(num_states);
  if (num_states == 8) {
    for (int s = 0; s < 8; ++s) states[s] = db_to_linear(kEightStateDb[s]);
  } else {
    states[0] = boundaries[0] / 2.0;  // floor state for the lowest bin
    for (int s = 1; s < num_states; ++s) states[s] = boundaries[s - 1];
  }
  return {std::move(boundaries), std::move(states)};
}

ChannelModel make_channel(double mean_gain_db, double max_power, int fragment_bits,
                          double bandwidth_slots, int num_states) {
  ChannelModel model;
  model.mean_gain_linear = db_to_linear(mean_gain_db);
  auto [boundaries, states] = make_bins(num_states);
  model.bin_boundaries = std::move(boundaries);
  model.bin_states = std::move(states);
  model.max_power = max_power;
  model.fragment_bits = fragment_bits;
  model.bandwidth_slots = bandwidth_slots;
  model.validate();
  return model;
}

double sample_gain(RngStream& rng, const ChannelModel& model) {
  const double u = rng.next_uniform();
  return -model.mean_gain_linear * std::log1p(-u);
}

int quantize(double gain, const ChannelModel& model) {
  if (gain < 0.0) throw std::invalid_argument("gain must be >= 0");
  // Lower-inclusive bins: a gain at an exact boundary falls in the upper bin,
  // which is exactly what counting boundaries <= gain gives.
  const auto it = std::upper_bound(model.bin_boundaries.begin(), model.bin_boundaries.end(), gain);
  return static_cast<int>(it - model.bin_boundaries.begin());
}

double power_required(double state_gain, int fragments, const ChannelModel& model) {
  if (state_gain <= 0.0) throw std::invalid_argument("state_gain must be > 0");
  if (fragments < 0) throw std::invalid_argument("fragments must be >= 0");
  if (fragments == 0) return 0.0;
  const double exponent =
      static_cast<double>(fragments) * model.fragment_bits / model.bandwidth_slots;
  return (std::exp2(exponent) - 1.0) / state_gain;
}

int max_rate(double state_gain, const ChannelModel& model) {
  int z = 0;
  while (power_required(state_gain, z + 1, model) <= model.max_power) {
    ++z;
    if (z > 64) throw std::runtime_error("max_rate exceeds 64 fragments per slot");
  }
  return z;
}

std::vector<double> bin_probabilities(const ChannelModel& model) {
  const double alpha = model.mean_gain_linear;
  const int n = model.num_states();
  std::vector<double> probs(n);
  double prev_cdf = 0.0;
  for (int k = 0; k < n - 1; ++k) {
    const double cdf = 1.0 - std::exp(-model.bin_boundaries[k] / alpha);
    probs[k] = cdf - prev_cdf;
    prev_cdf = cdf;
  }
  probs[n - 1] = 1.0 - prev_cdf;
  return probs;
}

}  // namespace ulsched
