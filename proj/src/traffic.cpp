// SPDX-License-Identifier: Apache-2.0
#include "ulsched/traffic.hpp"

#include <cmath>
#include <stdexcept>

namespace ulsched {

void TrafficModel::validate() const {
  if (fragment_bits <= 0) throw std::invalid_argument("fragment_bits must be > 0");
  if (!fragment_pmf.empty()) {
    double sum = 0.0;
    for (double p : fragment_pmf) {
      if (p < 0.0) throw std::invalid_argument("fragment_pmf entries must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("fragment_pmf must sum to 1");
    return;
  }
  if (packet_rate < 0.0) throw std::invalid_argument("packet_rate must be >= 0");
  if (shape <= 1.0) throw std::invalid_argument("shape must be > 1");
  if (mode_bits <= 0 || cutoff_bits <= mode_bits)
    throw std::invalid_argument("need 0 < mode_bits < cutoff_bits");
}

namespace {

// CDF of the renormalized truncated Pareto on [nu, g).
double size_cdf(double y, const TrafficModel& m) {
  const double nu = m.mode_bits, g = m.cutoff_bits, xi = m.shape;
  if (y <= nu) return 0.0;
  if (y >= g) return 1.0;
  const double norm = 1.0 - std::pow(nu / g, xi);
  return (1.0 - std::pow(nu / y, xi)) / norm;
}

int sample_poisson(RngStream& rng, double rate) {
  // Inverse-CDF walk; consumes exactly one uniform. Rates here are small.
  const double u = rng.next_uniform();
  double p = std::exp(-rate);
  double cum = p;
  int k = 0;
  while (u >= cum && k < 1000) {
    ++k;
    p *= rate / k;
    cum += p;
  }
  return k;
}

}  // namespace

int sample_packet_size(RngStream& rng, const TrafficModel& model) {
  const double nu = model.mode_bits, g = model.cutoff_bits, xi = model.shape;
  const double u = rng.next_uniform();
  const double y = nu * std::pow(1.0 - u * (1.0 - std::pow(nu / g, xi)), -1.0 / xi);
  return static_cast<int>(std::llround(y));
}

int fragment(long long bits, int fragment_bits) {
  if (bits < 0) throw std::invalid_argument("bits must be >= 0");
  return static_cast<int>((bits + fragment_bits - 1) / fragment_bits);
}

FragmentBatch arrivals(RngStream& rng, const TrafficModel& model, long long slot) {
  FragmentBatch batch;
  batch.arrival_slot = slot;
  if (!model.fragment_pmf.empty()) {
    const double u = rng.next_uniform();
    double cum = 0.0;
    for (std::size_t j = 0; j < model.fragment_pmf.size(); ++j) {
      cum += model.fragment_pmf[j];
      if (u < cum) {
        batch.count = static_cast<int>(j);
        return batch;
      }
    }
    batch.count = static_cast<int>(model.fragment_pmf.size()) - 1;
    return batch;
  }
  const int packets = sample_poisson(rng, model.packet_rate);
  for (int p = 0; p < packets; ++p)
    batch.count += fragment(sample_packet_size(rng, model), model.fragment_bits);
  return batch;
}

double mean_packet_bits(const TrafficModel& model) {
  const double nu = model.mode_bits, g = model.cutoff_bits, xi = model.shape;
  const double norm = 1.0 - std::pow(nu / g, xi);
  return xi / (xi - 1.0) * (nu - g * std::pow(nu / g, xi)) / norm;
}

std::vector<double> fragments_per_packet_pmf(const TrafficModel& model) {
  const int tau = model.fragment_bits;
  const int max_frag = fragment(model.cutoff_bits, tau);
  std::vector<double> pmf(max_frag + 1, 0.0);
  for (int j = 1; j <= max_frag; ++j) {
    const double lo = static_cast<double>(j - 1) * tau;
    const double hi = static_cast<double>(j) * tau;
    pmf[j] = size_cdf(hi, model) - size_cdf(lo, model);
  }
  // Mass at exactly nu (the u = 0 boundary) is zero for the continuous
  // density; assign any residual to the lowest reachable count.
  double sum = 0.0;
  for (double p : pmf) sum += p;
  pmf[fragment(model.mode_bits, tau)] += 1.0 - sum;
  return pmf;
}

std::vector<double> fragments_per_slot_pmf(const TrafficModel& model, double tail_tol) {
  if (!model.fragment_pmf.empty()) return model.fragment_pmf;
  const std::vector<double> per_packet = fragments_per_packet_pmf(model);
  const double rate = model.packet_rate;

  std::vector<double> result{1.0};           // running compound pmf
  std::vector<double> conv_k{1.0};           // per_packet convolved k times
  double pois = std::exp(-rate);             // Poisson(k = 0)
  result[0] = pois;
  double covered = pois;
  for (int k = 1; covered < 1.0 - tail_tol && k < 200; ++k) {
    std::vector<double> next(conv_k.size() + per_packet.size() - 1, 0.0);
    for (std::size_t a = 0; a < conv_k.size(); ++a)
      for (std::size_t b = 0; b < per_packet.size(); ++b)
        next[a + b] += conv_k[a] * per_packet[b];
    conv_k = std::move(next);
    pois *= rate / k;
    covered += pois;
    if (result.size() < conv_k.size()) result.resize(conv_k.size(), 0.0);
    for (std::size_t j = 0; j < conv_k.size(); ++j) result[j] += pois * conv_k[j];
  }
  // Trim negligible tail and renormalize.
  std::size_t last = result.size();
  double sum = 0.0;
  for (double p : result) sum += p;
  while (last > 1 && result[last - 1] / sum < tail_tol) --last;
  result.resize(last);
  sum = 0.0;
  for (double p : result) sum += p;
  for (double& p : result) p /= sum;
  return result;
}

double mean_fragments_per_slot(const TrafficModel& model) {
  if (!model.fragment_pmf.empty()) {
    double mean = 0.0;
    for (std::size_t j = 0; j < model.fragment_pmf.size(); ++j)
      mean += static_cast<double>(j) * model.fragment_pmf[j];
    return mean;
  }
  const std::vector<double> per_packet = fragments_per_packet_pmf(model);
  double mean = 0.0;
  for (std::size_t j = 0; j < per_packet.size(); ++j)
    mean += static_cast<double>(j) * per_packet[j];
  return model.packet_rate * mean;
}

double monte_carlo_mean_fragments(const TrafficModel& model, long long draws,
                                  std::uint64_t seed) {
  RngStream rng(seed);
  double total = 0.0;
  for (long long i = 0; i < draws; ++i) total += arrivals(rng, model, i).count;
  return total / static_cast<double>(draws);
}

}  // namespace ulsched
