// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulsched/channel.hpp"
#include "ulsched/traffic.hpp"

namespace ulsched {

enum class Policy { kProposed, kSoftmax, kMlwdf, kRoundRobin };

Policy policy_from_string(const std::string& name);
std::string policy_to_string(Policy policy);

struct UserConfig {
  ChannelModel channel;
  TrafficModel traffic;
  double delay_target_slots = 100.0;
  // When > 0, used directly instead of converting delay_target_slots via
  // Little's law with the Monte-Carlo arrival rate.
  double delay_target_fragments = 0.0;
  // Cached mean fragments/slot; computed on demand when 0.
  double arrival_rate_fragments = 0.0;
  int group = 1;
};

struct SimConfig {
  std::vector<UserConfig> users;
  int bid_bits = 3;
  Policy policy = Policy::kProposed;
  long long horizon = 100000;
  long long burn_in = -1;  // -1: 20% of horizon
  std::uint64_t seed = 1;
  int q_max = 200;
  double multiplier_cap = 1000.0;
  double fast_exponent = 0.6;
  double slow_exponent = 0.9;
  double fast_scale = 1.0;
  double slow_scale = 1.0;
  // Count value-update steps per table entry instead of using the global
  // slot index; presets enable this because global counts learn far too
  // slowly for rarely visited states.
  bool per_state_stepsizes = false;
  double epsilon = 0.0;
  double softmax_sharpness = 20.0;
  double mlwdf_ema = 0.001;
  // Optional trace replay: arrival_trace[slot][user] fragment counts.
  std::vector<std::vector<int>> arrival_trace;

  int num_users() const { return static_cast<int>(users.size()); }
  long long effective_burn_in() const { return burn_in >= 0 ? burn_in : horizon / 5; }
  void validate() const;
};

struct UserMetrics {
  double avg_power_actual = 0.0;     // scheduled slots only
  double avg_power_effective = 0.0;  // every bid, scheduled or not
  double avg_queue = 0.0;
  double avg_delay_little = 0.0;     // slots, queue / empirical arrival rate
  double avg_delay_per_fragment = 0.0;  // slots, departure - arrival + 1
  double final_multiplier = 0.0;
  double share_of_slots = 0.0;
  long long drops = 0;
  double arrival_rate = 0.0;  // empirical accepted fragments/slot
  double delay_target_slots = 0.0;
  double delay_target_fragments = 0.0;
};

struct RunMetrics {
  std::vector<UserMetrics> users;
  double avg_max_bid = 0.0;
  long long measured_slots = 0;
};

// Fills in delay_target_fragments / arrival_rate_fragments where missing,
// using the Monte-Carlo mean fragment rate (Little's law conversion).
void resolve_delay_targets(SimConfig& config);

// Runs the full per-slot interleaving of the user learners and the base
// station policy. Deterministic in (config, seed). Optional per-slot trace
// CSV with columns slot,user,x,q,bid,scheduled,power,lambda.
RunMetrics run(const SimConfig& config, const std::string& trace_path = "");

// avg_queue / arrival_rate, slots.
double little_delay(double avg_queue, double arrival_rate);

struct StabilityReport {
  std::vector<double> per_user_arrival_rate;  // gamma^i, MC estimate
  double arrival_rate_sum = 0.0;
  double min_mean_max_rate = 0.0;  // R = min_i E[R-hat^i(x)]
  bool pass = false;
};

StabilityReport validate_stability(const SimConfig& config, long long draws = 1000000);

// Ratio lambda_final / lambda_star per user; NaN when lambda_star == 0.
std::vector<double> multi_user_penalty(const RunMetrics& metrics,
                                       const std::vector<double>& single_user_multipliers);

// Per-run summary CSV, one row per user. Fixed column set.
std::string metrics_csv_header();
std::string metrics_to_csv(const RunMetrics& metrics, const SimConfig& config);

}  // namespace ulsched
