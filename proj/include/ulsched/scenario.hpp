// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulsched/sim.hpp"

namespace ulsched {

enum class SweepParameter {
  kNone,
  kDelayTarget,   // slots, applied to the swept group
  kMeanGainDb,    // applied to the swept group
  kBidBits,       // global
  kPolicy,        // global, values come from Scenario::policies
  kMaxPower,      // global
};

struct Scenario {
  std::string name;
  SimConfig base;
  SweepParameter parameter = SweepParameter::kNone;
  std::vector<double> values;          // numeric sweeps
  std::vector<std::string> policies;   // policy sweep values
  int sweep_group = 0;                 // 0: all users
  std::vector<std::uint64_t> seeds{1};
  bool mlwdf_comparison = false;       // run the paired baseline protocol
};

struct ScenarioOptions {
  bool force = false;        // skip the stability gate
  bool trace = false;        // per-slot CSV per run
  bool per_run_csv = false;  // per-run summary CSVs in addition to the aggregate
};

// One aggregated row of the summary table: one per (sweep value, group).
struct SummaryRow {
  std::string scenario;
  std::string parameter;
  std::string value;
  int group = 0;
  int users = 0;
  int seeds = 0;
  std::string policy;
  double mean_power_actual = 0.0, se_power_actual = 0.0;
  double mean_power_effective = 0.0, se_power_effective = 0.0;
  double mean_delay = 0.0, se_delay = 0.0;       // per-fragment, slots
  double mean_queue = 0.0, se_queue = 0.0;
  double mean_multiplier = 0.0, se_multiplier = 0.0;
  double mean_share = 0.0;
  double mean_max_bid = 0.0;
  double delay_target_slots = 0.0;
  long long drops = 0;
};

struct ScenarioResult {
  std::vector<SummaryRow> rows;
  long long total_drops = 0;
  int failed_runs = 0;
  std::vector<std::string> errors;
};

Scenario scenario_from_json(const std::string& json_text);
Scenario scenario_from_file(const std::string& path);
std::string scenario_to_json(const Scenario& scenario);

std::vector<std::string> preset_names();
Scenario scenario_preset(const std::string& name);

// Executes |sweep| x |seeds| runs (in parallel), aggregates per swept value
// per user group, and when out_dir is non-empty writes summary.csv plus a
// provenance manifest. The aggregate is independent of seed order.
ScenarioResult run_scenario(const Scenario& scenario, const ScenarioOptions& options = {},
                            const std::string& out_dir = "");

std::string summary_csv(const ScenarioResult& result);

}  // namespace ulsched
