// SPDX-License-Identifier: Apache-2.0
#include "ulsched/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ulsched/version.hpp"

namespace ulsched {

namespace {

using nlohmann::json;

const char* sweep_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kNone: return "none";
    case SweepParameter::kDelayTarget: return "delay_target_slots";
    case SweepParameter::kMeanGainDb: return "mean_gain_db";
    case SweepParameter::kBidBits: return "bid_bits";
    case SweepParameter::kPolicy: return "policy";
    case SweepParameter::kMaxPower: return "max_power";
  }
  return "none";
}

SweepParameter sweep_from_name(const std::string& name) {
  for (SweepParameter p : {SweepParameter::kNone, SweepParameter::kDelayTarget,
                           SweepParameter::kMeanGainDb, SweepParameter::kBidBits,
                           SweepParameter::kPolicy, SweepParameter::kMaxPower})
    if (name == sweep_name(p)) return p;
  throw std::invalid_argument("unknown sweep parameter: " + name);
}

json user_group_to_json(const UserConfig& u, int count) {
  json g;
  g["count"] = count;
  g["group"] = u.group;
  g["mean_gain_db"] = linear_to_db(u.channel.mean_gain_linear);
  g["max_power"] = u.channel.max_power;
  g["fragment_bits"] = u.channel.fragment_bits;
  g["w_slot_bits"] = u.channel.bandwidth_slots;
  g["num_states"] = u.channel.num_states();
  if (!u.traffic.fragment_pmf.empty()) {
    g["fragment_pmf"] = u.traffic.fragment_pmf;
  } else {
    g["packet_rate"] = u.traffic.packet_rate;
    g["shape"] = u.traffic.shape;
    g["mode_bits"] = u.traffic.mode_bits;
    g["cutoff_bits"] = u.traffic.cutoff_bits;
  }
  if (u.delay_target_fragments > 0.0)
    g["delay_target_fragments"] = u.delay_target_fragments;
  else
    g["delay_target_slots"] = u.delay_target_slots;
  return g;
}

UserConfig user_from_json(const json& g) {
  UserConfig u;
  u.group = g.value("group", 1);
  const int num_states = g.value("num_states", 8);
  u.channel = make_channel(g.at("mean_gain_db").get<double>(), g.at("max_power").get<double>(),
                           g.value("fragment_bits", 2000), g.value("w_slot_bits", 2000.0),
                           num_states);
  if (g.contains("fragment_pmf")) {
    u.traffic.fragment_pmf = g.at("fragment_pmf").get<std::vector<double>>();
  } else {
    u.traffic.packet_rate = g.at("packet_rate").get<double>();
    u.traffic.shape = g.value("shape", 1.2);
    u.traffic.mode_bits = g.value("mode_bits", 2000);
    u.traffic.cutoff_bits = g.value("cutoff_bits", 10000);
  }
  u.traffic.fragment_bits = u.channel.fragment_bits;
  u.delay_target_slots = g.value("delay_target_slots", 0.0);
  u.delay_target_fragments = g.value("delay_target_fragments", 0.0);
  return u;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

}  // namespace

Scenario scenario_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  Scenario s;
  s.name = j.value("name", "scenario");
  SimConfig& c = s.base;
  c.policy = policy_from_string(j.value("policy", "proposed"));
  c.horizon = j.value("slots", 100000LL);
  c.burn_in = j.value("burn_in", -1LL);
  c.bid_bits = j.value("bid_bits", 3);
  c.q_max = j.value("q_max", 200);
  c.multiplier_cap = j.value("multiplier_cap", 1000.0);
  c.fast_exponent = j.value("fast_exponent", 0.6);
  c.slow_exponent = j.value("slow_exponent", 0.9);
  c.fast_scale = j.value("fast_scale", 1.0);
  c.slow_scale = j.value("slow_scale", 1.0);
  c.per_state_stepsizes = j.value("per_state_stepsizes", false);
  c.epsilon = j.value("epsilon", 0.0);
  c.softmax_sharpness = j.value("softmax_sharpness", 20.0);
  for (const json& g : j.at("groups")) {
    const UserConfig u = user_from_json(g);
    const int count = g.value("count", 1);
    for (int i = 0; i < count; ++i) c.users.push_back(u);
  }
  if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("sweep")) {
    const json& sw = j.at("sweep");
    s.parameter = sweep_from_name(sw.at("parameter").get<std::string>());
    if (s.parameter == SweepParameter::kPolicy)
      s.policies = sw.at("values").get<std::vector<std::string>>();
    else if (s.parameter != SweepParameter::kNone)
      s.values = sw.at("values").get<std::vector<double>>();
    s.sweep_group = sw.value("group", 0);
  }
  s.mlwdf_comparison = j.value("mlwdf_comparison", false);
  if (s.mlwdf_comparison && s.parameter != SweepParameter::kMaxPower)
    throw std::invalid_argument("mlwdf_comparison requires a max_power sweep");
  return s;
}

Scenario scenario_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["policy"] = policy_to_string(s.base.policy);
  j["slots"] = s.base.horizon;
  j["burn_in"] = s.base.burn_in;
  j["bid_bits"] = s.base.bid_bits;
  j["q_max"] = s.base.q_max;
  j["multiplier_cap"] = s.base.multiplier_cap;
  j["fast_exponent"] = s.base.fast_exponent;
  j["slow_exponent"] = s.base.slow_exponent;
  j["fast_scale"] = s.base.fast_scale;
  j["slow_scale"] = s.base.slow_scale;
  j["per_state_stepsizes"] = s.base.per_state_stepsizes;
  j["epsilon"] = s.base.epsilon;
  j["softmax_sharpness"] = s.base.softmax_sharpness;
  j["seeds"] = s.seeds;
  j["mlwdf_comparison"] = s.mlwdf_comparison;
  // Adjacent identical users collapse back into groups.
  json groups = json::array();
  std::size_t i = 0;
  while (i < s.base.users.size()) {
    std::size_t run_end = i + 1;
    const json gi = user_group_to_json(s.base.users[i], 1);
    while (run_end < s.base.users.size() &&
           user_group_to_json(s.base.users[run_end], 1) == gi)
      ++run_end;
    groups.push_back(user_group_to_json(s.base.users[i], static_cast<int>(run_end - i)));
    i = run_end;
  }
  j["groups"] = groups;
  if (s.parameter != SweepParameter::kNone) {
    json sw;
    sw["parameter"] = sweep_name(s.parameter);
    if (s.parameter == SweepParameter::kPolicy)
      sw["values"] = s.policies;
    else
      sw["values"] = s.values;
    sw["group"] = s.sweep_group;
    j["sweep"] = sw;
  }
  return j.dump(2);
}

namespace {

SimConfig apply_sweep(const Scenario& s, std::size_t value_index) {
  SimConfig config = s.base;
  auto in_group = [&](const UserConfig& u) {
    return s.sweep_group == 0 || u.group == s.sweep_group;
  };
  switch (s.parameter) {
    case SweepParameter::kNone:
      break;
    case SweepParameter::kDelayTarget:
      for (UserConfig& u : config.users)
        if (in_group(u)) {
          u.delay_target_slots = s.values[value_index];
          u.delay_target_fragments = 0.0;
        }
      break;
    case SweepParameter::kMeanGainDb:
      for (UserConfig& u : config.users)
        if (in_group(u)) u.channel.mean_gain_linear = db_to_linear(s.values[value_index]);
      break;
    case SweepParameter::kBidBits:
      config.bid_bits = static_cast<int>(s.values[value_index]);
      break;
    case SweepParameter::kPolicy:
      config.policy = policy_from_string(s.policies[value_index]);
      break;
    case SweepParameter::kMaxPower:
      for (UserConfig& u : config.users) u.channel.max_power = s.values[value_index];
      break;
  }
  return config;
}

std::string sweep_value_label(const Scenario& s, std::size_t value_index) {
  if (s.parameter == SweepParameter::kNone) return "";
  if (s.parameter == SweepParameter::kPolicy) return s.policies[value_index];
  return format_double(s.values[value_index]);
}

std::size_t sweep_size(const Scenario& s) {
  if (s.parameter == SweepParameter::kNone) return 1;
  if (s.parameter == SweepParameter::kPolicy) return s.policies.size();
  return s.values.size();
}

struct RunTask {
  SimConfig config;
  std::size_t value_index;
  std::size_t seed_index;
};

// Runs all tasks on a bounded pool; exceptions are captured per task.
void run_all(std::vector<RunTask>& tasks, std::vector<RunMetrics>& results,
             std::vector<std::string>& errors, const ScenarioOptions& options,
             const std::string& out_dir, const std::string& scenario_name) {
  results.resize(tasks.size());
  errors.assign(tasks.size(), "");
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::max(1u, std::min<unsigned>(
      std::thread::hardware_concurrency(), static_cast<unsigned>(tasks.size())));
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        std::string trace_path;
        if (options.trace && !out_dir.empty()) {
          trace_path = out_dir + "/" + scenario_name + "_v" +
                       std::to_string(tasks[i].value_index) + "_s" +
                       std::to_string(tasks[i].seed_index) + "_trace.csv";
        }
        results[i] = run(tasks[i].config, trace_path);
        if (options.per_run_csv && !out_dir.empty()) {
          std::ofstream out(out_dir + "/" + scenario_name + "_v" +
                            std::to_string(tasks[i].value_index) + "_s" +
                            std::to_string(tasks[i].seed_index) + ".csv");
          out << metrics_to_csv(results[i], tasks[i].config);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

// Order-independent reduction: values are sorted before accumulation so a
// permuted seed list yields bit-identical statistics.
Moments reduce(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Moments m;
  const std::size_t n = values.size();
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
  return m;
}

// Aggregates one (value, policy) block of per-seed metrics into group rows.
void aggregate_rows(const Scenario& s, const SimConfig& config,
                    const std::vector<const RunMetrics*>& runs, const std::string& value_label,
                    ScenarioResult& result) {
  std::map<int, std::vector<std::size_t>> group_users;
  for (std::size_t u = 0; u < config.users.size(); ++u)
    group_users[config.users[u].group].push_back(u);
  for (const auto& [group, users] : group_users) {
    SummaryRow row;
    row.scenario = s.name;
    row.parameter = sweep_name(s.parameter);
    row.value = value_label;
    row.group = group;
    row.users = static_cast<int>(users.size());
    row.seeds = static_cast<int>(runs.size());
    row.policy = policy_to_string(config.policy);
    row.delay_target_slots = config.users[users.front()].delay_target_slots;
    auto per_seed = [&](auto metric) {
      std::vector<double> v;
      v.reserve(runs.size());
      for (const RunMetrics* r : runs) {
        double sum = 0.0;
        for (std::size_t u : users) sum += metric(r->users[u]);
        v.push_back(sum / static_cast<double>(users.size()));
      }
      return reduce(std::move(v));
    };
    Moments m;
    m = per_seed([](const UserMetrics& u) { return u.avg_power_actual; });
    row.mean_power_actual = m.mean;
    row.se_power_actual = m.se;
    m = per_seed([](const UserMetrics& u) { return u.avg_power_effective; });
    row.mean_power_effective = m.mean;
    row.se_power_effective = m.se;
    m = per_seed([](const UserMetrics& u) { return u.avg_delay_per_fragment; });
    row.mean_delay = m.mean;
    row.se_delay = m.se;
    m = per_seed([](const UserMetrics& u) { return u.avg_queue; });
    row.mean_queue = m.mean;
    row.se_queue = m.se;
    m = per_seed([](const UserMetrics& u) { return u.final_multiplier; });
    row.mean_multiplier = m.mean;
    row.se_multiplier = m.se;
    row.mean_share = per_seed([](const UserMetrics& u) { return u.share_of_slots; }).mean;
    {
      std::vector<double> v;
      for (const RunMetrics* r : runs) v.push_back(r->avg_max_bid);
      row.mean_max_bid = reduce(std::move(v)).mean;
    }
    for (const RunMetrics* r : runs)
      for (std::size_t u : users) row.drops += r->users[u].drops;
    result.total_drops += row.drops;
    result.rows.push_back(std::move(row));
  }
}

}  // namespace

ScenarioResult run_scenario(const Scenario& scenario, const ScenarioOptions& options,
                            const std::string& out_dir) {
  const std::size_t values = sweep_size(scenario);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  // Build every config up front; reject the whole scenario before any run
  // if one is invalid or (unless forced) unstable.
  std::vector<SimConfig> configs(values);
  for (std::size_t v = 0; v < values; ++v) {
    configs[v] = apply_sweep(scenario, v);
    configs[v].validate();
    resolve_delay_targets(configs[v]);
    if (!options.force) {
      const StabilityReport report = validate_stability(configs[v]);
      if (!report.pass) {
        std::ostringstream msg;
        msg << "stability check failed for sweep value " << sweep_value_label(scenario, v)
            << ": sum arrival rate " << report.arrival_rate_sum << " >= min mean max rate "
            << report.min_mean_max_rate << " (use force to override)";
        throw std::runtime_error(msg.str());
      }
    }
  }

  ScenarioResult result;
  const std::size_t seeds = scenario.seeds.size();

  auto run_block = [&](const std::vector<SimConfig>& block_configs, const char* tag) {
    std::vector<RunTask> tasks;
    for (std::size_t v = 0; v < block_configs.size(); ++v)
      for (std::size_t si = 0; si < seeds; ++si) {
        RunTask task{block_configs[v], v, si};
        task.config.seed = scenario.seeds[si];
        tasks.push_back(std::move(task));
      }
    std::vector<RunMetrics> metrics;
    std::vector<std::string> errors;
    run_all(tasks, metrics, errors, options, out_dir, scenario.name + tag);
    for (std::size_t i = 0; i < errors.size(); ++i)
      if (!errors[i].empty()) {
        ++result.failed_runs;
        result.errors.push_back(errors[i]);
      }
    return metrics;
  };

  if (scenario.mlwdf_comparison) {
    // Phase 1: the baseline at each max power.
    std::vector<SimConfig> baseline_configs = configs;
    for (SimConfig& c : baseline_configs) c.policy = Policy::kMlwdf;
    std::vector<RunMetrics> baseline = run_block(baseline_configs, "_mlwdf");
    if (result.failed_runs > 0) return result;

    // Phase 2: feed the baseline's achieved delays back as targets.
    std::vector<SimConfig> proposed_configs = configs;
    for (std::size_t v = 0; v < values; ++v) {
      proposed_configs[v].policy = Policy::kProposed;
      for (std::size_t u = 0; u < proposed_configs[v].users.size(); ++u) {
        double mean_delay = 0.0;
        for (std::size_t si = 0; si < seeds; ++si)
          mean_delay += baseline[v * seeds + si].users[u].avg_delay_per_fragment;
        mean_delay /= static_cast<double>(seeds);
        proposed_configs[v].users[u].delay_target_slots = mean_delay;
        proposed_configs[v].users[u].delay_target_fragments = 0.0;
      }
      resolve_delay_targets(proposed_configs[v]);
    }
    std::vector<RunMetrics> proposed = run_block(proposed_configs, "_proposed");
    for (std::size_t v = 0; v < values; ++v) {
      std::vector<const RunMetrics*> base_runs, prop_runs;
      for (std::size_t si = 0; si < seeds; ++si) {
        base_runs.push_back(&baseline[v * seeds + si]);
        prop_runs.push_back(&proposed[v * seeds + si]);
      }
      aggregate_rows(scenario, baseline_configs[v], base_runs,
                     sweep_value_label(scenario, v), result);
      aggregate_rows(scenario, proposed_configs[v], prop_runs,
                     sweep_value_label(scenario, v), result);
    }
  } else {
    std::vector<RunMetrics> metrics = run_block(configs, "");
    for (std::size_t v = 0; v < values; ++v) {
      std::vector<const RunMetrics*> runs;
      for (std::size_t si = 0; si < seeds; ++si) runs.push_back(&metrics[v * seeds + si]);
      aggregate_rows(scenario, configs[v], runs, sweep_value_label(scenario, v), result);
    }
  }

  if (!out_dir.empty()) {
    {
      std::ofstream out(out_dir + "/summary.csv");
      out << summary_csv(result);
    }
    const std::string canonical = scenario_to_json(scenario);
    json manifest;
    manifest["name"] = scenario.name;
    manifest["config_hash"] = fnv1a(canonical);
    manifest["seeds"] = scenario.seeds;
    manifest["version"] = kVersion;
    manifest["rows"] = result.rows.size();
    manifest["failed_runs"] = result.failed_runs;
    manifest["total_drops"] = result.total_drops;
    std::ofstream out(out_dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
  }
  return result;
}

std::string summary_csv(const ScenarioResult& result) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "scenario,parameter,value,policy,group,users,seeds,mean_power_actual,"
         "se_power_actual,mean_power_effective,se_power_effective,mean_delay,se_delay,"
         "mean_queue,se_queue,mean_multiplier,se_multiplier,mean_share,mean_max_bid,"
         "delay_target_slots,drops\n";
  for (const SummaryRow& r : result.rows) {
    out << r.scenario << ',' << r.parameter << ',' << r.value << ',' << r.policy << ','
        << r.group << ',' << r.users << ',' << r.seeds << ',' << r.mean_power_actual << ','
        << r.se_power_actual << ',' << r.mean_power_effective << ',' << r.se_power_effective
        << ',' << r.mean_delay << ',' << r.se_delay << ',' << r.mean_queue << ',' << r.se_queue
        << ',' << r.mean_multiplier << ',' << r.se_multiplier << ',' << r.mean_share << ','
        << r.mean_max_bid << ',' << r.delay_target_slots << ',' << r.drops << '\n';
  }
  return out.str();
}

std::vector<std::string> preset_names() {
  return {"delay-sweep-desk", "delay-sweep-paper", "gain-sweep-desk", "gain-sweep-paper",
          "mlwdf-desk",       "mlwdf-paper",       "bits-desk",       "bits-paper",
          "oracle-single-desk", "oracle-single-paper"};
}

namespace {

UserConfig preset_user(double gain_db, double max_power, double packet_rate,
                       double delay_target_slots, int group) {
  UserConfig u;
  u.channel = make_channel(gain_db, max_power);
  u.traffic.packet_rate = packet_rate;
  u.delay_target_slots = delay_target_slots;
  u.group = group;
  return u;
}

std::vector<std::uint64_t> seed_list(int count) {
  std::vector<std::uint64_t> seeds(count);
  for (int i = 0; i < count; ++i) seeds[i] = static_cast<std::uint64_t>(i + 1);
  return seeds;
}

}  // namespace

Scenario scenario_preset(const std::string& name) {
  const bool desk = name.ends_with("-desk");
  const bool paper = name.ends_with("-paper");
  if (!desk && !paper) throw std::invalid_argument("unknown preset: " + name);
  const int group_size = desk ? 2 : 10;
  const long long slots = desk ? 200000 : 100000;
  const int num_seeds = desk ? 5 : 20;

  Scenario s;
  s.name = name;
  s.base.horizon = slots;
  s.base.per_state_stepsizes = true;
  s.seeds = seed_list(num_seeds);

  if (name.starts_with("delay-sweep")) {
    // Group 1 pinned at 100 slots, group 2 swept across the target list.
    const double max_power = desk ? 12.0 : 300.0;
    for (int i = 0; i < group_size; ++i)
      s.base.users.push_back(preset_user(-3.28, max_power, 0.1, 100.0, 1));
    for (int i = 0; i < group_size; ++i)
      s.base.users.push_back(preset_user(-3.28, max_power, 0.1, 100.0, 2));
    s.parameter = SweepParameter::kDelayTarget;
    s.values = {25, 50, 75, 100, 125, 150, 175};
    s.sweep_group = 2;
    return s;
  }
  if (name.starts_with("gain-sweep")) {
    const double max_power = desk ? 60.0 : 1500.0;
    for (int i = 0; i < group_size; ++i)
      s.base.users.push_back(preset_user(-3.28, max_power, 0.1, 100.0, 1));
    for (int i = 0; i < group_size; ++i)
      s.base.users.push_back(preset_user(-3.28, max_power, 0.1, 100.0, 2));
    s.parameter = SweepParameter::kMeanGainDb;
    s.values = {-13.0, -8.47, -5.41, -3.28, -1.59, -0.08, 1.42};
    s.sweep_group = 2;
    return s;
  }
  if (name.starts_with("mlwdf")) {
    // Paired-protocol comparison over the max-power sweep.
    for (int i = 0; i < 2 * group_size; ++i)
      s.base.users.push_back(preset_user(-3.28, 10.0, 0.07, 100.0, 1));
    s.parameter = SweepParameter::kMaxPower;
    s.values = desk ? std::vector<double>{6, 8, 10, 12} : std::vector<double>{80, 100, 120, 140};
    s.mlwdf_comparison = true;
    return s;
  }
  if (name.starts_with("bits")) {
    const double max_power = desk ? 12.0 : 300.0;
    for (int i = 0; i < 2 * group_size; ++i)
      s.base.users.push_back(preset_user(-3.28, max_power, 0.1, 100.0, 1));
    s.parameter = SweepParameter::kBidBits;
    s.values = {2, 3, 4};
    return s;
  }
  if (name.starts_with("oracle-single")) {
    // Tiny known-pmf instance whose exact CMDP solution is computable.
    UserConfig u;
    u.channel = make_channel(0.0, 20.0, 2000, 2000.0, 4);
    u.traffic.fragment_pmf = {0.5, 0.3, 0.2};
    u.delay_target_fragments = 4.0;
    u.delay_target_slots = 0.0;
    u.group = 1;
    s.base.users.push_back(u);
    s.base.q_max = 20;
    s.base.horizon = 500000;
    s.seeds = seed_list(desk ? 3 : 10);
    return s;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace ulsched
