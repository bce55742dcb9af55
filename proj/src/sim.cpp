// SPDX-License-Identifier: Apache-2.0
#include "ulsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ulsched/learner.hpp"
#include "ulsched/scheduler.hpp"

namespace ulsched {

Policy policy_from_string(const std::string& name) {
  if (name == "proposed") return Policy::kProposed;
  if (name == "softmax") return Policy::kSoftmax;
  if (name == "mlwdf") return Policy::kMlwdf;
  if (name == "roundrobin") return Policy::kRoundRobin;
  throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_to_string(Policy policy) {
  switch (policy) {
    case Policy::kProposed: return "proposed";
    case Policy::kSoftmax: return "softmax";
    case Policy::kMlwdf: return "mlwdf";
    case Policy::kRoundRobin: return "roundrobin";
  }
  return "unknown";
}

void SimConfig::validate() const {
  if (users.empty()) throw std::invalid_argument("need at least one user");
  if (horizon <= 0) throw std::invalid_argument("horizon must be > 0");
  if (effective_burn_in() < 0 || effective_burn_in() >= horizon)
    throw std::invalid_argument("need horizon > burn_in >= 0");
  if (bid_bits < 1) throw std::invalid_argument("bid_bits must be >= 1");
  if (q_max <= 0) throw std::invalid_argument("q_max must be > 0");
  if (multiplier_cap <= 0.0) throw std::invalid_argument("multiplier_cap must be > 0");
  if (fast_scale <= 0.0 || slow_scale <= 0.0)
    throw std::invalid_argument("stepsize scales must be > 0");
  for (const UserConfig& u : users) {
    u.channel.validate();
    u.traffic.validate();
    if (u.delay_target_slots <= 0.0 && u.delay_target_fragments <= 0.0)
      throw std::invalid_argument("each user needs a positive delay target");
  }
  if (!arrival_trace.empty()) {
    if (arrival_trace.size() < static_cast<std::size_t>(horizon))
      throw std::invalid_argument("arrival trace shorter than horizon");
    for (const auto& row : arrival_trace)
      if (row.size() != users.size())
        throw std::invalid_argument("arrival trace row width != num users");
  }
}

void resolve_delay_targets(SimConfig& config) {
  for (UserConfig& u : config.users) {
    if (u.arrival_rate_fragments <= 0.0)
      u.arrival_rate_fragments = monte_carlo_mean_fragments(u.traffic, 1000000);
    if (u.delay_target_fragments <= 0.0)
      u.delay_target_fragments = u.arrival_rate_fragments * u.delay_target_slots;
    if (u.delay_target_slots <= 0.0)
      u.delay_target_slots = u.delay_target_fragments / u.arrival_rate_fragments;
  }
}

double little_delay(double avg_queue, double arrival_rate) {
  if (arrival_rate <= 0.0) throw std::invalid_argument("arrival rate must be > 0");
  return avg_queue / arrival_rate;
}

RunMetrics run(const SimConfig& config_in, const std::string& trace_path) {
  SimConfig config = config_in;
  config.validate();
  resolve_delay_targets(config);
  const int n = config.num_users();
  const long long burn_in = config.effective_burn_in();
  const bool learner_policy =
      config.policy == Policy::kProposed || config.policy == Policy::kSoftmax;

  RngStream rng(config.seed);
  std::vector<Learner> learners;
  learners.reserve(n);
  for (int i = 0; i < n; ++i) {
    LearnerConfig lc;
    lc.q_max = config.q_max;
    lc.multiplier_cap = config.multiplier_cap;
    lc.delay_target_queue = config.users[i].delay_target_fragments;
    lc.bid_bits = config.bid_bits;
    lc.stepsizes = stepsize_defaults(config.fast_exponent, config.slow_exponent,
                                     config.fast_scale, config.slow_scale);
    lc.per_state_stepsizes = config.per_state_stepsizes;
    lc.epsilon = config.epsilon;
    learners.emplace_back(config.users[i].channel, lc);
  }

  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw std::runtime_error("cannot open trace file " + trace_path);
    trace << "slot,user,x,q,bid,scheduled,power,lambda\n";
  }

  // FIFO fragment queues carry arrival slots for exact delay measurement.
  std::vector<std::deque<long long>> queues(n);
  std::vector<int> post_queue(n, 0);
  std::vector<double> mlwdf_avg_rate(n, 1.0);

  std::vector<int> state(n), accepted(n), queue_len(n), rates(n);
  std::vector<double> gains(n);
  std::vector<UserMetrics> acc(n);
  std::vector<double> sum_actual(n, 0.0), sum_effective(n, 0.0), sum_queue(n, 0.0);
  std::vector<double> sum_delay(n, 0.0);
  std::vector<long long> departed(n, 0), arrived(n, 0), scheduled_slots(n, 0);
  double sum_max_bid = 0.0;

  for (long long t = 1; t <= config.horizon; ++t) {
    const bool measure = t > burn_in;

    // (1) channel draws, users in order
    for (int i = 0; i < n; ++i) {
      gains[i] = sample_gain(rng, config.users[i].channel);
      state[i] = quantize(gains[i], config.users[i].channel);
    }

    // (2) arrivals, queue cap, drop counting
    for (int i = 0; i < n; ++i) {
      int a;
      if (!config.arrival_trace.empty()) {
        a = config.arrival_trace[static_cast<std::size_t>(t - 1)][i];
      } else {
        a = arrivals(rng, config.users[i].traffic, t).count;
      }
      const int room = config.q_max - post_queue[i];
      const int take = std::min(a, room);
      acc[i].drops += a - take;
      accepted[i] = take;
      queue_len[i] = post_queue[i] + take;
      for (int f = 0; f < take; ++f) queues[i].push_back(t);
      if (measure) arrived[i] += take;
    }

    // (3) per-user rates / bids
    if (learner_policy) {
      for (int i = 0; i < n; ++i) {
        const int r = learners[i].choose_rate(accepted[i], state[i], &rng);
        rates[i] = quantize_bid(r, config.bid_bits);
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const double x = config.users[i].channel.bin_states[state[i]];
        rates[i] = std::min(max_rate(x, config.users[i].channel), queue_len[i]);
      }
    }

    // (4) base station selection
    int scheduled;
    switch (config.policy) {
      case Policy::kProposed:
        scheduled = select_highest_rate({rates}, rng).scheduled_user;
        break;
      case Policy::kSoftmax:
        scheduled = select_softmax({rates}, config.softmax_sharpness, rng).scheduled_user;
        break;
      case Policy::kMlwdf: {
        std::vector<double> hol(n), targets(n);
        for (int i = 0; i < n; ++i) {
          hol[i] = queues[i].empty() ? 0.0 : static_cast<double>(t - queues[i].front() + 1);
          targets[i] = config.users[i].delay_target_slots;
        }
        scheduled = select_mlwdf(hol, rates, targets, mlwdf_avg_rate, rng).scheduled_user;
        break;
      }
      case Policy::kRoundRobin:
        scheduled = static_cast<int>((t - 1) % n);
        break;
    }

    // (5) transmission, power accrual, FIFO departures
    double max_bid = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = config.users[i].channel.bin_states[state[i]];
      const double p = power_required(x, rates[i], config.users[i].channel);
      const bool won = i == scheduled;
      if (measure) {
        sum_effective[i] += p;
        if (won) {
          sum_actual[i] += p;
          ++scheduled_slots[i];
        }
        max_bid = std::max(max_bid, static_cast<double>(rates[i]));
      }
      if (won) {
        for (int f = 0; f < rates[i]; ++f) {
          const long long arr = queues[i].front();
          queues[i].pop_front();
          if (measure) {
            sum_delay[i] += static_cast<double>(t - arr + 1);
            ++departed[i];
          }
        }
      }
      if (trace.is_open()) {
        trace << t << ',' << i << ',' << state[i] << ',' << queue_len[i] << ',' << rates[i]
              << ',' << (won ? 1 : 0) << ',' << (won ? p : 0.0) << ','
              << (learner_policy ? learners[i].multiplier() : 0.0) << '\n';
      }
    }
    if (measure) sum_max_bid += max_bid;

    // (6) learner updates every slot regardless of scheduling
    if (learner_policy) {
      for (int i = 0; i < n; ++i) {
        learners[i].update_value(accepted[i], state[i], rates[i]);
        learners[i].update_multiplier(queue_len[i]);
      }
    } else if (config.policy == Policy::kMlwdf) {
      for (int i = 0; i < n; ++i) {
        const double granted = i == scheduled ? rates[i] : 0.0;
        mlwdf_avg_rate[i] =
            (1.0 - config.mlwdf_ema) * mlwdf_avg_rate[i] + config.mlwdf_ema * granted;
        mlwdf_avg_rate[i] = std::max(mlwdf_avg_rate[i], 1e-6);
      }
    }

    // (7) post-decision advance
    for (int i = 0; i < n; ++i) {
      post_queue[i] = queue_len[i] - (i == scheduled ? rates[i] : 0);
      if (measure) sum_queue[i] += queue_len[i];
      if (learner_policy) learners[i].advance(post_queue[i], state[i]);
    }
  }

  RunMetrics metrics;
  const long long m = config.horizon - burn_in;
  metrics.measured_slots = m;
  metrics.avg_max_bid = sum_max_bid / m;
  metrics.users.resize(n);
  for (int i = 0; i < n; ++i) {
    UserMetrics& u = metrics.users[i];
    u.drops = acc[i].drops;
    u.avg_power_actual = sum_actual[i] / m;
    u.avg_power_effective = sum_effective[i] / m;
    u.avg_queue = sum_queue[i] / m;
    u.arrival_rate = static_cast<double>(arrived[i]) / m;
    u.avg_delay_little = u.arrival_rate > 0.0 ? u.avg_queue / u.arrival_rate : 0.0;
    u.avg_delay_per_fragment = departed[i] > 0 ? sum_delay[i] / departed[i] : 0.0;
    u.final_multiplier = learner_policy ? learners[i].multiplier() : 0.0;
    u.share_of_slots = static_cast<double>(scheduled_slots[i]) / m;
    u.delay_target_slots = config.users[i].delay_target_slots;
    u.delay_target_fragments = config.users[i].delay_target_fragments;
  }
  return metrics;
}

StabilityReport validate_stability(const SimConfig& config, long long draws) {
  config.validate();
  StabilityReport report;
  report.min_mean_max_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < config.users.size(); ++i) {
    const UserConfig& u = config.users[i];
    const double gamma = monte_carlo_mean_fragments(u.traffic, draws);
    report.per_user_arrival_rate.push_back(gamma);
    report.arrival_rate_sum += gamma;
    const std::vector<double> pi = bin_probabilities(u.channel);
    double mean_max_rate = 0.0;
    for (int x = 0; x < u.channel.num_states(); ++x)
      mean_max_rate += pi[x] * max_rate(u.channel.bin_states[x], u.channel);
    report.min_mean_max_rate = std::min(report.min_mean_max_rate, mean_max_rate);
  }
  report.pass = report.arrival_rate_sum < report.min_mean_max_rate;
  return report;
}

std::vector<double> multi_user_penalty(const RunMetrics& metrics,
                                       const std::vector<double>& single_user_multipliers) {
  if (single_user_multipliers.size() != metrics.users.size())
    throw std::invalid_argument("need one reference multiplier per user");
  std::vector<double> ratios(metrics.users.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    ratios[i] = single_user_multipliers[i] == 0.0
                    ? std::numeric_limits<double>::quiet_NaN()
                    : metrics.users[i].final_multiplier / single_user_multipliers[i];
  }
  return ratios;
}

std::string metrics_csv_header() {
  return "user,group,policy,avg_power_actual,avg_power_effective,avg_queue,"
         "avg_delay_little,avg_delay_per_fragment,final_multiplier,share_of_slots,"
         "drops,arrival_rate,delay_target_slots,delay_target_fragments,avg_max_bid";
}

std::string metrics_to_csv(const RunMetrics& metrics, const SimConfig& config) {
  std::ostringstream out;
  out.precision(17);
  out << metrics_csv_header() << '\n';
  for (std::size_t i = 0; i < metrics.users.size(); ++i) {
    const UserMetrics& u = metrics.users[i];
    out << i << ',' << config.users[i].group << ',' << policy_to_string(config.policy) << ','
        << u.avg_power_actual << ',' << u.avg_power_effective << ',' << u.avg_queue << ','
        << u.avg_delay_little << ',' << u.avg_delay_per_fragment << ',' << u.final_multiplier
        << ',' << u.share_of_slots << ',' << u.drops << ',' << u.arrival_rate << ','
        << u.delay_target_slots << ',' << u.delay_target_fragments << ',' << metrics.avg_max_bid
        << '\n';
  }
  return out.str();
}

}  // namespace ulsched
