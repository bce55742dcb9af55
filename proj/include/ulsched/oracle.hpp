// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ulsched/channel.hpp"

namespace ulsched {

// Exact single-user CMDP instance with known arrival and channel pmfs.
// Channel states are i.i.d. across slots, so the kernel is just a pmf.
struct OracleModel {
  std::vector<double> arrival_pmf;  // over {0..A} fragments
  std::vector<double> channel_pmf;  // over channel states
  int q_max = 20;
  ChannelModel channel;
  double delay_target_queue = 0.0;  // delta-bar, fragments
  int bid_bits = 8;                 // rate cap 2^bid_bits - 1

  void validate() const;
};

struct OracleSolution {
  std::vector<double> relative_values;  // (q_max+1) x states, reference pinned to 0
  double gain = 0.0;                    // beta
  std::vector<int> policy;              // (q_max+1) x states, pre-decision greedy rate
  double multiplier = 0.0;              // lambda (fixed or optimal)
  double avg_power = 0.0;
  double avg_queue = 0.0;
  int sweeps = 0;
  double residual = 0.0;

  double relative_value(int post_queue, int state, int num_states) const {
    return relative_values[static_cast<std::size_t>(post_queue) * num_states + state];
  }
  int rate(int queue, int state, int num_states) const {
    return policy[static_cast<std::size_t>(queue) * num_states + state];
  }
};

// One (lambda, avg_queue, avg_power) sample from the multiplier search.
struct BisectionPoint {
  double multiplier;
  double avg_queue;
  double avg_power;
};

// Post-decision relative value iteration at a fixed multiplier, iterated
// to a 1e-10 sup-norm fixed point; throws if the sweep cap is hit.
OracleSolution solve_unconstrained(const OracleModel& model, double lambda);

// Exact long-run averages of a stationary policy via the stationary
// distribution of the (queue, state) chain.
struct PolicyAverages {
  double avg_power;
  double avg_queue;
};
PolicyAverages evaluate_policy(const OracleModel& model, const std::vector<int>& policy);

// Saddle-point solve: bisection on lambda over the (non-increasing)
// avg_queue curve. When the constraint falls strictly between two adjacent
// deterministic policies, the reported averages are the randomized mixture
// meeting it with equality. Trace receives every bisection sample if given.
OracleSolution solve_cmdp(const OracleModel& model, double multiplier_cap = 1000.0,
                          std::vector<BisectionPoint>* trace = nullptr);

// Policy table and relative values as CSV, for diffing against learner dumps.
void export_solution(const OracleModel& model, const OracleSolution& solution,
                     const std::string& path);

}  // namespace ulsched
