// SPDX-License-Identifier: Apache-2.0
#include "ulsched/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ulsched {

void OracleModel::validate() const {
  channel.validate();
  if (q_max <= 0) throw std::invalid_argument("q_max must be > 0");
  if (bid_bits < 1) throw std::invalid_argument("bid_bits must be >= 1");
  auto check_pmf = [](const std::vector<double>& pmf, const char* name) {
    if (pmf.empty()) throw std::invalid_argument(std::string(name) + " is empty");
    double sum = 0.0;
    for (double p : pmf) {
      if (p < 0.0) throw std::invalid_argument(std::string(name) + " has negative mass");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument(std::string(name) + " does not sum to 1");
  };
  check_pmf(arrival_pmf, "arrival_pmf");
  check_pmf(channel_pmf, "channel_pmf");
  if (channel_pmf.size() != static_cast<std::size_t>(channel.num_states()))
    throw std::invalid_argument("channel_pmf size must match channel states");
}

namespace {

int action_cap(const OracleModel& m, int queue, int state) {
  return std::min({max_rate(m.channel.bin_states[state], m.channel), queue,
                   (1 << m.bid_bits) - 1});
}

// One RVIA sweep over the post-decision queue axis. With i.i.d. channel
// states the post-decision value does not depend on the channel component,
// so the table collapses to a vector over queue lengths.
std::vector<double> rvia_sweep(const OracleModel& m, double lambda,
                               const std::vector<double>& v) {
  const int states = m.channel.num_states();
  std::vector<double> next(v.size());
  const double ref = v[0];
  for (int pq = 0; pq <= m.q_max; ++pq) {
    double total = 0.0;
    for (std::size_t a = 0; a < m.arrival_pmf.size(); ++a) {
      if (m.arrival_pmf[a] == 0.0) continue;
      const int qc = std::min(pq + static_cast<int>(a), m.q_max);
      double inner = 0.0;
      for (int x = 0; x < states; ++x) {
        if (m.channel_pmf[x] == 0.0) continue;
        const double gain = m.channel.bin_states[x];
        const double hold = lambda * (qc - m.delay_target_queue);
        const int cap = action_cap(m, qc, x);
        double best = hold + v[qc];  // r = 0
        for (int r = 1; r <= cap; ++r) {
          const double c = power_required(gain, r, m.channel) + hold + v[qc - r];
          if (c < best) best = c;
        }
        inner += m.channel_pmf[x] * (best - ref);
      }
      total += m.arrival_pmf[a] * inner;
    }
    next[pq] = total;
  }
  return next;
}

std::vector<int> greedy_policy(const OracleModel& m, const std::vector<double>& v) {
  const int states = m.channel.num_states();
  std::vector<int> policy(static_cast<std::size_t>(m.q_max + 1) * states, 0);
  for (int q = 0; q <= m.q_max; ++q) {
    for (int x = 0; x < states; ++x) {
      const double gain = m.channel.bin_states[x];
      const int cap = action_cap(m, q, x);
      int best_r = 0;
      double best = v[q];
      for (int r = 1; r <= cap; ++r) {
        const double c = power_required(gain, r, m.channel) + v[q - r];
        if (c < best) {
          best = c;
          best_r = r;
        }
      }
      policy[static_cast<std::size_t>(q) * states + x] = best_r;
    }
  }
  return policy;
}

}  // namespace

OracleSolution solve_unconstrained(const OracleModel& model, double lambda) {
  model.validate();
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  const int states = model.channel.num_states();
  std::vector<double> v(model.q_max + 1, 0.0);
  constexpr int kMaxSweeps = 100000;
  constexpr double kTol = 1e-10;
  int sweep = 0;
  double diff = 0.0;
  for (; sweep < kMaxSweeps; ++sweep) {
    const std::vector<double> next = rvia_sweep(model, lambda, v);
    diff = 0.0;
    // Damped iteration: plain RVIA can enter a period-2 cycle between two
    // optimal-policy ties; averaging keeps the same fixed point and breaks it.
    for (std::size_t i = 0; i < v.size(); ++i) {
      diff = std::max(diff, std::abs(next[i] - v[i]));
      v[i] = 0.5 * (v[i] + next[i]);
    }
    if (diff < kTol) break;
  }
  if (diff >= kTol) {
    std::ostringstream msg;
    msg << "RVIA did not converge in " << kMaxSweeps << " sweeps, residual " << diff;
    throw std::runtime_error(msg.str());
  }

  OracleSolution sol;
  sol.multiplier = lambda;
  sol.gain = v[0];
  sol.sweeps = sweep + 1;
  {
    const std::vector<double> check = rvia_sweep(model, lambda, v);
    double res = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) res = std::max(res, std::abs(check[i] - v[i]));
    sol.residual = res;
  }
  sol.relative_values.assign(static_cast<std::size_t>(model.q_max + 1) * states, 0.0);
  for (int q = 0; q <= model.q_max; ++q)
    for (int x = 0; x < states; ++x)
      sol.relative_values[static_cast<std::size_t>(q) * states + x] = v[q] - v[0];
  sol.policy = greedy_policy(model, v);
  const PolicyAverages avg = evaluate_policy(model, sol.policy);
  sol.avg_power = avg.avg_power;
  sol.avg_queue = avg.avg_queue;
  return sol;
}

PolicyAverages evaluate_policy(const OracleModel& model, const std::vector<int>& policy) {
  model.validate();
  const int states = model.channel.num_states();
  const int m = (model.q_max + 1) * states;
  if (policy.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("policy table has wrong shape");
  auto idx = [states](int q, int x) { return static_cast<std::size_t>(q) * states + x; };
  for (int q = 0; q <= model.q_max; ++q)
    for (int x = 0; x < states; ++x)
      if (policy[idx(q, x)] < 0 || policy[idx(q, x)] > action_cap(model, q, x))
        throw std::invalid_argument("policy infeasible at some state");

  // Transition matrix over pre-decision states (q, x).
  Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(m, m);
  for (int q = 0; q <= model.q_max; ++q) {
    for (int x = 0; x < states; ++x) {
      const int pq = q - policy[idx(q, x)];
      for (std::size_t a = 0; a < model.arrival_pmf.size(); ++a) {
        if (model.arrival_pmf[a] == 0.0) continue;
        const int q2 = std::min(pq + static_cast<int>(a), model.q_max);
        for (int x2 = 0; x2 < states; ++x2)
          trans(idx(q, x), idx(q2, x2)) += model.arrival_pmf[a] * model.channel_pmf[x2];
      }
    }
  }

  // Closed communicating classes via Kosaraju SCC on the support graph.
  std::vector<std::vector<int>> fwd(m), rev(m);
  for (int s = 0; s < m; ++s)
    for (int t = 0; t < m; ++t)
      if (trans(s, t) > 0.0) {
        fwd[s].push_back(t);
        rev[t].push_back(s);
      }
  std::vector<int> order;
  order.reserve(m);
  std::vector<char> seen(m, 0);
  for (int start = 0; start < m; ++start) {
    if (seen[start]) continue;
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    seen[start] = 1;
    while (!stack.empty()) {
      auto& [node, edge] = stack.back();
      if (edge < fwd[node].size()) {
        const int next = fwd[node][edge++];
        if (!seen[next]) {
          seen[next] = 1;
          stack.push_back({next, 0});
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  std::vector<int> component(m, -1);
  int num_components = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (component[*it] != -1) continue;
    std::vector<int> stack{*it};
    component[*it] = num_components;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int prev : rev[node])
        if (component[prev] == -1) {
          component[prev] = num_components;
          stack.push_back(prev);
        }
    }
    ++num_components;
  }
  std::vector<char> closed(num_components, 1);
  for (int s = 0; s < m; ++s)
    for (int t : fwd[s])
      if (component[t] != component[s]) closed[component[s]] = 0;
  std::vector<int> closed_classes;
  for (int c = 0; c < num_components; ++c)
    if (closed[c]) closed_classes.push_back(c);
  if (closed_classes.size() != 1) {
    std::ostringstream msg;
    msg << "chain has " << closed_classes.size() << " closed classes:";
    for (int c : closed_classes) {
      int size = 0, rep = -1;
      for (int s = 0; s < m; ++s)
        if (component[s] == c) {
          ++size;
          if (rep < 0) rep = s;
        }
      msg << " {size " << size << ", contains (q=" << rep / states << ",x=" << rep % states
          << ")}";
    }
    throw std::runtime_error(msg.str());
  }

  // Stationary distribution on the single closed class.
  std::vector<int> members;
  for (int s = 0; s < m; ++s)
    if (component[s] == closed_classes.front()) members.push_back(s);
  const int k = static_cast<int>(members.size());
  Eigen::MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      a(i, j) = trans(members[j], members[i]) - (i == j ? 1.0 : 0.0);
  for (int j = 0; j < k; ++j) a(k - 1, j) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1) = 1.0;
  const Eigen::VectorXd pi = a.fullPivLu().solve(b);

  PolicyAverages avg{0.0, 0.0};
  for (int i = 0; i < k; ++i) {
    const int q = members[i] / states;
    const int x = members[i] % states;
    const double p = pi(i);
    avg.avg_queue += p * q;
    avg.avg_power += p * power_required(model.channel.bin_states[x], policy[idx(q, x)],
                                        model.channel);
  }
  return avg;
}

OracleSolution solve_cmdp(const OracleModel& model, double multiplier_cap,
                          std::vector<BisectionPoint>* trace) {
  model.validate();
  if (model.delay_target_queue <= 0.0)
    throw std::invalid_argument("delay_target_queue must be > 0");
  const int states = model.channel.num_states();
  const double target = model.delay_target_queue;

  // Achievability: the max-drain policy must already meet the target.
  std::vector<int> drain(static_cast<std::size_t>(model.q_max + 1) * states, 0);
  for (int q = 0; q <= model.q_max; ++q)
    for (int x = 0; x < states; ++x)
      drain[static_cast<std::size_t>(q) * states + x] = action_cap(model, q, x);
  const PolicyAverages drain_avg = evaluate_policy(model, drain);
  if (drain_avg.avg_queue > target) {
    std::ostringstream msg;
    msg << "delay target " << target << " infeasible: max-rate policy achieves avg queue "
        << drain_avg.avg_queue;
    throw std::runtime_error(msg.str());
  }

  auto record = [&](const OracleSolution& s) {
    if (trace) trace->push_back({s.multiplier, s.avg_queue, s.avg_power});
  };
  const double tol = 0.01 * target;

  OracleSolution at_zero = solve_unconstrained(model, 0.0);
  record(at_zero);
  if (at_zero.avg_queue <= target) return at_zero;  // constraint slack

  double lo = 0.0;
  OracleSolution sol_lo = std::move(at_zero);
  double hi = 1.0;
  OracleSolution sol_hi;
  for (;;) {
    sol_hi = solve_unconstrained(model, hi);
    record(sol_hi);
    if (std::abs(sol_hi.avg_queue - target) <= tol) return sol_hi;
    if (sol_hi.avg_queue < target) break;
    lo = hi;
    sol_lo = sol_hi;
    hi *= 2.0;
    if (hi > multiplier_cap) throw std::runtime_error("no multiplier below the cap meets the target");
  }

  for (int it = 0; it < 200 && hi - lo > 1e-11 * std::max(1.0, hi); ++it) {
    // RVIA stalls when the probe lands arbitrarily close to a policy-switch
    // multiplier; probe off-center before giving up on the bracket, whose
    // endpoint solutions are already exact on either side of the switch.
    OracleSolution sol_mid;
    bool solved = false;
    for (double frac : {0.5, 0.4, 0.6}) {
      try {
        sol_mid = solve_unconstrained(model, lo + frac * (hi - lo));
        solved = true;
        break;
      } catch (const std::runtime_error&) {
      }
    }
    if (!solved) break;
    record(sol_mid);
    if (std::abs(sol_mid.avg_queue - target) <= tol) return sol_mid;
    if (sol_mid.avg_queue > target) {
      lo = sol_mid.multiplier;
      sol_lo = std::move(sol_mid);
    } else {
      hi = sol_mid.multiplier;
      sol_hi = std::move(sol_mid);
    }
  }

  // The queue curve stepped across the target: report the randomized
  // mixture of the two bracketing policies that meets it with equality.
  const double w = (target - sol_hi.avg_queue) / (sol_lo.avg_queue - sol_hi.avg_queue);
  OracleSolution sol = std::move(sol_hi);
  sol.multiplier = 0.5 * (lo + hi);
  sol.avg_power = w * sol_lo.avg_power + (1.0 - w) * sol.avg_power;
  sol.avg_queue = target;
  return sol;
}

void export_solution(const OracleModel& model, const OracleSolution& solution,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const int states = model.channel.num_states();
  out << "queue,channel_state,rate,relative_value\n";
  for (int q = 0; q <= model.q_max; ++q)
    for (int x = 0; x < states; ++x)
      out << q << ',' << x << ',' << solution.rate(q, x, states) << ','
          << solution.relative_value(q, x, states) << '\n';
}

}  // namespace ulsched
