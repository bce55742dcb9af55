// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ulsched/learner.hpp"
#include "ulsched/oracle.hpp"
#include "ulsched/rng.hpp"

using namespace ulsched;

namespace {

ChannelModel unit_channel(double max_power = 15.0) { return make_channel(0.0, max_power); }

LearnerConfig small_config(double delta_bar = 5.0) {
  LearnerConfig c;
  c.q_max = 30;
  c.delay_target_queue = delta_bar;
  c.bid_bits = 3;
  return c;
}

// Drives one always-scheduled learner slot: returns the chosen rate.
int step(Learner& learner, int arrivals, int x) {
  arrivals = std::min(arrivals, learner.config().q_max - learner.post_queue());
  const int q = learner.post_queue() + arrivals;
  const int r = learner.choose_rate(arrivals, x);
  learner.update_value(arrivals, x, r);
  learner.update_multiplier(q);
  learner.advance(q - r, x);
  return r;
}

}  // namespace

TEST_CASE("stepsize defaults follow the pinned exponents") {
  StepsizeSchedule s = stepsize_defaults();
  CHECK(s.fast(1) == doctest::Approx(1.0));
  CHECK(s.slow(1) == doctest::Approx(1.0));
  CHECK(s.slow(1000) / s.fast(1000) == doctest::Approx(std::pow(1000.0, -0.3)).epsilon(1e-12));
  CHECK(s.slow(1000) / s.fast(1000) == doctest::Approx(0.1259).epsilon(1e-3));
  // Square partial sums stay under the zeta bounds.
  double f2 = 0.0, e2 = 0.0;
  for (long long n = 1; n <= 1000000; ++n) {
    f2 += s.fast(n) * s.fast(n);
    e2 += s.slow(n) * s.slow(n);
  }
  CHECK(f2 < 5.59158966);  // zeta(1.2)
  CHECK(e2 < 1.88228676);  // zeta(1.8)
}

TEST_CASE("lagrangian cost arithmetic") {
  ChannelModel ch = unit_channel();
  CHECK(lagrangian_cost(0.0, 7, 1.0, 2, ch, 5.0) == doctest::Approx(3.0));
  CHECK(lagrangian_cost(1.0, 5, 1.0, 0, ch, 5.0) == doctest::Approx(0.0));
  CHECK(lagrangian_cost(1.0, 7, 1.0, 2, ch, 5.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(lagrangian_cost(1.0, 1, 1.0, 2, ch, 5.0), std::invalid_argument);
}

TEST_CASE("feasible set is min of power, queue and bid caps") {
  ChannelModel ch = unit_channel(15.0);  // R-hat(1.0) = 4
  CHECK(max_rate(1.0, ch) == 4);
  CHECK(feasible_set(0, 1.0, ch, 3) == std::vector<int>{0});
  CHECK(feasible_set(10, 1.0, ch, 3) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(feasible_set(10, 1.0, ch, 2) == std::vector<int>{0, 1, 2, 3});
  CHECK(feasible_set(2, 1.0, ch, 3) == std::vector<int>{0, 1, 2});
}

TEST_CASE("empty buffer and zero value table choose rate zero") {
  Learner learner(unit_channel(), small_config());
  CHECK(learner.choose_rate(0, 4) == 0);
  // All-zero table: power strictly increasing in v, everything else constant.
  CHECK(learner.choose_rate(6, 7) == 0);
}

TEST_CASE("argmin reduces to power plus next post-decision value") {
  ChannelModel ch = unit_channel();
  LearnerConfig cfg = small_config();
  Learner learner(ch, cfg);
  RngStream rng(31337);
  // Populate the table with real updates first.
  for (int i = 0; i < 3000; ++i)
    step(learner, static_cast<int>(rng.next_index(4)), static_cast<int>(rng.next_index(8)));
  for (int trial = 0; trial < 1000; ++trial) {
    const int post_q = static_cast<int>(rng.next_index(cfg.q_max - 4));
    const int a = static_cast<int>(rng.next_index(5));
    const int x = static_cast<int>(rng.next_index(8));
    learner.advance(post_q, static_cast<int>(rng.next_index(8)));
    const int chosen = learner.choose_rate(a, x);
    const double gain = ch.bin_states[x];
    int best = -1;
    double best_score = 0.0;
    for (int v : feasible_set(post_q + a, gain, ch, cfg.bid_bits)) {
      const double score = power_required(gain, v, ch) + learner.value(post_q + a - v, x);
      if (best < 0 || score < best_score - 1e-15) {
        best = v;
        best_score = score;
      }
    }
    CHECK(chosen == best);
  }
}

TEST_CASE("update_value rewrites exactly one entry") {
  LearnerConfig cfg = small_config();
  Learner learner(unit_channel(), cfg);
  RngStream rng(99);
  for (int i = 0; i < 200; ++i)
    step(learner, static_cast<int>(rng.next_index(4)), static_cast<int>(rng.next_index(8)));
  std::vector<double> before(static_cast<std::size_t>(cfg.q_max + 1) * 8);
  for (int q = 0; q <= cfg.q_max; ++q)
    for (int x = 0; x < 8; ++x) before[static_cast<std::size_t>(q) * 8 + x] = learner.value(q, x);
  const int pq = learner.post_queue(), px = learner.post_state();
  const int a = 2, x = 5;
  const int r = learner.choose_rate(a, x);
  learner.update_value(a, x, r);
  int changed = 0;
  for (int q = 0; q <= cfg.q_max; ++q)
    for (int s = 0; s < 8; ++s)
      if (learner.value(q, s) != before[static_cast<std::size_t>(q) * 8 + s]) {
        ++changed;
        CHECK(q == pq);
        CHECK(s == px);
      }
  CHECK(changed <= 1);
}

TEST_CASE("first update with unit stepsize writes the sampled cost") {
  // n = 1 gives f_1 = 1, so the zero table becomes exactly c(lambda, q, x, r).
  ChannelModel ch = unit_channel();
  LearnerConfig cfg = small_config(5.0);
  Learner learner(ch, cfg);
  const int a = 3, x = 7;
  const int r = learner.choose_rate(a, x);
  CHECK(r == 0);  // zero table, power-greedy
  learner.update_value(a, x, r);
  const double expected =
      lagrangian_cost(0.0, 3, ch.bin_states[x], 0, ch, 5.0) + learner.value(3, x) * 0.0;
  CHECK(learner.value(0, 0) == doctest::Approx(expected));
}

TEST_CASE("constant stepsize multiplier update is exact") {
  LearnerConfig cfg = small_config(5.0);
  cfg.stepsizes.fast = [](long long) { return 0.5; };
  cfg.stepsizes.slow = [](long long) { return 0.01; };
  Learner learner(unit_channel(), cfg);
  learner.update_multiplier(7);  // lambda = 0 + 0.01 * (7 - 5)
  CHECK(learner.multiplier() == doctest::Approx(0.02));
  learner.update_multiplier(7);
  CHECK(learner.multiplier() == doctest::Approx(0.04));
  learner.update_multiplier(0);  // 0.04 + 0.01 * (0 - 5) -> clamped at 0
  CHECK(learner.multiplier() == doctest::Approx(0.0));
}

TEST_CASE("zero fast stepsize leaves the table unchanged") {
  LearnerConfig cfg = small_config();
  cfg.stepsizes.fast = [](long long) { return 0.0; };
  cfg.stepsizes.slow = [](long long) { return 0.0; };
  Learner learner(unit_channel(), cfg);
  RngStream rng(12);
  for (int i = 0; i < 500; ++i)
    step(learner, static_cast<int>(rng.next_index(4)), static_cast<int>(rng.next_index(8)));
  CHECK(learner.value_sup_norm() == doctest::Approx(0.0));
}

TEST_CASE("multiplier projection keeps lambda in [0, K]") {
  LearnerConfig cfg = small_config(2.0);
  cfg.multiplier_cap = 3.0;
  cfg.stepsizes.fast = [](long long) { return 0.1; };
  cfg.stepsizes.slow = [](long long) { return 0.5; };
  Learner learner(unit_channel(), cfg);
  RngStream rng(555);
  for (int i = 0; i < 5000; ++i) {
    learner.update_multiplier(static_cast<int>(rng.next_index(31)));
    CHECK(learner.multiplier() >= 0.0);
    CHECK(learner.multiplier() <= 3.0);
  }
  // Persistent violation saturates at the cap.
  for (int i = 0; i < 100; ++i) learner.update_multiplier(30);
  CHECK(learner.multiplier() == doctest::Approx(3.0));
}

TEST_CASE("chosen rate is always feasible") {
  ChannelModel ch = unit_channel(10.0);
  LearnerConfig cfg = small_config();
  Learner learner(ch, cfg);
  RngStream rng(2718);
  for (int i = 0; i < 20000; ++i) {
    const int a = static_cast<int>(rng.next_index(5));
    const int x = static_cast<int>(rng.next_index(8));
    const int q = std::min(learner.post_queue() + a, cfg.q_max);
    const int capped_a = q - learner.post_queue();
    const int r = learner.choose_rate(capped_a, x);
    const std::vector<int> feas = feasible_set(q, ch.bin_states[x], ch, cfg.bid_bits);
    CHECK(r >= 0);
    CHECK(r <= feas.back());
    learner.update_value(capped_a, x, r);
    learner.update_multiplier(q);
    learner.advance(q - r, x);
  }
}

TEST_CASE("value table stays bounded on long runs") {
  ChannelModel ch = unit_channel(10.0);
  LearnerConfig cfg = small_config(4.0);
  cfg.per_state_stepsizes = true;
  Learner learner(ch, cfg);
  RngStream rng(4242);
  const double pmf0 = 0.6;
  for (int i = 0; i < 1000000; ++i) {
    const int a = rng.next_uniform() < pmf0 ? 0 : 1 + static_cast<int>(rng.next_index(2));
    step(learner, a, static_cast<int>(rng.next_index(8)));
  }
  CHECK(std::isfinite(learner.value_sup_norm()));
  CHECK(learner.value_sup_norm() < 1e6);
  CHECK(learner.multiplier() >= 0.0);
  CHECK(learner.multiplier() <= cfg.multiplier_cap);
}

TEST_CASE("learned reference value approaches the fixed-lambda oracle gain") {
  // Pin lambda by saturating it at a small cap with delta-bar = 0, then
  // compare the learned reference value against the exact RVIA gain.
  ChannelModel ch = make_channel(0.0, 20.0, 2000, 2000.0, 4);
  const double lambda = 1.0;

  OracleModel model;
  model.channel = ch;
  model.arrival_pmf = {0.5, 0.3, 0.2};
  model.channel_pmf = bin_probabilities(ch);
  model.q_max = 20;
  model.delay_target_queue = 0.0;
  model.bid_bits = 8;
  const OracleSolution fixed = solve_unconstrained(model, lambda);

  LearnerConfig cfg;
  cfg.q_max = 20;
  cfg.delay_target_queue = 0.0;
  cfg.multiplier_cap = lambda;
  cfg.bid_bits = 8;
  cfg.per_state_stepsizes = true;
  Learner learner(ch, cfg);
  RngStream rng(90210);
  for (int i = 0; i < 500000; ++i) {
    const double u = rng.next_uniform();
    const int a = u < 0.5 ? 0 : (u < 0.8 ? 1 : 2);
    const int x = quantize(sample_gain(rng, ch), ch);
    const int q = std::min(learner.post_queue() + a, cfg.q_max);
    const int capped_a = q - learner.post_queue();
    const int r = learner.choose_rate(capped_a, x);
    learner.update_value(capped_a, x, r);
    learner.update_multiplier(q);
    learner.advance(q - r, x);
  }
  CHECK(learner.multiplier() == doctest::Approx(lambda));
  CHECK(learner.reference_value() == doctest::Approx(fixed.gain).epsilon(0.05));
}
