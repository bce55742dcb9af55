// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ulsched/channel.hpp"

using namespace ulsched;

TEST_CASE("dB conversions round-trip") {
  CHECK(db_to_linear(0.0) == doctest::Approx(1.0));
  CHECK(linear_to_db(db_to_linear(-3.28)) == doctest::Approx(-3.28));
  CHECK(db_to_linear(-3.28) == doctest::Approx(0.46989).epsilon(1e-4));
}

TEST_CASE("make_bins octile boundaries are analytic quantiles") {
  auto [boundaries, states] = make_bins(8);
  REQUIRE(boundaries.size() == 7);
  REQUIRE(states.size() == 8);
  // b_k = -ln(1 - k/8), checked to 1e-9.
  for (int k = 1; k <= 7; ++k)
    CHECK(boundaries[k - 1] == doctest::Approx(-std::log(1.0 - k / 8.0)).epsilon(1e-9));
  CHECK(boundaries[1] == doctest::Approx(0.28768207245178085).epsilon(1e-9));  // -5.41 dB
  CHECK(boundaries[3] == doctest::Approx(0.6931471805599453).epsilon(1e-9));   // -1.59 dB
  // Analytic first boundary is -8.74 dB, not the commonly printed -8.47.
  CHECK(linear_to_db(boundaries[0]) == doctest::Approx(-8.7446).epsilon(1e-3));
}

TEST_CASE("8-state representative gains match the published set") {
  auto [boundaries, states] = make_bins(8);
  const std::vector<double> expected_db = {-13.0, -8.47, -5.41, -3.28,
                                           -1.59, -0.08, 1.42,  3.18};
  for (int i = 0; i < 8; ++i)
    CHECK(linear_to_db(states[i]) == doctest::Approx(expected_db[i]).epsilon(1e-6));
}

TEST_CASE("make_bins rejects fewer than two states") {
  CHECK_THROWS_AS(make_bins(1), std::invalid_argument);
}

TEST_CASE("non-default bin count uses lower edges with a floor state") {
  auto [boundaries, states] = make_bins(4);
  REQUIRE(boundaries.size() == 3);
  REQUIRE(states.size() == 4);
  for (int k = 1; k <= 3; ++k)
    CHECK(boundaries[k - 1] == doctest::Approx(-std::log(1.0 - k / 4.0)).epsilon(1e-12));
  CHECK(states[0] > 0.0);
  CHECK(states[0] < boundaries[0]);
  for (int i = 1; i < 4; ++i) CHECK(states[i] == doctest::Approx(boundaries[i - 1]));
}

TEST_CASE("sample_gain is inverse-CDF exponential") {
  ChannelModel model = make_channel(0.0, 10.0);
  RngStream rng(12345);
  // Empirical mean over many draws approaches alpha.
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += sample_gain(rng, model);
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("sample_gain with alpha = 0.4698 has matching empirical mean") {
  ChannelModel model = make_channel(-3.28, 10.0);
  RngStream rng(999);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += sample_gain(rng, model);
  CHECK(sum / n == doctest::Approx(0.4698).epsilon(0.01));
}

TEST_CASE("quantize picks the bin containing the gain") {
  ChannelModel model = make_channel(0.0, 10.0);
  CHECK(quantize(0.5, model) == 3);     // [-3.28 dB, -1.59 dB) bin
  CHECK(quantize(0.01, model) == 0);    // lowest bin
  CHECK(quantize(100.0, model) == 7);   // top bin is unbounded
  // Exact boundary goes to the upper bin (lower-inclusive convention).
  for (int k = 0; k < 7; ++k)
    CHECK(quantize(model.bin_boundaries[k], model) == k + 1);
  CHECK_THROWS_AS(quantize(-1e-9, model), std::invalid_argument);
}

TEST_CASE("power_required matches the convex power law") {
  ChannelModel model = make_channel(0.0, 10.0);
  CHECK(power_required(1.0, 0, model) == doctest::Approx(0.0));
  CHECK(power_required(1.0, 3, model) == doctest::Approx(7.0));
  CHECK(power_required(0.4698, 1, model) == doctest::Approx(1.0 / 0.4698).epsilon(1e-6));
  CHECK_THROWS_AS(power_required(0.0, 1, model), std::invalid_argument);
}

TEST_CASE("power law is strictly convex in rate and decreasing in gain") {
  ChannelModel model = make_channel(0.0, 10.0);
  for (double x : model.bin_states) {
    double prev_diff = -1.0;
    for (int z = 0; z <= 16; ++z) {
      const double diff = power_required(x, z + 1, model) - power_required(x, z, model);
      CHECK(diff > prev_diff);
      prev_diff = diff;
    }
  }
  for (int z = 1; z <= 8; ++z)
    for (std::size_t i = 0; i + 1 < model.bin_states.size(); ++i)
      CHECK(power_required(model.bin_states[i], z, model) >
            power_required(model.bin_states[i + 1], z, model));
}

TEST_CASE("max_rate inverts the power law") {
  ChannelModel model = make_channel(0.0, 7.0);
  CHECK(max_rate(1.0, model) == 3);  // 2^3 - 1 = 7 <= 7 < 2^4 - 1
  ChannelModel small = make_channel(0.0, 0.5);
  CHECK(max_rate(1.0, small) == 0);
  // Non-decreasing in the gain.
  int prev = 0;
  for (double x : model.bin_states) {
    const int r = max_rate(x, model);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("bin probabilities are exact octiles at unit mean") {
  ChannelModel model = make_channel(0.0, 10.0);
  const std::vector<double> probs = bin_probabilities(model);
  REQUIRE(probs.size() == 8);
  double total = 0.0;
  for (double p : probs) {
    CHECK(p == doctest::Approx(0.125).epsilon(1e-12));
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empirical bin frequencies are 1/8 within 0.003") {
  ChannelModel model = make_channel(0.0, 10.0);
  RngStream rng(2024);
  std::vector<long long> counts(8, 0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) ++counts[quantize(sample_gain(rng, model), model)];
  for (int s = 0; s < 8; ++s)
    CHECK(static_cast<double>(counts[s]) / n == doctest::Approx(0.125).epsilon(0.024));
}

TEST_CASE("bin probabilities shift with the mean gain") {
  ChannelModel model = make_channel(-3.28, 10.0);
  const std::vector<double> probs = bin_probabilities(model);
  // Lower mean gain loads the low bins: P(bin 0) = 1 - exp(-b_1/alpha).
  const double alpha = db_to_linear(-3.28);
  CHECK(probs[0] ==
        doctest::Approx(1.0 - std::exp(-model.bin_boundaries[0] / alpha)).epsilon(1e-12));
  CHECK(probs[0] > 0.125);
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("channel validation rejects bad models") {
  ChannelModel model = make_channel(0.0, 10.0);
  model.max_power = 0.0;
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  model = make_channel(0.0, 10.0);
  model.mean_gain_linear = -1.0;
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
}
