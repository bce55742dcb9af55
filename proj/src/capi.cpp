// SPDX-License-Identifier: Apache-2.0
#include "ulsched.h"

#include <json.hpp>

#include <cstring>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulsched/scenario.hpp"
#include "ulsched/version.hpp"

namespace {

thread_local std::string g_last_error;

uls_status fail(uls_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
uls_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ULS_OK;
  } catch (const std::invalid_argument& e) {
    return fail(ULS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ULS_ERR_PARSE, e.what());
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.find("stability check failed") != std::string::npos)
      return fail(ULS_ERR_UNSTABLE, what);
    if (what.find("cannot open") != std::string::npos) return fail(ULS_ERR_IO, what);
    return fail(ULS_ERR_RUN_FAILED, what);
  } catch (const std::exception& e) {
    return fail(ULS_ERR_UNKNOWN, e.what());
  }
}

char* dup_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

}  // namespace

struct uls_scenario {
  ulsched::Scenario scenario;
  ulsched::ScenarioOptions options;
};

extern "C" {

const char* uls_version(void) { return ulsched::kVersion; }

const char* uls_last_error(void) { return g_last_error.c_str(); }

uls_status uls_scenario_from_preset(const char* name, uls_scenario** out) {
  if (!name || !out) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { *out = new uls_scenario{ulsched::scenario_preset(name), {}}; });
}

uls_status uls_scenario_from_file(const char* path, uls_scenario** out) {
  if (!path || !out) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { *out = new uls_scenario{ulsched::scenario_from_file(path), {}}; });
}

uls_status uls_scenario_from_json(const char* json_text, uls_scenario** out) {
  if (!json_text || !out) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { *out = new uls_scenario{ulsched::scenario_from_json(json_text), {}}; });
}

void uls_scenario_free(uls_scenario* scenario) { delete scenario; }

uls_status uls_scenario_set_slots(uls_scenario* scenario, long long slots) {
  if (!scenario) return fail(ULS_ERR_INVALID_ARGUMENT, "null scenario");
  if (slots <= 0) return fail(ULS_ERR_INVALID_ARGUMENT, "slots must be > 0");
  scenario->scenario.base.horizon = slots;
  scenario->scenario.base.burn_in = -1;
  return ULS_OK;
}

uls_status uls_scenario_set_seeds(uls_scenario* scenario, const uint64_t* seeds, size_t count) {
  if (!scenario || !seeds || count == 0)
    return fail(ULS_ERR_INVALID_ARGUMENT, "need a non-empty seed list");
  scenario->scenario.seeds.assign(seeds, seeds + count);
  return ULS_OK;
}

uls_status uls_scenario_set_policy(uls_scenario* scenario, const char* policy) {
  if (!scenario || !policy) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { scenario->scenario.base.policy = ulsched::policy_from_string(policy); });
}

uls_status uls_scenario_set_bits(uls_scenario* scenario, int bid_bits) {
  if (!scenario) return fail(ULS_ERR_INVALID_ARGUMENT, "null scenario");
  if (bid_bits < 1) return fail(ULS_ERR_INVALID_ARGUMENT, "bid_bits must be >= 1");
  scenario->scenario.base.bid_bits = bid_bits;
  return ULS_OK;
}

uls_status uls_scenario_set_force(uls_scenario* scenario, int force) {
  if (!scenario) return fail(ULS_ERR_INVALID_ARGUMENT, "null scenario");
  scenario->options.force = force != 0;
  return ULS_OK;
}

uls_status uls_scenario_set_trace(uls_scenario* scenario, int trace) {
  if (!scenario) return fail(ULS_ERR_INVALID_ARGUMENT, "null scenario");
  scenario->options.trace = trace != 0;
  return ULS_OK;
}

uls_status uls_scenario_run(uls_scenario* scenario, const char* out_dir,
                            long long* total_drops, int* failed_runs) {
  if (!scenario || !out_dir) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    const ulsched::ScenarioResult result =
        ulsched::run_scenario(scenario->scenario, scenario->options, out_dir);
    if (total_drops) *total_drops = result.total_drops;
    if (failed_runs) *failed_runs = result.failed_runs;
    if (result.failed_runs > 0) {
      std::ostringstream msg;
      msg << result.failed_runs << " run(s) failed";
      for (const std::string& e : result.errors) msg << "; " << e;
      throw std::runtime_error(msg.str());
    }
  });
}

uls_status uls_scenario_json(const uls_scenario* scenario, char** json_text) {
  if (!scenario || !json_text) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { *json_text = dup_string(ulsched::scenario_to_json(scenario->scenario)); });
}

uls_status uls_scenario_check_stability(const uls_scenario* scenario, char** report, int* pass) {
  if (!scenario || !pass) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    ulsched::SimConfig config = scenario->scenario.base;
    const ulsched::StabilityReport r = ulsched::validate_stability(config);
    *pass = r.pass ? 1 : 0;
    if (report) {
      std::ostringstream msg;
      msg << "sum arrival rate " << r.arrival_rate_sum << " fragments/slot vs min mean max rate "
          << r.min_mean_max_rate << " -> " << (r.pass ? "stable" : "unstable");
      *report = dup_string(msg.str());
    }
  });
}

uls_status uls_preset_names(char** names) {
  if (!names) return fail(ULS_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::string joined;
    for (const std::string& n : ulsched::preset_names()) {
      joined += n;
      joined += '\n';
    }
    *names = dup_string(joined);
  });
}

void uls_string_free(char* text) { delete[] text; }

}  // extern "C"
