/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the uplink scheduling simulator. All entry points return
 * a uls_status; on failure uls_last_error() carries a thread-local message.
 * Objects are opaque handles owned by the caller via the matching _free.
 */
#ifndef ULSCHED_H
#define ULSCHED_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uls_status {
  ULS_OK = 0,
  ULS_ERR_INVALID_ARGUMENT = 1,
  ULS_ERR_PARSE = 2,
  ULS_ERR_UNSTABLE = 3,
  ULS_ERR_RUN_FAILED = 4,
  ULS_ERR_IO = 5,
  ULS_ERR_UNKNOWN = 6
} uls_status;

typedef struct uls_scenario uls_scenario;

const char* uls_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* uls_last_error(void);

/* Scenario construction. */
uls_status uls_scenario_from_preset(const char* name, uls_scenario** out);
uls_status uls_scenario_from_file(const char* path, uls_scenario** out);
uls_status uls_scenario_from_json(const char* json_text, uls_scenario** out);
void uls_scenario_free(uls_scenario* scenario);

/* Overrides applied before running. */
uls_status uls_scenario_set_slots(uls_scenario* scenario, long long slots);
uls_status uls_scenario_set_seeds(uls_scenario* scenario, const uint64_t* seeds, size_t count);
uls_status uls_scenario_set_policy(uls_scenario* scenario, const char* policy);
uls_status uls_scenario_set_bits(uls_scenario* scenario, int bid_bits);
uls_status uls_scenario_set_force(uls_scenario* scenario, int force);
uls_status uls_scenario_set_trace(uls_scenario* scenario, int trace);

/* Executes all runs, writes summary.csv and manifest.json under out_dir.
 * total_drops and failed_runs may be NULL. */
uls_status uls_scenario_run(uls_scenario* scenario, const char* out_dir,
                            long long* total_drops, int* failed_runs);

/* Scenario's canonical JSON; free with uls_string_free. */
uls_status uls_scenario_json(const uls_scenario* scenario, char** json_text);

/* Stability gate for the scenario's base configuration; writes a one-line
 * report into *report (free with uls_string_free), sets *pass to 0/1. */
uls_status uls_scenario_check_stability(const uls_scenario* scenario, char** report, int* pass);

/* Newline-separated preset list; free with uls_string_free. */
uls_status uls_preset_names(char** names);

void uls_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* ULSCHED_H */
