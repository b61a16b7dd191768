/*
 * Copyright 2026 The auxweight Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the auxweight library. Every call returns an aw_status; on
 * failure aw_last_error() describes it (per thread). Strings handed out by
 * the library are released with aw_string_free. */

#ifndef AUXWEIGHT_AUXWEIGHT_H
#define AUXWEIGHT_AUXWEIGHT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AW_API __declspec(dllexport)
#else
#define AW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aw_status {
    AW_OK = 0,
    AW_ERR_ASSERTION = 1, /* a check ran and failed */
    AW_ERR_CONFIG = 2,    /* bad configuration */
    AW_ERR_INVALID_ARGUMENT = 3,
    AW_ERR_IO = 4,
    AW_ERR_PARSE = 5,   /* malformed run log */
    AW_ERR_ABORTED = 6, /* training hit a non-finite state */
    AW_ERR_INTERNAL = 7
} aw_status;

typedef struct aw_config aw_config;
typedef struct aw_run aw_run;

typedef struct aw_metrics {
    double psnr;
    double ssim;
    double mae;
    double perceptual_distance;
} aw_metrics;

typedef struct aw_train_result {
    aw_metrics summary;
    uint64_t records;
    int aborted;
} aw_train_result;

AW_API const char* aw_version(void);
AW_API const char* aw_last_error(void);
AW_API void aw_string_free(char* s);

/* Configuration */
AW_API aw_status aw_default_config_toml(char** out);
AW_API aw_status aw_config_parse(const char* toml, aw_config** out);
AW_API aw_status aw_config_load(const char* path, aw_config** out);
AW_API aw_status aw_config_clone(const aw_config* cfg, aw_config** out);
AW_API void aw_config_free(aw_config* cfg);
AW_API aw_status aw_config_to_toml(const aw_config* cfg, char** out);
AW_API aw_status aw_config_set_seed(aw_config* cfg, uint64_t seed);
AW_API aw_status aw_config_set_iters(aw_config* cfg, uint64_t iters);
AW_API aw_status aw_config_set_output(aw_config* cfg, const char* path);
AW_API aw_status aw_config_set_reweighter(aw_config* cfg, const char* name);
AW_API aw_status aw_config_output(const aw_config* cfg, char** out);

/* Training. aw_train writes the run log to the config's output path; an
 * aborted run still writes its abort record and returns AW_ERR_ABORTED. */
AW_API aw_status aw_train(const aw_config* cfg, aw_train_result* result);

/* Cycle-by-cycle access. aw_run_step stores the cycle record as JSON. */
AW_API aw_status aw_run_create(const aw_config* cfg, aw_run** out);
AW_API void aw_run_free(aw_run* run);
AW_API int aw_run_done(const aw_run* run);
AW_API aw_status aw_run_step(aw_run* run, char** record_json);
/* Copies the current weights; *n_p and *n_s receive the term counts. */
AW_API aw_status aw_run_omega(const aw_run* run, double* omega_p, size_t* n_p, double* omega_s, size_t* n_s);
AW_API aw_status aw_run_evaluate(const aw_run* run, aw_metrics* out);

/* Runs every config (worker slots, threads = 0 for the default) and returns
 * the ranked CSV matrix. */
AW_API aw_status aw_compare(const aw_config* const* cfgs, size_t count, int grid, size_t threads, char** csv);

/* Self-checks. *passed is 1 or 0; the report is human readable. A failing
 * check is not an error: the call still returns AW_OK. */
AW_API aw_status aw_gradcheck(uint64_t seed, int sabotage, int* passed, char** report);
AW_API aw_status aw_oracle_check(int* passed, char** report);
AW_API aw_status aw_quad_bench(int* passed, char** report);

/* Output. format is "csv" or "svg". */
AW_API aw_status aw_plot(const char* runlog_path, const char* format, char** out);
AW_API aw_status aw_dump_samples(const char* dir, const char* mask_group, uint64_t seed, size_t count,
                                 size_t* files_written);

#ifdef __cplusplus
}
#endif

#endif
