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

#include "auxweight/auxweight.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "auxweight/harness.hpp"

struct aw_config {
    auxweight::RunConfig cfg;
};

struct aw_run {
    std::unique_ptr<auxweight::Trainer> trainer;
};

namespace {

thread_local std::string g_last_error;

aw_status fail(aw_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

aw_status give(const std::string& s, char** out) {
    *out = dup(s);
    return *out ? AW_OK : fail(AW_ERR_INTERNAL, "out of memory");
}

aw_metrics to_c(const auxweight::Metrics& m) { return {m.psnr, m.ssim, m.mae, m.perceptual_distance}; }

// Runs fn, translating exceptions into status codes.
template <class F>
aw_status guarded(F&& fn) {
    g_last_error.clear();
    try {
        return fn();
    } catch (const auxweight::ConfigError& e) {
        return fail(AW_ERR_CONFIG, e.what());
    } catch (const auxweight::LogParseError& e) {
        return fail(AW_ERR_PARSE, e.what());
    } catch (const auxweight::RunAborted& e) {
        return fail(AW_ERR_ABORTED, e.what());
    } catch (const auxweight::InvalidArgument& e) {
        return fail(AW_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(AW_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(AW_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(AW_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(AW_ERR_INTERNAL, "unknown error");
    }
}

#define AW_REQUIRE(cond, what)                                                                                        \
    do {                                                                                                              \
        if (!(cond)) return fail(AW_ERR_INVALID_ARGUMENT, what);                                                     \
    } while (0)

} // namespace

extern "C" {

const char* aw_version(void) { return "0.1.0"; }

const char* aw_last_error(void) { return g_last_error.c_str(); }

void aw_string_free(char* s) { std::free(s); }

aw_status aw_default_config_toml(char** out) {
    AW_REQUIRE(out, "aw_default_config_toml: null output");
    return guarded([&] { return give(auxweight::default_config_toml(), out); });
}

aw_status aw_config_parse(const char* toml, aw_config** out) {
    AW_REQUIRE(toml && out, "aw_config_parse: null argument");
    return guarded([&] {
        *out = new aw_config{auxweight::parse_config(toml)};
        return AW_OK;
    });
}

aw_status aw_config_load(const char* path, aw_config** out) {
    AW_REQUIRE(path && out, "aw_config_load: null argument");
    return guarded([&] {
        *out = new aw_config{auxweight::load_config(path)};
        return AW_OK;
    });
}

aw_status aw_config_clone(const aw_config* cfg, aw_config** out) {
    AW_REQUIRE(cfg && out, "aw_config_clone: null argument");
    return guarded([&] {
        *out = new aw_config{cfg->cfg};
        return AW_OK;
    });
}

void aw_config_free(aw_config* cfg) { delete cfg; }

aw_status aw_config_to_toml(const aw_config* cfg, char** out) {
    AW_REQUIRE(cfg && out, "aw_config_to_toml: null argument");
    return guarded([&] { return give(auxweight::to_toml(cfg->cfg), out); });
}

aw_status aw_config_set_seed(aw_config* cfg, uint64_t seed) {
    AW_REQUIRE(cfg, "aw_config_set_seed: null config");
    cfg->cfg.seed = seed;
    return AW_OK;
}

aw_status aw_config_set_iters(aw_config* cfg, uint64_t iters) {
    AW_REQUIRE(cfg, "aw_config_set_iters: null config");
    cfg->cfg.iters = iters;
    return AW_OK;
}

aw_status aw_config_set_output(aw_config* cfg, const char* path) {
    AW_REQUIRE(cfg && path && *path, "aw_config_set_output: null or empty path");
    return guarded([&] {
        cfg->cfg.output = path;
        return AW_OK;
    });
}

aw_status aw_config_set_reweighter(aw_config* cfg, const char* name) {
    AW_REQUIRE(cfg && name, "aw_config_set_reweighter: null argument");
    return guarded([&] {
        try {
            cfg->cfg.reweighter = auxweight::parse_reweighter(name);
        } catch (const auxweight::InvalidArgument& e) {
            throw auxweight::ConfigError(e.what());
        }
        return AW_OK;
    });
}

aw_status aw_config_output(const aw_config* cfg, char** out) {
    AW_REQUIRE(cfg && out, "aw_config_output: null argument");
    return guarded([&] { return give(cfg->cfg.output, out); });
}

aw_status aw_train(const aw_config* cfg, aw_train_result* result) {
    AW_REQUIRE(cfg, "aw_train: null config");
    return guarded([&] {
        cfg->cfg.validate();
        const auxweight::TrainResult r = auxweight::run_train(cfg->cfg);
        if (result) *result = aw_train_result{to_c(r.summary), r.records, r.aborted ? 1 : 0};
        return r.aborted ? fail(AW_ERR_ABORTED, r.abort_reason) : AW_OK;
    });
}

aw_status aw_run_create(const aw_config* cfg, aw_run** out) {
    AW_REQUIRE(cfg && out, "aw_run_create: null argument");
    return guarded([&] {
        *out = new aw_run{std::make_unique<auxweight::Trainer>(cfg->cfg)};
        return AW_OK;
    });
}

void aw_run_free(aw_run* run) { delete run; }

int aw_run_done(const aw_run* run) { return !run || run->trainer->done(); }

aw_status aw_run_step(aw_run* run, char** record_json) {
    AW_REQUIRE(run, "aw_run_step: null run");
    AW_REQUIRE(!run->trainer->done(), "aw_run_step: run already finished");
    return guarded([&] {
        const nlohmann::json rec = run->trainer->step();
        return record_json ? give(rec.dump(), record_json) : AW_OK;
    });
}

aw_status aw_run_omega(const aw_run* run, double* omega_p, size_t* n_p, double* omega_s, size_t* n_s) {
    AW_REQUIRE(run && n_p && n_s, "aw_run_omega: null argument");
    return guarded([&] {
        const auxweight::AuxWeights w = run->trainer->omega();
        const std::size_t cap_p = *n_p, cap_s = *n_s;
        *n_p = w.omega_p.size();
        *n_s = w.omega_s.size();
        if (omega_p)
            for (std::size_t i = 0; i < std::min(cap_p, w.omega_p.size()); ++i) omega_p[i] = w.omega_p[i];
        if (omega_s)
            for (std::size_t i = 0; i < std::min(cap_s, w.omega_s.size()); ++i) omega_s[i] = w.omega_s[i];
        return AW_OK;
    });
}

aw_status aw_run_evaluate(const aw_run* run, aw_metrics* out) {
    AW_REQUIRE(run && out, "aw_run_evaluate: null argument");
    return guarded([&] {
        *out = to_c(run->trainer->evaluate());
        return AW_OK;
    });
}

aw_status aw_compare(const aw_config* const* cfgs, size_t count, int grid, size_t threads, char** csv) {
    AW_REQUIRE(cfgs && csv, "aw_compare: null argument");
    return guarded([&] {
        std::vector<auxweight::RunConfig> all;
        for (std::size_t i = 0; i < count; ++i) {
            if (!cfgs[i]) throw auxweight::InvalidArgument("aw_compare: null config");
            all.push_back(cfgs[i]->cfg);
        }
        const auto rows = auxweight::run_compare(all, auxweight::CompareOptions{grid != 0, threads});
        return give(auxweight::compare_csv(rows), csv);
    });
}

aw_status aw_gradcheck(uint64_t seed, int sabotage, int* passed, char** report) {
    AW_REQUIRE(passed, "aw_gradcheck: null argument");
    return guarded([&] {
        auxweight::GradCheckOptions o;
        o.seed = seed;
        o.sabotage = sabotage != 0;
        const auto r = auxweight::run_gradcheck(o);
        *passed = r.pass ? 1 : 0;
        return report ? give(r.format(), report) : AW_OK;
    });
}

aw_status aw_oracle_check(int* passed, char** report) {
    AW_REQUIRE(passed, "aw_oracle_check: null argument");
    return guarded([&] {
        const auto r = auxweight::run_oracle_check();
        *passed = r.pass() ? 1 : 0;
        return report ? give(r.format(), report) : AW_OK;
    });
}

aw_status aw_quad_bench(int* passed, char** report) {
    AW_REQUIRE(passed, "aw_quad_bench: null argument");
    return guarded([&] {
        const auto r = auxweight::run_quad_bench();
        *passed = r.pass ? 1 : 0;
        return report ? give(r.format(), report) : AW_OK;
    });
}

aw_status aw_plot(const char* runlog_path, const char* format, char** out) {
    AW_REQUIRE(runlog_path && format && out, "aw_plot: null argument");
    return guarded([&] {
        const auxweight::PlotFormat f = auxweight::parse_plot_format(format);
        if (!std::filesystem::exists(runlog_path))
            return fail(AW_ERR_IO, std::string("no such run log '") + runlog_path + "'");
        return give(auxweight::emit_trajectory(auxweight::read_runlog(runlog_path), f), out);
    });
}

aw_status aw_dump_samples(const char* dir, const char* mask_group, uint64_t seed, size_t count,
                          size_t* files_written) {
    AW_REQUIRE(dir && mask_group, "aw_dump_samples: null argument");
    return guarded([&] {
        const auxweight::MaskGroup g = auxweight::MaskGroup::parse(mask_group);
        const auto paths = auxweight::dump_samples(dir, g, seed, count);
        if (files_written) *files_written = paths.size();
        return AW_OK;
    });
}

} // extern "C"
