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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "auxweight/auxweight.h"

namespace {

enum Exit { kPass = 0, kAssertion = 1, kConfig = 2 };

int exit_for(aw_status s) {
    switch (s) {
    case AW_OK:
        return kPass;
    case AW_ERR_CONFIG:
    case AW_ERR_INVALID_ARGUMENT:
    case AW_ERR_IO:
    case AW_ERR_PARSE:
        return kConfig;
    default:
        return kAssertion;
    }
}

int report_error(aw_status s, const char* what) {
    std::fprintf(stderr, "auxweight %s: %s\n", what, aw_last_error());
    return exit_for(s);
}

// Owning wrapper for library strings.
struct Str {
    char* p = nullptr;
    ~Str() { aw_string_free(p); }
    std::string view() const { return p ? p : ""; }
};

struct Config {
    aw_config* p = nullptr;
    ~Config() { aw_config_free(p); }
};

bool write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return static_cast<bool>(std::cout);
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    return static_cast<bool>(f);
}

aw_status load(const std::string& path, Config& c) { return aw_config_load(path.c_str(), &c.p); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"auxweight: tunable perceptual/style losses with auxiliary weight adaptation"};
    app.require_subcommand(0, 1);
    bool print_default = false;
    app.add_flag("--print-default-config", print_default, "Print the complete default config as TOML");

    // train
    auto* train = app.add_subcommand("train", "Run one training job and write its JSONL log");
    std::string train_cfg, train_out;
    std::optional<std::uint64_t> train_seed, train_iters;
    train->add_option("-c,--config", train_cfg, "Config file (TOML)")->required();
    train->add_option("-o,--output", train_out, "Override the log path");
    train->add_option("--seed", train_seed, "Override the seed");
    train->add_option("--iters", train_iters, "Override the cycle count");

    // compare
    auto* compare = app.add_subcommand("compare", "Run several configs and print a ranked CSV");
    std::vector<std::string> compare_cfgs;
    std::string compare_out;
    bool compare_grid = false;
    std::size_t compare_threads = 0;
    compare->add_option("-c,--config", compare_cfgs, "Config files")->required()->expected(1, -1);
    compare->add_flag("--grid", compare_grid, "Add the 3x3x3 fixed-weight grid built from the first config");
    compare->add_option("-j,--threads", compare_threads, "Worker slots (0 = AUXWEIGHT_THREADS / cores)");
    compare->add_option("-o,--output", compare_out, "CSV path (default stdout)");

    // self checks
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every op and loss");
    std::uint64_t gc_seed = 7;
    bool gc_sabotage = false;
    gradcheck->add_option("--seed", gc_seed, "Check-point seed");
    gradcheck->add_flag("--sabotage", gc_sabotage, "Include an op with a deliberately wrong backward");
    auto* oracle = app.add_subcommand("oracle-check", "Surrogate gradient against hypergradient oracles");
    auto* quad = app.add_subcommand("quad-bench", "AWA on the quadratic bilevel testbed");

    // plot
    auto* plot = app.add_subcommand("plot", "Weight trajectories from a run log");
    std::string plot_in, plot_fmt = "csv", plot_out;
    plot->add_option("-i,--input", plot_in, "Run log (JSONL)")->required();
    plot->add_option("-f,--format", plot_fmt, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));
    plot->add_option("-o,--output", plot_out, "Output path (default stdout)");

    // dump-samples
    auto* dump = app.add_subcommand("dump-samples", "Write ground truth, mask and masked images as PPM");
    std::string dump_dir = "samples", dump_group = "(0.1,0.2]";
    std::uint64_t dump_seed = 0;
    std::size_t dump_count = 8;
    dump->add_option("-o,--output", dump_dir, "Directory");
    dump->add_option("-m,--mask-group", dump_group, "Mask ratio group, e.g. (0.1,0.2] or its index");
    dump->add_option("--seed", dump_seed, "Data seed");
    dump->add_option("-n,--count", dump_count, "Number of samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    if (print_default) {
        Str s;
        if (aw_status st = aw_default_config_toml(&s.p)) return report_error(st, "--print-default-config");
        std::cout << s.view();
        return kPass;
    }

    if (*train) {
        Config c;
        if (aw_status st = load(train_cfg, c)) return report_error(st, "train");
        if (!train_out.empty()) aw_config_set_output(c.p, train_out.c_str());
        if (train_seed) aw_config_set_seed(c.p, *train_seed);
        if (train_iters) aw_config_set_iters(c.p, *train_iters);
        aw_train_result r{};
        const aw_status st = aw_train(c.p, &r);
        Str out;
        aw_config_output(c.p, &out.p);
        if (st == AW_ERR_ABORTED) {
            std::fprintf(stderr, "auxweight train: run aborted: %s (log: %s)\n", aw_last_error(), out.view().c_str());
            return kAssertion;
        }
        if (st) return report_error(st, "train");
        std::printf("log: %s\nrecords: %llu\npsnr %.6f  ssim %.6f  mae %.6f  perceptual_distance %.6f\n",
                    out.view().c_str(), static_cast<unsigned long long>(r.records), r.summary.psnr, r.summary.ssim,
                    r.summary.mae, r.summary.perceptual_distance);
        return kPass;
    }

    if (*compare) {
        if (compare_cfgs.size() < 2 && !compare_grid) {
            std::fprintf(stderr, "auxweight compare: need at least two configs (or --grid)\n");
            return kConfig;
        }
        std::vector<Config> cfgs(compare_cfgs.size());
        std::vector<const aw_config*> ptrs;
        for (std::size_t i = 0; i < compare_cfgs.size(); ++i) {
            if (aw_status st = load(compare_cfgs[i], cfgs[i])) return report_error(st, "compare");
            ptrs.push_back(cfgs[i].p);
        }
        Str csv;
        if (aw_status st = aw_compare(ptrs.data(), ptrs.size(), compare_grid, compare_threads, &csv.p))
            return report_error(st, "compare");
        if (!write_out(compare_out, csv.view())) {
            std::fprintf(stderr, "auxweight compare: cannot write '%s'\n", compare_out.c_str());
            return kConfig;
        }
        return kPass;
    }

    auto check = [](aw_status st, int passed, const Str& report, const char* what) -> int {
        if (st) return report_error(st, what);
        std::cout << report.view();
        return passed ? kPass : kAssertion;
    };
    if (*gradcheck) {
        Str r;
        int passed = 0;
        const aw_status st = aw_gradcheck(gc_seed, gc_sabotage, &passed, &r.p);
        return check(st, passed, r, "gradcheck");
    }
    if (*oracle) {
        Str r;
        int passed = 0;
        const aw_status st = aw_oracle_check(&passed, &r.p);
        return check(st, passed, r, "oracle-check");
    }
    if (*quad) {
        Str r;
        int passed = 0;
        const aw_status st = aw_quad_bench(&passed, &r.p);
        return check(st, passed, r, "quad-bench");
    }

    if (*plot) {
        Str out;
        if (aw_status st = aw_plot(plot_in.c_str(), plot_fmt.c_str(), &out.p)) return report_error(st, "plot");
        if (!write_out(plot_out, out.view())) {
            std::fprintf(stderr, "auxweight plot: cannot write '%s'\n", plot_out.c_str());
            return kConfig;
        }
        return kPass;
    }

    if (*dump) {
        std::size_t written = 0;
        if (aw_status st = aw_dump_samples(dump_dir.c_str(), dump_group.c_str(), dump_seed, dump_count, &written))
            return report_error(st, "dump-samples");
        std::printf("wrote %zu files to %s\n", written, dump_dir.c_str());
        return kPass;
    }

    std::cout << app.help();
    return kConfig;
}
