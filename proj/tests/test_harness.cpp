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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "auxweight/harness.hpp"

using namespace auxweight;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("auxweight_test_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig tiny(ReweighterKind kind, std::uint64_t iters = 3) {
    RunConfig c;
    c.reweighter = kind;
    c.iters = iters;
    c.batch_size = 2;
    c.guidance_pool = 4;
    c.eval_pool = 4;
    c.eval_window = 2;
    return c;
}

std::string run_to_string(const RunConfig& c, TrainResult* res = nullptr) {
    std::ostringstream os;
    const TrainResult r = run_train(c, os);
    if (res) *res = r;
    return os.str();
}

std::size_t count_char(const std::string& s, char ch) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), ch)); }

} // namespace

TEST(Train, ZeroIterationsLogsHeaderAndSummary) {
    TrainResult r;
    const std::string log = run_to_string(tiny(ReweighterKind::awa, 0), &r);
    EXPECT_EQ(r.records, 0u);
    EXPECT_FALSE(r.aborted);
    std::istringstream in(log);
    const RunLog parsed = parse_runlog(in);
    EXPECT_TRUE(parsed.records.empty());
    ASSERT_TRUE(parsed.summary.has_value());
    EXPECT_GT(parsed.summary->psnr, 0.0);
}

TEST(Train, ByteIdenticalReplay) {
    for (auto kind : {ReweighterKind::awa, ReweighterKind::fixed, ReweighterKind::gradnorm}) {
        const RunConfig c = tiny(kind);
        const std::string a = run_to_string(c), b = run_to_string(c);
        EXPECT_EQ(a, b) << to_string(kind);
        std::istringstream in(a);
        const RunLog log = parse_runlog(in);
        EXPECT_EQ(log.records.size(), 3u);
        EXPECT_EQ(log.summary_points, 2u);
    }
    RunConfig other = tiny(ReweighterKind::awa);
    other.seed = 1;
    EXPECT_NE(run_to_string(other), run_to_string(tiny(ReweighterKind::awa)));
}

TEST(Train, TrainerStepsMatchRunLog) {
    Trainer t(tiny(ReweighterKind::awa, 2));
    const auto first = t.step();
    EXPECT_EQ(first.at("iter").get<std::uint64_t>(), 0u);
    EXPECT_FALSE(first.at("guidance").is_null());
    t.step();
    EXPECT_TRUE(t.done());
    const AuxWeights w = t.omega();
    EXPECT_EQ(w.omega_p.size(), 3u);
}

TEST(Train, LookaheadLengthSmoke) {
    for (std::size_t k : {1u, 5u, 10u}) {
        RunConfig c = tiny(ReweighterKind::awa, 500);
        c.awa.k = k;
        std::istringstream in(run_to_string(c));
        const RunLog log = parse_runlog(in);
        ASSERT_EQ(log.records.size(), 500u);
        ASSERT_FALSE(log.abort_reason.has_value());
        // Least-squares slope of the guidance over the run.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& r : log.records) {
            ASSERT_TRUE(r.guidance.has_value());
            ASSERT_TRUE(std::isfinite(*r.guidance) && std::isfinite(r.l1));
            const double x = static_cast<double>(r.iter), y = *r.guidance;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = 500.0;
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        EXPECT_LE(slope, 0.0) << "K = " << k;
    }
}

TEST(Compare, IdenticalConfigsGiveIdenticalRows) {
    const fs::path dir = scratch("compare");
    RunConfig a = tiny(ReweighterKind::fixed, 2), b = a, c = tiny(ReweighterKind::adaloss, 2);
    a.output = (dir / "a.jsonl").string();
    b.output = (dir / "b.jsonl").string();
    c.output = (dir / "c.jsonl").string();
    CompareOptions opts;
    opts.threads = 2;
    const auto rows = run_compare({a, b, c}, opts);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].metrics.perceptual_distance, rows[1].metrics.perceptual_distance);
    EXPECT_EQ(rows[0].metrics.psnr, rows[1].metrics.psnr);
    EXPECT_EQ(rows[0].rank, rows[1].rank);

    const std::string csv = compare_csv(rows);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "reweighter,mask_group,psnr,ssim,mae,perceptual_distance,rank");
    std::size_t n = 0;
    while (std::getline(in, line)) {
        // The quoted mask group holds one extra comma.
        EXPECT_EQ(count_char(line, ','), 7u) << line;
        ++n;
    }
    EXPECT_EQ(n, 3u);

    b.output = a.output;
    EXPECT_THROW(run_compare({a, b}, opts), ConfigError);
}

TEST(Compare, RankingTiesShare) {
    std::vector<CompareRow> rows(4);
    const double pd[] = {0.3, 0.1, 0.3, 0.2};
    for (int i = 0; i < 4; ++i) {
        rows[i].mask_group = "(0.1,0.2]";
        rows[i].metrics.perceptual_distance = pd[i];
    }
    rank_rows(rows);
    EXPECT_EQ(rows[1].rank, 1u);
    EXPECT_EQ(rows[3].rank, 2u);
    EXPECT_EQ(rows[0].rank, 3u);
    EXPECT_EQ(rows[2].rank, 3u);
}

TEST(Compare, GridCoversLevels) {
    RunConfig base;
    base.output = "out/run.jsonl";
    const auto grid = grid_configs(base);
    ASSERT_EQ(grid.size(), 27u);
    for (const auto& g : grid) {
        EXPECT_EQ(g.reweighter, ReweighterKind::fixed);
        EXPECT_NO_THROW(g.validate());
    }
    EXPECT_EQ(grid.front().init_omega_p, (std::vector<double>{0.5, 0.5, 0.5}));
    EXPECT_EQ(grid.back().init_omega_s, (std::vector<double>{562.5, 562.5, 562.5}));
}

TEST(Quadratic, InnerStepClosedForm) {
    QuadraticProblem p;
    p.a = {1.0, 0.0};
    p.b = {0.0, 1.0};
    p.c = {1.0, 1.0};
    p.alpha = 0.1;
    const Vec2 th = quadratic_inner(p, {0.0, 0.0}, {0.5, 0.25});
    // theta - alpha * (2(theta - a) + 1(theta - b) + 0.5(theta - c))
    EXPECT_NEAR(th[0], 0.1 * (2.0 + 0.5), 1e-15);
    EXPECT_NEAR(th[1], 0.1 * (1.0 + 0.5), 1e-15);
}

TEST(Quadratic, OracleExamples) {
    QuadraticProblem flat;
    flat.a = flat.b = flat.c = flat.t = flat.theta = {0.3, -0.2};
    const QuadraticOracle o = quadratic_oracle(flat);
    EXPECT_EQ(o.loss, 0.0);
    EXPECT_EQ(o.omega, (Vec2{0.01, 0.01}));
    EXPECT_EQ(o.grid_points, 199u * 199u);

    const auto pinned = pinned_quadratic_problems();
    ASSERT_EQ(pinned.size(), 3u);
    const QuadraticOracle interior = quadratic_oracle(pinned[0]);
    EXPECT_NEAR(interior.omega[0], 0.7, 0.05);
    EXPECT_NEAR(interior.omega[1], 1.2, 0.05);
    const QuadraticOracle unequal = quadratic_oracle(pinned[2]);
    EXPECT_LT(unequal.omega[0], 1.0);
    EXPECT_LT(unequal.omega[1], 3.0);
}

TEST(Quadratic, BenchPasses) {
    const QuadBenchSummary s = run_quad_bench();
    EXPECT_TRUE(s.pass) << s.format();
    for (const auto& r : s.results) {
        EXPECT_GT(r.omega_final[0], 0.0);
        EXPECT_LT(r.omega_final[0], r.problem.box[0]);
    }
}

TEST(Plot, CsvAndSvg) {
    const fs::path dir = scratch("plot");
    RunConfig c = tiny(ReweighterKind::awa, 3);
    c.output = (dir / "run.jsonl").string();
    run_train(c);
    const RunLog log = read_runlog(c.output);
    const std::string csv = emit_trajectory(log, PlotFormat::csv);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "iter,omega_p1,omega_p2,omega_p3,omega_s1,omega_s2,omega_s3");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        EXPECT_EQ(std::stoull(cell), rows);
        std::vector<double> w;
        while (std::getline(cells, cell, ',')) w.push_back(std::stod(cell));
        ASSERT_EQ(w.size(), 6u);
        // %.17g round-trips exactly.
        EXPECT_EQ(w[0], log.records[rows].omega_p[0]);
        EXPECT_EQ(w[5], log.records[rows].omega_s[2]);
        ++rows;
    }
    EXPECT_EQ(rows, 3u);

    const std::string svg = emit_trajectory(log, PlotFormat::svg);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(count_char(svg, '\n') > 0, true);
    std::size_t lines = 0;
    for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
    EXPECT_EQ(lines, 6u);

    EXPECT_EQ(parse_plot_format("svg"), PlotFormat::svg);
    EXPECT_THROW(parse_plot_format("png"), InvalidArgument);
}

TEST(DumpSamples, WritesPpmTriplets) {
    const fs::path dir = scratch("samples");
    const auto paths = dump_samples(dir.string(), MaskGroup::all()[2], 4, 2);
    ASSERT_EQ(paths.size(), 6u);
    for (const auto& p : paths) {
        ASSERT_TRUE(fs::exists(p)) << p;
        EXPECT_EQ(fs::file_size(p), std::string("P6\n32 32\n255\n").size() + 3 * 32 * 32);
    }
    const Sample s = make_sample(MaskGroup::all()[2], 4, 1);
    std::ifstream f(paths[3], std::ios::binary);
    const std::string content((std::istreambuf_iterator<char>(f)), {});
    EXPECT_EQ(content, to_ppm(s.gt));
}

TEST(WorkerSlots, CappedByEnvironment) {
    ::setenv("AUXWEIGHT_THREADS", "1", 1);
    EXPECT_EQ(worker_slots(), 1u);
    ::unsetenv("AUXWEIGHT_THREADS");
    EXPECT_GE(worker_slots(), 1u);
}
