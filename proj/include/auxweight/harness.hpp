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

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auxweight/awa.hpp"
#include "auxweight/baselines.hpp"
#include "auxweight/config.hpp"
#include "auxweight/metrics.hpp"
#include "auxweight/runlog.hpp"

namespace auxweight {

// Disjoint sample-index ranges of one seed's data stream.
inline constexpr std::uint64_t kGuidanceIndexBase = 1ULL << 40;
inline constexpr std::uint64_t kEvalIndexBase = 1ULL << 41;

/// Worker slots for parallel runs: the core count, capped by AUXWEIGHT_THREADS.
std::size_t worker_slots();

// ---------------------------------------------------------------------------
// Training runs
// ---------------------------------------------------------------------------

/// One run, advanced a cycle at a time.
class Trainer {
public:
    explicit Trainer(RunConfig cfg);

    const RunConfig& config() const { return cfg_; }
    const TrainSetup& setup() const { return setup_; }
    const TrainState& state() const { return state_; }
    AuxWeights omega() const;
    bool done() const { return state_.iter >= cfg_.iters; }

    /// Runs one cycle and returns its log record. On RunAborted the state is
    /// rolled back to the last good cycle before rethrowing.
    nlohmann::json step();

    /// Metrics of the current model on the eval pool.
    Metrics evaluate() const;

    /// Training batch for cycle c.
    Batch batch(std::uint64_t c) const;

    /// Last-good state as an abort record.
    nlohmann::json abort_record(const std::string& reason) const;

    /// Summary over the eval points collected so far (or the current model
    /// when there are none).
    nlohmann::json summary_record() const;
    Metrics summary_metrics() const;

private:
    RunConfig cfg_;
    TrainSetup setup_;
    TrainState state_;
    std::optional<ReweighterState> rw_;
    std::optional<GuidancePool> pool_;
    Batch eval_batch_;
    std::vector<Metrics> evals_;
};

struct TrainResult {
    Metrics summary;
    std::size_t records = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Full run, writing header, records, summary (or abort) to `log`.
TrainResult run_train(const RunConfig& cfg, std::ostream& log);
/// Same, into cfg.output.
TrainResult run_train(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct CompareRow {
    std::string reweighter;
    std::string mask_group;
    Metrics metrics;
    std::size_t rank = 0;
    std::string output;
    bool aborted = false;
};

struct CompareOptions {
    // Adds a 3x3x3 grid of fixed per-layer weights built from the first config.
    bool grid = false;
    std::size_t threads = 0; // 0 = worker_slots()
};

/// Grid levels, as fractions of each ceiling, for layer-tied (omega_p, omega_s).
inline constexpr std::array<double, 3> kGridLevels = {0.25, 0.5, 0.75};

std::vector<RunConfig> grid_configs(const RunConfig& base);

/// Runs every config (in parallel worker slots) and ranks rows by perceptual
/// distance within each mask group (1 = best, ties share a rank).
std::vector<CompareRow> run_compare(const std::vector<RunConfig>& configs, const CompareOptions& opts = {});
void rank_rows(std::vector<CompareRow>& rows);
std::string compare_csv(const std::vector<CompareRow>& rows);

// ---------------------------------------------------------------------------
// Gradient checks
// ---------------------------------------------------------------------------

inline constexpr double kGradCheckTolerance = 1e-5;

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t coords = 0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    // Check points redrawn because a step straddled a kink.
    std::size_t redraws = 0;
    bool pass = false;
};

struct GradCheckSummary {
    std::vector<GradCheckEntry> entries;
    bool pass = false;
    std::string format() const;
};

struct GradCheckOptions {
    std::uint64_t seed = 7;
    // Step for the single ops; their check points keep kinks 10 steps away.
    double op_step = 1e-3;
    // Step for l1 and tv on pixels. Both are piecewise linear and the check
    // points keep kinks two steps away, so a long step only cuts roundoff.
    double pixel_step = 1e-2;
    // Step for losses through the networks.
    double net_step = 3e-4;
    // Adds an op whose backward is deliberately wrong.
    bool sabotage = false;
};

GradCheckSummary run_gradcheck(const GradCheckOptions& opts = {});

// ---------------------------------------------------------------------------
// Hypergradient oracles
// ---------------------------------------------------------------------------

struct OracleCheckOptions {
    std::vector<std::uint64_t> seeds = {1, 2};
    std::vector<std::size_t> ks = {1, 2};
    std::size_t states = 20;
    double frozen_alpha = 1e-2;
    double cosine_alpha = 1e-4;
    std::vector<double> scaling_alphas = {1e-2, 5e-3, 2.5e-3};
    std::size_t scaling_k = 2;
    // Fixtures whose errors are pooled (geometric mean) for the scaling trend.
    std::vector<std::uint64_t> scaling_seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    double fd_step = 1e-3;
};

struct AlphaErrorRow {
    double alpha = 0.0;
    double rel_error = 0.0; // geometric mean over the scaling fixtures
    double cosine = 0.0;    // worst over the scaling fixtures
};

struct OracleCheckReport {
    double frozen_max_rel_error = 0.0;
    std::size_t frozen_points = 0;
    double cosine_small_alpha = 0.0;
    std::vector<AlphaErrorRow> alpha_table;
    std::vector<double> alpha_ratios; // error(alpha) / error(2 alpha)
    bool frozen_pass = false;
    bool cosine_pass = false;
    bool scaling_pass = false;
    bool pass() const { return frozen_pass && cosine_pass && scaling_pass; }
    std::string format() const;
};

/// Small SGD setup used by the oracle checks; `seed` drives the generator,
/// batches and pool.
struct OracleFixture {
    TrainSetup setup;
    ModelState state;
    std::vector<Batch> batches;
    GuidancePool pool;
};

OracleFixture make_oracle_fixture(std::uint64_t seed, std::size_t k, double alpha);

/// ||a - b|| / max(||a||, ||b||, 1e-300).
double normwise_rel_error(std::span<const double> a, std::span<const double> b);

OracleCheckReport run_oracle_check(const OracleCheckOptions& opts = {});

// ---------------------------------------------------------------------------
// Quadratic bilevel testbed
// ---------------------------------------------------------------------------

using Vec2 = std::array<double, 2>;

struct QuadraticProblem {
    std::string name;
    Vec2 theta{0.0, 0.0}; // mean of the per-cycle starting point
    double theta_sigma = 0.0;
    Vec2 a{}, b{}, c{}, t{};
    double lambda_main = 1.0;
    double alpha = 0.05;
    std::size_t k = 1;
    std::array<double, 2> box{2.0, 2.0}; // ceilings of (omega_1, omega_2)
};

/// K plain gradient steps on lambda|th-a|^2 + w1|th-b|^2 + w2|th-c|^2.
Vec2 quadratic_inner(const QuadraticProblem& p, Vec2 theta, const Vec2& omega);

/// Expected guidance |theta^K - t|^2 over theta ~ N(theta, sigma^2 I).
double quadratic_expected_loss(const QuadraticProblem& p, const Vec2& omega);

struct QuadraticOracle {
    Vec2 omega{};
    double loss = 0.0;
    std::size_t grid_points = 0;
};

/// Grid search at resolution 0.01 over the open box; ties go to the
/// lexicographically smallest point.
QuadraticOracle quadratic_oracle(const QuadraticProblem& p, double resolution = 0.01);

/// The three pinned instances: interior, boundary, interior with unequal box.
std::vector<QuadraticProblem> pinned_quadratic_problems();

struct QuadBenchOptions {
    std::size_t max_cycles = 20000;
    double beta = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double tolerance = 0.05; // times the ceiling, per coordinate
    std::uint64_t seed = 11;
    std::size_t trajectory_stride = 500;
};

struct QuadBenchResult {
    QuadraticProblem problem;
    QuadraticOracle oracle;
    Vec2 omega_final{};
    double linf_scaled = 0.0; // max_i |omega_i - omega*_i| / ceiling_i
    std::size_t cycles = 0;
    bool pass = false;
    std::vector<std::pair<std::size_t, Vec2>> trajectory;
};

QuadBenchResult run_quadratic_bench(const QuadraticProblem& p, const QuadBenchOptions& opts = {});

struct QuadBenchSummary {
    std::vector<QuadBenchResult> results;
    bool pass = false;
    std::string format() const;
};

QuadBenchSummary run_quad_bench(const QuadBenchOptions& opts = {});

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

enum class PlotFormat { csv, svg };
PlotFormat parse_plot_format(std::string_view s);

/// csv: iter + one column per weight; svg: TPL and TSL panels.
std::string emit_trajectory(const RunLog& log, PlotFormat format);

/// Writes gt/mask/masked PPM triplets into `dir`; returns the written paths.
std::vector<std::string> dump_samples(const std::string& dir, const MaskGroup& group, std::uint64_t seed,
                                      std::size_t count);

} // namespace auxweight
