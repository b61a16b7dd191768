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
#include <cstdio>
#include <sstream>

#include "auxweight/harness.hpp"
#include "auxweight/splitmix64.hpp"

namespace auxweight {

namespace {

constexpr std::size_t kOracleImage = 16;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> scaled(std::span<const double> v, double c) {
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x *= c;
    return out;
}

} // namespace

double normwise_rel_error(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "normwise_rel_error: length mismatch");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return norm(d) / std::max({norm(a), norm(b), 1e-300});
}

OracleFixture make_oracle_fixture(std::uint64_t seed, std::size_t k, double alpha) {
    OracleFixture f;
    f.setup.fe = init_extractor(42);
    f.setup.arch = GeneratorArch{4, 8, 8, 4};
    f.setup.model.kind = OptimizerKind::sgd;
    f.setup.model.lr = alpha;
    f.setup.awa.k = k;
    const MaskGroup group = MaskGroup::all()[1];
    const Generator gen = init_generator(seed, f.setup.arch);
    f.state = ModelState::init(gen, f.setup.model);
    for (std::size_t j = 0; j < k; ++j) f.batches.push_back(make_batch(group, seed, 2 * j, 2, kOracleImage));
    f.pool = make_guidance_pool(f.setup.fe, make_batch(group, seed, kGuidanceIndexBase, 4, kOracleImage));
    return f;
}

OracleCheckReport run_oracle_check(const OracleCheckOptions& opts) {
    OracleCheckReport rep;

    // Frozen-Jacobian identity across random states.
    for (std::uint64_t seed : opts.seeds) {
        for (std::size_t k : opts.ks) {
            for (std::size_t s = 0; s < opts.states; ++s) {
                const std::uint64_t state_seed = SplitMix64(seed * 7919 + s * 104729 + k).next();
                const OracleFixture f = make_oracle_fixture(state_seed, k, opts.frozen_alpha);
                const AuxParams phi = init_random(f.setup.aux, state_seed ^ 0xABCDULL, 1.0);
                const auto frozen = oracle_hypergradient_frozen(f.setup, f.state, phi, f.batches, f.pool);
                const LookaheadResult la =
                    lookahead(f.setup, f.state, f.batches, weights_from_params(f.setup.aux, phi));
                const GuidanceResult g =
                    guidance_eval(f.setup.fe, f.setup.arch, la.state.theta, f.pool, f.setup.awa.guidance, true);
                const auto sg = surrogate_grad(f.setup.aux, phi, la.bundle, g.grad).flat();
                const double err = normwise_rel_error(frozen, scaled(sg, opts.frozen_alpha));
                rep.frozen_max_rel_error = std::max(rep.frozen_max_rel_error, err);
                ++rep.frozen_points;
            }
        }
    }
    rep.frozen_pass = rep.frozen_points > 0 && rep.frozen_max_rel_error < 1e-10;

    // Surrogate vs full finite-difference hypergradient.
    auto compare = [&](std::uint64_t seed, double alpha, std::size_t k) {
        const OracleFixture f = make_oracle_fixture(seed, k, alpha);
        const AuxParams phi = init_random(f.setup.aux, seed ^ 0x1234ULL, 0.5);
        const auto unrolled = oracle_hypergradient_unrolled(f.setup, f.state, phi, f.batches, f.pool, opts.fd_step);
        const LookaheadResult la = lookahead(f.setup, f.state, f.batches, weights_from_params(f.setup.aux, phi));
        const GuidanceResult g =
            guidance_eval(f.setup.fe, f.setup.arch, la.state.theta, f.pool, f.setup.awa.guidance, true);
        const auto sg = scaled(surrogate_grad(f.setup.aux, phi, la.bundle, g.grad).flat(), alpha);
        const double cos = dot(sg, unrolled) / std::max(norm(sg) * norm(unrolled), 1e-300);
        return AlphaErrorRow{alpha, normwise_rel_error(sg, unrolled), cos};
    };
    rep.cosine_small_alpha = compare(opts.seeds.empty() ? 1 : opts.seeds.front(), opts.cosine_alpha, 1).cosine;
    rep.cosine_pass = rep.cosine_small_alpha > 0.99;

    // The generator is piecewise smooth, so a single fixture's error curve
    // jumps wherever a change of alpha flips relu or abs patterns along the
    // lookahead. The trend is read off the geometric mean over fixtures.
    for (double a : opts.scaling_alphas) {
        AlphaErrorRow row{a, 0.0, 1.0};
        double log_sum = 0.0;
        for (std::uint64_t seed : opts.scaling_seeds) {
            const AlphaErrorRow r = compare(seed, a, opts.scaling_k);
            log_sum += std::log(std::max(r.rel_error, 1e-300));
            row.cosine = std::min(row.cosine, r.cosine);
        }
        row.rel_error = opts.scaling_seeds.empty() ? 0.0 : std::exp(log_sum / static_cast<double>(opts.scaling_seeds.size()));
        rep.alpha_table.push_back(row);
    }
    rep.scaling_pass = rep.alpha_table.size() >= 2;
    for (std::size_t i = 1; i < rep.alpha_table.size(); ++i) {
        const double ratio = rep.alpha_table[i].rel_error / rep.alpha_table[i - 1].rel_error;
        rep.alpha_ratios.push_back(ratio);
        rep.scaling_pass = rep.scaling_pass && ratio < 0.6;
    }
    return rep;
}

std::string OracleCheckReport::format() const {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "frozen identity: max rel error %.3e over %zu points (< 1e-10): %s\n",
                  frozen_max_rel_error, frozen_points, frozen_pass ? "ok" : "FAIL");
    os << buf;
    std::snprintf(buf, sizeof buf, "cosine(surrogate, unrolled) at small alpha, K=1: %.8f (> 0.99): %s\n",
                  cosine_small_alpha, cosine_pass ? "ok" : "FAIL");
    os << buf;
    os << "error vs alpha:\n";
    std::snprintf(buf, sizeof buf, "  %10s %14s %12s %10s\n", "alpha", "gm_rel_error", "min_cosine", "ratio");
    os << buf;
    for (std::size_t i = 0; i < alpha_table.size(); ++i) {
        const auto& r = alpha_table[i];
        if (i == 0)
            std::snprintf(buf, sizeof buf, "  %10.4g %14.6e %12.8f %10s\n", r.alpha, r.rel_error, r.cosine, "-");
        else
            std::snprintf(buf, sizeof buf, "  %10.4g %14.6e %12.8f %10.4f\n", r.alpha, r.rel_error, r.cosine,
                          alpha_ratios[i - 1]);
        os << buf;
    }
    os << "alpha scaling (ratio < 0.6): " << (scaling_pass ? "ok" : "FAIL") << "\n";
    os << "oracle-check: " << (pass() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

} // namespace auxweight
