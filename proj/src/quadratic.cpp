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

#include <cmath>
#include <cstdio>
#include <sstream>

#include "auxweight/harness.hpp"
#include "auxweight/optim.hpp"
#include "auxweight/splitmix64.hpp"

namespace auxweight {

namespace {

Vec2 sub(const Vec2& x, const Vec2& y) { return {x[0] - y[0], x[1] - y[1]}; }
double dot(const Vec2& x, const Vec2& y) { return x[0] * y[0] + x[1] * y[1]; }

Vec2 inner_step(const QuadraticProblem& p, const Vec2& th, const Vec2& w) {
    Vec2 out;
    for (int i = 0; i < 2; ++i) {
        const double g = 2.0 * p.lambda_main * (th[i] - p.a[i]) + 2.0 * w[0] * (th[i] - p.b[i]) +
                         2.0 * w[1] * (th[i] - p.c[i]);
        out[i] = th[i] - p.alpha * g;
    }
    return out;
}

} // namespace

Vec2 quadratic_inner(const QuadraticProblem& p, Vec2 theta, const Vec2& omega) {
    for (std::size_t j = 0; j < p.k; ++j) theta = inner_step(p, theta, omega);
    return theta;
}

double quadratic_expected_loss(const QuadraticProblem& p, const Vec2& omega) {
    // The inner map is affine with slope r = 1 - 2 alpha S, so the mean
    // follows the same steps and the noise shrinks by r^K per coordinate.
    const Vec2 mean = quadratic_inner(p, p.theta, omega);
    const double r = 1.0 - 2.0 * p.alpha * (p.lambda_main + omega[0] + omega[1]);
    const double rk = std::pow(r, static_cast<double>(p.k));
    const Vec2 d = sub(mean, p.t);
    return dot(d, d) + rk * rk * 2.0 * p.theta_sigma * p.theta_sigma;
}

QuadraticOracle quadratic_oracle(const QuadraticProblem& p, double res) {
    require(res > 0.0, "quadratic_oracle: resolution must be positive");
    QuadraticOracle best;
    bool have = false;
    const auto steps = [&](double ceil) { return static_cast<std::size_t>(std::ceil(ceil / res - 1e-9)); };
    const std::size_t n0 = steps(p.box[0]), n1 = steps(p.box[1]);
    for (std::size_t i = 1; i < n0; ++i) {
        for (std::size_t j = 1; j < n1; ++j) {
            const Vec2 w{static_cast<double>(i) * res, static_cast<double>(j) * res};
            const double l = quadratic_expected_loss(p, w);
            ++best.grid_points;
            // Lexicographic scan order keeps the smallest point on ties.
            if (!have || l < best.loss) {
                best.omega = w;
                best.loss = l;
                have = true;
            }
        }
    }
    require(have, "quadratic_oracle: empty grid");
    return best;
}

std::vector<QuadraticProblem> pinned_quadratic_problems() {
    std::vector<QuadraticProblem> out;
    {
        QuadraticProblem p;
        p.name = "interior";
        p.theta_sigma = 0.02;
        p.a = {1.0, 0.0};
        p.b = {0.0, 1.0};
        p.c = {1.0, 1.0};
        p.alpha = 0.05;
        p.box = {2.0, 2.0};
        // Mean reaches t at omega = (0.7, 1.2).
        p.t = quadratic_inner(p, p.theta, {0.7, 1.2});
        out.push_back(p);
    }
    {
        QuadraticProblem p;
        p.name = "boundary";
        p.theta_sigma = 0.02;
        p.a = {1.0, 0.0};
        p.b = {0.0, 1.0};
        p.c = {0.0, -1.0};
        p.t = {0.1, 0.5};
        p.alpha = 0.05;
        p.box = {2.0, 2.0};
        out.push_back(p);
    }
    {
        QuadraticProblem p;
        p.name = "interior-unequal-box";
        p.theta = {0.5, -0.5};
        p.theta_sigma = 0.02;
        p.a = {1.0, 1.0};
        p.b = {-1.0, 0.5};
        p.c = {0.5, -1.0};
        p.alpha = 0.08;
        p.box = {1.0, 3.0};
        p.t = quadratic_inner(p, p.theta, {0.4, 2.0});
        out.push_back(p);
    }
    return out;
}

QuadBenchResult run_quadratic_bench(const QuadraticProblem& p, const QuadBenchOptions& o) {
    QuadBenchResult res;
    res.problem = p;
    res.oracle = quadratic_oracle(p);
    SplitMix64 rng(o.seed);
    std::vector<double> phi{0.0, 0.0};
    AdamState opt = AdamState::zeros(2, o.beta1, o.beta2, o.eps, o.weight_decay);
    auto omega_of = [&](const std::vector<double>& f) {
        return Vec2{p.box[0] * kernels::sigmoid(f[0]), p.box[1] * kernels::sigmoid(f[1])};
    };
    for (std::size_t cyc = 0; cyc < o.max_cycles; ++cyc) {
        const Vec2 w = omega_of(phi);
        if (cyc % o.trajectory_stride == 0) res.trajectory.emplace_back(cyc, w);
        Vec2 th{p.theta[0] + p.theta_sigma * rng.normal(), p.theta[1] + p.theta_sigma * rng.normal()};
        // Lookahead, keeping each step's aux-term gradients.
        Vec2 sum_b{0.0, 0.0}, sum_c{0.0, 0.0};
        for (std::size_t j = 0; j < p.k; ++j) {
            for (int i = 0; i < 2; ++i) {
                sum_b[i] += 2.0 * (th[i] - p.b[i]);
                sum_c[i] += 2.0 * (th[i] - p.c[i]);
            }
            th = inner_step(p, th, w);
        }
        const Vec2 g{2.0 * (th[0] - p.t[0]), 2.0 * (th[1] - p.t[1])};
        std::vector<double> grad(2);
        for (int n = 0; n < 2; ++n) {
            const double s = kernels::sigmoid(phi[n]);
            grad[n] = -dot(g, n == 0 ? sum_b : sum_c) * p.box[n] * s * (1.0 - s);
        }
        if (o.beta > 0.0) adam_update(phi, grad, opt, o.beta);
        res.cycles = cyc + 1;
    }
    res.omega_final = omega_of(phi);
    res.trajectory.emplace_back(res.cycles, res.omega_final);
    for (int n = 0; n < 2; ++n)
        res.linf_scaled = std::max(res.linf_scaled, std::fabs(res.omega_final[n] - res.oracle.omega[n]) / p.box[n]);
    res.pass = res.linf_scaled < o.tolerance;
    return res;
}

QuadBenchSummary run_quad_bench(const QuadBenchOptions& opts) {
    QuadBenchSummary s;
    s.pass = true;
    for (const auto& p : pinned_quadratic_problems()) {
        s.results.push_back(run_quadratic_bench(p, opts));
        s.pass = s.pass && s.results.back().pass;
    }
    return s;
}

std::string QuadBenchSummary::format() const {
    std::ostringstream os;
    char buf[200];
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf,
                      "%-22s omega*=(%.2f, %.2f) omega=(%.4f, %.4f) linf/lambda=%.4f cycles=%zu: %s\n",
                      r.problem.name.c_str(), r.oracle.omega[0], r.oracle.omega[1], r.omega_final[0],
                      r.omega_final[1], r.linf_scaled, r.cycles, r.pass ? "ok" : "FAIL");
        os << buf;
        if (!r.pass) {
            os << "  trajectory (cycle: omega_1 omega_2):\n";
            for (const auto& [c, w] : r.trajectory) {
                std::snprintf(buf, sizeof buf, "    %zu: %.6f %.6f\n", c, w[0], w[1]);
                os << buf;
            }
        }
    }
    os << "quad-bench: " << (pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

} // namespace auxweight
