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

#include <gtest/gtest.h>

#include "auxweight/data.hpp"
#include "auxweight/tunable.hpp"

using namespace auxweight;

namespace {

const FeatureExtractor& fe() {
    static const FeatureExtractor f = init_extractor(42);
    return f;
}

struct Pair {
    Tensor pred, gt;
};

Pair pair(std::uint64_t seed) {
    const Batch b = make_batch(MaskGroup::all()[1], seed, 0, 2);
    return {composite(inpaint(init_generator(seed + 100), b.gt, b.mask), b.gt, b.mask), b.gt};
}

} // namespace

TEST(Weights, SigmoidExamples) {
    const AuxConfig cfg;
    const AuxWeights w0 = weights_from_params(cfg, init_equal(cfg));
    EXPECT_EQ(w0.omega_p, (std::vector<double>{1.0, 1.0, 1.0}));
    EXPECT_EQ(w0.omega_s, (std::vector<double>{375.0, 375.0, 375.0}));

    // 750 * sigmoid(20) sits 1.55e-6 below the ceiling; one more unit of phi
    // brings it inside 1e-6.
    const AuxWeights sat = weights_from_params(cfg, AuxParams{{0, 0, 0}, {20, 21, 20}});
    EXPECT_NEAR(sat.omega_s[0], 750.0 / (1.0 + std::exp(-20.0)), 1e-12);
    EXPECT_NEAR(sat.omega_s[0], 750.0, 2e-6);
    EXPECT_NEAR(sat.omega_s[1], 750.0, 1e-6);
    EXPECT_LT(sat.omega_s[1], 750.0);

    const AuxWeights three = weights_from_params(cfg, AuxParams{{std::log(3.0)}, {}});
    EXPECT_NEAR(three.omega_p[0], 1.5, 1e-15);
}

TEST(Weights, StrictBounds) {
    const AuxConfig cfg;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const AuxWeights w = weights_from_params(cfg, init_random(cfg, s, 5.0));
        for (double v : w.omega_p) {
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, cfg.lambda_p);
        }
        for (double v : w.omega_s) {
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, cfg.lambda_s);
        }
    }
}

TEST(Weights, InitModes) {
    const AuxConfig cfg;
    EXPECT_EQ(init_equal(cfg), init_equal(cfg));
    EXPECT_EQ(init_random(cfg, 3), init_random(cfg, 3));
    EXPECT_NE(init_random(cfg, 3), init_random(cfg, 4));
    const AuxParams p = init_random(cfg, 3);
    EXPECT_EQ(AuxParams::from_flat(p.flat(), 3), p);
    AuxConfig bad;
    bad.lambda_s = 0.0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Tpl, SupersetOfPerceptualLoss) {
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Pair p = pair(s);
        const std::vector<double> ones{1.0, 1.0, 1.0};
        // Same summation order, so equal to the last bit.
        EXPECT_EQ(tpl(fe(), p.pred, p.gt, ones), standard_perceptual(fe(), p.pred, p.gt));
        EXPECT_EQ(tsl(fe(), p.pred, p.gt, ones), standard_style(fe(), p.pred, p.gt));
        const AuxConfig cfg;
        EXPECT_EQ(tpl(fe(), p.pred, p.gt, weights_from_params(cfg, init_equal(cfg)).omega_p),
                  standard_perceptual(fe(), p.pred, p.gt));
    }
}

TEST(Tpl, DotProductOracleAndLinearity) {
    const Pair p = pair(7);
    const std::vector<double> w1{0.3, 1.7, 0.9}, w2{1.1, 0.2, 1.4};
    std::vector<double> tp, ts;
    for (int n = 1; n <= 3; ++n) {
        tp.push_back(perceptual_term(fe(), p.pred, p.gt, n));
        ts.push_back(style_term(fe(), p.pred, p.gt, n));
    }
    double dp = 0.0, ds = 0.0;
    for (int n = 0; n < 3; ++n) {
        dp += w1[n] * tp[n];
        ds += w2[n] * ts[n] * 300.0;
    }
    EXPECT_NEAR(tpl(fe(), p.pred, p.gt, w1), dp, 1e-12);
    const std::vector<double> ws{w2[0] * 300.0, w2[1] * 300.0, w2[2] * 300.0};
    EXPECT_NEAR(tsl(fe(), p.pred, p.gt, ws), ds, 1e-12 * std::max(1.0, ds));

    std::vector<double> mix(3);
    for (int n = 0; n < 3; ++n) mix[n] = 2.0 * w1[n] + 0.5 * w2[n];
    EXPECT_NEAR(tpl(fe(), p.pred, p.gt, mix),
                2.0 * tpl(fe(), p.pred, p.gt, w1) + 0.5 * tpl(fe(), p.pred, p.gt, w2), 1e-12);

    const std::vector<double> tiny{1e-300, 1e-300, 1e-300};
    EXPECT_LT(tpl(fe(), p.pred, p.gt, tiny), 1e-290);
    EXPECT_EQ(tsl(fe(), p.gt, p.gt, ws), 0.0);
}

TEST(TotalLoss, Reductions) {
    const Pair p = pair(9);
    const MainWeights lm;
    const AuxWeights unit{{1, 1, 1}, {1, 1, 1}};
    EXPECT_EQ(total_loss(fe(), p.pred, p.gt, lm, unit),
              main_loss(p.pred, p.gt, lm) + standard_perceptual(fe(), p.pred, p.gt) + standard_style(fe(), p.pred, p.gt));
    const AuxWeights tiny{{1e-300, 1e-300, 1e-300}, {1e-300, 1e-300, 1e-300}};
    EXPECT_EQ(total_loss(fe(), p.gt, p.gt, lm, tiny), main_loss(p.gt, p.gt, lm));
    const AuxWeights w{{0.4, 1.2, 1.9}, {12.0, 700.0, 3.0}};
    EXPECT_NEAR(total_loss(fe(), p.pred, p.gt, lm, w),
                main_loss(p.pred, p.gt, lm) + tpl(fe(), p.pred, p.gt, w.omega_p) + tsl(fe(), p.pred, p.gt, w.omega_s),
                1e-12);

    Tape tape;
    const LossGraph g = record_losses(fe(), tape.constant(p.pred), p.gt);
    const double ref = total_loss(fe(), p.pred, p.gt, lm, w);
    EXPECT_NEAR(total_loss(g, lm, w).value().item(), ref, 1e-12 * ref);
}

TEST(TplGradient, SigmoidChainRule) {
    const Pair p = pair(11);
    const AuxConfig cfg;
    const AuxParams phi{{0.3, -1.2, 2.0}, {0.0, 0.5, -0.7}};
    const auto dw = weight_jacobian_diag(cfg, phi);
    const AuxWeights w = weights_from_params(cfg, phi);
    const double h = 1e-5;
    for (std::size_t n = 0; n < 3; ++n) {
        const double term = perceptual_term(fe(), p.pred, p.gt, static_cast<int>(n + 1));
        const double analytic = w.omega_p[n] * (1.0 - w.omega_p[n] / cfg.lambda_p) * term;
        EXPECT_NEAR(dw[n] * term, analytic, 1e-15);
        AuxParams up = phi, dn = phi;
        up.phi_p[n] += h;
        dn.phi_p[n] -= h;
        const double fd = (tpl(fe(), p.pred, p.gt, weights_from_params(cfg, up).omega_p) -
                           tpl(fe(), p.pred, p.gt, weights_from_params(cfg, dn).omega_p)) /
                          (2.0 * h);
        EXPECT_LT(relative_error(analytic, fd), 1e-6);
    }
}
