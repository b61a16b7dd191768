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
#include "auxweight/losses.hpp"
#include "auxweight/nets.hpp"

using namespace auxweight;

namespace {

struct Pair {
    Tensor pred, gt;
};

Pair random_pair(std::uint64_t seed, std::size_t n = 2) {
    const Batch b = make_batch(MaskGroup::all()[2], seed, 0, n);
    const Tensor pred = inpaint(init_generator(seed), b.gt, b.mask);
    return {composite(pred, b.gt, b.mask), b.gt};
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

const FeatureExtractor& fe() {
    static const FeatureExtractor f = init_extractor(42);
    return f;
}

} // namespace

TEST(L1, Examples) {
    const Pair p = random_pair(1);
    EXPECT_EQ(l1_loss(p.gt, p.gt), 0.0);
    Tensor shifted = p.gt;
    for (double& v : shifted.storage()) v += 0.5;
    EXPECT_NEAR(l1_loss(shifted, p.gt), 0.5, 1e-12);
    EXPECT_NEAR(l1_loss(p.pred, p.gt), mean_abs_diff(p.pred, p.gt), 1e-12);
    EXPECT_THROW(l1_loss(p.pred, Tensor::zeros({1, 3, 32, 32})), InvalidArgument);
}

TEST(TotalVariationLoss, Examples) {
    EXPECT_EQ(tv_loss(Tensor({1, 3, 8, 8}, 0.4)), 0.0);
    EXPECT_EQ(tv_loss(Tensor({1, 1, 1, 2}, std::vector<double>{0.0, 1.0})), 1.0);
}

TEST(PerceptualTerm, Examples) {
    const Pair p = random_pair(2);
    for (int n = 1; n <= 3; ++n) {
        EXPECT_EQ(perceptual_term(fe(), p.gt, p.gt, n), 0.0);
        EXPECT_EQ(perceptual_term(fe(), p.pred, p.gt, n), perceptual_term(fe(), p.gt, p.pred, n));
        const auto a = extract(fe(), p.pred), b = extract(fe(), p.gt);
        EXPECT_NEAR(perceptual_term(fe(), p.pred, p.gt, n), mean_abs_diff(a[n - 1], b[n - 1]), 1e-12);
    }
    EXPECT_THROW(perceptual_term(fe(), p.pred, p.gt, 0), InvalidArgument);
    EXPECT_THROW(perceptual_term(fe(), p.pred, p.gt, 4), InvalidArgument);
}

TEST(StyleTerm, Examples) {
    const Pair p = random_pair(3);
    for (int n = 1; n <= 3; ++n) {
        EXPECT_EQ(style_term(fe(), p.gt, p.gt, n), 0.0);
        const auto a = extract(fe(), p.pred), b = extract(fe(), p.gt);
        EXPECT_NEAR(style_term(fe(), p.pred, p.gt, n),
                    mean_abs_diff(kernels::gram(a[n - 1]), kernels::gram(b[n - 1])), 1e-12);
    }
}

TEST(StyleTerm, ChannelPermutationInvariant) {
    // Reversing the output channels of the last stage permutes the third
    // tap's channels identically for both images.
    FeatureExtractor perm = fe();
    Tensor& k = perm.kernels[2];
    const std::size_t out = k.dim(0), per = k.size() / out;
    Tensor flipped = k;
    for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < per; ++i) flipped[o * per + i] = k[(out - 1 - o) * per + i];
    k = flipped;
    const Pair p = random_pair(4);
    EXPECT_NEAR(style_term(perm, p.pred, p.gt, 3), style_term(fe(), p.pred, p.gt, 3), 1e-15);
    EXPECT_NEAR(perceptual_term(perm, p.pred, p.gt, 3), perceptual_term(fe(), p.pred, p.gt, 3), 1e-15);
}

TEST(StandardLosses, SumOfTerms) {
    const Pair p = random_pair(5);
    EXPECT_EQ(standard_perceptual(fe(), p.gt, p.gt), 0.0);
    EXPECT_EQ(standard_perceptual(fe(), p.pred, p.gt),
              perceptual_term(fe(), p.pred, p.gt, 1) + perceptual_term(fe(), p.pred, p.gt, 2) +
                  perceptual_term(fe(), p.pred, p.gt, 3));
    EXPECT_EQ(standard_style(fe(), p.pred, p.gt),
              style_term(fe(), p.pred, p.gt, 1) + style_term(fe(), p.pred, p.gt, 2) + style_term(fe(), p.pred, p.gt, 3));
}

TEST(MainLoss, Examples) {
    const Pair p = random_pair(6);
    Tensor shifted = p.gt;
    for (double& v : shifted.storage()) v += 0.25;
    EXPECT_NEAR(main_loss(shifted, p.gt, {1.0, 0.0}), 0.25, 1e-12);
    EXPECT_EQ(main_loss(p.pred, p.gt, {0.0, 0.0}), 0.0);
    EXPECT_NEAR(main_loss(p.pred, p.gt, {1.0, 0.1}), l1_loss(p.pred, p.gt) + 0.1 * tv_loss(p.pred), 1e-12);
}

TEST(LossGraph, MatchesPlainEvaluation) {
    const Pair p = random_pair(7);
    Tape tape;
    const LossGraph g = record_losses(fe(), tape.constant(p.pred), p.gt);
    EXPECT_EQ(g.l1.value().item(), l1_loss(p.pred, p.gt));
    EXPECT_EQ(g.tv.value().item(), tv_loss(p.pred));
    const AuxTermVector aux = g.aux_values();
    for (int n = 1; n <= 3; ++n) {
        EXPECT_EQ(aux.perceptual[n - 1], perceptual_term(fe(), p.pred, p.gt, n));
        EXPECT_EQ(aux.style[n - 1], style_term(fe(), p.pred, p.gt, n));
    }
    EXPECT_EQ(main_loss(g, {1.0, 0.1}).value().item(), main_loss(p.pred, p.gt, {1.0, 0.1}));
}

TEST(LossGraph, NonNegative) {
    for (std::uint64_t s = 10; s < 14; ++s) {
        const Pair p = random_pair(s);
        EXPECT_GE(l1_loss(p.pred, p.gt), 0.0);
        EXPECT_GE(tv_loss(p.pred), 0.0);
        for (int n = 1; n <= 3; ++n) {
            EXPECT_GE(perceptual_term(fe(), p.pred, p.gt, n), 0.0);
            EXPECT_GE(style_term(fe(), p.pred, p.gt, n), 0.0);
        }
    }
}

TEST(LossGraph, ScalingScalesGradient) {
    const Pair p = random_pair(8, 1);
    for (double c : {2.0, 0.5}) {
        Tape tape;
        Var x = tape.leaf(p.pred);
        const LossGraph g = record_losses(fe(), x, p.gt);
        for (Var term : {g.l1, g.tv, g.perceptual[1], g.style[0]}) {
            const Tensor a = tape.backward(term).of(x);
            const Tensor b = tape.backward(scale(term, c)).of(x);
            for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(b[i], c * a[i]);
        }
    }
}
