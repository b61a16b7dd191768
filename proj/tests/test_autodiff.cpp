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
#include <random>

#include <gtest/gtest.h>

#include "auxweight/autodiff.hpp"
#include "auxweight/splitmix64.hpp"

using namespace auxweight;

namespace {

Tensor random_tensor(std::uint64_t seed, Tensor::Shape shape, double lo = -1.0, double hi = 1.0) {
    SplitMix64 rng(seed);
    Tensor t(std::move(shape));
    for (auto& v : t.storage()) v = rng.uniform(lo, hi);
    return t;
}

double at_padded(const Tensor& x, std::size_t n, std::size_t c, long h, long w) {
    if (h < 0 || w < 0 || h >= static_cast<long>(x.dim(2)) || w >= static_cast<long>(x.dim(3))) return 0.0;
    return x.at(n, c, static_cast<std::size_t>(h), static_cast<std::size_t>(w));
}

} // namespace

TEST(Tensor, ShapeChecks) {
    EXPECT_THROW(Tensor({2, 0}), InvalidArgument);
    EXPECT_THROW(Tensor({1, 1, 1, 1, 1}), InvalidArgument);
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), InvalidArgument);
    EXPECT_THROW(Tensor({2}).item(), InvalidArgument);
    EXPECT_EQ(Tensor::scalar(3.5).item(), 3.5);
    const Tensor t({2, 3}, 1.0);
    EXPECT_EQ(t.reshaped({3, 2}).shape(), (Tensor::Shape{3, 2}));
    EXPECT_THROW(t.reshaped({4}), InvalidArgument);
}

TEST(Conv2d, OnesGiveNine) {
    const Tensor y = kernels::conv2d(Tensor::ones({1, 1, 3, 3}), Tensor::ones({1, 1, 3, 3}), Tensor({1}, 0.0), 1, 0);
    ASSERT_EQ(y.shape(), (Tensor::Shape{1, 1, 1, 1}));
    EXPECT_EQ(y[0], 9.0);
}

TEST(Conv2d, ZeroKernelGivesBias) {
    const Tensor x = random_tensor(1, {2, 3, 5, 5});
    const Tensor b({2}, std::vector<double>{0.25, -1.5});
    const Tensor y = kernels::conv2d(x, Tensor::zeros({2, 3, 3, 3}), b, 1, 1);
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t o = 0; o < 2; ++o)
            for (std::size_t i = 0; i < 5; ++i)
                for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(y.at(n, o, i, j), b[o]);
}

TEST(Conv2d, MatchesLoopReference) {
    const Tensor x = random_tensor(2, {1, 2, 4, 4});
    const Tensor k = random_tensor(3, {3, 2, 3, 3});
    const Tensor b = random_tensor(4, {3});
    const Tensor y = kernels::conv2d(x, k, b, 2, 1);
    ASSERT_EQ(y.shape(), (Tensor::Shape{1, 3, 2, 2}));
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                double ref = b[o];
                for (std::size_t c = 0; c < 2; ++c)
                    for (std::size_t u = 0; u < 3; ++u)
                        for (std::size_t v = 0; v < 3; ++v)
                            ref += k.at(o, c, u, v) * at_padded(x, 0, c, static_cast<long>(2 * i + u) - 1,
                                                                 static_cast<long>(2 * j + v) - 1);
                EXPECT_NEAR(y.at(0, o, i, j), ref, 1e-12);
            }
}

TEST(Conv2d, RejectsShapeMismatch) {
    EXPECT_THROW(kernels::conv2d(Tensor::ones({1, 2, 3, 3}), Tensor::ones({1, 3, 3, 3}), Tensor({1}), 1, 0),
                 InvalidArgument);
    EXPECT_THROW(kernels::conv2d(Tensor::ones({1, 1, 3, 3}), Tensor::ones({2, 1, 3, 3}), Tensor({1}), 1, 0),
                 InvalidArgument);
}

TEST(MaxPool, Basics) {
    const PoolResult r = kernels::maxpool2d(Tensor({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}));
    EXPECT_EQ(r.output.item(), 4.0);
    EXPECT_EQ(r.argmax[0], 3u);
    const PoolResult c = kernels::maxpool2d(Tensor({1, 2, 4, 6}, 0.7));
    EXPECT_EQ(c.output.shape(), (Tensor::Shape{1, 2, 2, 3}));
    for (double v : c.output.data()) EXPECT_EQ(v, 0.7);
    // Ties: the first cell of the window wins.
    for (std::size_t i = 0; i < c.argmax.size(); ++i) {
        const std::size_t plane = i / 6, oy = (i % 6) / 3, ox = i % 3;
        EXPECT_EQ(c.argmax[i], plane * 24 + 2 * oy * 6 + 2 * ox);
    }
    EXPECT_THROW(kernels::maxpool2d(Tensor({1, 1, 3, 2})), InvalidArgument);
}

TEST(MaxPool, MatchesScan) {
    const Tensor x = random_tensor(5, {1, 3, 8, 8});
    const Tensor y = kernels::maxpool2d(x).output;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                double m = x.at(0, c, 2 * i, 2 * j);
                for (std::size_t u = 0; u < 2; ++u)
                    for (std::size_t v = 0; v < 2; ++v) m = std::max(m, x.at(0, c, 2 * i + u, 2 * j + v));
                EXPECT_EQ(y.at(0, c, i, j), m);
            }
}

TEST(MaxPool, TieGradientGoesToFirstCell) {
    Tape tape;
    Var x = tape.leaf(Tensor({1, 1, 2, 2}, 1.0));
    const Tensor g = tape.backward(sum(maxpool2d(x))).of(x);
    EXPECT_EQ(g.to_vector(), (std::vector<double>{1, 0, 0, 0}));
}

TEST(Elementwise, Values) {
    EXPECT_EQ(kernels::sigmoid(0.0), 0.5);
    const Tensor x({2}, std::vector<double>{-3.5, 2.0});
    EXPECT_EQ(kernels::unary(x, UnaryFn::relu).to_vector(), (std::vector<double>{0.0, 2.0}));
    EXPECT_EQ(kernels::unary(x, UnaryFn::abs).to_vector(), (std::vector<double>{3.5, 2.0}));
    EXPECT_EQ(kernels::unary(x, UnaryFn::square).to_vector(), (std::vector<double>{12.25, 4.0}));
}

TEST(Elementwise, AbsSubgradientAtZeroIsZero) {
    Tape tape;
    Var x = tape.leaf(Tensor({3}, std::vector<double>{0.0, -2.0, 2.0}));
    const Tensor g = tape.backward(sum(abs(x))).of(x);
    EXPECT_EQ(g.to_vector(), (std::vector<double>{0.0, -1.0, 1.0}));
}

TEST(Binary, Identities) {
    const Tensor x = random_tensor(6, {2, 3});
    EXPECT_EQ(kernels::binary(x, Tensor::zeros({2, 3}), BinaryFn::add), x);
    EXPECT_EQ(kernels::binary(x, Tensor::scalar(1.0), BinaryFn::mul), x);
    EXPECT_EQ(kernels::binary(x, x, BinaryFn::sub), Tensor::zeros({2, 3}));
    EXPECT_THROW(kernels::binary(x, Tensor::zeros({3, 2}), BinaryFn::add), InvalidArgument);
}

TEST(Reduce, SumAndMean) {
    const Tensor x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    EXPECT_EQ(kernels::reduce(x, ReduceMode::sum).item(), 10.0);
    EXPECT_EQ(kernels::reduce(x, ReduceMode::mean).item(), 2.5);
    for (const Tensor::Shape& s : {Tensor::Shape{7}, Tensor::Shape{3, 5}, Tensor::Shape{2, 3, 4, 5}})
        EXPECT_DOUBLE_EQ(kernels::reduce(Tensor(s, 0.37), ReduceMode::mean).item(), 0.37);
}

TEST(Gram, Examples) {
    EXPECT_EQ(kernels::gram(Tensor::zeros({1, 3, 2, 2})), Tensor::zeros({1, 3, 3}));
    EXPECT_EQ(kernels::gram(Tensor::ones({1, 1, 2, 2})).item(), 1.0);
    const Tensor f = random_tensor(7, {1, 2, 2, 2});
    const Tensor g = kernels::gram(f);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) {
            double ref = 0.0;
            for (std::size_t i = 0; i < 4; ++i) ref += f[a * 4 + i] * f[b * 4 + i];
            EXPECT_NEAR(g[a * 2 + b], ref / 8.0, 1e-12);
        }
}

TEST(Gram, SymmetricAndPositiveSemidefinite) {
    const Tensor f = random_tensor(8, {2, 5, 4, 4});
    const Tensor g = kernels::gram(f);
    SplitMix64 rng(9);
    for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = 0; b < 5; ++b) EXPECT_EQ(g[n * 25 + a * 5 + b], g[n * 25 + b * 5 + a]);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> v(5);
            for (auto& e : v) e = rng.uniform(-1, 1);
            double q = 0.0;
            for (std::size_t a = 0; a < 5; ++a)
                for (std::size_t b = 0; b < 5; ++b) q += v[a] * g[n * 25 + a * 5 + b] * v[b];
            EXPECT_GE(q, -1e-12);
        }
    }
}

TEST(Upsample, Examples) {
    const Tensor y = kernels::upsample_nearest2x(Tensor({1, 1, 1, 1}, 5.0));
    EXPECT_EQ(y, Tensor({1, 1, 2, 2}, 5.0));
    const Tensor x = random_tensor(10, {2, 3, 4, 4});
    const Tensor u = kernels::upsample_nearest2x(x);
    EXPECT_EQ(kernels::maxpool2d(u).output, x);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(u.at(1, c, i, j), x.at(1, c, i / 2, j / 2));
}

TEST(TotalVariation, Examples) {
    EXPECT_EQ(kernels::total_variation(Tensor({1, 3, 4, 4}, 0.3)).item(), 0.0);
    EXPECT_EQ(kernels::total_variation(Tensor({1, 1, 1, 2}, std::vector<double>{0, 1})).item(), 1.0);
    const Tensor x = random_tensor(11, {2, 3, 5, 6});
    double v = 0.0, h = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 5; ++i)
                for (std::size_t j = 0; j < 6; ++j) {
                    if (i + 1 < 5) v += std::fabs(x.at(n, c, i + 1, j) - x.at(n, c, i, j));
                    if (j + 1 < 6) h += std::fabs(x.at(n, c, i, j + 1) - x.at(n, c, i, j));
                }
    EXPECT_NEAR(kernels::total_variation(x).item(), v / (2 * 3 * 4 * 6) + h / (2 * 3 * 5 * 5), 1e-12);
}

TEST(Backward, SumGivesOnes) {
    Tape tape;
    Var x = tape.leaf(random_tensor(12, {2, 3, 4}));
    EXPECT_EQ(tape.backward(sum(x)).of(x), Tensor::ones({2, 3, 4}));
}

TEST(Backward, MeanOfSquares) {
    Tape tape;
    Var x = tape.leaf(Tensor({3}, std::vector<double>{1, 2, 3}));
    const Tensor g = tape.backward(mean(square(x))).of(x);
    EXPECT_DOUBLE_EQ(g[0], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(g[1], 4.0 / 3.0);
    EXPECT_DOUBLE_EQ(g[2], 2.0);
}

TEST(Backward, FanOutAccumulates) {
    Tape tape;
    const Tensor v = random_tensor(13, {4});
    Var x = tape.leaf(v);
    const Tensor a = tape.backward(sum(x * x)).of(x);
    const Tensor b = tape.backward(sum(square(x))).of(x);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(a[i], 2.0 * v[i]);
        EXPECT_DOUBLE_EQ(a[i], b[i]);
    }
}

TEST(Backward, RejectsNonScalarAndIsRepeatable) {
    Tape tape;
    Var x = tape.leaf(random_tensor(14, {3}));
    EXPECT_THROW(tape.backward(x * x), InvalidArgument);
    Var y = sum(sigmoid(x));
    EXPECT_EQ(tape.backward(y).of(x), tape.backward(y).of(x));
}

TEST(Backward, ConstantsGetNoGradient) {
    Tape tape;
    Var x = tape.leaf(random_tensor(15, {3}));
    Var c = tape.constant(random_tensor(16, {3}));
    const Gradients g = tape.backward(sum(x * c));
    EXPECT_FALSE(g.reached(c));
    EXPECT_EQ(g.of(c), Tensor::zeros({3}));
}

TEST(GradCheck, SumIsExact) {
    const auto r = grad_check([](Tape&, Var v) { return sum(v); }, random_tensor(17, {3, 4}), 1e-3);
    EXPECT_LT(r.max_rel_error, 1e-10);
    EXPECT_EQ(r.coords, 12u);
}

TEST(GradCheck, MeanSigmoid) {
    const auto r = grad_check([](Tape&, Var v) { return mean(sigmoid(v)); }, random_tensor(18, {3, 4}, -2, 2), 1e-5);
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, MaxPoolWithStrictMaxima) {
    Tensor x({1, 2, 4, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>((i * 7) % 32);
    const Tensor w = random_tensor(19, {1, 2, 2, 2});
    const auto r = grad_check([&](Tape& t, Var v) { return sum(maxpool2d(v) * t.constant(w)); }, x, 1e-4);
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, ConvAndGram) {
    const Tensor k = random_tensor(20, {3, 2, 3, 3});
    const Tensor b = random_tensor(21, {3});
    const auto r = grad_check(
        [&](Tape& t, Var v) { return sum(gram(conv2d(v, t.constant(k), t.constant(b), 1, 1))); },
        random_tensor(22, {1, 2, 4, 4}), 1e-4);
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, CatchesWrongGradient) {
    // f = sum(x^2) but the "analytic" gradient claims x.
    const std::vector<double> p{0.5, -1.0, 2.0};
    const std::vector<double> wrong{0.5, -1.0, 2.0};
    auto f = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    EXPECT_GT(grad_check_flat(f, p, wrong, 1e-5).max_rel_error, 0.4);
}

TEST(RelativeError, Floor) {
    EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(relative_error(1e-10, 0.0), 1e-2);
    EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
}
