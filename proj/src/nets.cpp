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

#include "auxweight/nets.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "auxweight/splitmix64.hpp"

namespace auxweight {

double SplitMix64::normal() noexcept {
    double u1 = unit();
    const double u2 = unit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

constexpr std::size_t kKernel = 3;

Tensor glorot_kernel(SplitMix64& rng, std::size_t out, std::size_t in) {
    Tensor w({out, in, kKernel, kKernel});
    const double fan_in = static_cast<double>(in * kKernel * kKernel);
    const double fan_out = static_cast<double>(out * kKernel * kKernel);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w.data()) v = (2.0 * rng.unit() - 1.0) * limit;
    return w;
}

} // namespace

ParamSet glorot_conv_params(std::uint64_t seed, std::span<const std::array<std::size_t, 2>> layers,
                            std::span<const char* const> names) {
    require(names.size() == layers.size(), "glorot_conv_params: one name per layer");
    SplitMix64 rng(seed);
    ParamSet ps;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto [out, in] = layers[i];
        ps.add(std::string(names[i]) + ".weight", glorot_kernel(rng, out, in));
        ps.add(std::string(names[i]) + ".bias", Tensor({out}));
    }
    return ps;
}

FeatureExtractor init_extractor(std::uint64_t seed) {
    static constexpr std::array<std::array<std::size_t, 2>, kNumTaps> layers{{{8, 3}, {16, 8}, {32, 16}}};
    static constexpr std::array<const char*, kNumTaps> names{"stage1", "stage2", "stage3"};
    const ParamSet ps = glorot_conv_params(seed, layers, names);
    FeatureExtractor fe;
    fe.seed = seed;
    for (std::size_t i = 0; i < kNumTaps; ++i) {
        fe.kernels[i] = ps[2 * i];
        fe.biases[i] = ps[2 * i + 1];
    }
    return fe;
}

std::array<Var, kNumTaps> extract(const FeatureExtractor& fe, Var image) {
    const auto& s = image.value().shape();
    require(s.size() == 4 && s[1] == 3, "extract: expected N x 3 x H x W image, got " + shape_string(s));
    require(s[2] % 8 == 0 && s[3] % 8 == 0, "extract: spatial extents must be multiples of 8");
    Tape& tape = *image.tape();
    std::array<Var, kNumTaps> taps;
    Var x = image;
    for (std::size_t i = 0; i < kNumTaps; ++i) {
        x = maxpool2d(relu(conv2d(x, tape.constant(fe.kernels[i]), tape.constant(fe.biases[i]), 1, 1)));
        taps[i] = x;
    }
    return taps;
}

std::array<Tensor, kNumTaps> extract(const FeatureExtractor& fe, const Tensor& image) {
    Tape tape;
    auto taps = extract(fe, tape.constant(as_batch(image)));
    return {taps[0].value(), taps[1].value(), taps[2].value()};
}

std::uint64_t checksum(const FeatureExtractor& fe) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const Tensor& t) {
        for (double v : t.data()) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        }
    };
    for (std::size_t i = 0; i < kNumTaps; ++i) {
        mix(fe.kernels[i]);
        mix(fe.biases[i]);
    }
    return h;
}

Generator init_generator(std::uint64_t seed, const GeneratorArch& arch) {
    const std::array<std::array<std::size_t, 2>, 5> layers{
        {{arch.c1, 4}, {arch.c2, arch.c1}, {arch.c3, arch.c2}, {arch.c4, arch.c3}, {3, arch.c4}}};
    static constexpr std::array<const char*, 5> names{"enc1", "enc2", "mid", "dec1", "head"};
    return Generator{arch, glorot_conv_params(seed, layers, names)};
}

Var generator_forward(const GeneratorArch& arch, std::span<const Var> p, Var input) {
    require(p.size() == 10, "generator_forward: expected 10 parameter tensors, got " + std::to_string(p.size()));
    require(input.value().rank() == 4 && input.value().dim(1) == 4,
            "generator_forward: expected N x 4 x H x W input, got " + shape_string(input.value().shape()));
    require(p[0].value().dim(0) == arch.c1 && p[2].value().dim(0) == arch.c2 && p[4].value().dim(0) == arch.c3 &&
                p[6].value().dim(0) == arch.c4,
            "generator_forward: parameters do not match the architecture");
    Var x = relu(conv2d(input, p[0], p[1], 1, 1));
    x = relu(conv2d(x, p[2], p[3], 2, 1));
    x = relu(conv2d(x, p[4], p[5], 1, 1));
    x = upsample_nearest2x(x);
    x = relu(conv2d(x, p[6], p[7], 1, 1));
    return sigmoid(conv2d(x, p[8], p[9], 1, 1));
}

std::vector<Var> param_leaves(Tape& tape, const ParamSet& params) {
    std::vector<Var> out;
    out.reserve(params.size());
    for (const auto& e : params.entries()) out.push_back(tape.leaf(e.value));
    return out;
}

Tensor as_batch(const Tensor& t) {
    if (t.rank() == 4) return t;
    require(t.rank() == 3, "expected a CHW or NCHW tensor, got " + shape_string(t.shape()));
    return t.reshaped({1, t.dim(0), t.dim(1), t.dim(2)});
}

void check_binary_mask(const Tensor& mask) {
    for (double v : mask.data())
        require(v == 0.0 || v == 1.0, "mask values must be 0 or 1");
}

Tensor make_generator_input(const Tensor& gt, const Tensor& mask) {
    require(gt.rank() == 4 && gt.dim(1) == 3, "inpaint: ground truth must be N x 3 x H x W");
    require(mask.rank() == 4 && mask.dim(1) == 1 && mask.dim(0) == gt.dim(0) && mask.dim(2) == gt.dim(2) &&
                mask.dim(3) == gt.dim(3),
            "inpaint: mask shape " + shape_string(mask.shape()) + " does not match image " + shape_string(gt.shape()));
    check_binary_mask(mask);
    const std::size_t n = gt.dim(0), hw = gt.dim(2) * gt.dim(3);
    Tensor in({n, 4, gt.dim(2), gt.dim(3)});
    for (std::size_t s = 0; s < n; ++s) {
        const double* m = mask.data().data() + s * hw;
        double* dst = in.data().data() + s * 4 * hw;
        for (std::size_t c = 0; c < 3; ++c) {
            const double* g = gt.data().data() + (s * 3 + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[c * hw + i] = g[i] * m[i];
        }
        std::copy_n(m, hw, dst + 3 * hw);
    }
    return in;
}

Var inpaint(const GeneratorArch& arch, std::span<const Var> params, const Tensor& gt, const Tensor& mask) {
    Tape& tape = *params.front().tape();
    return generator_forward(arch, params, tape.constant(make_generator_input(gt, mask)));
}

Tensor inpaint(const Generator& gen, const Tensor& gt, const Tensor& mask) {
    const bool single = gt.rank() == 3;
    Tape tape;
    std::vector<Var> p;
    for (const auto& e : gen.params.entries()) p.push_back(tape.constant(e.value));
    Tensor out = inpaint(gen.arch, p, as_batch(gt), as_batch(mask)).value();
    if (single) return out.reshaped({out.dim(1), out.dim(2), out.dim(3)});
    return out;
}

namespace {

// Mask broadcast to the image's channel count.
Tensor expand_mask(const Tensor& mask, const Tensor& like) {
    const Tensor m = as_batch(mask);
    require(m.dim(0) == like.dim(0) && m.dim(2) == like.dim(2) && m.dim(3) == like.dim(3) && m.dim(1) == 1,
            "composite: mask shape " + shape_string(mask.shape()) + " does not match " + shape_string(like.shape()));
    const std::size_t n = like.dim(0), c = like.dim(1), hw = like.dim(2) * like.dim(3);
    Tensor out(like.shape());
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t ch = 0; ch < c; ++ch)
            std::copy_n(m.data().data() + s * hw, hw, out.data().data() + (s * c + ch) * hw);
    return out;
}

} // namespace

Tensor composite(const Tensor& pred, const Tensor& gt, const Tensor& mask) {
    require(pred.shape() == gt.shape(), "composite: prediction and ground truth shapes differ");
    const Tensor p = as_batch(pred), g = as_batch(gt);
    const Tensor m = expand_mask(mask, p);
    Tensor out(p.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] * g[i] + (1.0 - m[i]) * p[i];
    return out.reshaped(pred.shape());
}

Var composite(Var pred, const Tensor& gt, const Tensor& mask) {
    Tape& tape = *pred.tape();
    require(pred.value().shape() == gt.shape(), "composite: prediction and ground truth shapes differ");
    const Tensor m = expand_mask(mask, gt);
    Tensor keep(m.shape()), known(m.shape());
    for (std::size_t i = 0; i < m.size(); ++i) {
        keep[i] = 1.0 - m[i];
        known[i] = m[i] * gt[i];
    }
    return pred * tape.constant(std::move(keep)) + tape.constant(std::move(known));
}

} // namespace auxweight
