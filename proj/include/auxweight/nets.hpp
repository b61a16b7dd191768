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
#include <span>
#include <vector>

#include "auxweight/autodiff.hpp"
#include "auxweight/optim.hpp"

namespace auxweight {

inline constexpr std::size_t kNumTaps = 3;

/// Frozen three-stage conv/relu/maxpool feature extractor (3 -> 8 -> 16 -> 32
/// channels). Stands in for a pretrained classification backbone.
struct FeatureExtractor {
    std::uint64_t seed = 0;
    std::array<Tensor, kNumTaps> kernels;
    std::array<Tensor, kNumTaps> biases;
};

FeatureExtractor init_extractor(std::uint64_t seed);

/// Features after each pooling stage, recorded on the image's tape. The
/// extractor weights enter the tape as constants.
std::array<Var, kNumTaps> extract(const FeatureExtractor& fe, Var image);
std::array<Tensor, kNumTaps> extract(const FeatureExtractor& fe, const Tensor& image);

/// FNV-1a over the raw bytes of every extractor weight.
std::uint64_t checksum(const FeatureExtractor& fe);

/// Channel widths of the encoder/decoder generator.
struct GeneratorArch {
    std::size_t c1 = 8;
    std::size_t c2 = 16;
    std::size_t c3 = 16;
    std::size_t c4 = 8;

    friend bool operator==(const GeneratorArch&, const GeneratorArch&) = default;
};

/// conv(4->c1) relu, conv(c1->c2, stride 2) relu, conv(c2->c3) relu,
/// upsample x2, conv(c3->c4) relu, conv(c4->3) sigmoid. All kernels 3x3.
struct Generator {
    GeneratorArch arch;
    ParamSet params;
};

/// Parameter count of the default architecture.
inline constexpr std::size_t kGeneratorParamCount = 5163;

Generator init_generator(std::uint64_t seed, const GeneratorArch& arch = {});

/// Glorot-uniform kernels drawn in layer order from splitmix64(seed); zero biases.
ParamSet glorot_conv_params(std::uint64_t seed, std::span<const std::array<std::size_t, 2>> layers,
                            std::span<const char* const> names);

/// Generator forward on a tape; `params` holds one Var per ParamSet entry.
Var generator_forward(const GeneratorArch& arch, std::span<const Var> params, Var input);

/// Records the ParamSet entries as tape leaves.
std::vector<Var> param_leaves(Tape& tape, const ParamSet& params);

/// concat(gt * mask, mask): the 4-channel corrupted input. gt is N x 3 x H x W,
/// mask N x 1 x H x W with 1 = known pixel.
Tensor make_generator_input(const Tensor& gt, const Tensor& mask);

void check_binary_mask(const Tensor& mask);

/// Raw prediction for a corrupted image. Accepts rank-3 (single image) or
/// rank-4 (batched) inputs and returns the same rank.
Tensor inpaint(const Generator& gen, const Tensor& gt, const Tensor& mask);
Var inpaint(const GeneratorArch& arch, std::span<const Var> params, const Tensor& gt, const Tensor& mask);

/// mask * gt + (1 - mask) * pred, with the single-channel mask broadcast over
/// the image channels.
Tensor composite(const Tensor& pred, const Tensor& gt, const Tensor& mask);
Var composite(Var pred, const Tensor& gt, const Tensor& mask);

/// Promotes a rank-3 CHW tensor to NCHW with N = 1; rank-4 passes through.
Tensor as_batch(const Tensor& t);

} // namespace auxweight
