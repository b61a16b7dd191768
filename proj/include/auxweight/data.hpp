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
#include <stdexcept>
#include <string>
#include <string_view>

#include "auxweight/tensor.hpp"

namespace auxweight {

inline constexpr std::size_t kImageSize = 32;

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hole-ratio interval (lo, hi] used to bucket masks by difficulty.
struct MaskGroup {
    double lo = 0.1;
    double hi = 0.2;

    static const std::array<MaskGroup, 6>& all();
    /// Accepts "(0.1,0.2]", "0.1-0.2" or the group index "1".
    static MaskGroup parse(std::string_view text);
    std::string name() const;
    std::size_t index() const;
    bool contains(double ratio) const noexcept { return ratio > lo && ratio <= hi; }
    friend bool operator==(const MaskGroup&, const MaskGroup&) = default;
};

/// One inpainting example. Mask 1 = known pixel.
struct Sample {
    Tensor gt;     // 3 x S x S, values in [0, 1]
    Tensor mask;   // 1 x S x S, binary
    Tensor masked; // gt * mask
};

/// A stacked set of samples.
struct Batch {
    Tensor gt;   // N x 3 x S x S
    Tensor mask; // N x 1 x S x S
    std::size_t size() const { return gt.dim(0); }
};

/// Procedural image: sinusoidal gratings plus soft rectangles, clamped to [0, 1].
Tensor gen_image(std::uint64_t seed, std::uint64_t idx, std::size_t size = kImageSize);

/// 1-3 rectangular holes whose union has a hole ratio inside `group`.
Tensor gen_mask(const MaskGroup& group, std::uint64_t seed, std::uint64_t idx, std::size_t size = kImageSize);

double hole_ratio(const Tensor& mask);

Sample make_sample(const MaskGroup& group, std::uint64_t seed, std::uint64_t idx, std::size_t size = kImageSize);

/// Samples idx0 .. idx0 + count - 1 stacked into a batch.
Batch make_batch(const MaskGroup& group, std::uint64_t seed, std::uint64_t idx0, std::size_t count,
                 std::size_t size = kImageSize);

/// Binary P6 dump of a 3-channel (or 1-channel, replicated) image in [0, 1].
std::string to_ppm(const Tensor& image);

} // namespace auxweight
