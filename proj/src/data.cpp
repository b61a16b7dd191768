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

#include "auxweight/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "auxweight/splitmix64.hpp"

namespace auxweight {

const std::array<MaskGroup, 6>& MaskGroup::all() {
    static const std::array<MaskGroup, 6> groups{
        {{0.01, 0.1}, {0.1, 0.2}, {0.2, 0.3}, {0.3, 0.4}, {0.4, 0.5}, {0.5, 0.6}}};
    return groups;
}

std::string MaskGroup::name() const {
    auto fmt = [](double v) {
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, end);
    };
    return "(" + fmt(lo) + "," + fmt(hi) + "]";
}

std::size_t MaskGroup::index() const {
    const auto& g = all();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] == *this) return i;
    throw InvalidArgument("unknown mask group " + name());
}

MaskGroup MaskGroup::parse(std::string_view text) {
    std::string s;
    for (char c : text)
        if (c != ' ') s.push_back(c);
    for (const auto& g : all()) {
        if (s == g.name()) return g;
        if (s == g.name().substr(1, g.name().size() - 2)) return g;
        std::string dash = g.name().substr(1, g.name().size() - 2);
        std::replace(dash.begin(), dash.end(), ',', '-');
        if (s == dash) return g;
    }
    if (s.size() == 1 && s[0] >= '0' && s[0] <= '5') return all()[static_cast<std::size_t>(s[0] - '0')];
    throw InvalidArgument("unknown mask group '" + std::string(text) + "'");
}

Tensor gen_image(std::uint64_t seed, std::uint64_t idx, std::size_t size) {
    SplitMix64 rng(seed ^ idx);
    const double s = static_cast<double>(size);
    Tensor img({3, size, size}, 0.0);
    double base[3];
    for (double& b : base) b = rng.uniform(0.3, 0.7);

    struct Grating {
        double fx, fy, phase, amp[3];
    };
    const long gratings = rng.range(2, 4);
    std::vector<Grating> gs;
    for (long g = 0; g < gratings; ++g) {
        const double freq = rng.uniform(1.0, 6.0);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        Grating gr{freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi), {}};
        for (double& a : gr.amp) a = rng.uniform(-0.2, 0.2);
        gs.push_back(gr);
    }

    struct Rect {
        double cx, cy, hw, hh, soft, color[3];
    };
    const long rects = rng.range(1, 3);
    std::vector<Rect> rs;
    for (long r = 0; r < rects; ++r) {
        Rect rc{rng.uniform(0.0, s), rng.uniform(0.0, s), rng.uniform(2.0, s / 3.0), rng.uniform(2.0, s / 3.0),
                rng.uniform(0.5, 2.0), {}};
        for (double& c : rc.color) c = rng.uniform(-0.4, 0.4);
        rs.push_back(rc);
    }

    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double xf = static_cast<double>(x), yf = static_cast<double>(y);
            double v[3] = {base[0], base[1], base[2]};
            for (const auto& g : gs) {
                const double w = std::sin(2.0 * std::numbers::pi * (g.fx * xf + g.fy * yf) / s + g.phase);
                for (int c = 0; c < 3; ++c) v[c] += g.amp[c] * w;
            }
            for (const auto& r : rs) {
                const double ax = 1.0 / (1.0 + std::exp(-(r.hw - std::fabs(xf - r.cx)) / r.soft));
                const double ay = 1.0 / (1.0 + std::exp(-(r.hh - std::fabs(yf - r.cy)) / r.soft));
                for (int c = 0; c < 3; ++c) v[c] += r.color[c] * ax * ay;
            }
            for (std::size_t c = 0; c < 3; ++c) img[(c * size + y) * size + x] = std::clamp(v[c], 0.0, 1.0);
        }
    }
    return img;
}

double hole_ratio(const Tensor& mask) {
    std::size_t holes = 0;
    for (double v : mask.data())
        if (v == 0.0) ++holes;
    return static_cast<double>(holes) / static_cast<double>(mask.size());
}

Tensor gen_mask(const MaskGroup& group, std::uint64_t seed, std::uint64_t idx, std::size_t size) {
    const std::uint64_t salt = 0xD1B54A32D192ED03ULL * (group.index() + 1);
    SplitMix64 rng(seed ^ idx ^ salt);
    const double area = static_cast<double>(size * size);
    const long side = static_cast<long>(size);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Tensor mask({1, size, size}, 1.0);
        const double target = rng.uniform(group.lo, group.hi);
        const long count = rng.range(1, 3);
        const double per_rect = target * area / static_cast<double>(count) * 1.1;
        for (long r = 0; r < count; ++r) {
            const double aspect = rng.uniform(0.5, 2.0);
            const long w = std::clamp(std::lround(std::sqrt(per_rect * aspect)), 1L, side);
            const long h = std::clamp(std::lround(per_rect / static_cast<double>(w)), 1L, side);
            const long x0 = rng.range(0, side - w);
            const long y0 = rng.range(0, side - h);
            for (long y = y0; y < y0 + h; ++y)
                for (long x = x0; x < x0 + w; ++x) mask[static_cast<std::size_t>(y * side + x)] = 0.0;
        }
        if (group.contains(hole_ratio(mask))) return mask;
    }
    throw GenerationError("gen_mask: no mask in " + group.name() + " after 1000 attempts");
}

Sample make_sample(const MaskGroup& group, std::uint64_t seed, std::uint64_t idx, std::size_t size) {
    Sample s{gen_image(seed, idx, size), gen_mask(group, seed, idx, size), {}};
    s.masked = s.gt;
    const std::size_t hw = size * size;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < hw; ++i) s.masked[c * hw + i] *= s.mask[i];
    return s;
}

Batch make_batch(const MaskGroup& group, std::uint64_t seed, std::uint64_t idx0, std::size_t count,
                 std::size_t size) {
    require(count > 0, "make_batch: count must be positive");
    Batch b{Tensor({count, 3, size, size}), Tensor({count, 1, size, size})};
    const std::size_t hw = size * size;
    for (std::size_t i = 0; i < count; ++i) {
        const Tensor img = gen_image(seed, idx0 + i, size);
        const Tensor m = gen_mask(group, seed, idx0 + i, size);
        std::copy(img.data().begin(), img.data().end(), b.gt.data().begin() + static_cast<long>(i * 3 * hw));
        std::copy(m.data().begin(), m.data().end(), b.mask.data().begin() + static_cast<long>(i * hw));
    }
    return b;
}

std::string to_ppm(const Tensor& image) {
    require(image.rank() == 3 && (image.dim(0) == 3 || image.dim(0) == 1), "to_ppm: expected a 3xHxW or 1xHxW image");
    const std::size_t h = image.dim(1), w = image.dim(2), c = image.dim(0);
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const double v = image[((c == 3 ? ch : 0) * h + y) * w + x];
                out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
            }
    return out;
}

} // namespace auxweight
