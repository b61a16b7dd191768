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

#include "auxweight/metrics.hpp"

#include <cmath>

namespace auxweight {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const Tensor& a, const Tensor& b, const char* op) {
    require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                        shape_string(b.shape()));
}

std::array<double, kWindow * kWindow> gaussian_window() {
    std::array<double, kWindow * kWindow> w{};
    double total = 0.0;
    for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
            const double dy = y - kWindow / 2, dx = x - kWindow / 2;
            w[static_cast<std::size_t>(y * kWindow + x)] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            total += w[static_cast<std::size_t>(y * kWindow + x)];
        }
    for (double& v : w) v /= total;
    return w;
}

std::vector<double> grayscale(const Tensor& img, std::size_t n) {
    const std::size_t c = img.dim(1), hw = img.dim(2) * img.dim(3);
    std::vector<double> g(hw, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < hw; ++i) g[i] += img[(n * c + ch) * hw + i];
    for (double& v : g) v /= static_cast<double>(c);
    return g;
}

double ssim_single(const std::vector<double>& a, const std::vector<double>& b, std::size_t h, std::size_t w) {
    static const auto win = gaussian_window();
    require(h >= kWindow && w >= kWindow, "ssim: images must be at least 11x11");
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t y0 = 0; y0 + kWindow <= h; ++y0) {
        for (std::size_t x0 = 0; x0 + kWindow <= w; ++x0) {
            double ma = 0, mb = 0, ea2 = 0, eb2 = 0, eab = 0;
            for (std::size_t y = 0; y < kWindow; ++y)
                for (std::size_t x = 0; x < kWindow; ++x) {
                    const double wt = win[y * kWindow + x];
                    const double va = a[(y0 + y) * w + x0 + x], vb = b[(y0 + y) * w + x0 + x];
                    ma += wt * va;
                    mb += wt * vb;
                    ea2 += wt * (va * va);
                    eb2 += wt * (vb * vb);
                    eab += wt * (va * vb);
                }
            const double va2 = ea2 - ma * ma, vb2 = eb2 - mb * mb, cov = eab - ma * mb;
            const double num = (2.0 * (ma * mb) + kC1) * (2.0 * cov + kC2);
            const double den = (ma * ma + mb * mb + kC1) * (va2 + vb2 + kC2);
            total += num / den;
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

} // namespace

double psnr(const Tensor& a, const Tensor& b) {
    check_pair(a, b, "psnr");
    const Tensor x = as_batch(a), y = as_batch(b);
    const std::size_t n = x.dim(0), per = x.size() / n;
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double se = 0.0;
        for (std::size_t i = s * per; i < (s + 1) * per; ++i) se += (x[i] - y[i]) * (x[i] - y[i]);
        const double mse = se / static_cast<double>(per);
        total += mse == 0.0 ? kPsnrCap : std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
    }
    return total / static_cast<double>(n);
}

double ssim(const Tensor& a, const Tensor& b) {
    check_pair(a, b, "ssim");
    const Tensor x = as_batch(a), y = as_batch(b);
    double total = 0.0;
    for (std::size_t s = 0; s < x.dim(0); ++s)
        total += ssim_single(grayscale(x, s), grayscale(y, s), x.dim(2), x.dim(3));
    return total / static_cast<double>(x.dim(0));
}

double mae_metric(const Tensor& a, const Tensor& b) {
    check_pair(a, b, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

double perceptual_distance(const FeatureExtractor& fe, const Tensor& a, const Tensor& b) {
    check_pair(a, b, "perceptual_distance");
    const auto fa = extract(fe, a);
    const auto fb = extract(fe, b);
    double total = 0.0;
    for (std::size_t t = 0; t < kNumTaps; ++t) total += mae_metric(fa[t], fb[t]);
    return total / static_cast<double>(kNumTaps);
}

Metrics evaluate_metrics(const FeatureExtractor& fe, const Tensor& a, const Tensor& b) {
    return Metrics{psnr(a, b), ssim(a, b), mae_metric(a, b), perceptual_distance(fe, a, b)};
}

} // namespace auxweight
