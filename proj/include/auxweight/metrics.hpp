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

#include "auxweight/nets.hpp"

namespace auxweight {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) for images in [0, 1]; identical inputs give kPsnrCap.
/// Batched inputs return the mean over images.
double psnr(const Tensor& a, const Tensor& b);

/// Grayscale (channel mean) SSIM with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, data range 1, averaged over valid windows.
double ssim(const Tensor& a, const Tensor& b);

double mae_metric(const Tensor& a, const Tensor& b);

/// Mean over the three extractor taps of the mean absolute feature difference.
double perceptual_distance(const FeatureExtractor& fe, const Tensor& a, const Tensor& b);

struct Metrics {
    double psnr = 0.0;
    double ssim = 0.0;
    double mae = 0.0;
    double perceptual_distance = 0.0;
};

Metrics evaluate_metrics(const FeatureExtractor& fe, const Tensor& a, const Tensor& b);

} // namespace auxweight
