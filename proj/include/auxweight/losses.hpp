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
#include <vector>

#include "auxweight/autodiff.hpp"
#include "auxweight/nets.hpp"

namespace auxweight {

/// Weights of the main loss vector (l1, total variation).
struct MainWeights {
    double l1 = 1.0;
    double tv = 0.1;
    friend bool operator==(const MainWeights&, const MainWeights&) = default;
};

struct MainLossVector {
    double l1 = 0.0;
    double tv = 0.0;
};

/// Per-layer perceptual and style terms, `terms` entries each (first taps).
struct AuxTermVector {
    std::vector<double> perceptual;
    std::vector<double> style;
};

/// Mean |pred - gt|.
Var l1_loss(Var pred, Var gt);
double l1_loss(const Tensor& pred, const Tensor& gt);

/// Anisotropic L1 total variation; see kernels::total_variation.
Var tv_loss(Var pred);
double tv_loss(const Tensor& pred);

/// Mean |psi_n(pred) - psi_n(gt)| for tap n in 1..3.
double perceptual_term(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, int n);
/// Mean |gram(psi_n(pred)) - gram(psi_n(gt))| for tap n in 1..3.
double style_term(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, int n);

double standard_perceptual(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt);
double standard_style(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt);

double main_loss(const Tensor& pred, const Tensor& gt, const MainWeights& w);

/// Every loss component of one image batch, recorded on a tape.
struct LossGraph {
    Var l1;
    Var tv;
    std::vector<Var> perceptual;
    std::vector<Var> style;

    MainLossVector main_values() const;
    AuxTermVector aux_values() const;
};

/// Records l1, tv and the first `terms` perceptual/style terms of `image`
/// against `gt`. Ground-truth features enter the tape as constants.
LossGraph record_losses(const FeatureExtractor& fe, Var image, const Tensor& gt, std::size_t terms = kNumTaps);

Var main_loss(const LossGraph& g, const MainWeights& w);

} // namespace auxweight
