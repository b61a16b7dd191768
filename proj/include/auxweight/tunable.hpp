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

#include <cstdint>
#include <vector>

#include "auxweight/losses.hpp"

namespace auxweight {

/// Ceilings of the tunable weights and the number of weighted terms.
struct AuxConfig {
    double lambda_p = 2.0;
    double lambda_s = 750.0;
    std::size_t terms = kNumTaps;

    void validate() const;
    friend bool operator==(const AuxConfig&, const AuxConfig&) = default;
};

/// Unconstrained parameters behind the perceptual and style weights.
struct AuxParams {
    std::vector<double> phi_p;
    std::vector<double> phi_s;

    /// phi_p followed by phi_s.
    std::vector<double> flat() const;
    static AuxParams from_flat(std::span<const double> flat, std::size_t terms);
    friend bool operator==(const AuxParams&, const AuxParams&) = default;
};

/// omega = lambda * sigmoid(phi); each entry lies strictly inside (0, lambda).
struct AuxWeights {
    std::vector<double> omega_p;
    std::vector<double> omega_s;

    std::vector<double> flat() const;
    friend bool operator==(const AuxWeights&, const AuxWeights&) = default;
};

AuxWeights weights_from_params(const AuxConfig& cfg, const AuxParams& params);

/// d omega / d phi, element-wise, in flat (p then s) order.
std::vector<double> weight_jacobian_diag(const AuxConfig& cfg, const AuxParams& params);

/// All phi = 0: every perceptual weight is lambda_p / 2 (unit weights at the
/// default ceiling), so the tunable losses start as the standard ones.
AuxParams init_equal(const AuxConfig& cfg);

/// phi ~ N(0, scale^2) from splitmix64(seed).
AuxParams init_random(const AuxConfig& cfg, std::uint64_t seed, double scale = 1.0);

/// Sum_n omega_p^n * perceptual_term(n).
double tpl(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, std::span<const double> omega_p);
/// Sum_n omega_s^n * style_term(n).
double tsl(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, std::span<const double> omega_s);

double total_loss(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, const MainWeights& lambda_m,
                  const AuxWeights& w);

// Tape versions over recorded loss terms.
Var tpl(const LossGraph& g, std::span<const double> omega_p);
Var tsl(const LossGraph& g, std::span<const double> omega_s);
Var total_loss(const LossGraph& g, const MainWeights& lambda_m, const AuxWeights& w);

/// Same weighted sums over already-evaluated term values.
double weighted_sum(std::span<const double> terms, std::span<const double> weights);

} // namespace auxweight
