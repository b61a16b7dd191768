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

#include "auxweight/tunable.hpp"

#include <cmath>

#include "auxweight/splitmix64.hpp"

namespace auxweight {

void AuxConfig::validate() const {
    require(lambda_p > 0.0 && std::isfinite(lambda_p), "lambda_p must be positive");
    require(lambda_s > 0.0 && std::isfinite(lambda_s), "lambda_s must be positive");
    require(terms >= 1 && terms <= kNumTaps, "aux term count must be in 1..3");
}

std::vector<double> AuxParams::flat() const {
    std::vector<double> out(phi_p);
    out.insert(out.end(), phi_s.begin(), phi_s.end());
    return out;
}

AuxParams AuxParams::from_flat(std::span<const double> flat, std::size_t terms) {
    require(flat.size() == 2 * terms, "AuxParams: flat vector must hold 2N entries");
    return AuxParams{{flat.begin(), flat.begin() + static_cast<long>(terms)},
                     {flat.begin() + static_cast<long>(terms), flat.end()}};
}

std::vector<double> AuxWeights::flat() const {
    std::vector<double> out(omega_p);
    out.insert(out.end(), omega_s.begin(), omega_s.end());
    return out;
}

AuxWeights weights_from_params(const AuxConfig& cfg, const AuxParams& params) {
    AuxWeights w;
    for (double phi : params.phi_p) w.omega_p.push_back(cfg.lambda_p * kernels::sigmoid(phi));
    for (double phi : params.phi_s) w.omega_s.push_back(cfg.lambda_s * kernels::sigmoid(phi));
    return w;
}

std::vector<double> weight_jacobian_diag(const AuxConfig& cfg, const AuxParams& params) {
    std::vector<double> d;
    for (double phi : params.phi_p) {
        const double s = kernels::sigmoid(phi);
        d.push_back(cfg.lambda_p * s * (1.0 - s));
    }
    for (double phi : params.phi_s) {
        const double s = kernels::sigmoid(phi);
        d.push_back(cfg.lambda_s * s * (1.0 - s));
    }
    return d;
}

AuxParams init_equal(const AuxConfig& cfg) {
    cfg.validate();
    return AuxParams{std::vector<double>(cfg.terms, 0.0), std::vector<double>(cfg.terms, 0.0)};
}

AuxParams init_random(const AuxConfig& cfg, std::uint64_t seed, double scale) {
    cfg.validate();
    SplitMix64 rng(seed);
    AuxParams p;
    for (std::size_t i = 0; i < cfg.terms; ++i) p.phi_p.push_back(scale * rng.normal());
    for (std::size_t i = 0; i < cfg.terms; ++i) p.phi_s.push_back(scale * rng.normal());
    return p;
}

double weighted_sum(std::span<const double> terms, std::span<const double> weights) {
    require(terms.size() == weights.size(), "weight count does not match term count");
    double s = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) s += weights[i] * terms[i];
    return s;
}

double tpl(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, std::span<const double> omega_p) {
    require(omega_p.size() >= 1 && omega_p.size() <= kNumTaps, "tpl: weight count must be in 1..3");
    std::vector<double> terms;
    for (std::size_t n = 1; n <= omega_p.size(); ++n) terms.push_back(perceptual_term(fe, pred, gt, static_cast<int>(n)));
    return weighted_sum(terms, omega_p);
}

double tsl(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, std::span<const double> omega_s) {
    require(omega_s.size() >= 1 && omega_s.size() <= kNumTaps, "tsl: weight count must be in 1..3");
    std::vector<double> terms;
    for (std::size_t n = 1; n <= omega_s.size(); ++n) terms.push_back(style_term(fe, pred, gt, static_cast<int>(n)));
    return weighted_sum(terms, omega_s);
}

double total_loss(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, const MainWeights& lambda_m,
                  const AuxWeights& w) {
    return main_loss(pred, gt, lambda_m) + tpl(fe, pred, gt, w.omega_p) + tsl(fe, pred, gt, w.omega_s);
}

namespace {

Var weighted(std::span<const Var> terms, std::span<const double> weights) {
    require(!terms.empty() && terms.size() == weights.size(), "weight count does not match term count");
    Var acc = scale(terms[0], weights[0]);
    for (std::size_t i = 1; i < terms.size(); ++i) acc = acc + scale(terms[i], weights[i]);
    return acc;
}

} // namespace

Var tpl(const LossGraph& g, std::span<const double> omega_p) { return weighted(g.perceptual, omega_p); }
Var tsl(const LossGraph& g, std::span<const double> omega_s) { return weighted(g.style, omega_s); }

Var total_loss(const LossGraph& g, const MainWeights& lambda_m, const AuxWeights& w) {
    return main_loss(g, lambda_m) + tpl(g, w.omega_p) + tsl(g, w.omega_s);
}

} // namespace auxweight
