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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auxweight/awa.hpp"

namespace auxweight {

enum class ReweighterKind { fixed, adaloss, gradnorm, gradsim, awa };

std::string to_string(ReweighterKind kind);
ReweighterKind parse_reweighter(std::string_view text);

/// Declared constants of the baseline recipes.
struct BaselineConfig {
    double adaloss_decay = 0.99;
    double gradnorm_gamma = 1.5;
    double gradnorm_lr = 0.025;
    friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

/// What a reweighter sees each cycle, one entry per weighted term
/// (perceptual terms first, then style).
struct ReweighterObservation {
    std::vector<double> losses;
    std::vector<double> grad_norms;
    /// Cosine between each term gradient and the main-loss gradient.
    std::vector<double> cosines;
};

struct AdaLossState {
    double decay = 0.99;
    std::vector<double> ema;
    double scale = 0.0;
};

/// EMA of each loss, then weights c / (ema + 1e-8); c is fixed at the first
/// call so that the first weights sum to the term count.
std::vector<double> adaloss_weights(AdaLossState& state, std::span<const double> losses);

struct GradNormState {
    double gamma = 1.5;
    double lr = 0.025;
    std::vector<double> weights;
    std::vector<double> initial_losses;
};

/// One step on sum_n |w_n G_n - mean(w G) r_n^gamma| with G_n the raw term
/// gradient norms, then renormalization to sum(w) = term count. The first
/// call snapshots the initial losses.
std::vector<double> gradnorm_update(GradNormState& state, std::span<const double> grad_norms,
                                    std::span<const double> losses);

/// cos(a, b) with a 1e-12 guard on the norm product.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// base_n where cos(main, term_n) >= 0, else 0.
std::vector<double> gradsim_weights(std::span<const double> main_grad, const std::vector<std::vector<double>>& term_grads,
                                    std::span<const double> base);
std::vector<double> gradsim_gate(std::span<const double> cosines, std::span<const double> base);

std::vector<double> fixed_weights(std::span<const double> base);

/// Single-owner state of a non-AWA reweighter. `base` holds the initial
/// tunable weights; AdaLoss and GradNorm multiply it element-wise.
struct ReweighterState {
    ReweighterKind kind = ReweighterKind::fixed;
    std::vector<double> base;
    AdaLossState adaloss;
    GradNormState gradnorm;

    static ReweighterState init(ReweighterKind kind, std::vector<double> base, const BaselineConfig& cfg);
};

/// Emitted tunable weights (flat, perceptual first) for one observation.
std::vector<double> reweigh(ReweighterState& state, const ReweighterObservation& obs);

/// Builds the observation from evaluated term gradients.
ReweighterObservation observe_terms(const TermGradients& tg);

/// Evaluates the terms, asks the reweighter for weights and takes one model
/// step on main_row + sum_n omega_n row_n.
CycleRecord reweighter_cycle(const TrainSetup& setup, TrainState& state, ReweighterState& rw, const Batch& batch,
                             ReweighterObservation* obs_out = nullptr);

} // namespace auxweight
