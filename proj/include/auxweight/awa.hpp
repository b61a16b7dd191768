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
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "auxweight/data.hpp"
#include "auxweight/nets.hpp"
#include "auxweight/optim.hpp"
#include "auxweight/tunable.hpp"

namespace auxweight {

/// Raised when a loss, gradient or parameter becomes non-finite.
class RunAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OptimizerKind { sgd, adam };
enum class GuidanceKind { perceptual_distance, mae };

struct ModelOptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    friend bool operator==(const ModelOptimizerConfig&, const ModelOptimizerConfig&) = default;
};

struct AwaConfig {
    std::size_t k = 1;
    double beta = 1e-3;
    double aux_beta1 = 0.5;
    double aux_beta2 = 0.999;
    double aux_eps = 1e-8;
    double aux_weight_decay = 0.01;
    GuidanceKind guidance = GuidanceKind::perceptual_distance;

    void validate() const;
    friend bool operator==(const AwaConfig&, const AwaConfig&) = default;
};

/// Everything that stays fixed for the length of a run.
struct TrainSetup {
    FeatureExtractor fe;
    GeneratorArch arch;
    AuxConfig aux;
    MainWeights lambda_m;
    AwaConfig awa;
    ModelOptimizerConfig model;
};

/// Generator parameters together with the model optimizer's moments.
struct ModelState {
    ParamSet theta;
    AdamState opt;

    static ModelState init(const Generator& gen, const ModelOptimizerConfig& cfg);
};

/// Loss values observed at one training step (before the update).
struct StepObservation {
    MainLossVector main;
    AuxTermVector aux;
    double total = 0.0;
};

enum class RowMode { none, aux, aux_and_main };

struct CollectResult {
    ModelState next;
    /// Gradient of each perceptual / style term at the pre-step parameters.
    std::vector<std::vector<double>> rows_p;
    std::vector<std::vector<double>> rows_s;
    /// Gradient of lambda_m . L_m (only with RowMode::aux_and_main).
    std::vector<double> main_row;
    /// Total-loss gradient the optimizer step consumed.
    std::vector<double> gradient;
    /// Preconditioner applied by Adam; empty under SGD.
    std::vector<double> precond;
    StepObservation obs;
};

/// One optimizer step on the total loss, plus the per-term gradient rows,
/// each from its own backward pass.
CollectResult collect_step(const TrainSetup& setup, const ModelState& state, const Batch& batch, const AuxWeights& w,
                           RowMode rows = RowMode::aux);

/// Loss values plus the main-loss and per-term gradient rows at `theta`,
/// without taking a step.
struct TermGradients {
    MainLossVector main;
    AuxTermVector aux;
    std::vector<double> main_row;
    std::vector<std::vector<double>> rows_p;
    std::vector<std::vector<double>> rows_s;
};

TermGradients term_gradients(const TrainSetup& setup, const ParamSet& theta, const Batch& batch);

/// Applies one model-optimizer step in place; returns the Adam
/// preconditioner (empty for SGD).
std::vector<double> apply_model_step(const ModelOptimizerConfig& cfg, ModelState& state, std::span<const double> grad);

/// Plain training step on the total loss with weights `w`.
StepObservation train_step(const TrainSetup& setup, ModelState& state, const Batch& batch, const AuxWeights& w);

struct JacobianStep {
    std::vector<std::vector<double>> rows_p;
    std::vector<std::vector<double>> rows_s;
    std::vector<double> precond;
};

struct JacobianBundle {
    std::vector<JacobianStep> steps;
    std::size_t dim = 0;

    /// True when every step carries an Adam preconditioner.
    bool preconditioned() const;
    /// Sum over steps of each term's row (preconditioned when available),
    /// perceptual terms first.
    std::vector<std::vector<double>> summed_rows() const;
};

struct LookaheadResult {
    ModelState state;
    JacobianBundle bundle;
    std::vector<StepObservation> obs;
};

/// K chained collect_steps on a copy of `state`; batches[j] feeds step j.
LookaheadResult lookahead(const TrainSetup& setup, const ModelState& state, std::span<const Batch> batches,
                          const AuxWeights& w, RowMode rows = RowMode::aux);

/// -g^T sum_j (J_p^T omega_p + J_s^T omega_s).
double surrogate_loss(std::span<const double> g, const JacobianBundle& bundle, const AuxWeights& w);

/// Closed-form gradient of the surrogate with respect to phi.
AuxParams surrogate_grad(const AuxConfig& cfg, const AuxParams& params, const JacobianBundle& bundle,
                         std::span<const double> g);

/// Held-out batch with its constant inputs and ground-truth features cached.
struct GuidancePool {
    Batch batch;
    Tensor input;
    std::array<Tensor, kNumTaps> gt_taps;
};

GuidancePool make_guidance_pool(const FeatureExtractor& fe, Batch batch);

struct GuidanceResult {
    double value = 0.0;
    std::vector<double> grad;
};

/// Guidance metric of the composited predictions on the pool; the gradient
/// with respect to theta is filled when `with_grad` is set.
GuidanceResult guidance_eval(const FeatureExtractor& fe, const GeneratorArch& arch, const ParamSet& theta,
                             const GuidancePool& pool, GuidanceKind kind, bool with_grad);

/// Guidance value on a tape whose generator parameters are `params`.
Var guidance_on_tape(const FeatureExtractor& fe, const GeneratorArch& arch, std::span<const Var> params,
                     const GuidancePool& pool, GuidanceKind kind);

struct TrainState {
    ModelState model;
    AuxParams phi;
    AdamState aux_opt;
    std::uint64_t iter = 0;

    static TrainState init(const TrainSetup& setup, const Generator& gen, AuxParams phi);
};

struct CycleRecord {
    std::uint64_t iter = 0;
    StepObservation obs;
    AuxWeights omega;
    AuxParams phi;
    std::optional<double> guidance;
};

/// One AWA iteration: K-step lookahead on a copy, guidance gradient at the
/// lookahead point, one aux-optimizer step on phi through the surrogate, then
/// one model step from the original parameters with the new weights on
/// batches[0]. `batches` must hold K batches.
CycleRecord awa_cycle(const TrainSetup& setup, TrainState& state, std::span<const Batch> batches,
                      const GuidancePool& pool);

/// Model step with the current (unchanged) weights.
CycleRecord fixed_cycle(const TrainSetup& setup, TrainState& state, const Batch& batch);

/// d guidance(theta^K(phi)) / d phi with every Jacobian row along the
/// trajectory held constant, computed by reverse-mode through
/// omega(phi) -> theta^K -> generator -> guidance. Requires SGD.
std::vector<double> oracle_hypergradient_frozen(const TrainSetup& setup, const ModelState& state,
                                                const AuxParams& phi, std::span<const Batch> batches,
                                                const GuidancePool& pool);

/// Central differences of guidance(theta^K(phi)) over phi, re-running the
/// full K-step SGD lookahead for every perturbation.
std::vector<double> oracle_hypergradient_unrolled(const TrainSetup& setup, const ModelState& state,
                                                  const AuxParams& phi, std::span<const Batch> batches,
                                                  const GuidancePool& pool, double h);

/// Flattened gradient of `out` over the parameter leaves.
std::vector<double> flat_gradient(const Tape& tape, Var out, std::span<const Var> params);

} // namespace auxweight
