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

#include "auxweight/awa.hpp"

#include <cmath>
#include <string>

namespace auxweight {

namespace {

bool finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

void AwaConfig::validate() const {
    require(k >= 1, "awa.k must be >= 1");
    require(beta >= 0.0 && std::isfinite(beta), "awa.beta must be >= 0");
    require(aux_beta1 >= 0.0 && aux_beta1 < 1.0 && aux_beta2 >= 0.0 && aux_beta2 < 1.0,
            "aux optimizer betas must lie in [0, 1)");
    require(aux_eps > 0.0, "aux optimizer eps must be positive");
}

ModelState ModelState::init(const Generator& gen, const ModelOptimizerConfig& cfg) {
    return ModelState{gen.params,
                      AdamState::zeros(gen.params.total_dim(), cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay)};
}

std::vector<double> flat_gradient(const Tape& tape, Var out, std::span<const Var> params) {
    const Gradients g = tape.backward(out);
    std::vector<double> flat;
    for (const auto& p : params) {
        const Tensor t = g.of(p);
        flat.insert(flat.end(), t.data().begin(), t.data().end());
    }
    return flat;
}

std::vector<double> apply_model_step(const ModelOptimizerConfig& cfg, ModelState& state,
                                     std::span<const double> grad) {
    require(grad.size() == state.theta.total_dim(), "model step: gradient has the wrong dimension");
    std::vector<double> precond;
    auto flat = state.theta.flatten();
    if (cfg.kind == OptimizerKind::sgd) {
        if (cfg.lr != 0.0) sgd_update(flat, grad, cfg.lr);
    } else {
        precond = adam_update(flat, grad, state.opt, cfg.lr);
    }
    if (!finite(flat)) throw RunAborted("model parameters became non-finite after an optimizer step");
    state.theta.assign(flat);
    return precond;
}

namespace {

struct RecordedStep {
    std::vector<Var> params;
    LossGraph graph;
};

RecordedStep record_step(Tape& tape, const TrainSetup& setup, const ParamSet& theta, const Batch& batch) {
    RecordedStep s;
    s.params = param_leaves(tape, theta);
    Var pred = inpaint(setup.arch, s.params, batch.gt, batch.mask);
    Var comp = composite(pred, batch.gt, batch.mask);
    s.graph = record_losses(setup.fe, comp, batch.gt, setup.aux.terms);
    return s;
}

StepObservation observe(const LossGraph& g, Var total) {
    StepObservation o{g.main_values(), g.aux_values(), total.value().item()};
    if (!std::isfinite(o.total)) throw RunAborted("non-finite training loss " + std::to_string(o.total));
    return o;
}

} // namespace

CollectResult collect_step(const TrainSetup& setup, const ModelState& state, const Batch& batch, const AuxWeights& w,
                           RowMode rows) {
    require(batch.size() > 0, "collect_step: empty batch");
    Tape tape;
    const RecordedStep s = record_step(tape, setup, state.theta, batch);
    Var total = total_loss(s.graph, setup.lambda_m, w);
    CollectResult r;
    r.obs = observe(s.graph, total);
    r.gradient = flat_gradient(tape, total, s.params);
    if (!finite(r.gradient)) throw RunAborted("non-finite total-loss gradient");
    if (rows != RowMode::none) {
        for (const auto& t : s.graph.perceptual) r.rows_p.push_back(flat_gradient(tape, t, s.params));
        for (const auto& t : s.graph.style) r.rows_s.push_back(flat_gradient(tape, t, s.params));
    }
    if (rows == RowMode::aux_and_main) r.main_row = flat_gradient(tape, main_loss(s.graph, setup.lambda_m), s.params);
    r.next = state;
    r.precond = apply_model_step(setup.model, r.next, r.gradient);
    return r;
}

TermGradients term_gradients(const TrainSetup& setup, const ParamSet& theta, const Batch& batch) {
    Tape tape;
    const RecordedStep s = record_step(tape, setup, theta, batch);
    TermGradients r{s.graph.main_values(), s.graph.aux_values(), {}, {}, {}};
    r.main_row = flat_gradient(tape, main_loss(s.graph, setup.lambda_m), s.params);
    for (const auto& t : s.graph.perceptual) r.rows_p.push_back(flat_gradient(tape, t, s.params));
    for (const auto& t : s.graph.style) r.rows_s.push_back(flat_gradient(tape, t, s.params));
    if (!finite(r.main_row)) throw RunAborted("non-finite main-loss gradient");
    return r;
}

StepObservation train_step(const TrainSetup& setup, ModelState& state, const Batch& batch, const AuxWeights& w) {
    Tape tape;
    const RecordedStep s = record_step(tape, setup, state.theta, batch);
    Var total = total_loss(s.graph, setup.lambda_m, w);
    const StepObservation obs = observe(s.graph, total);
    const auto grad = flat_gradient(tape, total, s.params);
    if (!finite(grad)) throw RunAborted("non-finite total-loss gradient");
    apply_model_step(setup.model, state, grad);
    return obs;
}

bool JacobianBundle::preconditioned() const {
    if (steps.empty()) return false;
    for (const auto& s : steps)
        if (s.precond.empty()) return false;
    return true;
}

std::vector<std::vector<double>> JacobianBundle::summed_rows() const {
    require(!steps.empty(), "JacobianBundle: no steps");
    const bool pre = preconditioned();
    const std::size_t terms = steps[0].rows_p.size() + steps[0].rows_s.size();
    std::vector<std::vector<double>> out(terms, std::vector<double>(dim, 0.0));
    for (const auto& s : steps) {
        require(s.rows_p.size() + s.rows_s.size() == terms, "JacobianBundle: inconsistent row counts");
        for (std::size_t n = 0; n < terms; ++n) {
            const auto& row = n < s.rows_p.size() ? s.rows_p[n] : s.rows_s[n - s.rows_p.size()];
            require(row.size() == dim, "JacobianBundle: row has the wrong dimension");
            auto& acc = out[n];
            if (pre)
                for (std::size_t i = 0; i < dim; ++i) acc[i] += row[i] * s.precond[i];
            else
                for (std::size_t i = 0; i < dim; ++i) acc[i] += row[i];
        }
    }
    return out;
}

LookaheadResult lookahead(const TrainSetup& setup, const ModelState& state, std::span<const Batch> batches,
                          const AuxWeights& w, RowMode rows) {
    require(!batches.empty(), "lookahead: need at least one batch");
    LookaheadResult r{state, {}, {}};
    r.bundle.dim = state.theta.total_dim();
    for (const auto& batch : batches) {
        CollectResult c = collect_step(setup, r.state, batch, w, rows);
        r.bundle.steps.push_back(JacobianStep{std::move(c.rows_p), std::move(c.rows_s), std::move(c.precond)});
        r.obs.push_back(c.obs);
        r.state = std::move(c.next);
    }
    return r;
}

double surrogate_loss(std::span<const double> g, const JacobianBundle& bundle, const AuxWeights& w) {
    require(g.size() == bundle.dim, "surrogate_loss: guidance gradient has dimension " + std::to_string(g.size()) +
                                        ", rows have " + std::to_string(bundle.dim));
    const auto rows = bundle.summed_rows();
    const auto omega = w.flat();
    require(omega.size() == rows.size(), "surrogate_loss: weight count does not match row count");
    double s = 0.0;
    for (std::size_t n = 0; n < rows.size(); ++n) s += omega[n] * dot(g, rows[n]);
    return -s;
}

AuxParams surrogate_grad(const AuxConfig& cfg, const AuxParams& params, const JacobianBundle& bundle,
                         std::span<const double> g) {
    require(g.size() == bundle.dim, "surrogate_grad: guidance gradient has the wrong dimension");
    const auto rows = bundle.summed_rows();
    const auto dw = weight_jacobian_diag(cfg, params);
    require(dw.size() == rows.size(), "surrogate_grad: parameter count does not match row count");
    std::vector<double> grad(rows.size());
    for (std::size_t n = 0; n < rows.size(); ++n) grad[n] = -dot(g, rows[n]) * dw[n];
    return AuxParams::from_flat(grad, params.phi_p.size());
}

GuidancePool make_guidance_pool(const FeatureExtractor& fe, Batch batch) {
    GuidancePool pool;
    pool.input = make_generator_input(batch.gt, batch.mask);
    pool.gt_taps = extract(fe, batch.gt);
    pool.batch = std::move(batch);
    return pool;
}

Var guidance_on_tape(const FeatureExtractor& fe, const GeneratorArch& arch, std::span<const Var> params,
                     const GuidancePool& pool, GuidanceKind kind) {
    Tape& tape = *params.front().tape();
    Var pred = generator_forward(arch, params, tape.constant(pool.input));
    Var comp = composite(pred, pool.batch.gt, pool.batch.mask);
    if (kind == GuidanceKind::mae) return mean(abs(comp - tape.constant(pool.batch.gt)));
    const auto taps = extract(fe, comp);
    Var acc = mean(abs(taps[0] - tape.constant(pool.gt_taps[0])));
    for (std::size_t t = 1; t < kNumTaps; ++t) acc = acc + mean(abs(taps[t] - tape.constant(pool.gt_taps[t])));
    return scale(acc, 1.0 / static_cast<double>(kNumTaps));
}

GuidanceResult guidance_eval(const FeatureExtractor& fe, const GeneratorArch& arch, const ParamSet& theta,
                             const GuidancePool& pool, GuidanceKind kind, bool with_grad) {
    Tape tape;
    std::vector<Var> params;
    for (const auto& e : theta.entries()) params.push_back(with_grad ? tape.leaf(e.value) : tape.constant(e.value));
    Var out = guidance_on_tape(fe, arch, params, pool, kind);
    GuidanceResult r{out.value().item(), {}};
    if (!std::isfinite(r.value)) throw RunAborted("non-finite guidance metric");
    if (with_grad) {
        r.grad = flat_gradient(tape, out, params);
        if (!finite(r.grad)) throw RunAborted("non-finite guidance gradient");
    }
    return r;
}

TrainState TrainState::init(const TrainSetup& setup, const Generator& gen, AuxParams phi) {
    const auto& a = setup.awa;
    const std::size_t dim = phi.phi_p.size() + phi.phi_s.size();
    return TrainState{ModelState::init(gen, setup.model), std::move(phi),
                      AdamState::zeros(dim, a.aux_beta1, a.aux_beta2, a.aux_eps, a.aux_weight_decay), 0};
}

CycleRecord awa_cycle(const TrainSetup& setup, TrainState& state, std::span<const Batch> batches,
                      const GuidancePool& pool) {
    require(batches.size() == setup.awa.k, "awa_cycle: expected K = " + std::to_string(setup.awa.k) + " batches, got " +
                                               std::to_string(batches.size()));
    const AuxWeights current = weights_from_params(setup.aux, state.phi);
    const LookaheadResult la = lookahead(setup, state.model, batches, current);
    const GuidanceResult gd = guidance_eval(setup.fe, setup.arch, la.state.theta, pool, setup.awa.guidance, true);

    const AuxParams grad = surrogate_grad(setup.aux, state.phi, la.bundle, gd.grad);
    auto phi = state.phi.flat();
    adam_update(phi, grad.flat(), state.aux_opt, setup.awa.beta);
    if (!finite(phi)) throw RunAborted("auxiliary parameters became non-finite");
    state.phi = AuxParams::from_flat(phi, setup.aux.terms);

    CycleRecord rec;
    rec.omega = weights_from_params(setup.aux, state.phi);
    rec.obs = train_step(setup, state.model, batches[0], rec.omega);
    rec.phi = state.phi;
    rec.guidance = gd.value;
    rec.iter = state.iter++;
    return rec;
}

CycleRecord fixed_cycle(const TrainSetup& setup, TrainState& state, const Batch& batch) {
    CycleRecord rec;
    rec.omega = weights_from_params(setup.aux, state.phi);
    rec.obs = train_step(setup, state.model, batch, rec.omega);
    rec.phi = state.phi;
    rec.iter = state.iter++;
    return rec;
}

std::vector<double> oracle_hypergradient_frozen(const TrainSetup& setup, const ModelState& state,
                                                const AuxParams& phi, std::span<const Batch> batches,
                                                const GuidancePool& pool) {
    require(setup.model.kind == OptimizerKind::sgd, "frozen oracle requires the SGD model optimizer");
    const double alpha = setup.model.lr;
    const AuxWeights w = weights_from_params(setup.aux, phi);
    const LookaheadResult la = lookahead(setup, state, batches, w);
    const auto rows = la.bundle.summed_rows();
    const auto omega = w.flat();
    const std::size_t terms = rows.size();

    // theta^K(omega') = base - alpha * sum_n omega'_n R_n, exact at omega' = omega.
    auto base = la.state.theta.flatten();
    for (std::size_t n = 0; n < terms; ++n)
        for (std::size_t i = 0; i < base.size(); ++i) base[i] += alpha * omega[n] * rows[n][i];

    Tape tape;
    const auto phi_flat = phi.flat();
    Var phi_var = tape.leaf(Tensor({terms}, phi_flat));
    std::vector<double> ceilings(terms);
    for (std::size_t n = 0; n < terms; ++n) ceilings[n] = n < phi.phi_p.size() ? setup.aux.lambda_p : setup.aux.lambda_s;
    Var omega_var = sigmoid(phi_var) * tape.constant(Tensor({terms}, ceilings));
    std::vector<Var> scaled;
    for (std::size_t n = 0; n < terms; ++n) {
        Tensor e({terms}, 0.0);
        e[n] = 1.0;
        scaled.push_back(scale(sum(omega_var * tape.constant(std::move(e))), alpha));
    }

    std::vector<Var> params;
    std::size_t off = 0;
    for (const auto& entry : state.theta.entries()) {
        const auto shape = entry.value.shape();
        const std::size_t len = entry.value.size();
        auto slice = [&](const std::vector<double>& v) {
            return Tensor(shape, std::vector<double>(v.begin() + static_cast<long>(off),
                                                     v.begin() + static_cast<long>(off + len)));
        };
        Var p = tape.constant(slice(base));
        for (std::size_t n = 0; n < terms; ++n) p = p - tape.constant(slice(rows[n])) * scaled[n];
        params.push_back(p);
        off += len;
    }
    Var out = guidance_on_tape(setup.fe, setup.arch, params, pool, setup.awa.guidance);
    const Tensor g = tape.backward(out).of(phi_var);
    return {g.data().begin(), g.data().end()};
}

std::vector<double> oracle_hypergradient_unrolled(const TrainSetup& setup, const ModelState& state,
                                                  const AuxParams& phi, std::span<const Batch> batches,
                                                  const GuidancePool& pool, double h) {
    require(setup.model.kind == OptimizerKind::sgd, "unrolled oracle requires the SGD model optimizer");
    require(h > 0.0, "unrolled oracle: h must be positive");
    const auto flat = phi.flat();
    auto value_at = [&](const std::vector<double>& p) {
        const AuxWeights w = weights_from_params(setup.aux, AuxParams::from_flat(p, phi.phi_p.size()));
        const LookaheadResult la = lookahead(setup, state, batches, w, RowMode::none);
        return guidance_eval(setup.fe, setup.arch, la.state.theta, pool, setup.awa.guidance, false).value;
    };
    std::vector<double> grad(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        auto p = flat;
        p[i] = flat[i] + h;
        const double fp = value_at(p);
        p[i] = flat[i] - h;
        const double fm = value_at(p);
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace auxweight
