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

#include "auxweight/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace auxweight {

std::string to_string(ReweighterKind kind) {
    switch (kind) {
    case ReweighterKind::fixed: return "fixed";
    case ReweighterKind::adaloss: return "adaloss";
    case ReweighterKind::gradnorm: return "gradnorm";
    case ReweighterKind::gradsim: return "gradsim";
    case ReweighterKind::awa: return "awa";
    }
    return "unknown";
}

ReweighterKind parse_reweighter(std::string_view text) {
    for (auto k : {ReweighterKind::fixed, ReweighterKind::adaloss, ReweighterKind::gradnorm, ReweighterKind::gradsim,
                   ReweighterKind::awa})
        if (text == to_string(k)) return k;
    throw InvalidArgument("unknown reweighter '" + std::string(text) + "'");
}

std::vector<double> adaloss_weights(AdaLossState& s, std::span<const double> losses) {
    for (double l : losses) require(l >= 0.0, "adaloss: losses must be non-negative");
    if (s.ema.empty()) {
        s.ema.assign(losses.begin(), losses.end());
    } else {
        require(s.ema.size() == losses.size(), "adaloss: loss count changed");
        for (std::size_t i = 0; i < losses.size(); ++i) s.ema[i] = s.decay * s.ema[i] + (1.0 - s.decay) * losses[i];
    }
    std::vector<double> inv(losses.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / (s.ema[i] + 1e-8);
    if (s.scale == 0.0) s.scale = static_cast<double>(inv.size()) / std::accumulate(inv.begin(), inv.end(), 0.0);
    for (double& v : inv) v *= s.scale;
    return inv;
}

std::vector<double> gradnorm_update(GradNormState& s, std::span<const double> grad_norms,
                                    std::span<const double> losses) {
    const std::size_t n = grad_norms.size();
    require(n > 0 && losses.size() == n, "gradnorm: norms and losses must have the same non-zero length");
    if (s.weights.empty()) s.weights.assign(n, 1.0);
    if (s.initial_losses.empty()) s.initial_losses.assign(losses.begin(), losses.end());
    require(s.weights.size() == n && s.initial_losses.size() == n, "gradnorm: term count changed");

    std::vector<double> g(n), ratio(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = s.weights[i] * grad_norms[i];
        ratio[i] = losses[i] / std::max(s.initial_losses[i], 1e-8);
    }
    const double g_mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
    const double r_mean = std::accumulate(ratio.begin(), ratio.end(), 0.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double target = g_mean * std::pow(r_mean > 0.0 ? ratio[i] / r_mean : 1.0, s.gamma);
        const double diff = g[i] - target;
        // Differences at rounding level count as balanced.
        const double tol = 1e-12 * std::max(std::fabs(g[i]), std::fabs(target));
        const double sign = std::fabs(diff) <= tol ? 0.0 : (diff > 0.0 ? 1.0 : -1.0);
        s.weights[i] = std::max(s.weights[i] - s.lr * sign * grad_norms[i], 1e-6);
    }
    const double total = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
    for (double& w : s.weights) w *= static_cast<double>(n) / total;
    return s.weights;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "cosine: dimension mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::max(std::sqrt(aa) * std::sqrt(bb), 1e-12);
}

std::vector<double> gradsim_gate(std::span<const double> cosines, std::span<const double> base) {
    require(cosines.size() == base.size(), "gradsim: one base weight per term");
    std::vector<double> w(base.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = cosines[i] >= 0.0 ? base[i] : 0.0;
    return w;
}

std::vector<double> gradsim_weights(std::span<const double> main_grad, const std::vector<std::vector<double>>& term_grads,
                                    std::span<const double> base) {
    std::vector<double> cos;
    for (const auto& t : term_grads) cos.push_back(cosine_similarity(main_grad, t));
    return gradsim_gate(cos, base);
}

std::vector<double> fixed_weights(std::span<const double> base) { return {base.begin(), base.end()}; }

ReweighterState ReweighterState::init(ReweighterKind kind, std::vector<double> base, const BaselineConfig& cfg) {
    require(kind != ReweighterKind::awa, "AWA is not a gradient-free reweighter");
    ReweighterState s;
    s.kind = kind;
    s.base = std::move(base);
    s.adaloss.decay = cfg.adaloss_decay;
    s.gradnorm.gamma = cfg.gradnorm_gamma;
    s.gradnorm.lr = cfg.gradnorm_lr;
    return s;
}

std::vector<double> reweigh(ReweighterState& s, const ReweighterObservation& obs) {
    auto scaled = [&](const std::vector<double>& m) {
        require(m.size() == s.base.size(), "reweighter: term count does not match base weights");
        std::vector<double> w(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) w[i] = s.base[i] * m[i];
        return w;
    };
    switch (s.kind) {
    case ReweighterKind::fixed: return fixed_weights(s.base);
    case ReweighterKind::adaloss: return scaled(adaloss_weights(s.adaloss, obs.losses));
    case ReweighterKind::gradnorm: return scaled(gradnorm_update(s.gradnorm, obs.grad_norms, obs.losses));
    case ReweighterKind::gradsim: return gradsim_gate(obs.cosines, s.base);
    case ReweighterKind::awa: break;
    }
    throw InvalidArgument("reweigh: unsupported reweighter");
}

ReweighterObservation observe_terms(const TermGradients& tg) {
    ReweighterObservation obs;
    obs.losses = tg.aux.perceptual;
    obs.losses.insert(obs.losses.end(), tg.aux.style.begin(), tg.aux.style.end());
    auto add = [&](const std::vector<double>& row) {
        double sq = 0.0;
        for (double v : row) sq += v * v;
        obs.grad_norms.push_back(std::sqrt(sq));
        obs.cosines.push_back(cosine_similarity(tg.main_row, row));
    };
    for (const auto& r : tg.rows_p) add(r);
    for (const auto& r : tg.rows_s) add(r);
    return obs;
}

CycleRecord reweighter_cycle(const TrainSetup& setup, TrainState& state, ReweighterState& rw, const Batch& batch,
                             ReweighterObservation* obs_out) {
    const TermGradients tg = term_gradients(setup, state.model.theta, batch);
    const ReweighterObservation obs = observe_terms(tg);
    const auto omega = reweigh(rw, obs);
    for (double w : omega)
        if (!std::isfinite(w) || w < 0.0) throw RunAborted("reweighter emitted an invalid weight");

    const std::size_t np = tg.rows_p.size();
    std::vector<double> grad = tg.main_row;
    double total = setup.lambda_m.l1 * tg.main.l1 + setup.lambda_m.tv * tg.main.tv;
    for (std::size_t n = 0; n < omega.size(); ++n) {
        const auto& row = n < np ? tg.rows_p[n] : tg.rows_s[n - np];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += omega[n] * row[i];
        total += omega[n] * obs.losses[n];
    }
    if (!std::isfinite(total)) throw RunAborted("non-finite training loss");
    apply_model_step(setup.model, state.model, grad);

    CycleRecord rec;
    rec.obs = StepObservation{tg.main, tg.aux, total};
    rec.omega = AuxWeights{{omega.begin(), omega.begin() + static_cast<long>(np)},
                           {omega.begin() + static_cast<long>(np), omega.end()}};
    rec.iter = state.iter++;
    if (obs_out) *obs_out = obs;
    return rec;
}

} // namespace auxweight
