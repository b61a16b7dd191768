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

#include "auxweight/optim.hpp"

#include <algorithm>
#include <cmath>

namespace auxweight {

void ParamSet::add(std::string name, Tensor value) {
    entries_.push_back(Entry{std::move(name), std::move(value)});
}

std::size_t ParamSet::total_dim() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

std::vector<double> ParamSet::flatten() const {
    std::vector<double> out;
    out.reserve(total_dim());
    for (const auto& e : entries_) out.insert(out.end(), e.value.data().begin(), e.value.data().end());
    return out;
}

ParamSet ParamSet::unflatten(std::span<const double> flat) const {
    ParamSet out = *this;
    out.assign(flat);
    return out;
}

void ParamSet::assign(std::span<const double> flat) {
    require(flat.size() == total_dim(), "ParamSet: flat vector has length " + std::to_string(flat.size()) +
                                            ", expected " + std::to_string(total_dim()));
    std::size_t off = 0;
    for (auto& e : entries_) {
        auto d = e.value.data();
        std::copy_n(flat.begin() + static_cast<long>(off), d.size(), d.begin());
        off += d.size();
    }
}

bool operator==(const ParamSet::Entry& a, const ParamSet::Entry& b) {
    return a.name == b.name && a.value == b.value;
}

bool operator==(const ParamSet& a, const ParamSet& b) { return a.entries_ == b.entries_; }

AdamState AdamState::zeros(std::size_t dim, double beta1, double beta2, double eps, double weight_decay) {
    AdamState s;
    s.m.assign(dim, 0.0);
    s.v.assign(dim, 0.0);
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    s.weight_decay = weight_decay;
    return s;
}

void sgd_update(std::span<double> x, std::span<const double> grads, double lr) {
    require(x.size() == grads.size(), "sgd_step: gradient length " + std::to_string(grads.size()) +
                                          " != parameter length " + std::to_string(x.size()));
    require(lr > 0.0, "sgd_step: lr must be positive");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr * grads[i];
}

ParamSet sgd_step(const ParamSet& params, std::span<const double> grads, double lr) {
    auto flat = params.flatten();
    sgd_update(flat, grads, lr);
    return params.unflatten(flat);
}

std::vector<double> adam_update(std::span<double> x, std::span<const double> grads, AdamState& s, double lr) {
    require(x.size() == grads.size(), "adam_step: gradient length " + std::to_string(grads.size()) +
                                          " != parameter length " + std::to_string(x.size()));
    require(s.m.size() == x.size() && s.v.size() == x.size(), "adam_step: optimizer state has the wrong dimension");
    s.t += 1;
    const double t = static_cast<double>(s.t);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);
    std::vector<double> precond(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double g = grads[i];
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
        const double mhat = s.m[i] / c1;
        const double vhat = s.v[i] / c2;
        precond[i] = 1.0 / (std::sqrt(vhat) + s.eps);
        if (s.weight_decay != 0.0) x[i] -= lr * s.weight_decay * x[i];
        x[i] -= lr * mhat * precond[i];
    }
    return precond;
}

AdamStepResult adam_step(const ParamSet& params, std::span<const double> grads, const AdamState& state, double lr) {
    AdamStepResult r{params, state, {}};
    auto flat = params.flatten();
    r.precond = adam_update(flat, grads, r.state, lr);
    r.params.assign(flat);
    return r;
}

} // namespace auxweight
