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
#include <span>
#include <string>
#include <vector>

#include "auxweight/tensor.hpp"

namespace auxweight {

/// Ordered collection of named parameter tensors.
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor value;
    };

    void add(std::string name, Tensor value);

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::vector<Entry>& entries() noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const Tensor& operator[](std::size_t i) const { return entries_.at(i).value; }
    Tensor& operator[](std::size_t i) { return entries_.at(i).value; }

    std::size_t total_dim() const noexcept;
    std::vector<double> flatten() const;
    /// A copy with this layout holding the values of `flat`.
    ParamSet unflatten(std::span<const double> flat) const;
    void assign(std::span<const double> flat);

    friend bool operator==(const ParamSet& a, const ParamSet& b);

private:
    std::vector<Entry> entries_;
};

bool operator==(const ParamSet::Entry& a, const ParamSet::Entry& b);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;

    static AdamState zeros(std::size_t dim, double beta1, double beta2, double eps, double weight_decay);
    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// theta' = theta - lr * g.
ParamSet sgd_step(const ParamSet& params, std::span<const double> grads, double lr);
void sgd_update(std::span<double> x, std::span<const double> grads, double lr);

struct AdamStepResult {
    ParamSet params;
    AdamState state;
    /// Element-wise 1 / (sqrt(v_hat) + eps) applied in this step.
    std::vector<double> precond;
};

/// AdamW with bias correction; decoupled weight decay is applied first.
AdamStepResult adam_step(const ParamSet& params, std::span<const double> grads, const AdamState& state, double lr);

/// In-place AdamW on a flat vector; returns the preconditioner.
std::vector<double> adam_update(std::span<double> x, std::span<const double> grads, AdamState& state, double lr);

} // namespace auxweight
