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

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "auxweight/tensor.hpp"

namespace auxweight {

// ---------------------------------------------------------------------------
// Tensor-level kernels (no recording)
// ---------------------------------------------------------------------------

enum class UnaryFn { relu, sigmoid, abs, square };
enum class BinaryFn { add, sub, mul };
enum class ReduceMode { sum, mean };

struct PoolResult {
    Tensor output;
    /// Flat input index of the winning cell for every output element.
    std::vector<std::size_t> argmax;
};

namespace kernels {

/// Cross-correlation of an NCHW input with an OIkk kernel. `bias` has O
/// elements (any rank, e.g. a rank-1 vector).
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad);

/// 2x2 window, stride 2. Ties go to the first cell in row-major order.
PoolResult maxpool2d(const Tensor& input);

Tensor unary(const Tensor& input, UnaryFn fn);

/// `b` must have the shape of `a` or be rank-0.
Tensor binary(const Tensor& a, const Tensor& b, BinaryFn fn);

Tensor reduce(const Tensor& input, ReduceMode mode);

/// Per-sample Gram matrix F F^T / (C H W), shape N x C x C.
Tensor gram(const Tensor& feature);

Tensor upsample_nearest2x(const Tensor& input);

/// Anisotropic L1 total variation: mean vertical |diff| plus mean horizontal
/// |diff|, each averaged over all valid offsets (an empty direction adds 0).
Tensor total_variation(const Tensor& input);

double sigmoid(double x) noexcept;

} // namespace kernels

// ---------------------------------------------------------------------------
// Reverse-mode tape
// ---------------------------------------------------------------------------

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
public:
    Var() = default;
    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    const Tensor& value() const;
    const Tensor::Shape& shape() const { return value().shape(); }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Result of one backward pass: gradient tensors indexed by node.
class Gradients {
public:
    /// Gradient of the output with respect to `v`; zeros when `v` does not
    /// influence the output.
    Tensor of(Var v) const;
    bool reached(Var v) const;

private:
    friend class Tape;
    std::vector<std::optional<Tensor>> grads_;
    std::vector<Tensor::Shape> shapes_;
};

class Tape {
public:
    /// Receives the gradient of the node's output; `input_grads[i]` is null when
    /// input i does not require a gradient, otherwise gradients are added to it.
    using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor* const> input_grads)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable input.
    Var leaf(Tensor value);
    /// Non-differentiable input.
    Var constant(Tensor value);
    /// Records an op result. The node requires a gradient iff any input does.
    Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

    const Tensor& value(Var v) const { return nodes_.at(v.id()).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::vector<Var> leaves();

    /// Gradients of a scalar output with respect to every recorded node. The
    /// tape is not modified, so repeated calls return identical results.
    Gradients backward(Var output) const;

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool requires_grad = false;
        bool is_leaf = false;
    };
    // deque keeps node values at stable addresses while recording.
    std::deque<Node> nodes_;
};

Gradients backward(Var output);

// Recorded ops. All inputs must live on the same tape.
Var conv2d(Var input, Var kernel, Var bias, int stride, int pad);
Var maxpool2d(Var input);
Var unary(Var input, UnaryFn fn);
Var relu(Var x);
Var sigmoid(Var x);
Var abs(Var x);
Var square(Var x);
Var binary(Var a, Var b, BinaryFn fn);
Var reduce(Var x, ReduceMode mode);
Var sum(Var x);
Var mean(Var x);
Var gram(Var feature);
Var upsample_nearest2x(Var x);
Var total_variation(Var x);
/// Concatenates rank-4 tensors along the channel axis.
Var concat_channels(std::span<const Var> parts);
/// x * c for a plain constant c.
Var scale(Var x, double c);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t coords = 0;
};

/// Relative error |a-b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b) noexcept;

/// Compares `analytic` against central differences of `f` around `point`.
GradCheckReport grad_check_flat(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> point, std::span<const double> analytic, double h);

using ScalarFn = std::function<Var(Tape&, Var)>;

/// Runs `fn` on a tape, takes backward() w.r.t. the input and compares it to
/// central differences with step `h`.
GradCheckReport grad_check(const ScalarFn& fn, const Tensor& point, double h);

} // namespace auxweight
