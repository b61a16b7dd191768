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

#include "auxweight/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>

namespace auxweight {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

namespace {

struct ConvGeom {
    std::size_t n, c, h, w, o, k, ho, wo;
    int stride, pad;
    std::size_t patch() const { return c * k * k; }
    std::size_t pixels() const { return ho * wo; }
};

ConvGeom conv_geometry(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad) {
    require(input.rank() == 4, "conv2d: input must be NCHW, got " + shape_string(input.shape()));
    require(kernel.rank() == 4, "conv2d: kernel must be OIkk, got " + shape_string(kernel.shape()));
    require(kernel.dim(2) == kernel.dim(3), "conv2d: kernel must be square");
    require(kernel.dim(1) == input.dim(1), "conv2d: kernel input channels " + std::to_string(kernel.dim(1)) +
                                               " != input channels " + std::to_string(input.dim(1)));
    require(bias.size() == kernel.dim(0), "conv2d: bias length must equal output channels");
    require(stride >= 1, "conv2d: stride must be >= 1");
    require(pad >= 0, "conv2d: pad must be >= 0");
    ConvGeom g{};
    g.n = input.dim(0);
    g.c = input.dim(1);
    g.h = input.dim(2);
    g.w = input.dim(3);
    g.o = kernel.dim(0);
    g.k = kernel.dim(2);
    g.stride = stride;
    g.pad = pad;
    const auto hp = static_cast<long>(g.h) + 2 * pad - static_cast<long>(g.k);
    const auto wp = static_cast<long>(g.w) + 2 * pad - static_cast<long>(g.k);
    require(hp >= 0 && wp >= 0, "conv2d: kernel larger than padded input");
    g.ho = static_cast<std::size_t>(hp / stride + 1);
    g.wo = static_cast<std::size_t>(wp / stride + 1);
    return g;
}

// Column matrix (C k k) x (Ho Wo) for sample n.
void im2col(const ConvGeom& g, const double* x, double* cols) {
    const long h = static_cast<long>(g.h), w = static_cast<long>(g.w);
    for (std::size_t c = 0; c < g.c; ++c) {
        const double* xc = x + c * g.h * g.w;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
            for (std::size_t kx = 0; kx < g.k; ++kx) {
                double* row = cols + ((c * g.k + ky) * g.k + kx) * g.pixels();
                for (std::size_t oy = 0; oy < g.ho; ++oy) {
                    const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
                    double* out = row + oy * g.wo;
                    if (iy < 0 || iy >= h) {
                        std::fill(out, out + g.wo, 0.0);
                        continue;
                    }
                    const double* xr = xc + iy * w;
                    for (std::size_t ox = 0; ox < g.wo; ++ox) {
                        const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
                        out[ox] = (ix < 0 || ix >= w) ? 0.0 : xr[ix];
                    }
                }
            }
        }
    }
}

void col2im_add(const ConvGeom& g, const double* cols, double* x) {
    const long h = static_cast<long>(g.h), w = static_cast<long>(g.w);
    for (std::size_t c = 0; c < g.c; ++c) {
        double* xc = x + c * g.h * g.w;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
            for (std::size_t kx = 0; kx < g.k; ++kx) {
                const double* row = cols + ((c * g.k + ky) * g.k + kx) * g.pixels();
                for (std::size_t oy = 0; oy < g.ho; ++oy) {
                    const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
                    if (iy < 0 || iy >= h) continue;
                    const double* in = row + oy * g.wo;
                    double* xr = xc + iy * w;
                    for (std::size_t ox = 0; ox < g.wo; ++ox) {
                        const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
                        if (ix >= 0 && ix < w) xr[ix] += in[ox];
                    }
                }
            }
        }
    }
}

Tensor conv_forward(const ConvGeom& g, const Tensor& input, const Tensor& kernel, const Tensor& bias,
                    AlignedVector* saved_cols) {
    Tensor out({g.n, g.o, g.ho, g.wo});
    const std::size_t patch = g.patch(), pix = g.pixels();
    AlignedVector local;
    AlignedVector& cols = saved_cols ? *saved_cols : local;
    cols.resize(g.n * patch * pix);
    CMapMat wmat(kernel.data().data(), static_cast<long>(g.o), static_cast<long>(patch));
    for (std::size_t n = 0; n < g.n; ++n) {
        double* cn = cols.data() + n * patch * pix;
        im2col(g, input.data().data() + n * g.c * g.h * g.w, cn);
        MapMat on(out.data().data() + n * g.o * pix, static_cast<long>(g.o), static_cast<long>(pix));
        on.noalias() = wmat * CMapMat(cn, static_cast<long>(patch), static_cast<long>(pix));
        for (std::size_t o = 0; o < g.o; ++o) on.row(static_cast<long>(o)).array() += bias[o];
    }
    return out;
}

double sign0(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_nchw(const Tensor& t, const char* op) {
    require(t.rank() == 4, std::string(op) + ": expected NCHW tensor, got " + shape_string(t.shape()));
}

void check_binary(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape() || b.is_scalar(),
            "binary op: incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
}

// Compensated summation; keeps long reductions accurate to a few ulp of the
// result instead of the running total, which finite-difference checks need.
class NeumaierSum {
public:
    void add(double v) noexcept {
        const double t = s_ + v;
        if (std::fabs(s_) >= std::fabs(v)) c_ += (s_ - t) + v;
        else c_ += (v - t) + s_;
        s_ = t;
    }
    double value() const noexcept { return s_ + c_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

} // namespace

namespace kernels {

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int pad) {
    const auto g = conv_geometry(input, kernel, bias, stride, pad);
    return conv_forward(g, input, kernel, bias, nullptr);
}

PoolResult maxpool2d(const Tensor& input) {
    check_nchw(input, "maxpool2d");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    require(h % 2 == 0 && w % 2 == 0, "maxpool2d: spatial extents must be even, got " + shape_string(input.shape()));
    PoolResult r{Tensor({n, c, h / 2, w / 2}), {}};
    r.argmax.resize(r.output.size());
    const auto x = input.data();
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t oy = 0; oy < h / 2; ++oy) {
            for (std::size_t ox = 0; ox < w / 2; ++ox, ++o) {
                std::size_t best = base + (2 * oy) * w + 2 * ox;
                const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
                for (auto i : cand)
                    if (x[i] > x[best]) best = i;
                r.output[o] = x[best];
                r.argmax[o] = best;
            }
        }
    }
    return r;
}

Tensor unary(const Tensor& input, UnaryFn fn) {
    Tensor out = Tensor::zeros_like(input);
    const auto x = input.data();
    auto y = out.data();
    switch (fn) {
    case UnaryFn::relu:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
        break;
    case UnaryFn::sigmoid:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
        break;
    case UnaryFn::abs:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::fabs(x[i]);
        break;
    case UnaryFn::square:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
        break;
    }
    return out;
}

Tensor binary(const Tensor& a, const Tensor& b, BinaryFn fn) {
    check_binary(a, b);
    Tensor out = Tensor::zeros_like(a);
    const auto x = a.data();
    const auto y = b.data();
    auto z = out.data();
    const bool bcast = b.is_scalar() && !a.is_scalar();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double bv = bcast ? y[0] : y[i];
        switch (fn) {
        case BinaryFn::add: z[i] = x[i] + bv; break;
        case BinaryFn::sub: z[i] = x[i] - bv; break;
        case BinaryFn::mul: z[i] = x[i] * bv; break;
        }
    }
    return out;
}

Tensor reduce(const Tensor& input, ReduceMode mode) {
    NeumaierSum s;
    for (double v : input.data()) s.add(v);
    double r = s.value();
    if (mode == ReduceMode::mean) r /= static_cast<double>(input.size());
    return Tensor::scalar(r);
}

Tensor gram(const Tensor& feature) {
    check_nchw(feature, "gram");
    const std::size_t n = feature.dim(0), c = feature.dim(1), hw = feature.dim(2) * feature.dim(3);
    const double norm = 1.0 / static_cast<double>(c * hw);
    Tensor out({n, c, c});
    for (std::size_t s = 0; s < n; ++s) {
        const double* f = feature.data().data() + s * c * hw;
        double* g = out.data().data() + s * c * c;
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = i; j < c; ++j) {
                NeumaierSum acc;
                for (std::size_t p = 0; p < hw; ++p) acc.add(f[i * hw + p] * f[j * hw + p]);
                g[i * c + j] = g[j * c + i] = acc.value() * norm;
            }
        }
    }
    return out;
}

Tensor upsample_nearest2x(const Tensor& input) {
    check_nchw(input, "upsample_nearest");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    Tensor out({n, c, 2 * h, 2 * w});
    for (std::size_t plane = 0; plane < n * c; ++plane)
        for (std::size_t y = 0; y < 2 * h; ++y)
            for (std::size_t x = 0; x < 2 * w; ++x)
                out[(plane * 2 * h + y) * 2 * w + x] = input[(plane * h + y / 2) * w + x / 2];
    return out;
}

Tensor total_variation(const Tensor& input) {
    check_nchw(input, "total_variation");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    NeumaierSum sv, sh;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const double* p = input.data().data() + plane * h * w;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                if (y + 1 < h) sv.add(std::fabs(p[(y + 1) * w + x] - p[y * w + x]));
                if (x + 1 < w) sh.add(std::fabs(p[y * w + x + 1] - p[y * w + x]));
            }
    }
    const std::size_t cv = n * c * (h - 1) * w, ch = n * c * h * (w - 1);
    double tv = 0.0;
    if (cv > 0) tv += sv.value() / static_cast<double>(cv);
    if (ch > 0) tv += sh.value() / static_cast<double>(ch);
    return Tensor::scalar(tv);
}

} // namespace kernels

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

const Tensor& Var::value() const {
    require(tape_ != nullptr, "Var is not attached to a tape");
    return tape_->value(*this);
}

Tensor Gradients::of(Var v) const {
    require(v.id() < grads_.size(), "Gradients::of: node was recorded after the backward pass");
    if (grads_[v.id()]) return *grads_[v.id()];
    return Tensor::zeros(shapes_[v.id()]);
}

bool Gradients::reached(Var v) const { return v.id() < grads_.size() && grads_[v.id()].has_value(); }

Var Tape::leaf(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, true, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, false, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    Node node{std::move(value), {}, std::move(backward), false, false};
    for (const auto& v : inputs) {
        require(v.tape() == this, "op inputs must live on the same tape");
        node.inputs.push_back(v.id());
        node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

std::vector<Var> Tape::leaves() {
    std::vector<Var> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].is_leaf) out.push_back(Var(this, i));
    return out;
}

Gradients Tape::backward(Var output) const {
    require(output.tape() == this, "backward: output is not on this tape");
    const Node& out = nodes_.at(output.id());
    require(out.value.size() == 1, "backward: output must be a scalar, got shape " + shape_string(out.value.shape()));
    Gradients g;
    g.grads_.resize(output.id() + 1);
    g.shapes_.reserve(nodes_.size());
    for (const auto& n : nodes_) g.shapes_.push_back(n.value.shape());
    if (!out.requires_grad) return g;
    g.grads_[output.id()] = Tensor(out.value.shape(), 1.0);
    std::vector<Tensor*> input_grads;
    for (std::size_t id = output.id() + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (!node.requires_grad || !g.grads_[id] || !node.backward) continue;
        input_grads.assign(node.inputs.size(), nullptr);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            const std::size_t in = node.inputs[k];
            if (!nodes_[in].requires_grad) continue;
            if (!g.grads_[in]) g.grads_[in] = Tensor::zeros_like(nodes_[in].value);
            input_grads[k] = &*g.grads_[in];
        }
        node.backward(*g.grads_[id], input_grads);
    }
    return g;
}

Gradients backward(Var output) {
    require(output.tape() != nullptr, "backward: detached Var");
    return output.tape()->backward(output);
}

// ---------------------------------------------------------------------------
// Recorded ops
// ---------------------------------------------------------------------------

Var conv2d(Var input, Var kernel, Var bias, int stride, int pad) {
    Tape& t = *input.tape();
    const Tensor& x = input.value();
    const Tensor& w = kernel.value();
    const Tensor& b = bias.value();
    const auto g = conv_geometry(x, w, b, stride, pad);
    auto cols = std::make_shared<AlignedVector>();
    Tensor out = conv_forward(g, x, w, b, cols.get());
    const Tensor* wptr = &w;
    return t.record(std::move(out), {input, kernel, bias},
                    [g, cols, wptr](const Tensor& gout, std::span<Tensor* const> grads) {
                        const long patch = static_cast<long>(g.patch()), pix = static_cast<long>(g.pixels()),
                                   o = static_cast<long>(g.o);
                        CMapMat wmat(wptr->data().data(), o, patch);
                        RowMat dcols;
                        for (std::size_t n = 0; n < g.n; ++n) {
                            CMapMat gn(gout.data().data() + n * g.o * g.pixels(), o, pix);
                            CMapMat cn(cols->data() + n * g.patch() * g.pixels(), patch, pix);
                            if (grads[1]) {
                                MapMat dw(grads[1]->data().data(), o, patch);
                                dw.noalias() += gn * cn.transpose();
                            }
                            if (grads[2]) {
                                auto db = grads[2]->data();
                                for (long r = 0; r < o; ++r) db[static_cast<std::size_t>(r)] += gn.row(r).sum();
                            }
                            if (grads[0]) {
                                dcols.noalias() = wmat.transpose() * gn;
                                col2im_add(g, dcols.data(), grads[0]->data().data() + n * g.c * g.h * g.w);
                            }
                        }
                    });
}

Var maxpool2d(Var input) {
    auto r = kernels::maxpool2d(input.value());
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(r.argmax));
    return input.tape()->record(std::move(r.output), {input},
                                [idx](const Tensor& gout, std::span<Tensor* const> grads) {
                                    if (!grads[0]) return;
                                    auto gx = grads[0]->data();
                                    for (std::size_t o = 0; o < idx->size(); ++o) gx[(*idx)[o]] += gout[o];
                                });
}

Var unary(Var input, UnaryFn fn) {
    Tensor out = kernels::unary(input.value(), fn);
    Tape& t = *input.tape();
    const Tensor* xin = &input.value();
    auto y = std::make_shared<Tensor>(out);
    return t.record(std::move(out), {input}, [fn, xin, y](const Tensor& gout, std::span<Tensor* const> grads) {
        if (!grads[0]) return;
        auto gx = grads[0]->data();
        const auto x = xin->data();
        const auto yv = y->data();
        for (std::size_t i = 0; i < gx.size(); ++i) {
            switch (fn) {
            case UnaryFn::relu: gx[i] += x[i] > 0.0 ? gout[i] : 0.0; break;
            case UnaryFn::sigmoid: gx[i] += gout[i] * yv[i] * (1.0 - yv[i]); break;
            case UnaryFn::abs: gx[i] += gout[i] * sign0(x[i]); break;
            case UnaryFn::square: gx[i] += gout[i] * 2.0 * x[i]; break;
            }
        }
    });
}

Var relu(Var x) { return unary(x, UnaryFn::relu); }
Var sigmoid(Var x) { return unary(x, UnaryFn::sigmoid); }
Var abs(Var x) { return unary(x, UnaryFn::abs); }
Var square(Var x) { return unary(x, UnaryFn::square); }

Var binary(Var a, Var b, BinaryFn fn) {
    Tensor out = kernels::binary(a.value(), b.value(), fn);
    const Tensor* av = &a.value();
    const Tensor* bv = &b.value();
    return a.tape()->record(std::move(out), {a, b},
                            [fn, av, bv](const Tensor& gout, std::span<Tensor* const> grads) {
                                const bool bcast = bv->is_scalar() && !av->is_scalar();
                                if (grads[0]) {
                                    auto ga = grads[0]->data();
                                    for (std::size_t i = 0; i < ga.size(); ++i) {
                                        if (fn == BinaryFn::mul)
                                            ga[i] += gout[i] * (*bv)[bcast ? 0 : i];
                                        else
                                            ga[i] += gout[i];
                                    }
                                }
                                if (grads[1]) {
                                    auto gb = grads[1]->data();
                                    const double sgn = fn == BinaryFn::sub ? -1.0 : 1.0;
                                    for (std::size_t i = 0; i < gout.size(); ++i) {
                                        const double d = fn == BinaryFn::mul ? gout[i] * (*av)[i] : sgn * gout[i];
                                        gb[bcast ? 0 : i] += d;
                                    }
                                }
                            });
}

Var reduce(Var x, ReduceMode mode) {
    Tensor out = kernels::reduce(x.value(), mode);
    const double scale = mode == ReduceMode::mean ? 1.0 / static_cast<double>(x.value().size()) : 1.0;
    return x.tape()->record(std::move(out), {x}, [scale](const Tensor& gout, std::span<Tensor* const> grads) {
        if (!grads[0]) return;
        const double g = gout[0] * scale;
        for (double& v : grads[0]->data()) v += g;
    });
}

Var sum(Var x) { return reduce(x, ReduceMode::sum); }
Var mean(Var x) { return reduce(x, ReduceMode::mean); }

Var gram(Var feature) {
    const Tensor* f = &feature.value();
    Tensor out = kernels::gram(*f);
    return feature.tape()->record(std::move(out), {feature}, [f](const Tensor& gout, std::span<Tensor* const> grads) {
        if (!grads[0]) return;
        const std::size_t n = f->dim(0), c = f->dim(1), hw = f->dim(2) * f->dim(3);
        const double norm = 1.0 / static_cast<double>(c * hw);
        for (std::size_t s = 0; s < n; ++s) {
            CMapMat fs(f->data().data() + s * c * hw, static_cast<long>(c), static_cast<long>(hw));
            CMapMat gs(gout.data().data() + s * c * c, static_cast<long>(c), static_cast<long>(c));
            MapMat dfs(grads[0]->data().data() + s * c * hw, static_cast<long>(c), static_cast<long>(hw));
            RowMat sym = (gs + gs.transpose()) * norm;
            dfs.noalias() += sym * fs;
        }
    });
}

Var upsample_nearest2x(Var x) {
    Tensor out = kernels::upsample_nearest2x(x.value());
    const auto shape = x.value().shape();
    return x.tape()->record(std::move(out), {x}, [shape](const Tensor& gout, std::span<Tensor* const> grads) {
        if (!grads[0]) return;
        const std::size_t h = shape[2], w = shape[3], planes = shape[0] * shape[1];
        auto gx = grads[0]->data();
        for (std::size_t plane = 0; plane < planes; ++plane)
            for (std::size_t y = 0; y < 2 * h; ++y)
                for (std::size_t xx = 0; xx < 2 * w; ++xx)
                    gx[(plane * h + y / 2) * w + xx / 2] += gout[(plane * 2 * h + y) * 2 * w + xx];
    });
}

Var total_variation(Var x) {
    const Tensor* in = &x.value();
    Tensor out = kernels::total_variation(*in);
    return x.tape()->record(std::move(out), {x}, [in](const Tensor& gout, std::span<Tensor* const> grads) {
        if (!grads[0]) return;
        const std::size_t n = in->dim(0), c = in->dim(1), h = in->dim(2), w = in->dim(3);
        const std::size_t cv = n * c * (h - 1) * w, ch = n * c * h * (w - 1);
        const double gv = cv ? gout[0] / static_cast<double>(cv) : 0.0;
        const double gh = ch ? gout[0] / static_cast<double>(ch) : 0.0;
        for (std::size_t plane = 0; plane < n * c; ++plane) {
            const double* p = in->data().data() + plane * h * w;
            double* g = grads[0]->data().data() + plane * h * w;
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t xx = 0; xx < w; ++xx) {
                    if (y + 1 < h) {
                        const double s = sign0(p[(y + 1) * w + xx] - p[y * w + xx]) * gv;
                        g[(y + 1) * w + xx] += s;
                        g[y * w + xx] -= s;
                    }
                    if (xx + 1 < w) {
                        const double s = sign0(p[y * w + xx + 1] - p[y * w + xx]) * gh;
                        g[y * w + xx + 1] += s;
                        g[y * w + xx] -= s;
                    }
                }
        }
    });
}

Var concat_channels(std::span<const Var> parts) {
    require(!parts.empty(), "concat_channels: no inputs");
    const auto& s0 = parts[0].value().shape();
    std::size_t channels = 0;
    for (const auto& p : parts) {
        const auto& s = p.value().shape();
        require(s.size() == 4 && s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
                "concat_channels: incompatible shapes " + shape_string(s0) + " and " + shape_string(s));
        channels += s[1];
    }
    const std::size_t n = s0[0], hw = s0[2] * s0[3];
    Tensor out({n, channels, s0[2], s0[3]});
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const auto& v = p.value();
        const std::size_t c = v.dim(1);
        for (std::size_t s = 0; s < n; ++s)
            std::copy_n(v.data().data() + s * c * hw, c * hw, out.data().data() + (s * channels + off) * hw);
        off += c;
    }
    std::vector<std::size_t> widths;
    for (const auto& p : parts) widths.push_back(p.value().dim(1));
    return parts[0].tape()->record(
        std::move(out), std::vector<Var>(parts.begin(), parts.end()),
        [n, hw, channels, offsets, widths](const Tensor& gout, std::span<Tensor* const> grads) {
            for (std::size_t k = 0; k < grads.size(); ++k) {
                if (!grads[k]) continue;
                const std::size_t c = widths[k];
                for (std::size_t s = 0; s < n; ++s) {
                    const double* src = gout.data().data() + (s * channels + offsets[k]) * hw;
                    double* dst = grads[k]->data().data() + s * c * hw;
                    for (std::size_t i = 0; i < c * hw; ++i) dst[i] += src[i];
                }
            }
        });
}

Var scale(Var x, double c) { return binary(x, x.tape()->constant(Tensor::scalar(c)), BinaryFn::mul); }

Var operator+(Var a, Var b) { return binary(a, b, BinaryFn::add); }
Var operator-(Var a, Var b) { return binary(a, b, BinaryFn::sub); }
Var operator*(Var a, Var b) { return binary(a, b, BinaryFn::mul); }

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

double relative_error(double a, double b) noexcept {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / denom;
}

GradCheckReport grad_check_flat(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> point, std::span<const double> analytic, double h) {
    require(h > 0.0, "grad_check: h must be positive");
    require(point.size() == analytic.size(), "grad_check: analytic gradient has the wrong length");
    GradCheckReport rep;
    rep.coords = point.size();
    std::vector<double> x(point.begin(), point.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = relative_error(analytic[i], numeric);
        if (i == 0 || err > rep.max_rel_error) {
            rep.max_rel_error = err;
            rep.worst_index = i;
            rep.analytic_at_worst = analytic[i];
            rep.numeric_at_worst = numeric;
        }
    }
    return rep;
}

GradCheckReport grad_check(const ScalarFn& fn, const Tensor& point, double h) {
    Tensor analytic;
    {
        Tape tape;
        Var x = tape.leaf(point);
        Var out = fn(tape, x);
        analytic = tape.backward(out).of(x);
    }
    const auto shape = point.shape();
    auto f = [&](std::span<const double> v) {
        Tape tape;
        Var x = tape.constant(Tensor(shape, std::vector<double>(v.begin(), v.end())));
        return fn(tape, x).value().item();
    };
    return grad_check_flat(f, point.data(), analytic.data(), h);
}

} // namespace auxweight
