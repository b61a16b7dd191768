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

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include "auxweight/harness.hpp"
#include "auxweight/losses.hpp"
#include "auxweight/splitmix64.hpp"

namespace auxweight {

namespace {

Tensor random_tensor(SplitMix64& rng, const Tensor::Shape& shape, double lo, double hi) {
    Tensor t(shape, 0.0);
    for (auto& v : t.storage()) v = rng.uniform(lo, hi);
    return t;
}

// Values bounded away from zero, so relu/abs kinks stay out of reach of h.
Tensor off_zero(SplitMix64& rng, const Tensor::Shape& shape) {
    Tensor t(shape, 0.0);
    for (auto& v : t.storage()) {
        const double m = rng.uniform(0.05, 1.0);
        v = rng.unit() < 0.5 ? -m : m;
    }
    return t;
}

// A shuffled ramp: every pooling window has a strict maximum with a wide gap.
Tensor strict_maxima(SplitMix64& rng, const Tensor::Shape& shape) {
    Tensor t(shape, 0.0);
    auto& d = t.storage();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.01 * static_cast<double>(i);
    for (std::size_t i = d.size(); i > 1; --i) std::swap(d[i - 1], d[rng.range(0, i - 1)]);
    return t;
}

// Image in [lo, hi] whose pixels differ from their right/lower neighbours and
// from `ref` (when given) by at least `gap`.
Tensor with_gaps(SplitMix64& rng, const Tensor::Shape& shape, double lo, double hi, double gap,
                 const Tensor* ref = nullptr) {
    Tensor t(shape, 0.0);
    const std::size_t h = shape[shape.size() - 2], w = shape.back();
    auto& d = t.storage();
    // Row-major fill: the left and upper neighbours are already final.
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::size_t x = i % w, y = (i / w) % h;
        for (;;) {
            const double v = rng.uniform(lo, hi);
            if (x > 0 && std::fabs(v - d[i - 1]) < gap) continue;
            if (y > 0 && std::fabs(v - d[i - w]) < gap) continue;
            if (ref && std::fabs(v - (*ref)[i]) < gap) continue;
            d[i] = v;
            break;
        }
    }
    return t;
}

// sum(y * r) for a fixed random r, turning any op into a scalar test.
Var project(Tape& tape, Var y, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return sum(y * tape.constant(random_tensor(rng, y.shape(), -1.0, 1.0)));
}

GradCheckEntry entry(std::string name, const GradCheckReport& r) {
    return GradCheckEntry{std::move(name),     r.max_rel_error,     r.coords, r.worst_index,
                          r.analytic_at_worst, r.numeric_at_worst, 0,        r.max_rel_error < kGradCheckTolerance};
}

using FlatFn = std::function<double(std::span<const double>)>;
using FlatGrad = std::function<std::vector<double>(std::span<const double>)>;

std::vector<double> central_differences(const FlatFn& f, std::span<const double> point, double h) {
    std::vector<double> x(point.begin(), point.end()), out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        out[i] = (fp - fm) / (2.0 * h);
    }
    return out;
}

// Every loss here is piecewise polynomial of degree <= 2 in its input (up to
// the generator's output sigmoid). For such a function
//   q(h) = f(x+h) + f(x-h) - 4 f(x+h/2) - 4 f(x-h/2) + 6 f(x)
// is O(h^4) unless a relu, abs or pooling kink lies within one step, so points
// where it is not are redrawn. q(h) alone is blind to a kink exactly h/3 from
// x; q(h/2) covers that spot. The screen never looks at the analytic
// gradient, so a wrong backward still fails.
struct Screened {
    std::vector<double> fd;
    bool straddles = false;
};

Screened screened_differences(const FlatFn& f, std::span<const double> point, double h) {
    std::vector<double> x(point.begin(), point.end());
    Screened s;
    s.fd.resize(x.size());
    const double f0 = f(x);
    auto at = [&](std::size_t i, double d) {
        const double x0 = x[i];
        x[i] = x0 + d;
        const double v = f(x);
        x[i] = x0;
        return v;
    };
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(f0) / h;
    for (std::size_t i = 0; i < x.size() && !s.straddles; ++i) {
        const double p1 = at(i, h), m1 = at(i, -h), p2 = at(i, h / 2), m2 = at(i, -h / 2), p4 = at(i, h / 4),
                     m4 = at(i, -h / 4);
        // Richardson combination of the h and h/2 central differences: the
        // sigmoid at the generator output leaves an h^2 term that is visible
        // on coordinates with a tiny gradient.
        s.fd[i] = (4.0 * (p2 - m2) / h - (p1 - m1) / (2.0 * h)) / 3.0;
        const double bound = 1e-4 * std::max(std::fabs(s.fd[i]), 1e-8);
        const double q1 = (p1 + m1 - 4.0 * p2 - 4.0 * m2 + 6.0 * f0) / h;
        const double q2 = 2.0 * (p2 + m2 - 4.0 * p4 - 4.0 * m4 + 6.0 * f0) / h;
        s.straddles = std::fabs(q1) > bound + noise || std::fabs(q2) > bound + 2.0 * noise;
    }
    return s;
}

GradCheckEntry screened_check(std::string name, const std::function<std::vector<double>()>& draw, const FlatFn& f,
                              const FlatGrad& grad, double h) {
    constexpr std::size_t kMaxDraws = 50;
    for (std::size_t attempt = 0;; ++attempt) {
        const auto point = draw();
        Screened s = screened_differences(f, point, h);
        if (s.straddles && attempt + 1 < kMaxDraws) continue;
        if (s.straddles) s.fd = central_differences(f, point, h);

        const auto analytic = grad(point);
        GradCheckEntry e;
        e.name = std::move(name);
        e.coords = point.size();
        e.redraws = attempt;
        for (std::size_t i = 0; i < s.fd.size(); ++i) {
            const double err = relative_error(analytic[i], s.fd[i]);
            if (i == 0 || err > e.max_rel_error) {
                e.max_rel_error = err;
                e.worst_index = i;
                e.analytic_at_worst = analytic[i];
                e.numeric_at_worst = s.fd[i];
            }
        }
        e.pass = e.max_rel_error < kGradCheckTolerance;
        return e;
    }
}

// x^2 with a backward that forgets the factor 2.
Var broken_square(Var x) {
    Tape& tape = *x.tape();
    return tape.record(kernels::unary(x.value(), UnaryFn::square), {x},
                       [xv = x.value()](const Tensor& g, std::span<Tensor* const> in) {
                           if (!in[0]) return;
                           for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * xv[i];
                       });
}

} // namespace

GradCheckSummary run_gradcheck(const GradCheckOptions& opts) {
    GradCheckSummary out;
    SplitMix64 rng(opts.seed);
    auto add = [&](std::string name, const ScalarFn& fn, const Tensor& point) {
        out.entries.push_back(entry(std::move(name), grad_check(fn, point, opts.op_step)));
    };
    const std::uint64_t ps = opts.seed * 1000;

    // Ops.
    {
        const Tensor x = random_tensor(rng, {2, 3, 6, 6}, -1.0, 1.0);
        const Tensor k = random_tensor(rng, {4, 3, 3, 3}, -0.5, 0.5);
        const Tensor b = random_tensor(rng, {4}, -0.5, 0.5);
        add("conv2d/input", [&](Tape& t, Var v) { return project(t, conv2d(v, t.constant(k), t.constant(b), 1, 1), ps + 1); }, x);
        add("conv2d/kernel", [&](Tape& t, Var v) { return project(t, conv2d(t.constant(x), v, t.constant(b), 1, 1), ps + 2); }, k);
        add("conv2d/bias", [&](Tape& t, Var v) { return project(t, conv2d(t.constant(x), t.constant(k), v, 1, 1), ps + 3); }, b);
        add("conv2d_stride2/input",
            [&](Tape& t, Var v) { return project(t, conv2d(v, t.constant(k), t.constant(b), 2, 1), ps + 4); }, x);
        add("conv2d_stride2/kernel",
            [&](Tape& t, Var v) { return project(t, conv2d(t.constant(x), v, t.constant(b), 2, 1), ps + 5); }, k);
    }
    add("maxpool2d", [&](Tape& t, Var v) { return project(t, maxpool2d(v), ps + 6); }, strict_maxima(rng, {2, 3, 6, 6}));
    add("relu", [&](Tape& t, Var v) { return project(t, relu(v), ps + 7); }, off_zero(rng, {3, 4, 5}));
    add("sigmoid", [&](Tape& t, Var v) { return project(t, sigmoid(v), ps + 8); }, random_tensor(rng, {3, 4, 5}, -3, 3));
    add("abs", [&](Tape& t, Var v) { return project(t, abs(v), ps + 9); }, off_zero(rng, {3, 4, 5}));
    add("square", [&](Tape& t, Var v) { return project(t, square(v), ps + 10); }, random_tensor(rng, {3, 4, 5}, -2, 2));
    {
        const Tensor other = random_tensor(rng, {3, 4, 5}, -1.0, 1.0);
        const Tensor point = random_tensor(rng, {3, 4, 5}, -1.0, 1.0);
        add("add", [&](Tape& t, Var v) { return project(t, v + t.constant(other), ps + 11); }, point);
        add("sub/lhs", [&](Tape& t, Var v) { return project(t, v - t.constant(other), ps + 12); }, point);
        add("sub/rhs", [&](Tape& t, Var v) { return project(t, t.constant(other) - v, ps + 13); }, point);
        add("mul", [&](Tape& t, Var v) { return project(t, v * t.constant(other), ps + 14); }, point);
        add("mul/self", [&](Tape& t, Var v) { return project(t, v * v, ps + 15); }, point);
        add("mul/scalar_operand",
            [&](Tape& t, Var v) { return project(t, t.constant(other) * v, ps + 16); }, Tensor::scalar(0.7));
        add("sum", [&](Tape&, Var v) { return sum(v); }, point);
        add("mean", [&](Tape&, Var v) { return mean(v); }, point);
        add("scale", [&](Tape& t, Var v) { return project(t, scale(v, -2.5), ps + 17); }, point);
        add("concat_channels",
            [&](Tape& t, Var v) {
                const std::array<Var, 2> parts{v, t.constant(Tensor({1, 2, 4, 5}, 0.3))};
                return project(t, concat_channels(parts), ps + 18);
            },
            point.reshaped({1, 3, 4, 5}));
    }
    add("gram", [&](Tape& t, Var v) { return project(t, gram(v), ps + 19); }, random_tensor(rng, {2, 4, 5, 5}, -1, 1));
    add("upsample_nearest2x", [&](Tape& t, Var v) { return project(t, upsample_nearest2x(v), ps + 20); },
        random_tensor(rng, {2, 3, 4, 4}, -1, 1));
    add("total_variation", [&](Tape&, Var v) { return total_variation(v); },
        with_gaps(rng, {2, 3, 6, 6}, 0.0, 1.0, 10 * opts.op_step));
    if (opts.sabotage)
        add("sabotaged_square", [&](Tape& t, Var v) { return project(t, broken_square(v), ps + 21); },
            random_tensor(rng, {3, 4}, 0.5, 1.5));

    // Losses with respect to the predicted pixels.
    const FeatureExtractor fe = init_extractor(42);
    const std::size_t size = 8;
    const MaskGroup group = MaskGroup::all()[2];
    const Batch batch = make_batch(group, opts.seed, 0, 1, size);
    AuxConfig aux;
    const AuxWeights w = weights_from_params(aux, init_random(aux, opts.seed, 1.0));
    const MainWeights lm;

    using LossFn = std::function<Var(const LossGraph&)>;
    struct Loss {
        std::string name;
        LossFn fn;
        bool through_extractor;
    };
    const std::vector<Loss> losses = {
        {"l1", [](const LossGraph& g) { return g.l1; }, false},
        {"tv", [](const LossGraph& g) { return g.tv; }, false},
        {"perceptual_1", [](const LossGraph& g) { return g.perceptual[0]; }, true},
        {"perceptual_2", [](const LossGraph& g) { return g.perceptual[1]; }, true},
        {"perceptual_3", [](const LossGraph& g) { return g.perceptual[2]; }, true},
        {"style_1", [](const LossGraph& g) { return g.style[0]; }, true},
        {"style_2", [](const LossGraph& g) { return g.style[1]; }, true},
        {"style_3", [](const LossGraph& g) { return g.style[2]; }, true},
        {"tpl", [&](const LossGraph& g) { return tpl(g, w.omega_p); }, true},
        {"tsl", [&](const LossGraph& g) { return tsl(g, w.omega_s); }, true},
        {"total", [&](const LossGraph& g) { return total_loss(g, lm, w); }, true},
    };
    const auto shape = batch.gt.shape();
    for (const auto& loss : losses) {
        const double h = loss.through_extractor ? opts.net_step : opts.pixel_step;
        auto draw = [&] {
            const Tensor p = with_gaps(rng, shape, 0.02, 0.98, 2 * opts.pixel_step, &batch.gt);
            return std::vector<double>(p.data().begin(), p.data().end());
        };
        auto f = [&](std::span<const double> v) {
            Tape tape;
            Var x = tape.constant(Tensor(shape, std::vector<double>(v.begin(), v.end())));
            return loss.fn(record_losses(fe, x, batch.gt)).value().item();
        };
        auto grad = [&](std::span<const double> v) {
            Tape tape;
            Var x = tape.leaf(Tensor(shape, std::vector<double>(v.begin(), v.end())));
            const Tensor g = tape.backward(loss.fn(record_losses(fe, x, batch.gt))).of(x);
            return std::vector<double>(g.data().begin(), g.data().end());
        };
        out.entries.push_back(screened_check("loss/" + loss.name + "/pixels", draw, f, grad, h));
    }

    // Losses and guidance metrics with respect to generator weights.
    const GeneratorArch toy{2, 2, 2, 2};
    const ParamSet theta0 = init_generator(opts.seed, toy).params;
    // Zero-initialised biases put relu inputs exactly on the kink wherever the
    // input patch is empty, so check points get a random offset.
    auto draw_theta = [&] {
        auto flat = theta0.flatten();
        for (double& v : flat) v += rng.uniform(-0.05, 0.05);
        return flat;
    };
    auto param_check = [&](std::string name, const std::function<Var(std::span<const Var>)>& fn) {
        auto f = [&](std::span<const double> flat) {
            ParamSet p = theta0;
            p.assign(flat);
            Tape tape;
            return fn(param_leaves(tape, p)).value().item();
        };
        auto grad = [&](std::span<const double> flat) {
            ParamSet p = theta0;
            p.assign(flat);
            Tape tape;
            const auto params = param_leaves(tape, p);
            return flat_gradient(tape, fn(params), params);
        };
        out.entries.push_back(screened_check(std::move(name), draw_theta, f, grad, opts.net_step));
    };
    for (const auto& loss : losses)
        param_check("loss/" + loss.name + "/theta", [&](std::span<const Var> p) {
            Var comp = composite(inpaint(toy, p, batch.gt, batch.mask), batch.gt, batch.mask);
            return loss.fn(record_losses(fe, comp, batch.gt));
        });
    const GuidancePool pool = make_guidance_pool(fe, make_batch(group, opts.seed + 1, 100, 2, size));
    for (auto kind : {GuidanceKind::mae, GuidanceKind::perceptual_distance})
        param_check("guidance/" + to_string(kind) + "/theta",
                    [&, kind](std::span<const Var> p) { return guidance_on_tape(fe, toy, p, pool, kind); });

    out.pass = true;
    for (const auto& e : out.entries) out.pass = out.pass && e.pass;
    return out;
}

std::string GradCheckSummary::format() const {
    std::ostringstream os;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-34s %7s %11s %7s %13s %13s %7s  %s\n", "check", "coords", "max_rel_err",
                  "worst", "analytic", "numeric", "redraws", "result");
    os << buf;
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%-34s %7zu %11.3e %7zu %13.6e %13.6e %7zu  %s\n", e.name.c_str(), e.coords,
                      e.max_rel_error, e.worst_index, e.analytic_at_worst, e.numeric_at_worst, e.redraws,
                      e.pass ? "ok" : "FAIL");
        os << buf;
    }
    os << "gradcheck: " << (pass ? "PASS" : "FAIL") << " (tolerance " << kGradCheckTolerance << ")\n";
    return os.str();
}

} // namespace auxweight
