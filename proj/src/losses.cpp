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

#include "auxweight/losses.hpp"

namespace auxweight {

namespace {

void check_tap(int n) { require(n >= 1 && n <= static_cast<int>(kNumTaps), "tap index must be in 1..3"); }

void check_same(const Tensor& a, const Tensor& b, const char* op) {
    require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                        shape_string(b.shape()));
}

} // namespace

Var l1_loss(Var pred, Var gt) {
    check_same(pred.value(), gt.value(), "l1_loss");
    return mean(abs(pred - gt));
}

double l1_loss(const Tensor& pred, const Tensor& gt) {
    Tape tape;
    return l1_loss(tape.constant(pred), tape.constant(gt)).value().item();
}

Var tv_loss(Var pred) { return total_variation(pred); }

double tv_loss(const Tensor& pred) { return kernels::total_variation(as_batch(pred)).item(); }

LossGraph record_losses(const FeatureExtractor& fe, Var image, const Tensor& gt, std::size_t terms) {
    require(terms >= 1 && terms <= kNumTaps, "record_losses: term count must be in 1..3");
    Tape& tape = *image.tape();
    const Tensor gtb = as_batch(gt);
    check_same(image.value(), gtb, "record_losses");
    LossGraph g;
    Var gt_var = tape.constant(gtb);
    g.l1 = l1_loss(image, gt_var);
    g.tv = tv_loss(image);
    const auto pred_taps = extract(fe, image);
    const auto gt_taps = extract(fe, gt_var);
    for (std::size_t n = 0; n < terms; ++n) {
        g.perceptual.push_back(mean(abs(pred_taps[n] - gt_taps[n])));
        g.style.push_back(mean(abs(gram(pred_taps[n]) - gram(gt_taps[n]))));
    }
    return g;
}

MainLossVector LossGraph::main_values() const { return {l1.value().item(), tv.value().item()}; }

AuxTermVector LossGraph::aux_values() const {
    AuxTermVector v;
    for (const auto& p : perceptual) v.perceptual.push_back(p.value().item());
    for (const auto& s : style) v.style.push_back(s.value().item());
    return v;
}

Var main_loss(const LossGraph& g, const MainWeights& w) {
    require(w.l1 >= 0.0 && w.tv >= 0.0, "main_loss: weights must be non-negative");
    return scale(g.l1, w.l1) + scale(g.tv, w.tv);
}

double perceptual_term(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, int n) {
    check_tap(n);
    check_same(pred, gt, "perceptual_term");
    const auto a = extract(fe, pred);
    const auto b = extract(fe, gt);
    const auto k = static_cast<std::size_t>(n - 1);
    return kernels::reduce(kernels::unary(kernels::binary(a[k], b[k], BinaryFn::sub), UnaryFn::abs), ReduceMode::mean)
        .item();
}

double style_term(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt, int n) {
    check_tap(n);
    check_same(pred, gt, "style_term");
    const auto a = extract(fe, pred);
    const auto b = extract(fe, gt);
    const auto k = static_cast<std::size_t>(n - 1);
    const Tensor d = kernels::binary(kernels::gram(a[k]), kernels::gram(b[k]), BinaryFn::sub);
    return kernels::reduce(kernels::unary(d, UnaryFn::abs), ReduceMode::mean).item();
}

double standard_perceptual(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt) {
    double s = 0.0;
    for (int n = 1; n <= static_cast<int>(kNumTaps); ++n) s += perceptual_term(fe, pred, gt, n);
    return s;
}

double standard_style(const FeatureExtractor& fe, const Tensor& pred, const Tensor& gt) {
    double s = 0.0;
    for (int n = 1; n <= static_cast<int>(kNumTaps); ++n) s += style_term(fe, pred, gt, n);
    return s;
}

double main_loss(const Tensor& pred, const Tensor& gt, const MainWeights& w) {
    require(w.l1 >= 0.0 && w.tv >= 0.0, "main_loss: weights must be non-negative");
    return w.l1 * l1_loss(pred, gt) + w.tv * tv_loss(pred);
}

} // namespace auxweight
