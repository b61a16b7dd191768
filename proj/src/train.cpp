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

#include "auxweight/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace auxweight {

using nlohmann::json;

std::size_t worker_slots() {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("AUXWEIGHT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return std::min(hw, static_cast<std::size_t>(v));
    }
    return hw;
}

Trainer::Trainer(RunConfig cfg) : cfg_((cfg.validate(), std::move(cfg))), setup_(make_setup(cfg_)) {
    const Generator gen = init_generator(cfg_.seed, cfg_.arch);
    state_ = TrainState::init(setup_, gen, initial_phi(cfg_));
    if (cfg_.reweighter == ReweighterKind::awa) {
        pool_ = make_guidance_pool(setup_.fe,
                                   make_batch(cfg_.mask_group, cfg_.seed, kGuidanceIndexBase, cfg_.guidance_pool));
    } else if (cfg_.reweighter != ReweighterKind::fixed) {
        rw_ = ReweighterState::init(cfg_.reweighter, omega().flat(), cfg_.baselines);
    }
    eval_batch_ = make_batch(cfg_.mask_group, cfg_.seed, kEvalIndexBase, cfg_.eval_pool);
}

AuxWeights Trainer::omega() const { return weights_from_params(setup_.aux, state_.phi); }

Batch Trainer::batch(std::uint64_t c) const {
    return make_batch(cfg_.mask_group, cfg_.seed, c * cfg_.batch_size, cfg_.batch_size);
}

Metrics Trainer::evaluate() const {
    const Generator gen{cfg_.arch, state_.model.theta};
    const Tensor pred = inpaint(gen, eval_batch_.gt, eval_batch_.mask);
    const Tensor comp = composite(pred, eval_batch_.gt, eval_batch_.mask);
    return evaluate_metrics(setup_.fe, comp, eval_batch_.gt);
}

json Trainer::step() {
    require(!done(), "Trainer: run already finished");
    const auto t0 = std::chrono::steady_clock::now();
    const TrainState saved = state_;
    const std::optional<ReweighterState> saved_rw = rw_;
    try {
        CycleRecord rec;
        ReweighterObservation obs;
        const std::uint64_t c = state_.iter;
        if (cfg_.reweighter == ReweighterKind::awa) {
            std::vector<Batch> batches;
            for (std::size_t j = 0; j < cfg_.awa.k; ++j) batches.push_back(batch(c + j));
            rec = awa_cycle(setup_, state_, batches, *pool_);
        } else if (cfg_.reweighter == ReweighterKind::fixed) {
            rec = fixed_cycle(setup_, state_, batch(c));
        } else {
            rec = reweighter_cycle(setup_, state_, *rw_, batch(c), &obs);
        }
        const bool in_window = state_.iter + cfg_.eval_window > cfg_.iters;
        std::optional<Metrics> ev;
        if (in_window) {
            ev = evaluate();
            evals_.push_back(*ev);
        }
        std::optional<double> ms;
        if (cfg_.log_wallclock)
            ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const bool sigmoid = !rw_.has_value();
        return cycle_record(cfg_.reweighter, rec, sigmoid, sigmoid ? nullptr : &obs, ev ? &*ev : nullptr, ms);
    } catch (const RunAborted&) {
        state_ = saved;
        rw_ = saved_rw;
        throw;
    }
}

Metrics Trainer::summary_metrics() const {
    if (evals_.empty()) return evaluate();
    Metrics m;
    for (const auto& e : evals_) {
        m.psnr += e.psnr;
        m.ssim += e.ssim;
        m.mae += e.mae;
        m.perceptual_distance += e.perceptual_distance;
    }
    const double n = static_cast<double>(evals_.size());
    m.psnr /= n;
    m.ssim /= n;
    m.mae /= n;
    m.perceptual_distance /= n;
    return m;
}

json Trainer::summary_record() const {
    return json{{"type", "summary"},
                {"iters", state_.iter},
                {"eval_points", std::max<std::size_t>(evals_.size(), 1)},
                {"metrics", metrics_json(summary_metrics())}};
}

json Trainer::abort_record(const std::string& reason) const {
    return json{{"type", "abort"},
                {"iter", state_.iter},
                {"reason", reason},
                {"phi_p", state_.phi.phi_p},
                {"phi_s", state_.phi.phi_s},
                {"theta", state_.model.theta.flatten()}};
}

TrainResult run_train(const RunConfig& cfg, std::ostream& log) {
    Trainer tr(cfg);
    TrainResult res;
    log << dump_line(header_record(tr.config()));
    try {
        while (!tr.done()) {
            log << dump_line(tr.step());
            ++res.records;
        }
    } catch (const RunAborted& e) {
        res.aborted = true;
        res.abort_reason = e.what();
        log << dump_line(tr.abort_record(e.what()));
        log.flush();
        return res;
    }
    res.summary = tr.summary_metrics();
    log << dump_line(tr.summary_record());
    log.flush();
    return res;
}

TrainResult run_train(const RunConfig& cfg) {
    const std::filesystem::path out(cfg.output);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write run log '" + cfg.output + "'");
    TrainResult r = run_train(cfg, f);
    if (!f) throw std::runtime_error("error writing run log '" + cfg.output + "'");
    return r;
}

std::vector<RunConfig> grid_configs(const RunConfig& base) {
    std::vector<RunConfig> out;
    const std::size_t terms = base.aux.terms;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < terms; ++i) combos *= kGridLevels.size();
    const std::filesystem::path stem = std::filesystem::path(base.output).replace_extension();
    for (std::size_t code = 0; code < combos; ++code) {
        RunConfig c = base;
        c.reweighter = ReweighterKind::fixed;
        c.init = InitMode::explicit_weights;
        c.init_omega_p.clear();
        c.init_omega_s.clear();
        std::string tag;
        std::size_t rest = code;
        for (std::size_t n = 0; n < terms; ++n) {
            const std::size_t lvl = rest % kGridLevels.size();
            rest /= kGridLevels.size();
            c.init_omega_p.push_back(kGridLevels[lvl] * base.aux.lambda_p);
            c.init_omega_s.push_back(kGridLevels[lvl] * base.aux.lambda_s);
            tag += std::to_string(lvl);
        }
        c.output = stem.string() + ".grid" + tag + ".jsonl";
        out.push_back(std::move(c));
    }
    return out;
}

void rank_rows(std::vector<CompareRow>& rows) {
    for (auto& r : rows) {
        std::size_t better = 0;
        for (const auto& o : rows)
            if (o.mask_group == r.mask_group && o.metrics.perceptual_distance < r.metrics.perceptual_distance)
                ++better;
        r.rank = better + 1;
    }
}

std::vector<CompareRow> run_compare(const std::vector<RunConfig>& configs, const CompareOptions& opts) {
    if (configs.size() < 2) throw ConfigError("compare needs at least two configs");
    std::vector<RunConfig> all = configs;
    std::vector<std::string> labels;
    for (const auto& c : configs) labels.push_back(to_string(c.reweighter));
    if (opts.grid) {
        for (auto& g : grid_configs(configs.front())) {
            std::string label = "grid";
            for (double w : g.init_omega_p) label += ":" + std::to_string(w / g.aux.lambda_p).substr(0, 4);
            labels.push_back(label);
            all.push_back(std::move(g));
        }
    }
    std::set<std::string> outputs;
    for (const auto& c : all)
        if (!outputs.insert(std::filesystem::weakly_canonical(c.output).string()).second)
            throw ConfigError("compare: two runs write to '" + c.output + "'");

    std::vector<CompareRow> rows(all.size());
    std::vector<std::string> errors(all.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < all.size();) {
            try {
                const TrainResult r = run_train(all[i]);
                rows[i] = CompareRow{labels[i], all[i].mask_group.name(), r.summary, 0, all[i].output, r.aborted};
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const std::size_t slots = std::min(opts.threads ? opts.threads : worker_slots(), all.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < slots; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < all.size(); ++i)
        if (!errors[i].empty()) throw std::runtime_error(all[i].output + ": " + errors[i]);
    // Aborted runs have no summary; they rank last.
    for (auto& r : rows)
        if (r.aborted) r.metrics.perceptual_distance = std::numeric_limits<double>::infinity();
    rank_rows(rows);
    return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "reweighter,mask_group,psnr,ssim,mae,perceptual_distance,rank\n";
    for (const auto& r : rows) {
        os << r.reweighter << ",\"" << r.mask_group << "\"," << r.metrics.psnr << ',' << r.metrics.ssim << ','
           << r.metrics.mae << ',' << r.metrics.perceptual_distance << ',' << r.rank << '\n';
    }
    return os.str();
}

} // namespace auxweight
