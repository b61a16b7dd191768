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

#include "auxweight/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace auxweight {

namespace {

constexpr std::string_view kDefaultToml = R"(# auxweight run configuration
seed = 0
reweighter = "awa"        # awa | fixed | adaloss | gradnorm | gradsim
iters = 2000
batch_size = 8
guidance_pool = 64        # held-out images scored by the guidance metric
eval_pool = 64            # held-out images for the reported metrics
eval_window = 100         # trailing cycles averaged into the summary
mask_group = "(0.1,0.2]"
extractor_seed = 42
output = "run.jsonl"
log_wallclock = false     # true breaks byte-identical logs
init = "equal"            # equal | random | explicit
init_scale = 1.0          # stddev of phi under init = "random"
init_omega_p = []         # used by init = "explicit"
init_omega_s = []

[generator]
c1 = 8
c2 = 16
c3 = 16
c4 = 8

[aux]
lambda_p = 2.0
lambda_s = 750.0
terms = 3

[main]
l1 = 1.0
tv = 0.1

[awa]
k = 1
beta = 1e-3
beta1 = 0.5
beta2 = 0.999
eps = 1e-8
weight_decay = 0.01
guidance = "perceptual_distance"   # perceptual_distance | mae

[model]
optimizer = "adam"        # adam | sgd
lr = 2e-3
beta1 = 0.9
beta2 = 0.999
eps = 1e-8
weight_decay = 0.0

[baselines]
adaloss_decay = 0.99
gradnorm_gamma = 1.5
gradnorm_lr = 0.025
)";

[[noreturn]] void fail(std::string_view source, const std::string& msg) {
    throw ConfigError(std::string(source) + ": " + msg);
}

class TableReader {
public:
    TableReader(const toml::table& t, std::string prefix, std::string_view source)
        : table_(t), prefix_(std::move(prefix)), source_(source) {}

    void finish() const {
        for (const auto& [k, v] : table_) {
            (void)v;
            if (!seen_.count(std::string(k.str())))
                fail(source_, "unknown key '" + prefix_ + std::string(k.str()) + "'");
        }
    }

    const toml::node* get(std::string_view key) {
        seen_.insert(std::string(key));
        return table_.get(key);
    }

    void real(std::string_view key, double& out) {
        if (auto* n = get(key)) {
            if (auto v = n->value<double>()) out = *v;
            else fail(source_, "'" + name(key) + "' must be a number");
        }
    }

    template <class U> void integer(std::string_view key, U& out) {
        if (auto* n = get(key)) {
            auto v = n->as_integer();
            if (!v) fail(source_, "'" + name(key) + "' must be an integer");
            if (v->get() < 0) fail(source_, "'" + name(key) + "' must be non-negative");
            out = static_cast<U>(v->get());
        }
    }

    void boolean(std::string_view key, bool& out) {
        if (auto* n = get(key)) {
            auto v = n->as_boolean();
            if (!v) fail(source_, "'" + name(key) + "' must be a boolean");
            out = v->get();
        }
    }

    std::optional<std::string> string(std::string_view key) {
        if (auto* n = get(key)) {
            auto v = n->as_string();
            if (!v) fail(source_, "'" + name(key) + "' must be a string");
            return v->get();
        }
        return std::nullopt;
    }

    void reals(std::string_view key, std::vector<double>& out) {
        if (auto* n = get(key)) {
            auto* arr = n->as_array();
            if (!arr) fail(source_, "'" + name(key) + "' must be an array");
            out.clear();
            for (const auto& e : *arr) {
                auto v = e.value<double>();
                if (!v) fail(source_, "'" + name(key) + "' must hold numbers");
                out.push_back(*v);
            }
        }
    }

    const toml::table* subtable(std::string_view key) {
        if (auto* n = get(key)) {
            auto* t = n->as_table();
            if (!t) fail(source_, "'" + name(key) + "' must be a table");
            return t;
        }
        return nullptr;
    }

    std::string name(std::string_view key) const { return prefix_ + std::string(key); }

private:
    const toml::table& table_;
    std::string prefix_;
    std::string_view source_;
    std::set<std::string> seen_;
};

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "adam") return OptimizerKind::adam;
    if (s == "sgd") return OptimizerKind::sgd;
    throw InvalidArgument("unknown optimizer '" + std::string(s) + "'");
}

GuidanceKind parse_guidance(std::string_view s) {
    if (s == "perceptual_distance") return GuidanceKind::perceptual_distance;
    if (s == "mae") return GuidanceKind::mae;
    throw InvalidArgument("unknown guidance metric '" + std::string(s) + "'");
}

InitMode parse_init(std::string_view s) {
    if (s == "equal") return InitMode::equal;
    if (s == "random") return InitMode::random;
    if (s == "explicit") return InitMode::explicit_weights;
    throw InvalidArgument("unknown init mode '" + std::string(s) + "'");
}

std::string toml_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    std::string s = os.str();
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string toml_array(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + toml_double(v[i]);
    return s + "]";
}

} // namespace

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }
std::string to_string(GuidanceKind k) { return k == GuidanceKind::mae ? "mae" : "perceptual_distance"; }
std::string to_string(InitMode m) {
    switch (m) {
    case InitMode::equal: return "equal";
    case InitMode::random: return "random";
    case InitMode::explicit_weights: return "explicit";
    }
    return "equal";
}

void RunConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    check(batch_size >= 1, "batch_size must be >= 1");
    check(guidance_pool >= 1, "guidance_pool must be >= 1");
    check(eval_pool >= 1, "eval_pool must be >= 1");
    check(eval_window >= 1, "eval_window must be >= 1");
    check(!output.empty(), "output must not be empty");
    check(arch.c1 > 0 && arch.c2 > 0 && arch.c3 > 0 && arch.c4 > 0, "generator widths must be positive");
    check(lambda_m.l1 >= 0.0 && lambda_m.tv >= 0.0, "main loss weights must be non-negative");
    check(model.lr > 0.0 && std::isfinite(model.lr), "model.lr must be positive");
    check(model.beta1 >= 0.0 && model.beta1 < 1.0 && model.beta2 >= 0.0 && model.beta2 < 1.0,
          "model betas must lie in [0, 1)");
    check(model.eps > 0.0 && model.weight_decay >= 0.0, "model eps must be positive, weight_decay >= 0");
    check(awa.aux_weight_decay >= 0.0, "awa.weight_decay must be >= 0");
    check(baselines.adaloss_decay >= 0.0 && baselines.adaloss_decay < 1.0, "adaloss_decay must lie in [0, 1)");
    check(baselines.gradnorm_gamma >= 0.0 && baselines.gradnorm_lr > 0.0, "gradnorm settings out of range");
    check(init_scale >= 0.0, "init_scale must be >= 0");
    try {
        aux.validate();
        awa.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (init == InitMode::explicit_weights) {
        check(init_omega_p.size() == aux.terms && init_omega_s.size() == aux.terms,
              "explicit init needs one omega per term in init_omega_p and init_omega_s");
        for (double w : init_omega_p) check(w > 0.0 && w < aux.lambda_p, "init_omega_p must lie in (0, lambda_p)");
        for (double w : init_omega_s) check(w > 0.0 && w < aux.lambda_s, "init_omega_s must lie in (0, lambda_s)");
    }
}

std::string default_config_toml() { return std::string(kDefaultToml); }

RunConfig parse_config(std::string_view text, std::string_view source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (line " << e.source().begin.line << ")";
        fail(source, os.str());
    }

    RunConfig cfg;
    try {
        TableReader top(root, "", source);
        top.integer("seed", cfg.seed);
        if (auto s = top.string("reweighter")) cfg.reweighter = parse_reweighter(*s);
        top.integer("iters", cfg.iters);
        top.integer("batch_size", cfg.batch_size);
        top.integer("guidance_pool", cfg.guidance_pool);
        top.integer("eval_pool", cfg.eval_pool);
        top.integer("eval_window", cfg.eval_window);
        if (auto s = top.string("mask_group")) cfg.mask_group = MaskGroup::parse(*s);
        top.integer("extractor_seed", cfg.extractor_seed);
        if (auto s = top.string("output")) cfg.output = *s;
        top.boolean("log_wallclock", cfg.log_wallclock);
        if (auto s = top.string("init")) cfg.init = parse_init(*s);
        top.real("init_scale", cfg.init_scale);
        top.reals("init_omega_p", cfg.init_omega_p);
        top.reals("init_omega_s", cfg.init_omega_s);

        if (auto* t = top.subtable("generator")) {
            TableReader r(*t, "generator.", source);
            r.integer("c1", cfg.arch.c1);
            r.integer("c2", cfg.arch.c2);
            r.integer("c3", cfg.arch.c3);
            r.integer("c4", cfg.arch.c4);
            r.finish();
        }
        if (auto* t = top.subtable("aux")) {
            TableReader r(*t, "aux.", source);
            r.real("lambda_p", cfg.aux.lambda_p);
            r.real("lambda_s", cfg.aux.lambda_s);
            r.integer("terms", cfg.aux.terms);
            r.finish();
        }
        if (auto* t = top.subtable("main")) {
            TableReader r(*t, "main.", source);
            r.real("l1", cfg.lambda_m.l1);
            r.real("tv", cfg.lambda_m.tv);
            r.finish();
        }
        if (auto* t = top.subtable("awa")) {
            TableReader r(*t, "awa.", source);
            r.integer("k", cfg.awa.k);
            r.real("beta", cfg.awa.beta);
            r.real("beta1", cfg.awa.aux_beta1);
            r.real("beta2", cfg.awa.aux_beta2);
            r.real("eps", cfg.awa.aux_eps);
            r.real("weight_decay", cfg.awa.aux_weight_decay);
            if (auto s = r.string("guidance")) cfg.awa.guidance = parse_guidance(*s);
            r.finish();
        }
        if (auto* t = top.subtable("model")) {
            TableReader r(*t, "model.", source);
            if (auto s = r.string("optimizer")) cfg.model.kind = parse_optimizer(*s);
            r.real("lr", cfg.model.lr);
            r.real("beta1", cfg.model.beta1);
            r.real("beta2", cfg.model.beta2);
            r.real("eps", cfg.model.eps);
            r.real("weight_decay", cfg.model.weight_decay);
            r.finish();
        }
        if (auto* t = top.subtable("baselines")) {
            TableReader r(*t, "baselines.", source);
            r.real("adaloss_decay", cfg.baselines.adaloss_decay);
            r.real("gradnorm_gamma", cfg.baselines.gradnorm_gamma);
            r.real("gradnorm_lr", cfg.baselines.gradnorm_lr);
            r.finish();
        }
        top.finish();
    } catch (const InvalidArgument& e) {
        fail(source, e.what());
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        fail(source, e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string to_toml(const RunConfig& c) {
    std::ostringstream os;
    os << "seed = " << c.seed << "\n"
       << "reweighter = \"" << to_string(c.reweighter) << "\"\n"
       << "iters = " << c.iters << "\n"
       << "batch_size = " << c.batch_size << "\n"
       << "guidance_pool = " << c.guidance_pool << "\n"
       << "eval_pool = " << c.eval_pool << "\n"
       << "eval_window = " << c.eval_window << "\n"
       << "mask_group = \"" << c.mask_group.name() << "\"\n"
       << "extractor_seed = " << c.extractor_seed << "\n"
       << "output = " << nlohmann::json(c.output).dump() << "\n"
       << "log_wallclock = " << (c.log_wallclock ? "true" : "false") << "\n"
       << "init = \"" << to_string(c.init) << "\"\n"
       << "init_scale = " << toml_double(c.init_scale) << "\n"
       << "init_omega_p = " << toml_array(c.init_omega_p) << "\n"
       << "init_omega_s = " << toml_array(c.init_omega_s) << "\n\n"
       << "[generator]\nc1 = " << c.arch.c1 << "\nc2 = " << c.arch.c2 << "\nc3 = " << c.arch.c3
       << "\nc4 = " << c.arch.c4 << "\n\n"
       << "[aux]\nlambda_p = " << toml_double(c.aux.lambda_p) << "\nlambda_s = " << toml_double(c.aux.lambda_s)
       << "\nterms = " << c.aux.terms << "\n\n"
       << "[main]\nl1 = " << toml_double(c.lambda_m.l1) << "\ntv = " << toml_double(c.lambda_m.tv) << "\n\n"
       << "[awa]\nk = " << c.awa.k << "\nbeta = " << toml_double(c.awa.beta)
       << "\nbeta1 = " << toml_double(c.awa.aux_beta1) << "\nbeta2 = " << toml_double(c.awa.aux_beta2)
       << "\neps = " << toml_double(c.awa.aux_eps) << "\nweight_decay = " << toml_double(c.awa.aux_weight_decay)
       << "\nguidance = \"" << to_string(c.awa.guidance) << "\"\n\n"
       << "[model]\noptimizer = \"" << to_string(c.model.kind) << "\"\nlr = " << toml_double(c.model.lr)
       << "\nbeta1 = " << toml_double(c.model.beta1) << "\nbeta2 = " << toml_double(c.model.beta2)
       << "\neps = " << toml_double(c.model.eps) << "\nweight_decay = " << toml_double(c.model.weight_decay)
       << "\n\n"
       << "[baselines]\nadaloss_decay = " << toml_double(c.baselines.adaloss_decay)
       << "\ngradnorm_gamma = " << toml_double(c.baselines.gradnorm_gamma)
       << "\ngradnorm_lr = " << toml_double(c.baselines.gradnorm_lr) << "\n";
    return os.str();
}

nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    return json{
        {"seed", c.seed},
        {"reweighter", to_string(c.reweighter)},
        {"iters", c.iters},
        {"batch_size", c.batch_size},
        {"guidance_pool", c.guidance_pool},
        {"eval_pool", c.eval_pool},
        {"eval_window", c.eval_window},
        {"mask_group", c.mask_group.name()},
        {"extractor_seed", c.extractor_seed},
        {"output", c.output},
        {"log_wallclock", c.log_wallclock},
        {"init", to_string(c.init)},
        {"init_scale", c.init_scale},
        {"init_omega_p", c.init_omega_p},
        {"init_omega_s", c.init_omega_s},
        {"generator", {{"c1", c.arch.c1}, {"c2", c.arch.c2}, {"c3", c.arch.c3}, {"c4", c.arch.c4}}},
        {"aux", {{"lambda_p", c.aux.lambda_p}, {"lambda_s", c.aux.lambda_s}, {"terms", c.aux.terms}}},
        {"main", {{"l1", c.lambda_m.l1}, {"tv", c.lambda_m.tv}}},
        {"awa",
         {{"k", c.awa.k},
          {"beta", c.awa.beta},
          {"beta1", c.awa.aux_beta1},
          {"beta2", c.awa.aux_beta2},
          {"eps", c.awa.aux_eps},
          {"weight_decay", c.awa.aux_weight_decay},
          {"guidance", to_string(c.awa.guidance)}}},
        {"model",
         {{"optimizer", to_string(c.model.kind)},
          {"lr", c.model.lr},
          {"beta1", c.model.beta1},
          {"beta2", c.model.beta2},
          {"eps", c.model.eps},
          {"weight_decay", c.model.weight_decay}}},
        {"baselines",
         {{"adaloss_decay", c.baselines.adaloss_decay},
          {"gradnorm_gamma", c.baselines.gradnorm_gamma},
          {"gradnorm_lr", c.baselines.gradnorm_lr}}},
    };
}

RunConfig config_from_json(const nlohmann::json& j) {
    try {
        RunConfig c;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.reweighter = parse_reweighter(j.at("reweighter").get<std::string>());
        c.iters = j.at("iters").get<std::uint64_t>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.guidance_pool = j.at("guidance_pool").get<std::size_t>();
        c.eval_pool = j.at("eval_pool").get<std::size_t>();
        c.eval_window = j.at("eval_window").get<std::size_t>();
        c.mask_group = MaskGroup::parse(j.at("mask_group").get<std::string>());
        c.extractor_seed = j.at("extractor_seed").get<std::uint64_t>();
        c.output = j.at("output").get<std::string>();
        c.log_wallclock = j.at("log_wallclock").get<bool>();
        c.init = parse_init(j.at("init").get<std::string>());
        c.init_scale = j.at("init_scale").get<double>();
        c.init_omega_p = j.at("init_omega_p").get<std::vector<double>>();
        c.init_omega_s = j.at("init_omega_s").get<std::vector<double>>();
        const auto& g = j.at("generator");
        c.arch = GeneratorArch{g.at("c1").get<std::size_t>(), g.at("c2").get<std::size_t>(),
                               g.at("c3").get<std::size_t>(), g.at("c4").get<std::size_t>()};
        const auto& a = j.at("aux");
        c.aux.lambda_p = a.at("lambda_p").get<double>();
        c.aux.lambda_s = a.at("lambda_s").get<double>();
        c.aux.terms = a.at("terms").get<std::size_t>();
        c.lambda_m.l1 = j.at("main").at("l1").get<double>();
        c.lambda_m.tv = j.at("main").at("tv").get<double>();
        const auto& w = j.at("awa");
        c.awa.k = w.at("k").get<std::size_t>();
        c.awa.beta = w.at("beta").get<double>();
        c.awa.aux_beta1 = w.at("beta1").get<double>();
        c.awa.aux_beta2 = w.at("beta2").get<double>();
        c.awa.aux_eps = w.at("eps").get<double>();
        c.awa.aux_weight_decay = w.at("weight_decay").get<double>();
        c.awa.guidance = parse_guidance(w.at("guidance").get<std::string>());
        const auto& m = j.at("model");
        c.model.kind = parse_optimizer(m.at("optimizer").get<std::string>());
        c.model.lr = m.at("lr").get<double>();
        c.model.beta1 = m.at("beta1").get<double>();
        c.model.beta2 = m.at("beta2").get<double>();
        c.model.eps = m.at("eps").get<double>();
        c.model.weight_decay = m.at("weight_decay").get<double>();
        const auto& b = j.at("baselines");
        c.baselines.adaloss_decay = b.at("adaloss_decay").get<double>();
        c.baselines.gradnorm_gamma = b.at("gradnorm_gamma").get<double>();
        c.baselines.gradnorm_lr = b.at("gradnorm_lr").get<double>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config header: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config header: ") + e.what());
    }
}

AuxParams initial_phi(const RunConfig& cfg) {
    switch (cfg.init) {
    case InitMode::equal: return init_equal(cfg.aux);
    case InitMode::random: return init_random(cfg.aux, cfg.seed ^ 0x5eedf00dULL, cfg.init_scale);
    case InitMode::explicit_weights: {
        AuxParams p;
        auto logit = [](double w, double lambda) {
            const double q = w / lambda;
            return std::log(q / (1.0 - q));
        };
        for (double w : cfg.init_omega_p) p.phi_p.push_back(logit(w, cfg.aux.lambda_p));
        for (double w : cfg.init_omega_s) p.phi_s.push_back(logit(w, cfg.aux.lambda_s));
        return p;
    }
    }
    return init_equal(cfg.aux);
}

TrainSetup make_setup(const RunConfig& cfg) {
    return TrainSetup{init_extractor(cfg.extractor_seed), cfg.arch, cfg.aux, cfg.lambda_m, cfg.awa, cfg.model};
}

} // namespace auxweight
