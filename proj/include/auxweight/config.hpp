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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "auxweight/awa.hpp"
#include "auxweight/baselines.hpp"
#include "auxweight/data.hpp"

namespace auxweight {

/// Malformed or out-of-range configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class InitMode { equal, random, explicit_weights };

struct RunConfig {
    std::uint64_t seed = 0;
    ReweighterKind reweighter = ReweighterKind::awa;
    std::uint64_t iters = 2000;
    std::size_t batch_size = 8;
    std::size_t guidance_pool = 64;
    std::size_t eval_pool = 64;
    // Trailing cycles whose eval-pool metrics enter the summary.
    std::size_t eval_window = 100;
    MaskGroup mask_group{};
    std::uint64_t extractor_seed = 42;
    std::string output = "run.jsonl";
    bool log_wallclock = false;

    InitMode init = InitMode::equal;
    double init_scale = 1.0;
    std::vector<double> init_omega_p;
    std::vector<double> init_omega_s;

    GeneratorArch arch{};
    AuxConfig aux{};
    MainWeights lambda_m{};
    AwaConfig awa{};
    ModelOptimizerConfig model{};
    BaselineConfig baselines{};

    void validate() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Complete default configuration as TOML.
std::string default_config_toml();

/// Parses TOML text; unknown keys and out-of-range values raise ConfigError.
RunConfig parse_config(std::string_view toml_text, std::string_view source = "<string>");
RunConfig load_config(const std::string& path);

std::string to_toml(const RunConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

/// Starting phi for a run.
AuxParams initial_phi(const RunConfig& cfg);
TrainSetup make_setup(const RunConfig& cfg);

std::string to_string(OptimizerKind k);
std::string to_string(GuidanceKind k);
std::string to_string(InitMode m);

} // namespace auxweight
