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

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "auxweight/baselines.hpp"
#include "auxweight/config.hpp"
#include "auxweight/metrics.hpp"

namespace auxweight {

inline constexpr const char* kRunLogFormat = "auxweight-runlog/1";

/// Malformed run log; `line` is 1-based.
class LogParseError : public std::runtime_error {
public:
    LogParseError(std::size_t line, const std::string& msg);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

nlohmann::json header_record(const RunConfig& cfg);

/// One JSONL line per cycle. `phi` is written only for sigmoid-parameterised
/// runs; baselines carry their observation instead.
nlohmann::json cycle_record(ReweighterKind kind, const CycleRecord& rec, bool with_phi,
                            const ReweighterObservation* obs, const Metrics* eval,
                            std::optional<double> wallclock_ms);

nlohmann::json metrics_json(const Metrics& m);

/// Serialised form of a log line, one per JSONL line.
std::string dump_line(const nlohmann::json& j);

struct LogRecord {
    std::uint64_t iter = 0;
    std::string kind;
    double l1 = 0.0;
    double tv = 0.0;
    std::vector<double> perc_terms;
    std::vector<double> styl_terms;
    std::vector<double> omega_p;
    std::vector<double> omega_s;
    std::vector<double> phi_p;
    std::vector<double> phi_s;
    std::optional<double> guidance;
    std::optional<Metrics> eval;
    std::optional<ReweighterObservation> obs;
};

struct RunLog {
    nlohmann::json config;
    std::vector<LogRecord> records;
    std::optional<Metrics> summary;
    std::size_t summary_points = 0;
    std::optional<std::string> abort_reason;
};

RunLog parse_runlog(std::istream& in);
RunLog read_runlog(const std::string& path);

} // namespace auxweight
