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

#include "auxweight/runlog.hpp"

#include <fstream>
#include <istream>

namespace auxweight {

using nlohmann::json;

LogParseError::LogParseError(std::size_t line, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

json header_record(const RunConfig& cfg) {
    return json{{"type", "header"}, {"format", kRunLogFormat}, {"config", to_json(cfg)}};
}

json metrics_json(const Metrics& m) {
    return json{{"psnr", m.psnr}, {"ssim", m.ssim}, {"mae", m.mae}, {"perceptual_distance", m.perceptual_distance}};
}

json cycle_record(ReweighterKind kind, const CycleRecord& rec, bool with_phi, const ReweighterObservation* obs,
                  const Metrics* eval, std::optional<double> wallclock_ms) {
    json j{{"type", "record"},
           {"kind", to_string(kind)},
           {"iter", rec.iter},
           {"l1", rec.obs.main.l1},
           {"tv", rec.obs.main.tv},
           {"perc_terms", rec.obs.aux.perceptual},
           {"styl_terms", rec.obs.aux.style},
           {"total", rec.obs.total},
           {"omega_p", rec.omega.omega_p},
           {"omega_s", rec.omega.omega_s}};
    j["phi_p"] = with_phi ? json(rec.phi.phi_p) : json(nullptr);
    j["phi_s"] = with_phi ? json(rec.phi.phi_s) : json(nullptr);
    j["guidance"] = rec.guidance ? json(*rec.guidance) : json(nullptr);
    j["wallclock_ms"] = wallclock_ms ? json(*wallclock_ms) : json(nullptr);
    if (obs) j["obs"] = json{{"losses", obs->losses}, {"grad_norms", obs->grad_norms}, {"cosines", obs->cosines}};
    if (eval) j["eval"] = metrics_json(*eval);
    return j;
}

std::string dump_line(const json& j) { return j.dump() + "\n"; }

namespace {

Metrics metrics_from(const json& j) {
    return Metrics{j.at("psnr").get<double>(), j.at("ssim").get<double>(), j.at("mae").get<double>(),
                   j.at("perceptual_distance").get<double>()};
}

std::vector<double> maybe_vec(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return it->get<std::vector<double>>();
}

} // namespace

RunLog parse_runlog(std::istream& in) {
    RunLog log;
    std::string line;
    std::size_t n = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw LogParseError(n, std::string("invalid JSON: ") + e.what());
        }
        try {
            const std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header) throw LogParseError(n, "duplicate header");
                if (j.at("format").get<std::string>() != kRunLogFormat)
                    throw LogParseError(n, "unsupported log format");
                log.config = j.at("config");
                have_header = true;
                continue;
            }
            if (!have_header) throw LogParseError(n, "record before header");
            if (type == "record") {
                LogRecord r;
                r.iter = j.at("iter").get<std::uint64_t>();
                r.kind = j.at("kind").get<std::string>();
                r.l1 = j.at("l1").get<double>();
                r.tv = j.at("tv").get<double>();
                r.perc_terms = j.at("perc_terms").get<std::vector<double>>();
                r.styl_terms = j.at("styl_terms").get<std::vector<double>>();
                r.omega_p = j.at("omega_p").get<std::vector<double>>();
                r.omega_s = j.at("omega_s").get<std::vector<double>>();
                r.phi_p = maybe_vec(j, "phi_p");
                r.phi_s = maybe_vec(j, "phi_s");
                if (!j.at("guidance").is_null()) r.guidance = j.at("guidance").get<double>();
                if (j.contains("eval")) r.eval = metrics_from(j.at("eval"));
                if (j.contains("obs")) {
                    const auto& o = j.at("obs");
                    r.obs = ReweighterObservation{o.at("losses").get<std::vector<double>>(),
                                                  o.at("grad_norms").get<std::vector<double>>(),
                                                  o.at("cosines").get<std::vector<double>>()};
                }
                log.records.push_back(std::move(r));
            } else if (type == "summary") {
                log.summary = metrics_from(j.at("metrics"));
                log.summary_points = j.at("eval_points").get<std::size_t>();
            } else if (type == "abort") {
                log.abort_reason = j.at("reason").get<std::string>();
            } else {
                throw LogParseError(n, "unknown record type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw LogParseError(n, e.what());
        }
    }
    if (!have_header) throw LogParseError(n, "missing header");
    return log;
}

RunLog read_runlog(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open run log '" + path + "'");
    return parse_runlog(in);
}

} // namespace auxweight
