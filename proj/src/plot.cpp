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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "auxweight/harness.hpp"

namespace auxweight {

PlotFormat parse_plot_format(std::string_view s) {
    if (s == "csv") return PlotFormat::csv;
    if (s == "svg") return PlotFormat::svg;
    throw InvalidArgument("unknown plot format '" + std::string(s) + "' (expected csv or svg)");
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv(const RunLog& log) {
    std::ostringstream os;
    const std::size_t np = log.records.empty() ? 0 : log.records.front().omega_p.size();
    const std::size_t ns = log.records.empty() ? 0 : log.records.front().omega_s.size();
    os << "iter";
    for (std::size_t i = 0; i < np; ++i) os << ",omega_p" << i + 1;
    for (std::size_t i = 0; i < ns; ++i) os << ",omega_s" << i + 1;
    os << '\n';
    for (const auto& r : log.records) {
        os << r.iter;
        for (double w : r.omega_p) os << ',' << fmt(w);
        for (double w : r.omega_s) os << ',' << fmt(w);
        os << '\n';
    }
    return os.str();
}

constexpr const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

struct Panel {
    double top;
    double height;
    double ymax;
    std::string label;
};

std::string svg(const RunLog& log) {
    const double width = 800, left = 80, right = 150, plot_w = width - left - right;
    const double lambda_p = log.config.at("aux").at("lambda_p").get<double>();
    const double lambda_s = log.config.at("aux").at("lambda_s").get<double>();
    const Panel panels[2] = {{40, 220, lambda_p, "TPL weight omega_p"}, {330, 220, lambda_s, "TSL weight omega_s"}};
    const double height = 620;

    double xmax = 1;
    for (const auto& r : log.records) xmax = std::max(xmax, static_cast<double>(r.iter));
    auto px = [&](double it) { return left + plot_w * it / xmax; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int k = 0; k < 2; ++k) {
        const Panel& pn = panels[k];
        auto py = [&](double v) { return pn.top + pn.height * (1.0 - v / pn.ymax); };
        const double bottom = pn.top + pn.height;
        os << "<rect x=\"" << left << "\" y=\"" << pn.top << "\" width=\"" << plot_w << "\" height=\"" << pn.height
           << "\" fill=\"none\" stroke=\"black\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << pn.top + 4 << "\" text-anchor=\"end\">" << fmt(pn.ymax)
           << "</text>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << bottom + 4 << "\" text-anchor=\"end\">0</text>\n";
        os << "<text x=\"" << left << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">0</text>\n";
        os << "<text x=\"" << left + plot_w << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">"
           << static_cast<std::uint64_t>(xmax) << "</text>\n";
        os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << bottom + 34
           << "\" text-anchor=\"middle\">iteration</text>\n";
        os << "<text transform=\"translate(" << 24 << "," << pn.top + pn.height / 2
           << ") rotate(-90)\" text-anchor=\"middle\">" << pn.label << "</text>\n";

        const std::size_t terms = log.records.empty()
                                      ? 0
                                      : (k == 0 ? log.records.front().omega_p.size()
                                                : log.records.front().omega_s.size());
        for (std::size_t n = 0; n < terms; ++n) {
            const char* color = kColors[(k * 3 + n) % 6];
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& r : log.records) {
                const double v = k == 0 ? r.omega_p[n] : r.omega_s[n];
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(static_cast<double>(r.iter)), py(v));
                os << buf;
            }
            os << "\"/>\n";
            os << "<text x=\"" << left + plot_w + 10 << "\" y=\"" << pn.top + 16 + 18 * n << "\" fill=\"" << color
               << "\">" << (k == 0 ? "omega_p" : "omega_s") << n + 1 << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !f.write(data.data(), static_cast<std::streamsize>(data.size())))
        throw std::runtime_error("cannot write '" + path.string() + "'");
}

} // namespace

std::string emit_trajectory(const RunLog& log, PlotFormat format) {
    return format == PlotFormat::csv ? csv(log) : svg(log);
}

std::vector<std::string> dump_samples(const std::string& dir, const MaskGroup& group, std::uint64_t seed,
                                      std::size_t count) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (std::size_t i = 0; i < count; ++i) {
        const Sample s = make_sample(group, seed, i);
        const std::pair<const char*, const Tensor*> parts[] = {{"gt", &s.gt}, {"mask", &s.mask}, {"masked", &s.masked}};
        for (const auto& [name, t] : parts) {
            char file[64];
            std::snprintf(file, sizeof file, "sample%03zu_%s.ppm", i, name);
            const auto path = std::filesystem::path(dir) / file;
            write_file(path, to_ppm(*t));
            paths.push_back(path.string());
        }
    }
    return paths;
}

} // namespace auxweight
