// Copyright 2026 The Tritter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tritter/circuit.hpp"
#include "tritter/demux.hpp"
#include "tritter/detection.hpp"
#include "tritter/interference.hpp"
#include "tritter/reconstruct.hpp"

namespace tritter::io {

/// Floating-point text with 12 significant digits.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Writes to a sibling temporary and renames it into place, so readers never
/// see a partial file.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

/// Rows of a CSV with a header line; the header must match `expected`.
inline std::vector<std::vector<std::string>> read_csv(std::istream &in, const std::vector<std::string> &expected) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV input");
    if (split_csv_line(line) != expected) {
        std::string want;
        for (const auto &e : expected) want += (want.empty() ? "" : ",") + e;
        throw std::invalid_argument("unexpected CSV header, want '" + want + "'");
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != expected.size()) throw std::invalid_argument("CSV row has wrong column count: " + line);
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline double parse_double(const std::string &s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

inline std::size_t parse_index(const std::string &s) {
    std::size_t used = 0;
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("not an index: '" + s + "'");
    return static_cast<std::size_t>(v);
}

// pattern,probability
inline std::string distribution_csv(const OutputDistribution &d) {
    std::string s = "pattern,probability\n";
    for (std::size_t i = 0; i < d.size(); ++i) s += d.patterns()[i].str() + "," + num(d[i]) + "\n";
    return s;
}

// time_ns,level
inline std::string waveform_csv(const RoutingWaveform &w) {
    std::string s = "time_ns,level\n";
    for (std::size_t i = 0; i < w.samples().size(); ++i) s += num(w.time(i) * 1e9) + "," + num(w.samples()[i]) + "\n";
    return s;
}

inline RoutingWaveform read_waveform_csv(std::istream &in) {
    const auto rows = read_csv(in, {"time_ns", "level"});
    if (rows.size() < 2) throw std::invalid_argument("waveform needs at least two samples");
    std::vector<double> times;
    std::vector<double> levels;
    for (const auto &r : rows) {
        times.push_back(parse_double(r[0]) * 1e-9);
        levels.push_back(parse_double(r[1]));
    }
    if (std::abs(times.front()) > 1e-15) throw std::invalid_argument("waveform must start at t = 0");
    const double step = times[1] - times[0];
    if (!(step > 0.0)) throw std::invalid_argument("waveform times must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs(times[i] - times[0] - step * static_cast<double>(i)) > 1e-6 * step) {
            throw std::invalid_argument("waveform grid must be uniform");
        }
    }
    return RoutingWaveform(times.back(), std::move(levels));
}

// row,col,real,imag
inline std::string unitary_csv(const CircuitUnitary &u) {
    std::string s = "row,col,real,imag\n";
    for (std::size_t j = 0; j < u.modes(); ++j) {
        for (std::size_t k = 0; k < u.modes(); ++k) {
            s += std::to_string(j) + "," + std::to_string(k) + "," + num(u(j, k).real()) + "," + num(u(j, k).imag()) + "\n";
        }
    }
    return s;
}

inline Matrix read_matrix_csv(std::istream &in) {
    const auto rows = read_csv(in, {"row", "col", "real", "imag"});
    std::size_t m = 0;
    while (m * m < rows.size()) ++m;
    if (m * m != rows.size() || m == 0) throw std::invalid_argument("matrix CSV must hold m*m entries");
    Matrix a = Matrix::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m), cplx{std::nan(""), 0.0});
    for (const auto &r : rows) {
        const auto j = parse_index(r[0]);
        const auto k = parse_index(r[1]);
        if (j >= m || k >= m) throw std::invalid_argument("matrix index out of range");
        a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = {parse_double(r[2]), parse_double(r[3])};
    }
    if (a.hasNaN()) throw std::invalid_argument("matrix CSV is missing entries");
    return a;
}

// kind,input_a,input_b,output,value,phase
//   intensity,k,,j,I,         light in input k alone, output j
//   fringe,a,b,k,amplitude,phase
inline std::string measurements_csv(const MeasurementSet &data) {
    std::string s = "kind,input_a,input_b,output,value,phase\n";
    const auto &in = data.intensities.intensity;
    for (Eigen::Index k = 0; k < in.rows(); ++k) {
        for (Eigen::Index j = 0; j < in.cols(); ++j) {
            s += "intensity," + std::to_string(k) + ",," + std::to_string(j) + "," + num(in(k, j)) + ",\n";
        }
    }
    for (const auto &f : data.fringes.fringes) {
        s += "fringe," + std::to_string(f.first) + "," + std::to_string(f.second) + "," + std::to_string(f.output) + "," +
             num(f.amplitude) + "," + num(f.phase) + "\n";
    }
    return s;
}

inline MeasurementSet read_measurements_csv(std::istream &in) {
    const auto rows = read_csv(in, {"kind", "input_a", "input_b", "output", "value", "phase"});
    std::size_t intensity_rows = 0;
    for (const auto &r : rows) intensity_rows += r[0] == "intensity";
    std::size_t m = 0;
    while (m * m < intensity_rows) ++m;
    if (m == 0 || m * m != intensity_rows) throw std::invalid_argument("incomplete intensity data");

    MeasurementSet data;
    data.intensities.intensity = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m), std::nan(""));
    data.fringes.m = m;
    for (const auto &r : rows) {
        if (r[0] == "intensity") {
            const auto k = parse_index(r[1]);
            const auto j = parse_index(r[3]);
            if (k >= m || j >= m) throw std::invalid_argument("intensity index out of range");
            data.intensities.intensity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = parse_double(r[4]);
        } else if (r[0] == "fringe") {
            Fringe f{parse_index(r[1]), parse_index(r[2]), parse_index(r[3]), parse_double(r[4]), parse_double(r[5])};
            if (f.first >= f.second || f.second >= m || f.output >= m) throw std::invalid_argument("fringe index out of range");
            data.fringes.fringes.push_back(f);
        } else {
            throw std::invalid_argument("unknown measurement kind '" + r[0] + "'");
        }
    }
    if (data.intensities.intensity.hasNaN()) throw std::invalid_argument("incomplete intensity data");
    for (auto [a, b] : mode_pairs(m)) {
        for (std::size_t k = 0; k < m; ++k) (void)data.fringes.at(a, b, k);
    }
    return data;
}

// pattern,count
inline std::string counts_csv(const ClickPatternCounts &c) {
    std::string s = "pattern,count\n";
    for (const auto &p : enumerate_patterns(c.photons, c.modes)) s += p.str() + "," + std::to_string(c.count(p)) + "\n";
    return s;
}

inline ClickPatternCounts read_counts_csv(std::istream &in) {
    const auto rows = read_csv(in, {"pattern", "count"});
    if (rows.empty()) throw std::invalid_argument("no counts");
    ClickPatternCounts c;
    bool first = true;
    for (const auto &r : rows) {
        auto p = parse_pattern(r[0]);
        if (first) {
            c.photons = p.photons();
            c.modes = p.modes();
            first = false;
        } else if (p.photons() != c.photons || p.modes() != c.modes) {
            throw std::invalid_argument("counts mix different photon or mode numbers");
        }
        c.add(p, std::stoull(r[1]));
    }
    return c;
}

}  // namespace tritter::io
