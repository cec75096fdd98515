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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tritter/budget.hpp"
#include "tritter/circuit.hpp"
#include "tritter/demux.hpp"
#include "tritter/detection.hpp"
#include "tritter/interference.hpp"
#include "tritter/io.hpp"
#include "tritter/reconstruct.hpp"

namespace tritter::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Format { csv, json };

struct RunOptions {
    fs::path config;
    std::optional<std::uint64_t> seed;
    fs::path out = "out";
    Format format = Format::csv;
};

/// One object of the config tree. Every key must be read by the parser, so
/// finish() rejects keys the command does not understand.
class Section {
   public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string &key) const { return j_.contains(key); }
    const std::string &path() const { return path_; }

    const json &value(const std::string &key) {
        if (!has(key)) throw ConfigError(where(key) + ": required key missing");
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string &key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            return value(key).get<double>();
        }
        const auto &v = value(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        return v.get<double>();
    }

    std::uint64_t count(const std::string &key, std::optional<std::uint64_t> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            value(key);
        }
        const auto &v = value(key);
        if (!v.is_number_unsigned()) throw ConfigError(where(key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool flag(const std::string &key, bool fallback) {
        if (!has(key)) return fallback;
        const auto &v = value(key);
        if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string &key, std::optional<std::string> fallback = std::nullopt,
                     const std::vector<std::string> &choices = {}) {
        std::string s;
        if (!has(key) && fallback) {
            s = *fallback;
        } else {
            const auto &v = value(key);
            if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
            s = v.get<std::string>();
        }
        if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
            std::string list;
            for (const auto &c : choices) list += (list.empty() ? "" : ", ") + c;
            throw ConfigError(where(key) + ": '" + s + "' is not one of " + list);
        }
        return s;
    }

    std::vector<double> numbers(const std::string &key) {
        const auto &v = value(key);
        if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto &e : v) {
            if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    Section child(const std::string &key) { return Section(value(key), where(key)); }

    std::vector<Section> children(const std::string &key) {
        const auto &v = value(key);
        if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of objects");
        std::vector<Section> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], where(key) + "[" + std::to_string(i) + "]");
        return out;
    }

    void finish() const {
        for (const auto &item : j_.items()) {
            if (!used_.count(item.key())) throw ConfigError(where(item.key()) + ": unknown key");
        }
    }

   private:
    std::string where(const std::string &key) const { return path_ + "." + key; }

    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Output helpers

/// Rounds to the 12 significant digits used in every output file.
inline double round12(double v) { return std::stod(io::num(v)); }

/// Column-oriented table rendered as CSV or as a JSON array of row objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;

    void add(std::vector<json> row) {
        if (row.size() != columns.size()) throw std::logic_error("table row width mismatch");
        rows.push_back(std::move(row));
    }

    std::string csv() const {
        std::string s;
        for (std::size_t c = 0; c < columns.size(); ++c) s += (c ? "," : "") + columns[c];
        s += "\n";
        for (const auto &row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) s += ",";
                const auto &cell = row[c];
                if (cell.is_string()) {
                    s += cell.get<std::string>();
                } else if (cell.is_number_float()) {
                    s += io::num(cell.get<double>());
                } else if (!cell.is_null()) {
                    s += cell.dump();
                }
            }
            s += "\n";
        }
        return s;
    }

    json to_json() const {
        json arr = json::array();
        for (const auto &row : rows) {
            json obj = json::object();
            for (std::size_t c = 0; c < row.size(); ++c) {
                obj[columns[c]] = row[c].is_number_float() ? json(round12(row[c].get<double>())) : row[c];
            }
            arr.push_back(std::move(obj));
        }
        return arr;
    }
};

inline std::string dump(const json &j) { return j.dump(2) + "\n"; }

/// Recursively rounds every floating-point value to 12 significant digits.
inline json rounded(json j) {
    if (j.is_number_float()) return round12(j.get<double>());
    if (j.is_structured()) {
        for (auto &e : j) e = rounded(e);
    }
    return j;
}

/// Files produced by one command; written only after every result exists.
class Outputs {
   public:
    explicit Outputs(Format format) : format_(format) {}

    void table(const std::string &stem, const Table &t) {
        if (format_ == Format::csv) {
            files_.emplace_back(stem + ".csv", t.csv());
        } else {
            files_.emplace_back(stem + ".json", dump(t.to_json()));
        }
    }
    void document(const std::string &name, const json &j) { files_.emplace_back(name, dump(rounded(j))); }

    std::vector<fs::path> write(const fs::path &dir) const {
        fs::create_directories(dir);
        std::vector<fs::path> written;
        for (const auto &[name, content] : files_) {
            io::write_atomic(dir / name, content);
            written.push_back(dir / name);
        }
        return written;
    }

   private:
    Format format_;
    std::vector<std::pair<std::string, std::string>> files_;
};

// ---------------------------------------------------------------------------
// Shared config pieces

inline fs::path resolve(const fs::path &base, const std::string &file) {
    fs::path p(file);
    return p.is_absolute() ? p : base / p;
}

inline std::ifstream open_input(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return in;
}

/// {"type": "ideal" | "identity" | "layout" | "matrix", ...}
inline CircuitUnitary parse_circuit(Section s, const fs::path &base) {
    const auto type = s.text("type", "ideal", {"ideal", "identity", "layout", "matrix"});
    std::optional<CircuitUnitary> u;
    if (type == "ideal") {
        u = ideal_tritter();
    } else if (type == "identity") {
        u = CircuitUnitary::identity(static_cast<std::size_t>(s.count("modes", 3)));
    } else if (type == "layout") {
        TritterLayout layout;
        layout.r1 = s.number("r1", layout.r1);
        layout.r2 = s.number("r2", layout.r2);
        if (s.has("voltage")) {
            const double volts = s.number("voltage");
            std::vector<std::pair<double, double>> table;
            const auto &cal = s.value("calibration");
            if (!cal.is_array()) throw ConfigError(s.path() + ".calibration: expected [[volts, phase], ...]");
            for (const auto &point : cal) {
                if (!point.is_array() || point.size() != 2 || !point[0].is_number() || !point[1].is_number()) {
                    throw ConfigError(s.path() + ".calibration: expected [[volts, phase], ...]");
                }
                table.emplace_back(point[0].get<double>(), point[1].get<double>());
            }
            layout.phi = phase_from_voltage(PhaseCalibration(std::move(table)), volts);
        } else {
            layout.phi = s.number("phi", layout.phi);
        }
        u = build_tritter(layout);
    } else {
        auto in = open_input(resolve(base, s.text("file")));
        u = CircuitUnitary(io::read_matrix_csv(in), "imported");
    }
    s.finish();
    return *u;
}

inline std::vector<DetectorTree> parse_trees(Section &s, std::size_t modes) {
    DetectorTree t;
    if (s.has("split")) t.split_probs = s.numbers("split");
    t.eta = s.number("eta", t.eta);
    t.dark_rate = s.number("dark_rate", t.dark_rate);
    t.gate_window = s.number("gate_window", t.gate_window);
    t.validate();
    return std::vector<DetectorTree>(modes, t);
}

inline std::uint64_t resolve_seed(Section &root, const RunOptions &opt) {
    const std::uint64_t from_config = root.count("seed", 1);
    return opt.seed.value_or(from_config);
}

inline void check_command(Section &root, const std::string &command) {
    if (root.has("command")) root.text("command", std::nullopt, {command});
}

inline json load_json(const fs::path &path) {
    auto in = open_input(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// simulate

struct DetectionConfig {
    std::vector<DetectorTree> trees;
    std::optional<std::uint64_t> events;    // generated events
    std::optional<std::uint64_t> recorded;  // or: run until this many n-click events
    std::size_t bootstrap = 1000;
};

struct SimulateConfig {
    CircuitUnitary circuit = ideal_tritter();
    int photons = 3;
    std::string source = "mixture";
    SourceModel src;
    GramMatrix gram = GramMatrix::ones(3);
    std::optional<DetectionConfig> detection;
    std::uint64_t seed = 1;
};

inline std::map<std::pair<std::size_t, std::size_t>, double> parse_overlaps(Section &s) {
    std::map<std::pair<std::size_t, std::size_t>, double> overlaps;
    for (auto entry : s.children("overlaps")) {
        const auto i = static_cast<std::size_t>(entry.count("i"));
        const auto j = static_cast<std::size_t>(entry.count("j"));
        const double m = entry.number("m");
        entry.finish();
        if (!overlaps.emplace(std::minmax(i, j), m).second) throw ConfigError(s.path() + ".overlaps: duplicate pair");
    }
    return overlaps;
}

inline SimulateConfig parse_simulate(const json &j, const RunOptions &opt, const fs::path &base) {
    Section root(j, "config");
    check_command(root, "simulate");
    SimulateConfig c;
    c.seed = resolve_seed(root, opt);
    if (root.has("circuit")) c.circuit = parse_circuit(root.child("circuit"), base);
    c.photons = static_cast<int>(root.count("photons", 3));
    if (c.photons < 1 || static_cast<std::size_t>(c.photons) > c.circuit.modes()) {
        throw ConfigError("config.photons: need 1 <= photons <= circuit modes (photon k enters mode k)");
    }
    const auto n = static_cast<std::size_t>(c.photons);

    static const json kEmpty = json::object();
    Section source = root.has("source") ? root.child("source") : Section(kEmpty, "config.source");
    c.source = source.text("model", "mixture", {"indistinguishable", "distinguishable", "pairwise", "mixture"});
    if (c.source == "indistinguishable") {
        c.gram = GramMatrix::ones(n);
    } else if (c.source == "distinguishable") {
        c.gram = GramMatrix::identity(n);
    } else if (c.source == "pairwise") {
        c.gram = gram_from_pairwise(n, parse_overlaps(source));
    } else {
        c.src.p1_qd = source.number("p1_qd", c.src.p1_qd);
        c.src.g2 = source.number("g2", c.src.g2);
        if (source.has("overlaps")) {
            c.gram = gram_from_pairwise(n, parse_overlaps(source));
        } else {
            c.src.m_near = source.number("m_near", c.src.m_near);
            c.src.m_far = source.number("m_far", c.src.m_far);
            c.gram = gram_for_source(c.src, n);
        }
        c.src.validate();
    }
    source.finish();

    if (root.has("detection")) {
        auto d = root.child("detection");
        DetectionConfig det;
        det.trees = parse_trees(d, c.circuit.modes());
        if (d.has("events") == d.has("recorded")) {
            throw ConfigError("config.detection: give exactly one of 'events' or 'recorded'");
        }
        if (d.has("events")) det.events = d.count("events");
        if (d.has("recorded")) det.recorded = d.count("recorded");
        if (det.events.value_or(1) == 0 || det.recorded.value_or(1) == 0) {
            throw ConfigError("config.detection: event count must be positive");
        }
        det.bootstrap = static_cast<std::size_t>(d.count("bootstrap", 1000));
        d.finish();
        c.detection = det;
    }
    root.finish();
    return c;
}

/// Patterns with every photon in one mode, with at most one photon per mode,
/// and the rest.
inline std::string pattern_class(const OccupationPattern &p) {
    const auto &k = p.counts();
    const int top = *std::max_element(k.begin(), k.end());
    if (top <= 1) return "no_collision";
    if (top == p.photons()) return "bunching";
    return "collision";
}

inline json class_summary(const OutputDistribution &d) {
    std::map<std::string, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto &a = acc[pattern_class(d.patterns()[i])];
        a.first += d[i];
        ++a.second;
    }
    json j = json::object();
    for (const char *name : {"no_collision", "bunching", "collision"}) {
        auto it = acc.find(name);
        if (it == acc.end()) continue;
        j[name] = {{"bins", it->second.second},
                   {"total", it->second.first},
                   {"mean", it->second.first / it->second.second}};
    }
    return j;
}

inline int run_simulate(const SimulateConfig &c, Outputs &out) {
    const auto n = static_cast<std::size_t>(c.photons);
    std::vector<std::size_t> inputs(n);
    std::iota(inputs.begin(), inputs.end(), std::size_t{0});

    const OutputDistribution model = c.source == "mixture"
                                         ? mixture_distribution(c.circuit, c.src, c.gram)
                                         : distribution(c.circuit, PhotonEnsemble::in_modes(inputs, c.gram));
    const auto ideal = distribution(c.circuit, PhotonEnsemble::in_modes(inputs, GramMatrix::ones(n)));
    const auto classical = distribution(c.circuit, PhotonEnsemble::in_modes(inputs, GramMatrix::identity(n)));

    Table t{{"pattern", "model", "indistinguishable", "distinguishable"}, {}};
    for (std::size_t i = 0; i < model.size(); ++i) {
        t.add({model.patterns()[i].str(), model[i], ideal[i], classical[i]});
    }
    out.table("distribution", t);

    json summary = {{"command", "simulate"},
                    {"seed", c.seed},
                    {"photons", c.photons},
                    {"modes", c.circuit.modes()},
                    {"circuit", c.circuit.label()},
                    {"source", c.source}};
    if (c.source == "mixture") {
        summary["mixture"] = {{"p1_qd", c.src.p1_qd},
                              {"g2", c.src.g2},
                              {"laser_to_qd_ratio", 0.5 * c.src.g2},
                              {"input_terms", mixture_inputs(c.src, c.gram).size()}};
    }
    summary["model"] = class_summary(model);
    summary["indistinguishable"] = class_summary(ideal);
    summary["distinguishable"] = class_summary(classical);

    if (c.detection) {
        const auto &det = *c.detection;
        const auto counts = det.events ? simulate_counts(model, det.trees, *det.events, c.seed)
                                       : simulate_recorded(model, det.trees, *det.recorded, c.seed);
        const auto est = estimate_distribution(counts, det.trees, {det.bootstrap, c.seed + 1});
        Table ct{{"pattern", "count"}, {}};
        for (const auto &p : model.patterns()) ct.add({p.str(), counts.count(p)});
        out.table("counts", ct);
        Table et{{"pattern", "model", "uncorrected", "corrected", "std_error", "lower", "upper"}, {}};
        for (std::size_t i = 0; i < model.size(); ++i) {
            et.add({model.patterns()[i].str(), model[i], est.uncorrected[i], est.corrected[i], est.std_error[i],
                    est.lower[i], est.upper[i]});
        }
        out.table("estimate", et);
        summary["detection"] = {{"generated_events", counts.generated},
                                {"recorded_events", counts.total},
                                {"bootstrap_samples", est.bootstrap_samples},
                                {"estimate", class_summary(est.corrected)}};
    }
    out.document("summary.json", summary);
    return 0;
}

// ---------------------------------------------------------------------------
// demux

struct DemuxConfig {
    std::size_t arms = 3;
    double period = 200e-9;
    WaveformShape shape;
    std::vector<RoutingWaveform> imported;
    bool passive = false;
    std::optional<double> measured_ratio;
    bool export_waveforms = true;
};

inline DemuxConfig parse_demux(const json &j, const RunOptions &opt, const fs::path &base) {
    Section root(j, "config");
    check_command(root, "demux");
    resolve_seed(root, opt);  // accepted for uniformity; the demux model is deterministic
    DemuxConfig c;
    if (root.has("waveform_files")) {
        const auto &files = root.value("waveform_files");
        if (!files.is_array() || files.empty()) throw ConfigError("config.waveform_files: expected a non-empty array");
        for (const auto &f : files) {
            if (!f.is_string()) throw ConfigError("config.waveform_files: expected file names");
            auto in = open_input(resolve(base, f.get<std::string>()));
            c.imported.push_back(io::read_waveform_csv(in));
        }
        c.arms = c.imported.size();
        c.period = c.imported.front().period();
    } else {
        c.arms = static_cast<std::size_t>(root.count("arms", 3));
        if (c.arms < 1) throw ConfigError("config.arms: need at least one arm");
        c.period = root.number("period_ns", 200.0) * 1e-9;
        if (!(c.period > 0.0)) throw ConfigError("config.period_ns: must be positive");
        c.shape.contrast = root.number("contrast", 1.0);
        c.shape.rise_time = root.number("rise_time_ns", 0.0) * 1e-9;
        c.shape.grid_step = root.number("grid_step_ns", 0.1) * 1e-9;
        // Build once here so shape errors surface during validation.
        (void)cascaded_scheme(c.arms, c.period, c.shape);
    }
    c.passive = root.flag("passive", false);
    if (root.has("measured_ratio")) c.measured_ratio = root.number("measured_ratio");
    c.export_waveforms = root.flag("export_waveforms", true);
    root.finish();
    return c;
}

inline int run_demux(const DemuxConfig &c, Outputs &out) {
    const auto waveforms = c.imported.empty() ? cascaded_scheme(c.arms, c.period, c.shape).waveforms : c.imported;
    std::vector<double> statics;
    for (const auto &w : waveforms) statics.push_back(w.duty_cycle());
    const double c_passive = conversion_rate_passive(statics);
    // Switches off: every arm keeps its static share, so the rates coincide.
    const double c_active = c.passive ? c_passive : conversion_rate_active(waveforms);
    const double c_ideal = conversion_rate_active(cascaded_scheme(c.arms, c.period, {1.0, 0.0, c.shape.grid_step}));
    const double c_ideal_passive = conversion_rate_passive(passive_probabilities(c.arms));
    const double r_ideal = c_ideal / c_ideal_passive;
    const double r = c.measured_ratio.value_or(c_active / c_passive);

    json rates = {{"command", "demux"},
                  {"arms", c.arms},
                  {"period_ns", c.period * 1e9},
                  {"passive", c.passive},
                  {"static_probabilities", statics},
                  {"c_active", c_active},
                  {"c_passive", c_passive},
                  {"ratio", r},
                  {"ideal_ratio", r_ideal}};
    if (r_ideal > 1.0) {
        const auto eta = active_efficiency(r, r_ideal);
        rates["active_efficiency"] = eta.value;
        rates["anomalous"] = eta.anomalous;
    } else {
        rates["active_efficiency"] = nullptr;
        rates["anomalous"] = false;
    }
    out.document("rates.json", rates);

    if (c.export_waveforms) {
        // One two-column trace per arm, the same layout accepted by waveform_files.
        for (std::size_t a = 0; a < waveforms.size(); ++a) {
            const auto &w = waveforms[a];
            Table t{{"time_ns", "level"}, {}};
            for (std::size_t i = 0; i < w.samples().size(); ++i) {
                t.add({w.time(i) * 1e9, c.passive ? statics[a] : w.samples()[i]});
            }
            out.table("waveform_" + std::to_string(a), t);
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// reconstruct

struct ReconstructConfig {
    CircuitUnitary target = ideal_tritter();
    CircuitUnitary reference = ideal_tritter();
    std::optional<MeasurementSet> imported;
    double sigma = 0.0;
    std::size_t phase_steps = 12;
    std::size_t trials = 1;
    double tolerance = 0.05;
    std::uint64_t seed = 1;
};

inline ReconstructConfig parse_reconstruct(const json &j, const RunOptions &opt, const fs::path &base) {
    Section root(j, "config");
    check_command(root, "reconstruct");
    ReconstructConfig c;
    c.seed = resolve_seed(root, opt);
    if (root.has("reference")) c.reference = parse_circuit(root.child("reference"), base);
    if (root.has("measurements")) {
        auto in = open_input(resolve(base, root.text("measurements")));
        c.imported = io::read_measurements_csv(in);
    } else {
        if (root.has("target")) c.target = parse_circuit(root.child("target"), base);
        c.sigma = root.number("noise_sigma", 0.0);
        if (!(c.sigma >= 0.0)) throw ConfigError("config.noise_sigma: must be non-negative");
        c.phase_steps = static_cast<std::size_t>(root.count("phase_steps", 12));
        if (c.phase_steps < 3) throw ConfigError("config.phase_steps: need at least 3");
        c.trials = static_cast<std::size_t>(root.count("trials", 1));
        if (c.trials < 1) throw ConfigError("config.trials: need at least 1");
    }
    c.tolerance = root.number("tolerance", 0.05);
    root.finish();
    return c;
}

/// Nearest-rank percentile of an unsorted sample.
inline double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[rank == 0 ? 0 : rank - 1];
}

inline int run_reconstruct(const ReconstructConfig &c, Outputs &out) {
    const auto v_ref = visibility_matrix(c.reference);
    std::vector<double> fidelities;
    std::optional<Reconstruction> first;
    for (std::size_t t = 0; t < (c.imported ? 1 : c.trials); ++t) {
        const auto data = c.imported ? *c.imported
                                     : simulate_measurements(c.target, {c.sigma, c.seed + t, c.phase_steps});
        auto rec = reconstruct_unitary(data, c.tolerance);
        fidelities.push_back(fidelity(visibility_matrix(rec.unitary), v_ref));
        if (!first) first = std::move(rec);
    }
    const auto &rec = *first;
    const auto v_rec = visibility_matrix(rec.unitary);

    Table u{{"row", "col", "real", "imag"}, {}};
    for (std::size_t r = 0; r < rec.unitary.modes(); ++r) {
        for (std::size_t k = 0; k < rec.unitary.modes(); ++k) {
            u.add({r, k, rec.unitary(r, k).real(), rec.unitary(r, k).imag()});
        }
    }
    out.table("unitary", u);

    Table v{{"input_a", "input_b", "output_a", "output_b", "measured", "reference"}, {}};
    for (std::size_t a = 0; a < v_rec.pair_count(); ++a) {
        for (std::size_t b = 0; b < v_rec.pair_count(); ++b) {
            const auto &e = v_rec.at(a, b);
            const auto &f = v_ref.at(a, b);
            v.add({v_rec.pairs()[a].first, v_rec.pairs()[a].second, v_rec.pairs()[b].first, v_rec.pairs()[b].second,
                   e ? json(*e) : json(nullptr), f ? json(*f) : json(nullptr)});
        }
    }
    out.table("visibility", v);

    json f = {{"command", "reconstruct"},
              {"seed", c.seed},
              {"source", c.imported ? "imported" : "simulated"},
              {"noise_sigma", c.sigma},
              {"fidelity", fidelities.front()},
              {"normalized_fidelity", normalized_fidelity(v_rec, v_ref)},
              {"unitarity_residual", rec.unitarity_residual},
              {"projection_distance", rec.projection_distance},
              {"phase_inconsistency", rec.phase_inconsistency},
              {"consistent", rec.consistent},
              {"trials", fidelities.size()}};
    if (fidelities.size() > 1) {
        double mean = 0.0;
        for (double x : fidelities) mean += x;
        f["fidelity_stats"] = {{"min", *std::min_element(fidelities.begin(), fidelities.end())},
                               {"p5", percentile(fidelities, 0.05)},
                               {"median", percentile(fidelities, 0.5)},
                               {"mean", mean / static_cast<double>(fidelities.size())}};
    }
    out.document("fidelity.json", f);
    return 0;
}

// ---------------------------------------------------------------------------
// budget

struct NamedPipeline {
    std::string name;
    BudgetPipeline pipeline;
};

struct BudgetConfig {
    std::vector<NamedPipeline> pipelines;
};

inline BudgetConfig parse_budget(const json &j, const RunOptions &opt, const fs::path &) {
    Section root(j, "config");
    check_command(root, "budget");
    resolve_seed(root, opt);
    BudgetConfig c;
    for (auto s : root.children("pipelines")) {
        NamedPipeline np;
        np.name = s.text("name");
        if (np.name.empty() || np.name.find_first_of(",\n\"") != std::string::npos) {
            throw ConfigError(s.path() + ".name: must be non-empty without commas or quotes");
        }
        auto &p = np.pipeline;
        p.rep_rate = s.number("rep_rate", p.rep_rate);
        p.fibered_brightness = s.number("fibered_brightness", p.fibered_brightness);
        p.demux_transmission = s.number("demux_transmission", p.demux_transmission);
        p.chip_transmission = s.number("chip_transmission", p.chip_transmission);
        p.det_efficiency = s.number("det_efficiency", p.det_efficiency);
        p.n = static_cast<int>(s.count("n", 3));
        if (s.has("demux_conversion") && s.value("demux_conversion").is_string()) {
            s.text("demux_conversion", std::nullopt, {"cascaded"});
            if (p.n < 1) throw ConfigError(s.path() + ".n: must be at least 1");
            p.demux_conversion = cascaded_conversion(p.n);
        } else {
            p.demux_conversion = s.number("demux_conversion", p.demux_conversion);
        }
        if (s.has("measured_source_rate")) p.measured_source_rate = s.number("measured_source_rate");
        s.finish();
        p.validate();
        c.pipelines.push_back(std::move(np));
    }
    if (c.pipelines.empty()) throw ConfigError("config.pipelines: need at least one pipeline");
    root.finish();
    return c;
}

inline int run_budget(const BudgetConfig &c, Outputs &out) {
    Table t{{"pipeline", "n", "quantity", "rate_hz"}, {}};
    for (const auto &[name, p] : c.pipelines) {
        t.add({name, p.n, "model " + std::to_string(p.n) + "-photon rate at source", model_source_rate(p)});
        for (const auto &row : projection(p).rows()) t.add({name, p.n, row.name, row.rate});
    }
    out.table("budget", t);
    return 0;
}

// ---------------------------------------------------------------------------
// oracle-check

struct OracleConfig {
    std::size_t cases = 100;
    std::size_t max_photons = 4;
    std::size_t max_modes = 4;
    double tolerance = 1e-10;
    std::uint64_t seed = 1;
};

inline OracleConfig parse_oracle(const json &j, const RunOptions &opt, const fs::path &) {
    Section root(j, "config");
    check_command(root, "oracle-check");
    OracleConfig c;
    c.seed = resolve_seed(root, opt);
    c.cases = static_cast<std::size_t>(root.count("cases", 100));
    c.max_photons = static_cast<std::size_t>(root.count("max_photons", 4));
    c.max_modes = static_cast<std::size_t>(root.count("max_modes", 4));
    c.tolerance = root.number("tolerance", 1e-10);
    if (c.cases < 1 || c.max_photons < 1 || c.max_modes < 1) throw ConfigError("config: counts must be positive");
    if (c.max_photons > 6 || c.max_modes > 6) throw ConfigError("config: the oracle is limited to 6 photons and 6 modes");
    root.finish();
    return c;
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
inline Matrix haar_unitary(std::size_t m, std::mt19937_64 &rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    const auto k = static_cast<Eigen::Index>(m);
    Matrix z(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) z(i, j) = {g(rng), g(rng)};
    }
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR();
    for (Eigen::Index j = 0; j < k; ++j) q.col(j) *= std::polar(1.0, std::arg(r(j, j)));
    return q;
}

/// Random photons over random input modes; photons that share a mode get
/// mutually orthogonal internal states.
inline PhotonEnsemble random_ensemble(std::size_t n, std::size_t m, std::mt19937_64 &rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    std::vector<Photon> photons;
    std::vector<Eigen::VectorXcd> states;
    const auto dim = static_cast<Eigen::Index>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t mode = pick(rng);
        Eigen::VectorXcd v(dim);
        for (Eigen::Index k = 0; k < dim; ++k) v(k) = {g(rng), g(rng)};
        for (std::size_t j = 0; j < i; ++j) {
            if (photons[j].mode == mode) v -= states[j].dot(v) * states[j];
        }
        states.push_back(v.normalized());
        photons.push_back({mode, "p" + std::to_string(i)});
    }
    Matrix s(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            s(i, j) = states[static_cast<std::size_t>(j)].dot(states[static_cast<std::size_t>(i)]);
        }
        s(i, i) = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && photons[i].mode == photons[j].mode) s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
        }
    }
    return PhotonEnsemble(std::move(photons), GramMatrix(std::move(s)));
}

inline int run_oracle(const OracleConfig &c, Outputs &out) {
    std::mt19937_64 rng(c.seed);
    std::uniform_int_distribution<std::size_t> photons(1, c.max_photons);
    std::uniform_int_distribution<std::size_t> modes(1, c.max_modes);
    Table t{{"case", "photons", "modes", "bins", "max_abs_error"}, {}};
    double worst = 0.0;
    std::size_t worst_case = 0;
    for (std::size_t i = 0; i < c.cases; ++i) {
        const std::size_t n = photons(rng);
        const std::size_t m = modes(rng);
        const CircuitUnitary u(haar_unitary(m, rng), "random");
        const auto ens = random_ensemble(n, m, rng);
        const auto fast = distribution(u, ens);
        const auto slow = oracle_distribution(u, ens);
        double err = 0.0;
        for (std::size_t b = 0; b < fast.size(); ++b) err = std::max(err, std::abs(fast[b] - slow[b]));
        if (err >= worst) {
            worst = err;
            worst_case = i;
        }
        t.add({i, n, m, fast.size(), err});
    }
    const bool passed = worst <= c.tolerance;
    out.table("oracle_cases", t);
    out.document("oracle.json", {{"command", "oracle-check"},
                                 {"seed", c.seed},
                                 {"cases", c.cases},
                                 {"tolerance", c.tolerance},
                                 {"max_abs_error", worst},
                                 {"worst_case", worst_case},
                                 {"passed", passed}});
    return passed ? 0 : 3;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string> &commands() {
    static const std::vector<std::string> names = {"simulate", "demux", "reconstruct", "budget", "oracle-check"};
    return names;
}

/// Parses and validates the whole config, computes, then writes outputs.
/// Returns the process exit status.
inline int run(const std::string &command, const RunOptions &opt) {
    const json j = load_json(opt.config);
    const fs::path base = opt.config.parent_path();
    Outputs out(opt.format);
    int status = 0;
    if (command == "simulate") {
        status = run_simulate(parse_simulate(j, opt, base), out);
    } else if (command == "demux") {
        status = run_demux(parse_demux(j, opt, base), out);
    } else if (command == "reconstruct") {
        status = run_reconstruct(parse_reconstruct(j, opt, base), out);
    } else if (command == "budget") {
        status = run_budget(parse_budget(j, opt, base), out);
    } else if (command == "oracle-check") {
        status = run_oracle(parse_oracle(j, opt, base), out);
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
    out.write(opt.out);
    return status;
}

}  // namespace tritter::cli
