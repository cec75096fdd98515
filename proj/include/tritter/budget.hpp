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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tritter/demux.hpp"

namespace tritter {

struct BudgetPipeline {
    double rep_rate = 324e6;          // Hz
    double fibered_brightness = 0.07; // photons per pulse in single-mode fibre
    double demux_transmission = 0.63; // per photon
    double chip_transmission = 0.17;  // per photon, including fibre-array coupling
    double det_efficiency = 0.30;     // per photon
    int n = 3;
    double demux_conversion = 0.25;   // C_n
    std::optional<double> measured_source_rate;  // Hz, overrides the model

    void validate() const {
        if (!(rep_rate > 0.0)) throw std::invalid_argument("repetition rate must be positive");
        if (n < 1) throw std::invalid_argument("photon number must be at least 1");
        for (double e : {fibered_brightness, demux_transmission, chip_transmission, det_efficiency, demux_conversion}) {
            if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("efficiencies must lie in [0, 1]");
        }
        if (measured_source_rate && !(*measured_source_rate >= 0.0)) {
            throw std::invalid_argument("measured source rate must be non-negative");
        }
    }
};

/// Model: rep_rate * (brightness * demux transmission)^n * C_n.
inline double model_source_rate(const BudgetPipeline &p) {
    p.validate();
    return p.rep_rate * std::pow(p.fibered_brightness * p.demux_transmission, p.n) * p.demux_conversion;
}

/// n-photon rate at the demultiplexer output; a measured value wins over the model.
inline double n_photon_source_rate(const BudgetPipeline &p) {
    p.validate();
    return p.measured_source_rate ? *p.measured_source_rate : model_source_rate(p);
}

/// rate * eff^n
inline double downstream_rate(double source_rate, double per_photon_eff, int n) {
    if (!(per_photon_eff >= 0.0 && per_photon_eff <= 1.0)) throw std::invalid_argument("efficiency must lie in [0, 1]");
    if (n < 0) throw std::invalid_argument("photon number must be non-negative");
    return source_rate * std::pow(per_photon_eff, n);
}

struct RateRow {
    std::string name;
    double rate;  // Hz
};

struct RateTable {
    int n = 0;
    double generated_source = 0.0;
    double detected_source = 0.0;
    double generated_after_chip = 0.0;
    double detected_after_chip = 0.0;

    std::vector<RateRow> rows() const {
        const std::string tag = std::to_string(n) + "-photon";
        return {{"generated " + tag + " rate at source", generated_source},
                {"detected " + tag + " rate at source", detected_source},
                {"generated " + tag + " rate after chip", generated_after_chip},
                {"detected " + tag + " rate after chip", detected_after_chip}};
    }
};

inline RateTable projection(const BudgetPipeline &p) {
    const double source = n_photon_source_rate(p);
    RateTable t;
    t.n = p.n;
    t.generated_source = source;
    t.detected_source = downstream_rate(source, p.det_efficiency, p.n);
    t.generated_after_chip = downstream_rate(source, p.chip_transmission, p.n);
    t.detected_after_chip = downstream_rate(t.generated_after_chip, p.det_efficiency, p.n);
    return t;
}

/// C_n of the ideal cascaded binary demultiplexer, integrated numerically.
inline double cascaded_conversion(int n, double period = 200e-9) {
    if (n < 1) throw std::invalid_argument("photon number must be at least 1");
    return conversion_rate_active(cascaded_scheme(static_cast<std::size_t>(n), period));
}

/// The operating point of the three-photon experiment, measured column.
inline BudgetPipeline experiment_pipeline() {
    BudgetPipeline p;
    p.measured_source_rate = 3.8e3;
    return p;
}

/// Foreseeable improvements; C_n from the ideal cascaded scheme.
inline BudgetPipeline optimized_pipeline(int n) {
    BudgetPipeline p;
    p.rep_rate = 1e9;
    p.fibered_brightness = 0.50;
    p.demux_transmission = 0.85;
    p.chip_transmission = 0.60;
    p.det_efficiency = 0.9;
    p.n = n;
    p.demux_conversion = cascaded_conversion(n);
    return p;
}

}  // namespace tritter
