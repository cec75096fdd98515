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
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tritter {

/// Relative output level of one demultiplexer arm, sampled on a uniform grid
/// t_i = i * T / N for i = 0..N (both period endpoints included).
class RoutingWaveform {
   public:
    RoutingWaveform(double period, std::vector<double> samples) : period_(period), samples_(std::move(samples)) {
        if (!(period_ > 0.0)) throw std::invalid_argument("waveform period must be positive");
        if (samples_.size() < 2) throw std::invalid_argument("waveform needs at least two samples");
        for (double s : samples_) {
            if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("waveform levels must lie in [0, 1]");
        }
    }

    double period() const { return period_; }
    const std::vector<double> &samples() const { return samples_; }
    std::size_t intervals() const { return samples_.size() - 1; }
    double step() const { return period_ / static_cast<double>(intervals()); }
    double time(std::size_t i) const { return period_ * static_cast<double>(i) / static_cast<double>(intervals()); }

    /// Time average over one period (trapezoidal).
    double duty_cycle() const {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < samples_.size(); ++i) acc += 0.5 * (samples_[i] + samples_[i + 1]);
        return acc / static_cast<double>(intervals());
    }

   private:
    double period_;
    std::vector<double> samples_;
};

/// One arm's nominal routing window [start, start + width) before delays,
/// and the fibre delay that aligns it with the other arms.
struct ArmWindow {
    double start;
    double width;
    double delay;
};

struct DemuxScheme {
    std::vector<RoutingWaveform> waveforms;
    std::vector<double> arm_transmissions;
    double contrast = 1.0;
    double rise_time = 0.0;

    std::size_t arms() const { return waveforms.size(); }
};

struct WaveformShape {
    double contrast = 1.0;   // floor = (1 - contrast) / 2, ceiling = 1 - floor
    double rise_time = 0.0;  // linear ramp centred on each nominal edge
    double grid_step = 0.1e-9;
};

namespace detail {

inline double wrap(double x, double period) {
    double r = std::fmod(x, period);
    return r < 0.0 ? r + period : r;
}

/// Unit-height periodic window [0, width) with ramps of length `ramp`
/// centred on both edges, evaluated at phase x in [0, period).
inline double window_level(double x, double width, double period, double ramp) {
    if (width >= period) return 1.0;
    if (width <= 0.0) return 0.0;
    const double h = 0.5 * ramp;
    if (ramp <= 0.0) return x < width ? 1.0 : 0.0;
    if (x < h) return 0.5 + x / ramp;
    if (x >= period - h) return (x - (period - h)) / ramp;
    if (x < width - h) return 1.0;
    if (x < width + h) return 0.5 - (x - width) / ramp;
    return 0.0;
}

}  // namespace detail

/// Samples one arm whose window has already been shifted by its delay.
inline RoutingWaveform make_arm_waveform(double period, const ArmWindow &arm, const WaveformShape &shape) {
    if (!(shape.contrast >= 0.0 && shape.contrast <= 1.0)) throw std::invalid_argument("contrast must lie in [0, 1]");
    if (!(shape.rise_time >= 0.0)) throw std::invalid_argument("rise time must be non-negative");
    if (!(shape.grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
    if (arm.width < period && shape.rise_time > std::min(arm.width, period - arm.width)) {
        throw std::invalid_argument("rise time longer than the routing window");
    }
    const auto intervals = static_cast<std::size_t>(std::llround(period / shape.grid_step));
    if (intervals < 1) throw std::invalid_argument("grid step longer than period");
    const double floor = 0.5 * (1.0 - shape.contrast);
    const double ceiling = 1.0 - floor;
    const double origin = arm.start + arm.delay;
    std::vector<double> samples(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double t = period * static_cast<double>(i) / static_cast<double>(intervals);
        double x = detail::wrap(t - origin, period);
        // Grid points that coincide with an edge must land on its closed side.
        const double eps = 1e-6 * shape.grid_step;
        if (period - x < eps) x = 0.0;
        if (std::abs(x - arm.width) < eps) x = arm.width;
        const double level = detail::window_level(x, arm.width, period, shape.rise_time);
        samples[i] = std::clamp(floor + (ceiling - floor) * level, 0.0, 1.0);
    }
    return RoutingWaveform(period, std::move(samples));
}

/// Routing windows of a cascaded binary switch tree with n outputs: k =
/// ceil(log2 n) switch stages split the period into 2^k bins; arms on the
/// deepest level own one bin and the others two. Delays bring the start of
/// every window onto the start of the last one.
inline std::vector<ArmWindow> cascaded_windows(std::size_t n, double period) {
    if (n < 1) throw std::invalid_argument("demultiplexer needs at least one arm");
    if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
    std::size_t stages = 0;
    while ((std::size_t{1} << stages) < n) ++stages;
    const std::size_t bins = std::size_t{1} << stages;
    const std::size_t deep = stages == 0 ? 1 : 2 * (n - bins / 2);
    const double bin = period / static_cast<double>(bins);

    std::vector<ArmWindow> windows;
    double cursor = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const double width = (a < deep ? 1.0 : 2.0) * bin;
        windows.push_back({cursor, stages == 0 ? period : width, 0.0});
        cursor += width;
    }
    const double target = windows.back().start;
    for (auto &w : windows) w.delay = detail::wrap(target - w.start, period);
    return windows;
}

inline DemuxScheme cascaded_scheme(std::size_t n, double period, const WaveformShape &shape = {},
                                   double arm_transmission = 1.0) {
    DemuxScheme scheme;
    scheme.contrast = shape.contrast;
    scheme.rise_time = shape.rise_time;
    for (const auto &w : cascaded_windows(n, period)) {
        scheme.waveforms.push_back(make_arm_waveform(period, w, shape));
        scheme.arm_transmissions.push_back(arm_transmission);
    }
    return scheme;
}

/// Two cascaded switches over T = 4 tau: arms own [0,tau), [tau,2tau) and
/// [2tau,4tau); after alignment all three are high together for tau.
inline DemuxScheme ideal_scheme_3arm(double period, const WaveformShape &shape = {}) {
    return cascaded_scheme(3, period, shape);
}

/// C_n(active) = (1/T) * integral over one period of prod_k S_k(t).
inline double conversion_rate_active(std::span<const RoutingWaveform> waveforms) {
    if (waveforms.empty()) throw std::invalid_argument("no waveforms");
    const auto &first = waveforms.front();
    for (const auto &w : waveforms) {
        if (std::abs(w.period() - first.period()) > 1e-12 * first.period()) {
            throw std::invalid_argument("waveforms have different periods");
        }
        if (w.samples().size() != first.samples().size()) {
            throw std::invalid_argument("waveforms are sampled on different grids");
        }
    }
    const std::size_t points = first.samples().size();
    std::vector<double> product(points, 1.0);
    for (const auto &w : waveforms) {
        for (std::size_t i = 0; i < points; ++i) product[i] *= w.samples()[i];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < points; ++i) acc += 0.5 * (product[i] + product[i + 1]);
    return acc / static_cast<double>(points - 1);
}

inline double conversion_rate_active(const DemuxScheme &scheme) { return conversion_rate_active(scheme.waveforms); }

/// C_n(passive) = prod_k p_k for static splitting probabilities.
inline double conversion_rate_passive(std::span<const double> probs) {
    double c = 1.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("static probabilities must lie in [0, 1]");
        c *= p;
    }
    return c;
}

inline double conversion_rate_passive(std::initializer_list<double> probs) {
    return conversion_rate_passive(std::span<const double>(probs.begin(), probs.size()));
}

/// Static output probabilities with the switches off: each arm keeps its
/// share of time bins.
inline std::vector<double> passive_probabilities(std::size_t n) {
    std::vector<double> probs;
    for (const auto &w : cascaded_windows(n, 1.0)) probs.push_back(w.width);
    return probs;
}

struct ActiveEfficiency {
    double value;
    bool anomalous;  // outside [0, 1]
};

/// eta_a = (r_exp - 1) / (r_ideal - 1) with r = C(active) / C(passive).
inline ActiveEfficiency active_efficiency(double r_exp, double r_ideal) {
    if (!(r_ideal > 1.0)) throw std::invalid_argument("ideal active-to-passive ratio must exceed 1");
    const double eta = (r_exp - 1.0) / (r_ideal - 1.0);
    return {eta, eta < 0.0 || eta > 1.0};
}

}  // namespace tritter
