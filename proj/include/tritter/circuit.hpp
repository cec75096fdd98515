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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tritter {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kUnitarityTolerance = 1e-10;

/// max_ij |(U^dagger U - I)_ij|
inline double unitarity_residual(const Matrix &u) {
    Matrix d = u.adjoint() * u - Matrix::Identity(u.cols(), u.cols());
    return d.cwiseAbs().maxCoeff();
}

/// Interferometer transfer matrix. Column index is the input mode, row index
/// the output mode: a photon entering mode k leaves in mode j with amplitude
/// matrix()(j, k).
class CircuitUnitary {
   public:
    explicit CircuitUnitary(Matrix matrix, std::string label = {})
        : matrix_(std::move(matrix)), label_(std::move(label)) {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1) {
            throw std::invalid_argument("circuit matrix must be square and non-empty");
        }
        double r = unitarity_residual(matrix_);
        if (!(r < kUnitarityTolerance)) {
            throw std::invalid_argument("matrix is not unitary (residual " + std::to_string(r) + ")");
        }
    }

    static CircuitUnitary identity(std::size_t m) {
        return CircuitUnitary(Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)),
                              "identity");
    }

    const Matrix &matrix() const { return matrix_; }
    std::size_t modes() const { return static_cast<std::size_t>(matrix_.rows()); }
    const std::string &label() const { return label_; }
    cplx operator()(std::size_t out, std::size_t in) const {
        return matrix_(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    }

    CircuitUnitary adjoint() const { return CircuitUnitary(matrix_.adjoint(), label_ + "^dagger"); }

   private:
    Matrix matrix_;
    std::string label_;
};

/// Directional coupler between modes i and j. The cross-coupling carries a
/// factor of i: [[sqrt(r), i sqrt(1-r)], [i sqrt(1-r), sqrt(r)]].
inline CircuitUnitary coupler_unitary(double reflectivity, std::size_t i, std::size_t j, std::size_t m) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) {
        throw std::invalid_argument("coupler reflectivity must lie in [0, 1]");
    }
    if (i == j) throw std::invalid_argument("coupler needs two distinct modes");
    if (i >= m || j >= m) throw std::out_of_range("coupler mode outside circuit");
    Matrix u = Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    const double s = std::sqrt(reflectivity);
    const cplx t{0.0, std::sqrt(1.0 - reflectivity)};
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    u(a, a) = s;
    u(b, b) = s;
    u(a, b) = t;
    u(b, a) = t;
    return CircuitUnitary(std::move(u), "DC(" + std::to_string(i) + "," + std::to_string(j) + ")");
}

inline CircuitUnitary phase_unitary(double phi, std::size_t k, std::size_t m) {
    if (k >= m) throw std::out_of_range("phase shifter mode outside circuit");
    Matrix u = Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    u(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = std::polar(1.0, phi);
    return CircuitUnitary(std::move(u), "PS(" + std::to_string(k) + ")");
}

/// Serial composition in propagation order: elements.front() acts first.
inline CircuitUnitary compose(std::span<const CircuitUnitary> elements) {
    if (elements.empty()) throw std::invalid_argument("cannot compose an empty circuit");
    const std::size_t m = elements.front().modes();
    Matrix acc = elements.front().matrix();
    std::string label = elements.front().label();
    for (std::size_t e = 1; e < elements.size(); ++e) {
        if (elements[e].modes() != m) {
            throw std::invalid_argument("mode count mismatch in compose");
        }
        acc = elements[e].matrix() * acc;
        label += " > " + elements[e].label();
    }
    return CircuitUnitary(std::move(acc), std::move(label));
}

inline CircuitUnitary compose(std::initializer_list<CircuitUnitary> elements) {
    return compose(std::span<const CircuitUnitary>(elements.begin(), elements.size()));
}

/// Symmetric three-mode tritter, U_jk = exp(2 pi i jk / 3) / sqrt(3) with
/// zero-based j, k.
inline CircuitUnitary ideal_tritter() {
    Matrix u(3, 3);
    const double norm = 1.0 / std::sqrt(3.0);
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
            u(j, k) = std::polar(norm, 2.0 * std::numbers::pi * j * k / 3.0);
        }
    }
    return CircuitUnitary(std::move(u), "ideal tritter");
}

struct TritterLayout {
    double r1 = 0.5;        // first and last coupler
    double r2 = 1.0 / 3.0;  // middle coupler
    double phi = std::numbers::pi / 2;
};

/// DC(0,1; r1) -> DC(1,2; r2) -> phase phi on mode 1 -> DC(0,1; r1).
/// At phi = pi/2 or 3pi/2 the two-photon visibilities match the ideal tritter.
inline CircuitUnitary build_tritter(const TritterLayout &layout) {
    if (!(layout.r1 >= 0.0 && layout.r1 <= 1.0 && layout.r2 >= 0.0 && layout.r2 <= 1.0)) {
        throw std::invalid_argument("tritter reflectivities must lie in [0, 1]");
    }
    CircuitUnitary u = compose({coupler_unitary(layout.r1, 0, 1, 3), coupler_unitary(layout.r2, 1, 2, 3),
                                phase_unitary(layout.phi, 1, 3), coupler_unitary(layout.r1, 0, 1, 3)});
    return CircuitUnitary(u.matrix(), "tritter");
}

/// Voltage -> phase lookup for the thermo-optic shifter.
class PhaseCalibration {
   public:
    explicit PhaseCalibration(std::vector<std::pair<double, double>> table) : table_(std::move(table)) {
        if (table_.size() < 2) throw std::invalid_argument("phase calibration needs at least two points");
        for (std::size_t i = 1; i < table_.size(); ++i) {
            if (!(table_[i].first > table_[i - 1].first)) {
                throw std::invalid_argument("calibration voltages must be strictly increasing");
            }
        }
    }

    const std::vector<std::pair<double, double>> &table() const { return table_; }
    double min_voltage() const { return table_.front().first; }
    double max_voltage() const { return table_.back().first; }

   private:
    std::vector<std::pair<double, double>> table_;
};

/// Piecewise-linear interpolation inside the calibrated range.
inline double phase_from_voltage(const PhaseCalibration &cal, double volts) {
    const auto &t = cal.table();
    if (!(volts >= cal.min_voltage() && volts <= cal.max_voltage())) {
        throw std::out_of_range("voltage " + std::to_string(volts) + " V outside calibrated range");
    }
    auto hi = std::lower_bound(t.begin(), t.end(), volts,
                               [](const std::pair<double, double> &p, double v) { return p.first < v; });
    if (hi == t.begin()) return hi->second;
    auto lo = std::prev(hi);
    const double w = (volts - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

}  // namespace tritter
