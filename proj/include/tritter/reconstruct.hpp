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
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tritter/circuit.hpp"

namespace tritter {

/// Unordered mode pairs (i < j) in lexicographic order.
inline std::vector<std::pair<std::size_t, std::size_t>> mode_pairs(std::size_t m) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
}

inline double wrap_phase(double phi) {
    double r = std::remainder(phi, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    return r;
}

/// intensity(k, j): fraction of the light injected in input k alone that
/// leaves through output j.
struct IntensityData {
    Eigen::MatrixXd intensity;

    std::size_t modes() const { return static_cast<std::size_t>(intensity.rows()); }

    void validate(double tol = 1e-6) const {
        if (intensity.rows() != intensity.cols() || intensity.rows() < 1) {
            throw std::invalid_argument("intensity data must be square");
        }
        for (Eigen::Index k = 0; k < intensity.rows(); ++k) {
            if (intensity.row(k).minCoeff() < 0.0) throw std::invalid_argument("negative intensity");
            if (std::abs(intensity.row(k).sum() - 1.0) > tol) {
                throw std::invalid_argument("intensity row " + std::to_string(k) + " is not normalized");
            }
        }
    }
};

/// Output intensity at `output` versus the relative phase theta of equal
/// coherent beams in inputs first < second: mean + amplitude * cos(theta + phase).
struct Fringe {
    std::size_t first = 0;
    std::size_t second = 0;
    std::size_t output = 0;
    double amplitude = 0.0;
    double phase = 0.0;
};

struct FringeData {
    std::size_t m = 0;
    std::vector<Fringe> fringes;

    const Fringe &at(std::size_t first, std::size_t second, std::size_t output) const {
        for (const auto &f : fringes) {
            if (f.first == first && f.second == second && f.output == output) return f;
        }
        throw std::out_of_range("missing fringe for inputs (" + std::to_string(first) + "," +
                                std::to_string(second) + ") output " + std::to_string(output));
    }
};

struct MeasurementSet {
    IntensityData intensities;
    FringeData fringes;
};

struct MeasurementNoise {
    double sigma = 0.0;          // relative Gaussian intensity noise
    std::uint64_t seed = 1;
    std::size_t phase_steps = 12;  // samples per fringe sweep
};

/// Synthetic characterization run: single-input intensities and two-input
/// fringe sweeps, each sampled intensity scaled by (1 + sigma * N(0,1)).
inline MeasurementSet simulate_measurements(const CircuitUnitary &u, const MeasurementNoise &noise = {}) {
    if (!(noise.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
    if (noise.phase_steps < 3) throw std::invalid_argument("need at least three phase steps per fringe");
    const std::size_t m = u.modes();
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noisy = [&](double value) {
        const double v = noise.sigma > 0.0 ? value * (1.0 + noise.sigma * gauss(rng)) : value;
        return std::max(v, 0.0);
    };

    MeasurementSet data;
    data.intensities.intensity.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double v = noisy(std::norm(u(j, k)));
            data.intensities.intensity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v;
            total += v;
        }
        data.intensities.intensity.row(static_cast<Eigen::Index>(k)) /= total;
    }

    data.fringes.m = m;
    const double inv = 1.0 / std::sqrt(2.0);
    for (auto [a, b] : mode_pairs(m)) {
        for (std::size_t k = 0; k < m; ++k) {
            // First Fourier component of the sampled sweep gives amplitude * e^{i phase}.
            cplx component = 0.0;
            for (std::size_t s = 0; s < noise.phase_steps; ++s) {
                const double theta = 2.0 * std::numbers::pi * static_cast<double>(s) /
                                     static_cast<double>(noise.phase_steps);
                const cplx field = inv * (u(k, a) + std::polar(1.0, theta) * u(k, b));
                component += noisy(std::norm(field)) * std::polar(1.0, -theta);
            }
            component *= 2.0 / static_cast<double>(noise.phase_steps);
            data.fringes.fringes.push_back({a, b, k, std::abs(component), wrap_phase(std::arg(component))});
        }
    }
    return data;
}

/// Applies diagonal phases so the first column and then the first row are
/// real and non-negative.
inline Matrix fix_gauge(Matrix u) {
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
        if (std::abs(u(j, 0)) > 0.0) u.row(j) *= std::polar(1.0, -std::arg(u(j, 0)));
    }
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        if (std::abs(u(0, k)) > 0.0) u.col(k) *= std::polar(1.0, -std::arg(u(0, k)));
    }
    return u;
}

/// Closest unitary in Frobenius norm (unitary factor of the polar decomposition).
inline Matrix nearest_unitary(const Matrix &a) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

struct Reconstruction {
    CircuitUnitary unitary;
    Matrix raw;                      // before unitary projection
    double unitarity_residual;       // of raw
    double projection_distance;      // max |raw - unitary| entry
    double phase_inconsistency;      // worst disagreement of redundant fringe phases, radians
    bool consistent;
};

/// Moduli from sqrt(intensity); phases from the fringes of input pairs (0, k)
/// in the gauge where the first row and column are real positive. The result
/// is projected onto the nearest unitary and re-gauged; redundant pairs
/// (i, j > 0) only feed the consistency report.
inline Reconstruction reconstruct_unitary(const MeasurementSet &data, double tolerance = 0.05) {
    data.intensities.validate();
    const std::size_t m = data.intensities.modes();
    if (data.fringes.m != m) throw std::invalid_argument("fringe data and intensity data disagree on mode count");
    const auto &in = data.intensities.intensity;

    auto relative_phase = [&](std::size_t output, std::size_t input) {
        return input == 0 ? 0.0 : data.fringes.at(0, input, output).phase;
    };

    Matrix raw(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
            const double modulus = std::sqrt(in(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)));
            const double phase = relative_phase(j, k) - relative_phase(0, k);
            raw(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = std::polar(modulus, phase);
        }
    }

    double worst = 0.0;
    for (auto [a, b] : mode_pairs(m)) {
        if (a == 0) continue;
        for (std::size_t k = 0; k < m; ++k) {
            const auto &f = data.fringes.at(a, b, k);
            const double scale = std::sqrt(in(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) *
                                           in(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)));
            if (scale < 1e-6) continue;
            const double predicted = relative_phase(k, b) - relative_phase(k, a);
            worst = std::max(worst, std::abs(wrap_phase(f.phase - predicted)));
        }
    }

    const double residual = unitarity_residual(raw);
    Matrix projected = fix_gauge(nearest_unitary(raw));
    const double distance = (raw - projected).cwiseAbs().maxCoeff();
    return Reconstruction{CircuitUnitary(std::move(projected), "reconstructed"), std::move(raw), residual, distance,
                          worst, residual <= tolerance};
}

/// Two-photon visibilities V[(i,j);(k,l)] for input pairs i < j and output
/// pairs k < l, V = (P_C - P_Q) / P_C with
///   P_C = |U_ki U_lj|^2 + |U_li U_kj|^2,  P_Q = |U_ki U_lj + U_li U_kj|^2
/// (U_ki: input i to output k). Entries with P_C = 0 are undefined.
class VisibilityMatrix {
   public:
    VisibilityMatrix(std::size_t m, std::vector<std::optional<double>> entries)
        : m_(m), pairs_(mode_pairs(m)), entries_(std::move(entries)) {
        if (entries_.size() != pairs_.size() * pairs_.size()) {
            throw std::invalid_argument("visibility entry count mismatch");
        }
    }

    std::size_t modes() const { return m_; }
    std::size_t pair_count() const { return pairs_.size(); }
    const std::vector<std::pair<std::size_t, std::size_t>> &pairs() const { return pairs_; }
    const std::vector<std::optional<double>> &entries() const { return entries_; }

    /// Indexed by input-pair and output-pair positions in pairs().
    const std::optional<double> &at(std::size_t input_pair, std::size_t output_pair) const {
        return entries_[input_pair * pairs_.size() + output_pair];
    }
    std::optional<double> &at(std::size_t input_pair, std::size_t output_pair) {
        return entries_[input_pair * pairs_.size() + output_pair];
    }

    bool complete() const {
        for (const auto &e : entries_) {
            if (!e) return false;
        }
        return true;
    }

   private:
    std::size_t m_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
    std::vector<std::optional<double>> entries_;
};

inline VisibilityMatrix visibility_matrix(const CircuitUnitary &u, double undefined_below = 1e-14) {
    const std::size_t m = u.modes();
    const auto pairs = mode_pairs(m);
    std::vector<std::optional<double>> entries;
    entries.reserve(pairs.size() * pairs.size());
    for (auto [i, j] : pairs) {
        for (auto [k, l] : pairs) {
            const cplx direct = u(k, i) * u(l, j);
            const cplx crossed = u(l, i) * u(k, j);
            const double classical = std::norm(direct) + std::norm(crossed);
            const double quantum = std::norm(direct + crossed);
            if (classical <= undefined_below) {
                entries.emplace_back(std::nullopt);
            } else {
                entries.emplace_back((classical - quantum) / classical);
            }
        }
    }
    return VisibilityMatrix(m, std::move(entries));
}

namespace detail {
inline double visibility_distance(const VisibilityMatrix &a, const VisibilityMatrix &b) {
    if (a.modes() != b.modes()) throw std::invalid_argument("visibility matrices differ in size");
    if (!a.complete() || !b.complete()) throw std::invalid_argument("visibility matrix has undefined entries");
    double sum = 0.0;
    for (std::size_t e = 0; e < a.entries().size(); ++e) sum += std::abs(*a.entries()[e] - *b.entries()[e]);
    return sum;
}
}  // namespace detail

/// F = 1 - sum |V_th - V_exp| / 18.
inline double fidelity(const VisibilityMatrix &v_exp, const VisibilityMatrix &v_th) {
    return 1.0 - detail::visibility_distance(v_exp, v_th) / 18.0;
}

/// As fidelity() but divided by the number of visibility entries.
inline double normalized_fidelity(const VisibilityMatrix &v_exp, const VisibilityMatrix &v_th) {
    return 1.0 - detail::visibility_distance(v_exp, v_th) / static_cast<double>(v_exp.entries().size());
}

inline double visibility_fidelity(const CircuitUnitary &u, const CircuitUnitary &reference) {
    return fidelity(visibility_matrix(u), visibility_matrix(reference));
}

}  // namespace tritter
