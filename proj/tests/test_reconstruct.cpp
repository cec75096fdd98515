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

#include "tritter/reconstruct.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace tritter;

namespace {

Matrix random_diagonal_phases(std::size_t m, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
    Matrix d = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (Eigen::Index k = 0; k < d.rows(); ++k) d(k, k) = std::polar(1.0, angle(rng));
    return d;
}

double max_visibility_gap(const VisibilityMatrix &a, const VisibilityMatrix &b) {
    double worst = 0.0;
    for (std::size_t e = 0; e < a.entries().size(); ++e) {
        EXPECT_EQ(a.entries()[e].has_value(), b.entries()[e].has_value());
        if (a.entries()[e] && b.entries()[e]) worst = std::max(worst, std::abs(*a.entries()[e] - *b.entries()[e]));
    }
    return worst;
}

}  // namespace

TEST(Visibility, IdealTritterIsOneHalfEverywhere) {
    const auto v = visibility_matrix(ideal_tritter());
    ASSERT_EQ(v.entries().size(), 9u);
    for (const auto &e : v.entries()) {
        ASSERT_TRUE(e.has_value());
        EXPECT_NEAR(*e, 0.5, 1e-12);
    }
}

TEST(Visibility, IdentityLeavesCrossPairsUndefined) {
    const auto v = visibility_matrix(CircuitUnitary::identity(3));
    for (std::size_t a = 0; a < v.pair_count(); ++a) {
        for (std::size_t b = 0; b < v.pair_count(); ++b) {
            if (a == b) {
                // Photons pass straight through: P_C = P_Q = 1.
                ASSERT_TRUE(v.at(a, b).has_value());
                EXPECT_EQ(*v.at(a, b), 0.0);
            } else {
                EXPECT_FALSE(v.at(a, b).has_value());
            }
        }
    }
    EXPECT_FALSE(v.complete());
    EXPECT_THROW(fidelity(v, v), std::invalid_argument);
}

TEST(Visibility, BalancedSplitterShowsFullDip) {
    const auto v = visibility_matrix(coupler_unitary(0.5, 0, 1, 2));
    ASSERT_EQ(v.entries().size(), 1u);
    EXPECT_NEAR(*v.at(0, 0), 1.0, 1e-12);
}

TEST(Visibility, GaugeInvariant) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix u = oracle::random_unitary(3 + trial % 2, rng);
        const auto m = static_cast<std::size_t>(u.rows());
        const Matrix moved = random_diagonal_phases(m, rng) * u * random_diagonal_phases(m, rng);
        EXPECT_LT(max_visibility_gap(visibility_matrix(CircuitUnitary(u)), visibility_matrix(CircuitUnitary(moved))), 1e-12);
    }
}

TEST(Fidelity, Arithmetic) {
    const auto v = visibility_matrix(ideal_tritter());
    EXPECT_DOUBLE_EQ(fidelity(v, v), 1.0);
    auto shifted = v;
    *shifted.at(1, 2) += 0.18;
    EXPECT_NEAR(fidelity(shifted, v), 0.99, 1e-12);
    EXPECT_NEAR(normalized_fidelity(shifted, v), 0.98, 1e-12);
    EXPECT_THROW(fidelity(v, visibility_matrix(coupler_unitary(0.5, 0, 1, 2))), std::invalid_argument);
}

TEST(Measurements, NoiselessIntensities) {
    const auto t = simulate_measurements(ideal_tritter());
    for (Eigen::Index k = 0; k < 3; ++k) {
        for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(t.intensities.intensity(k, j), 1.0 / 3.0, 1e-12);
    }
    const auto id = simulate_measurements(CircuitUnitary::identity(3));
    EXPECT_LT((id.intensities.intensity - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Measurements, FringePhasesAreRelativeElementPhases) {
    std::mt19937_64 rng(41);
    const CircuitUnitary u(oracle::random_unitary(3, rng));
    const auto data = simulate_measurements(u);
    for (const auto &f : data.fringes.fringes) {
        const cplx expected = std::conj(u(f.output, f.first)) * u(f.output, f.second);
        EXPECT_NEAR(f.amplitude, std::abs(expected), 1e-12);
        EXPECT_NEAR(wrap_phase(f.phase - std::arg(expected)), 0.0, 1e-10);
        EXPECT_GT(f.phase, -std::numbers::pi);
        EXPECT_LE(f.phase, std::numbers::pi);
    }
}

TEST(Measurements, NoisyIntensitiesStayNearTruth) {
    // Renormalized rows; entries within 3 sigma of the ideal third.
    int outliers = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto d = simulate_measurements(ideal_tritter(), {0.01, seed, 12});
        for (Eigen::Index k = 0; k < 3; ++k) {
            EXPECT_NEAR(d.intensities.intensity.row(k).sum(), 1.0, 1e-12);
            for (Eigen::Index j = 0; j < 3; ++j) outliers += std::abs(d.intensities.intensity(k, j) - 1.0 / 3.0) > 3 * 0.01 / 3.0;
        }
    }
    EXPECT_LE(outliers, 5);  // 450 entries, ~1 expected beyond 3 sigma
}

TEST(Measurements, DeterministicPerSeed) {
    const auto a = simulate_measurements(ideal_tritter(), {0.02, 7, 12});
    const auto b = simulate_measurements(ideal_tritter(), {0.02, 7, 12});
    const auto c = simulate_measurements(ideal_tritter(), {0.02, 8, 12});
    EXPECT_EQ(a.intensities.intensity, b.intensities.intensity);
    EXPECT_NE(a.intensities.intensity, c.intensities.intensity);
}

TEST(Reconstruct, NoiselessIdealTritterRoundTrip) {
    const auto r = reconstruct_unitary(simulate_measurements(ideal_tritter()));
    EXPECT_NEAR(visibility_fidelity(r.unitary, ideal_tritter()), 1.0, 1e-9);
    EXPECT_TRUE(r.consistent);
    EXPECT_LT(r.phase_inconsistency, 1e-9);
    // Gauge: first row and column real, non-negative.
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(r.unitary(0, k).imag(), 0.0, 1e-12);
        EXPECT_NEAR(r.unitary(k, 0).imag(), 0.0, 1e-12);
        EXPECT_GE(r.unitary(0, k).real(), 0.0);
    }
}

TEST(Reconstruct, NoiselessRandomUnitariesRoundTrip) {
    std::mt19937_64 rng(57);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const CircuitUnitary u(oracle::random_unitary(3, rng));
        const auto r = reconstruct_unitary(simulate_measurements(u));
        worst = std::max(worst, max_visibility_gap(visibility_matrix(r.unitary), visibility_matrix(u)));
        // Equal up to diagonal phases: gauge-fixed forms coincide.
        EXPECT_LT((fix_gauge(u.matrix()) - r.unitary.matrix()).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Reconstruct, NoisyDataStaysFaithful) {
    std::vector<double> f;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto r = reconstruct_unitary(simulate_measurements(ideal_tritter(), {0.01, seed, 12}));
        f.push_back(visibility_fidelity(r.unitary, ideal_tritter()));
    }
    std::sort(f.begin(), f.end());
    EXPECT_GE(f[4], 0.95);  // 5th percentile of 100
}

TEST(Reconstruct, InconsistentDataFlagged) {
    auto data = simulate_measurements(ideal_tritter());
    // Corrupt the phases of input pair (0, 1): the rebuilt matrix is far from unitary.
    for (auto &fr : data.fringes.fringes) {
        if (fr.first == 0 && fr.second == 1) fr.phase = 0.0;
    }
    const auto r = reconstruct_unitary(data);
    EXPECT_FALSE(r.consistent);
    EXPECT_GT(r.unitarity_residual, 0.05);
    EXPECT_LT(unitarity_residual(r.unitary.matrix()), 1e-10);
}

TEST(Reconstruct, IncompleteDataRejected) {
    auto data = simulate_measurements(ideal_tritter());
    data.fringes.fringes.pop_back();
    EXPECT_THROW(reconstruct_unitary(data), std::out_of_range);
    auto bad = simulate_measurements(ideal_tritter());
    bad.intensities.intensity(0, 0) = 0.9;
    EXPECT_THROW(reconstruct_unitary(bad), std::invalid_argument);
}
