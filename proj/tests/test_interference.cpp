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

#include "tritter/interference.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace tritter;

namespace {

const std::vector<std::vector<int>> kBunching = {{3, 0, 0}, {0, 3, 0}, {0, 0, 3}};
const std::vector<std::vector<int>> kCollision = {{2, 1, 0}, {2, 0, 1}, {1, 2, 0}, {1, 0, 2}, {0, 2, 1}, {0, 1, 2}};

PhotonEnsemble three_photons(const GramMatrix &g) { return PhotonEnsemble::in_modes({0, 1, 2}, g); }

Matrix uniform_gram(std::size_t n, double overlap) {
    const auto k = static_cast<Eigen::Index>(n);
    Matrix s = Matrix::Constant(k, k, overlap);
    s.diagonal().setOnes();
    return s;
}

GramMatrix experiment_gram() { return gram_from_pairwise(3, {{{0, 1}, 0.90}, {{1, 2}, 0.90}, {{0, 2}, 0.88}}); }

}  // namespace

TEST(Permanent, RyserMatchesDefinition) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int n = 1; n <= 6; ++n) {
        Matrix a(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
        }
        EXPECT_LT(std::abs(permanent(a) - oracle::naive_permanent(a)), 1e-10 * (1 + std::abs(permanent(a))));
    }
    EXPECT_EQ(permanent(Matrix(0, 0)), cplx(1.0));
}

TEST(Interference, IdealTritterIndistinguishable) {
    const auto d = distribution(ideal_tritter(), three_photons(GramMatrix::ones(3)));
    EXPECT_NEAR(d.probability({1, 1, 1}), 1.0 / 3.0, 1e-12);
    for (const auto &b : kBunching) EXPECT_NEAR(d.probability(b), 2.0 / 9.0, 1e-12);
    for (const auto &c : kCollision) EXPECT_LT(d.probability(c), 1e-12);
}

TEST(Interference, IdealTritterDistinguishable) {
    const auto d = distribution(ideal_tritter(), three_photons(GramMatrix::identity(3)));
    EXPECT_NEAR(d.probability({1, 1, 1}), 2.0 / 9.0, 1e-12);
    for (const auto &b : kBunching) EXPECT_NEAR(d.probability(b), 1.0 / 27.0, 1e-12);
    for (const auto &c : kCollision) EXPECT_NEAR(d.probability(c), 1.0 / 9.0, 1e-12);
}

TEST(Interference, GeneralPathMatchesPermanentLimits) {
    // Nearly-but-not-exactly ones/identity Gram matrices take the permutation
    // sum; the limits must agree with the permanent fast paths.
    const auto u = ideal_tritter();
    const auto fast_ones = distribution(u, three_photons(GramMatrix::ones(3)));
    const auto slow_ones = distribution(u, three_photons(GramMatrix(uniform_gram(3, 1.0 - 1e-13))));
    const auto fast_id = distribution(u, three_photons(GramMatrix::identity(3)));
    const auto slow_id = distribution(u, three_photons(GramMatrix(uniform_gram(3, 1e-13))));
    for (std::size_t i = 0; i < fast_ones.size(); ++i) {
        EXPECT_NEAR(fast_ones[i], slow_ones[i], 1e-11);
        EXPECT_NEAR(fast_id[i], slow_id[i], 1e-11);
    }
}

TEST(Interference, IdentityCircuitKeepsPhotonsInPlace) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto d = distribution(CircuitUnitary::identity(3), three_photons(GramMatrix(oracle::random_gram(3, 3, rng))));
        EXPECT_NEAR(d.probability({1, 1, 1}), 1.0, 1e-12);
    }
}

TEST(Interference, MatchesOracleOnRandomInputs) {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + rng() % 4;
        const std::size_t n = 1 + rng() % std::min<std::size_t>(m, 4);
        std::vector<std::size_t> modes(m);
        std::iota(modes.begin(), modes.end(), std::size_t{0});
        std::shuffle(modes.begin(), modes.end(), rng);
        modes.resize(n);
        const CircuitUnitary u(oracle::random_unitary(m, rng));
        const auto ens = PhotonEnsemble::in_modes(modes, GramMatrix(oracle::random_gram(n, 1 + rng() % 3, rng)));
        const auto a = distribution(u, ens);
        const auto b = oracle_distribution(u, ens);
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Interference, MatchesOracleWithSharedOrthogonalModes) {
    // Two photons in mode 0 with orthogonal internal states, as for a QD
    // photon accompanied by laser light.
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const CircuitUnitary u(oracle::random_unitary(3, rng));
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<Eigen::VectorXcd> v(3, Eigen::VectorXcd(3));
        for (auto &x : v) {
            for (Eigen::Index k = 0; k < 3; ++k) x(k) = {g(rng), g(rng)};
        }
        v[0].normalize();
        v[2] = (v[2] - v[0].dot(v[2]) * v[0]).normalized();
        v[1].normalize();
        Matrix s(3, 3);
        for (Eigen::Index i = 0; i < 3; ++i) {
            for (Eigen::Index j = 0; j < 3; ++j) s(i, j) = v[static_cast<std::size_t>(j)].dot(v[static_cast<std::size_t>(i)]);
        }
        const PhotonEnsemble ens({{0, "a"}, {1, "b"}, {0, "c"}}, GramMatrix(s));
        const auto a = distribution(u, ens);
        const auto b = oracle_distribution(u, ens);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
    }
}

TEST(Interference, OracleReducesToPermanentsInTheLimits) {
    std::mt19937_64 rng(8);
    const CircuitUnitary u(oracle::random_unitary(4, rng));
    const std::vector<std::size_t> ins = {0, 1, 3};
    const auto bos = oracle_distribution(u, PhotonEnsemble::in_modes(ins, GramMatrix::ones(3)));
    const auto cls = oracle_distribution(u, PhotonEnsemble::in_modes(ins, GramMatrix::identity(3)));
    for (std::size_t i = 0; i < bos.size(); ++i) {
        const auto &t = bos.patterns()[i];
        const auto outs = ModeAssignment::canonical(t).modes;
        Matrix a(3, 3);
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) a(j, k) = u(outs[static_cast<std::size_t>(j)], ins[static_cast<std::size_t>(k)]);
        }
        const double norm = static_cast<double>(pattern_multiplicity_factor(t));
        EXPECT_NEAR(bos[i], std::norm(oracle::naive_permanent(a)) / norm, 1e-12);
        EXPECT_NEAR(cls[i], oracle::naive_permanent(a.cwiseAbs2().cast<cplx>()).real() / norm, 1e-12);
    }
}

TEST(Interference, DistributionsAreNormalized) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const CircuitUnitary u(oracle::random_unitary(4, rng));
        const auto d = distribution(u, PhotonEnsemble::in_modes({0, 1, 2, 3}, GramMatrix(oracle::random_gram(4, 2, rng))));
        double total = 0.0;
        for (double p : d.probabilities()) {
            EXPECT_GE(p, 0.0);
            total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Interference, DiagonalPhaseInvariance) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix u = oracle::random_unitary(3, rng);
        Matrix d1 = Matrix::Zero(3, 3);
        Matrix d2 = Matrix::Zero(3, 3);
        for (int k = 0; k < 3; ++k) {
            d1(k, k) = std::polar(1.0, angle(rng));
            d2(k, k) = std::polar(1.0, angle(rng));
        }
        const auto ens = three_photons(GramMatrix(oracle::random_gram(3, 2, rng)));
        const auto a = distribution(CircuitUnitary(u), ens);
        const auto b = distribution(CircuitUnitary(d1 * u * d2), ens);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    }
}

TEST(Interference, OverlapScalingInterpolatesContinuously) {
    const auto u = ideal_tritter();
    const auto classical = distribution(u, three_photons(GramMatrix::identity(3)));
    const auto quantum = distribution(u, three_photons(GramMatrix::ones(3)));
    std::vector<double> previous;
    double last_bunch = 0.0;
    double last_collision = 1.0;
    for (int step = 0; step <= 100; ++step) {
        const double lambda = step / 100.0;
        const auto d = distribution(u, three_photons(GramMatrix(uniform_gram(3, lambda))));
        if (step == 0) {
            for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], classical[i], 1e-12);
        }
        if (step == 100) {
            for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], quantum[i], 1e-12);
        }
        if (!previous.empty()) {
            for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LT(std::abs(d[i] - previous[i]), 0.02);
        }
        // Bunching rises and collisions fall with the overlap; |1,1,1> does not.
        EXPECT_GE(d.probability({3, 0, 0}), last_bunch - 1e-15);
        EXPECT_LE(d.probability({2, 1, 0}), last_collision + 1e-15);
        last_bunch = d.probability({3, 0, 0});
        last_collision = d.probability({2, 1, 0});
        previous = d.probabilities();
    }
    // Frozen from an independent evaluation of the permutation sum.
    const auto half = distribution(u, three_photons(GramMatrix(uniform_gram(3, 0.5))));
    EXPECT_NEAR(half.probability({1, 1, 1}), 7.0 / 36.0, 1e-12);
    EXPECT_NEAR(half.probability({3, 0, 0}), 2.0 / 27.0, 1e-12);
    EXPECT_NEAR(half.probability({2, 1, 0}), 7.0 / 72.0, 1e-12);
}

TEST(Interference, InvalidEnsemblesRejected) {
    EXPECT_THROW(PhotonEnsemble::in_modes({0, 1}, GramMatrix::ones(3)), std::invalid_argument);
    EXPECT_THROW(distribution(ideal_tritter(), PhotonEnsemble::in_modes({0, 3}, GramMatrix::ones(2))),
                 std::invalid_argument);
    EXPECT_THROW(PhotonEnsemble({{0, "a"}, {0, "b"}}, GramMatrix::ones(2)), std::invalid_argument);
    EXPECT_THROW(PhotonEnsemble({{0, "a"}, {1, "a"}}, GramMatrix::identity(2)), std::invalid_argument);
    Matrix not_psd = uniform_gram(3, 0.0);
    not_psd(0, 1) = not_psd(1, 0) = 1.0;
    not_psd(1, 2) = not_psd(2, 1) = 1.0;
    EXPECT_THROW(GramMatrix{not_psd}, std::invalid_argument);
    Matrix not_hermitian = uniform_gram(2, 0.5);
    not_hermitian(0, 1) = cplx(0.5, 0.1);
    EXPECT_THROW(GramMatrix{not_hermitian}, std::invalid_argument);
}

TEST(Gram, FromPairwiseOverlaps) {
    const auto ones = gram_from_pairwise(3, {{{0, 1}, 1.0}, {{0, 2}, 1.0}, {{1, 2}, 1.0}});
    EXPECT_TRUE(ones.is_all_ones());
    const auto id = gram_from_pairwise(3, {{{0, 1}, 0.0}, {{0, 2}, 0.0}, {{1, 2}, 0.0}});
    EXPECT_TRUE(id.is_identity());
    const auto g = experiment_gram();
    EXPECT_NEAR(g(0, 1).real(), 0.948683298050514, 1e-12);
    EXPECT_NEAR(g(1, 2).real(), 0.948683298050514, 1e-12);
    EXPECT_NEAR(g(0, 2).real(), 0.938083151964686, 1e-12);
    EXPECT_EQ(g(0, 2).imag(), 0.0);
}

TEST(Gram, InconsistentOverlapsRejected) {
    EXPECT_THROW(gram_from_pairwise(3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, 0.0}}), std::invalid_argument);
    EXPECT_THROW(gram_from_pairwise(3, {{{0, 1}, 1.0}, {{1, 2}, 1.0}}), std::invalid_argument);
    EXPECT_THROW(gram_from_pairwise(2, {{{0, 1}, 1.5}}), std::invalid_argument);
}

TEST(Source, ChiFromG2) {
    EXPECT_EQ(chi_from_g2(0.0), 0.0);
    EXPECT_DOUBLE_EQ(g2_from_chi(1.0), 0.75);
    const double chi = chi_from_g2(0.071);
    EXPECT_NEAR(chi, 0.0375, 1e-4);
    EXPECT_NEAR(g2_from_chi(chi), 0.071, 1e-12);
    for (double g2 = 0.0; g2 < 0.99; g2 += 0.01) EXPECT_NEAR(g2_from_chi(chi_from_g2(g2)), g2, 1e-12);
    EXPECT_THROW(chi_from_g2(1.0), std::invalid_argument);
    EXPECT_THROW(chi_from_g2(-0.1), std::invalid_argument);
}

TEST(Source, MixtureWithoutLaserIsPureQdInput) {
    SourceModel src;
    src.g2 = 0.0;
    const auto g = experiment_gram();
    const auto mix = mixture_distribution(ideal_tritter(), src, g);
    const auto pure = distribution(ideal_tritter(), three_photons(g));
    for (std::size_t i = 0; i < mix.size(); ++i) EXPECT_NEAR(mix[i], pure[i], 1e-14);

    const auto cls = mixture_distribution(ideal_tritter(), src, GramMatrix::identity(3));
    EXPECT_NEAR(cls.probability({1, 1, 1}), 2.0 / 9.0, 1e-12);
    EXPECT_NEAR(cls.probability({3, 0, 0}), 1.0 / 27.0, 1e-12);
    EXPECT_NEAR(cls.probability({2, 1, 0}), 1.0 / 9.0, 1e-12);
}

TEST(Source, MixtureInputsHaveTenWeightedTerms) {
    SourceModel src;
    const auto terms = mixture_inputs(src, experiment_gram());
    ASSERT_EQ(terms.size(), 10u);
    const double p1 = src.p1_qd;
    const double pl = 0.5 * src.g2 * p1;
    const double p0 = 1 - p1 - pl - p1 * pl;
    const double total = p1 * p1 * p1 + 6 * p0 * p1 * p1 * pl + 3 * p1 * p1 * pl;
    EXPECT_NEAR(terms[0].weight, p1 * p1 * p1 / total, 1e-15);
    for (std::size_t i = 1; i <= 6; ++i) EXPECT_NEAR(terms[i].weight, p0 * p1 * p1 * pl / total, 1e-15);
    for (std::size_t i = 7; i <= 9; ++i) EXPECT_NEAR(terms[i].weight, p1 * p1 * pl / total, 1e-15);
}

TEST(Source, ExperimentModelMatchesMeasuredAggregates) {
    SourceModel src;  // p1 = 0.07, g2 = 0.071
    const auto d = mixture_distribution(ideal_tritter(), src, experiment_gram());
    double bunch = 0.0;
    double collision = 0.0;
    for (const auto &b : kBunching) bunch += d.probability(b) / 3.0;
    for (const auto &c : kCollision) collision += d.probability(c) / 6.0;
    EXPECT_NEAR(d.probability({1, 1, 1}), 0.229, 0.03);
    EXPECT_NEAR(bunch, 0.157, 0.03);
    EXPECT_NEAR(collision, 0.050, 0.02);
    // Frozen from an independent evaluation of the same input mixture.
    EXPECT_NEAR(d.probability({1, 1, 1}), 0.25847794624403786, 1e-12);
    EXPECT_NEAR(d.probability({3, 0, 0}), 0.1688269710481555, 1e-12);
    EXPECT_NEAR(d.probability({2, 1, 0}), 0.03917352343524939, 1e-12);
}

TEST(Source, OverlapAssignmentBarelyMatters) {
    SourceModel src;
    const auto a = mixture_distribution(ideal_tritter(), src, experiment_gram());
    const auto b = mixture_distribution(ideal_tritter(), src,
                                        gram_from_pairwise(3, {{{0, 1}, 0.88}, {{1, 2}, 0.90}, {{0, 2}, 0.90}}));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 0.02);
}

TEST(Source, InvalidModelsRejected) {
    SourceModel s;
    s.m_far = 0.95;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = {};
    s.g2 = 1.0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = {};
    s.p1_qd = 1.2;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}
