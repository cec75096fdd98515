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
#include <map>
#include <numeric>
#include <bit>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tritter/circuit.hpp"
#include "tritter/fock.hpp"

namespace tritter {

inline constexpr double kGramTolerance = 1e-10;

/// Pairwise single-photon overlaps, S_ij = <psi_j|psi_i>. Hermitian, unit
/// diagonal, positive semidefinite.
class GramMatrix {
   public:
    explicit GramMatrix(Matrix s) : s_(std::move(s)) {
        if (s_.rows() != s_.cols()) throw std::invalid_argument("Gram matrix must be square");
        const Eigen::Index n = s_.rows();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(s_(i, i) - 1.0) > kGramTolerance) {
                throw std::invalid_argument("Gram matrix diagonal must be 1");
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                if (std::abs(s_(i, j) - std::conj(s_(j, i))) > kGramTolerance) {
                    throw std::invalid_argument("Gram matrix must be Hermitian");
                }
                if (std::abs(s_(i, j)) > 1.0 + kGramTolerance) {
                    throw std::invalid_argument("Gram matrix overlaps must satisfy |S_ij| <= 1");
                }
            }
        }
        if (n > 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(s_, Eigen::EigenvaluesOnly);
            if (eig.eigenvalues().minCoeff() < -kGramTolerance) {
                throw std::invalid_argument("Gram matrix is not positive semidefinite");
            }
        }
    }

    static GramMatrix identity(std::size_t n) {
        const auto k = static_cast<Eigen::Index>(n);
        return GramMatrix(Matrix::Identity(k, k));
    }
    static GramMatrix ones(std::size_t n) {
        const auto k = static_cast<Eigen::Index>(n);
        return GramMatrix(Matrix::Ones(k, k));
    }

    const Matrix &matrix() const { return s_; }
    std::size_t size() const { return static_cast<std::size_t>(s_.rows()); }
    cplx operator()(std::size_t i, std::size_t j) const {
        return s_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    bool is_all_ones(double tol = 1e-14) const {
        return (s_ - Matrix::Ones(s_.rows(), s_.cols())).cwiseAbs().maxCoeff() <= tol;
    }
    bool is_identity(double tol = 1e-14) const {
        return (s_ - Matrix::Identity(s_.rows(), s_.cols())).cwiseAbs().maxCoeff() <= tol;
    }

   private:
    Matrix s_;
};

struct Photon {
    std::size_t mode = 0;
    std::string label;
};

/// Photons with their input modes and mutual overlaps. Photons that share an
/// input mode must be orthogonal, so the input state stays normalized.
class PhotonEnsemble {
   public:
    PhotonEnsemble(std::vector<Photon> photons, GramMatrix gram)
        : photons_(std::move(photons)), gram_(std::move(gram)) {
        if (gram_.size() != photons_.size()) {
            throw std::invalid_argument("Gram matrix dimension differs from photon count");
        }
        for (std::size_t i = 0; i < photons_.size(); ++i) {
            for (std::size_t j = i + 1; j < photons_.size(); ++j) {
                const double overlap = std::abs(gram_(i, j));
                if (photons_[i].label == photons_[j].label && std::abs(overlap - 1.0) > kGramTolerance) {
                    throw std::invalid_argument("photons labelled '" + photons_[i].label +
                                                "' must have unit overlap");
                }
                if (photons_[i].mode == photons_[j].mode && overlap > kGramTolerance) {
                    throw std::invalid_argument("photons sharing input mode " +
                                                std::to_string(photons_[i].mode) +
                                                " must be orthogonal");
                }
            }
        }
    }

    /// One photon per listed mode, labelled by position.
    static PhotonEnsemble in_modes(const std::vector<std::size_t> &modes, GramMatrix gram) {
        std::vector<Photon> photons;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            photons.push_back({modes[i], "p" + std::to_string(i)});
        }
        return PhotonEnsemble(std::move(photons), std::move(gram));
    }

    const std::vector<Photon> &photons() const { return photons_; }
    const GramMatrix &gram() const { return gram_; }
    std::size_t size() const { return photons_.size(); }

    std::vector<std::size_t> input_modes() const {
        std::vector<std::size_t> r;
        for (const auto &p : photons_) r.push_back(p.mode);
        return r;
    }

   private:
    std::vector<Photon> photons_;
    GramMatrix gram_;
};

/// Probabilities over all n-photon patterns of m modes, in enumerate_patterns
/// order.
class OutputDistribution {
   public:
    OutputDistribution() = default;

    OutputDistribution(int n, std::size_t m, std::vector<double> probs)
        : n_(n), m_(m), patterns_(enumerate_patterns(n, m)), probs_(std::move(probs)) {
        if (probs_.size() != patterns_.size()) {
            throw std::invalid_argument("probability count differs from pattern count");
        }
        for (double &p : probs_) {
            if (p < -1e-12) throw std::invalid_argument("negative probability in distribution");
            if (p < 0.0) p = 0.0;
        }
        const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("distribution does not sum to 1 (sum " + std::to_string(total) + ")");
        }
    }

    int photons() const { return n_; }
    std::size_t modes() const { return m_; }
    std::size_t size() const { return probs_.size(); }
    const std::vector<OccupationPattern> &patterns() const { return patterns_; }
    const std::vector<double> &probabilities() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[i]; }

    std::size_t index_of(const OccupationPattern &p) const {
        auto it = std::find(patterns_.begin(), patterns_.end(), p);
        if (it == patterns_.end()) throw std::out_of_range("pattern " + p.str() + " not in distribution");
        return static_cast<std::size_t>(it - patterns_.begin());
    }
    double probability(const OccupationPattern &p) const { return probs_[index_of(p)]; }
    double probability(std::vector<int> counts) const {
        return probability(OccupationPattern(std::move(counts)));
    }

   private:
    int n_ = 0;
    std::size_t m_ = 0;
    std::vector<OccupationPattern> patterns_;
    std::vector<double> probs_;
};

/// Matrix permanent by Ryser's inclusion-exclusion formula, O(2^n n^2).
inline cplx permanent(const Matrix &a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("permanent needs a square matrix");
    const int n = static_cast<int>(a.rows());
    if (n == 0) return 1.0;
    if (n > 30) throw std::invalid_argument("permanent size too large");
    cplx total = 0.0;
    const std::uint64_t subsets = std::uint64_t{1} << n;
    for (std::uint64_t mask = 1; mask < subsets; ++mask) {
        cplx prod = 1.0;
        for (int i = 0; i < n; ++i) {
            cplx row = 0.0;
            for (int j = 0; j < n; ++j) {
                if (mask & (std::uint64_t{1} << j)) row += a(i, j);
            }
            prod *= row;
        }
        const int bits = std::popcount(mask);
        total += ((n - bits) % 2 == 0) ? prod : -prod;
    }
    return total;
}

namespace detail {

inline void check_inputs(const CircuitUnitary &u, const PhotonEnsemble &ens) {
    for (const auto &p : ens.photons()) {
        if (p.mode >= u.modes()) {
            throw std::invalid_argument("photon input mode " + std::to_string(p.mode) + " outside circuit");
        }
    }
}

/// A(j, a) = U(d_j, r_a): amplitude for photon a to reach the j-th output slot.
inline Matrix transfer_submatrix(const CircuitUnitary &u, const std::vector<std::size_t> &outs,
                                 const std::vector<std::size_t> &ins) {
    const auto n = static_cast<Eigen::Index>(ins.size());
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            a(j, k) = u(outs[static_cast<std::size_t>(j)], ins[static_cast<std::size_t>(k)]);
        }
    }
    return a;
}

inline double real_probability(cplx value) {
    if (std::abs(value.imag()) > 1e-10) {
        throw std::runtime_error("probability has imaginary residue " + std::to_string(value.imag()));
    }
    return value.real();
}

}  // namespace detail

/// Output distribution for partially distinguishable photons:
///
///   P(t) = 1/prod t_k! * sum_{sigma,rho} prod_j S_{sigma(j) rho(j)}
///            U_{d_j, r_sigma(j)} conj(U_{d_j, r_rho(j)})
///
/// where d is the canonical mode assignment of t and r the photons' input
/// modes. The fully indistinguishable and fully distinguishable limits go
/// through permanents instead of the double permutation sum.
inline OutputDistribution distribution(const CircuitUnitary &u, const PhotonEnsemble &ens) {
    detail::check_inputs(u, ens);
    const std::size_t n = ens.size();
    const std::size_t m = u.modes();
    const auto ins = ens.input_modes();
    const Matrix &s = ens.gram().matrix();
    const bool bosonic = ens.gram().is_all_ones();
    const bool classical = ens.gram().is_identity();

    const auto patterns = enumerate_patterns(static_cast<int>(n), m);
    std::vector<double> probs;
    probs.reserve(patterns.size());

    std::vector<std::size_t> sigma(n);
    std::vector<std::size_t> rho(n);
    for (const auto &t : patterns) {
        const auto outs = ModeAssignment::canonical(t).modes;
        const Matrix a = detail::transfer_submatrix(u, outs, ins);
        const double norm = static_cast<double>(pattern_multiplicity_factor(t));
        if (bosonic) {
            probs.push_back(std::norm(permanent(a)) / norm);
            continue;
        }
        if (classical) {
            const Matrix w = a.cwiseAbs2().cast<cplx>();
            probs.push_back(detail::real_probability(permanent(w)) / norm);
            continue;
        }
        cplx total = 0.0;
        std::iota(sigma.begin(), sigma.end(), std::size_t{0});
        do {
            std::iota(rho.begin(), rho.end(), std::size_t{0});
            do {
                cplx term = 1.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const auto sj = static_cast<Eigen::Index>(sigma[j]);
                    const auto rj = static_cast<Eigen::Index>(rho[j]);
                    const auto jj = static_cast<Eigen::Index>(j);
                    term *= s(sj, rj) * a(jj, sj) * std::conj(a(jj, rj));
                }
                total += term;
            } while (std::next_permutation(rho.begin(), rho.end()));
        } while (std::next_permutation(sigma.begin(), sigma.end()));
        probs.push_back(detail::real_probability(total) / norm);
    }
    return OutputDistribution(static_cast<int>(n), m, std::move(probs));
}

/// Lower-triangular L with L L^dagger = S, allowing rank-deficient S (zero
/// pivots leave their column empty).
inline Matrix semidefinite_cholesky(const Matrix &s, double tol = 1e-12) {
    const Eigen::Index n = s.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        cplx d = s(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * std::conj(l(j, k));
        if (d.real() <= tol) continue;
        const double pivot = std::sqrt(d.real());
        l(j, j) = pivot;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            cplx v = s(i, j);
            for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * std::conj(l(j, k));
            l(i, j) = v / pivot;
        }
    }
    if ((l * l.adjoint() - s).cwiseAbs().maxCoeff() > 1e-9) {
        throw std::invalid_argument("Gram matrix is not positive semidefinite");
    }
    return l;
}

/// Brute-force reference for distribution(). Photon j is a single excitation
/// of (spatial mode r_j) x (internal vector = row j of L, S = L L^dagger).
/// The product of evolved creation operators is expanded over every ordered
/// tuple of composite modes, grouped into bosonic occupation patterns with
/// their factorial norms, and marginalized over internal indices.
inline OutputDistribution oracle_distribution(const CircuitUnitary &u, const PhotonEnsemble &ens) {
    detail::check_inputs(u, ens);
    const std::size_t n = ens.size();
    const std::size_t m = u.modes();
    const Matrix l = semidefinite_cholesky(ens.gram().matrix());

    // Composite mode c = spatial * n + internal.
    struct Branch {
        std::size_t composite;
        cplx amplitude;
    };
    std::vector<std::vector<Branch>> branches(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t r = ens.photons()[j].mode;
        for (std::size_t d = 0; d < m; ++d) {
            for (std::size_t k = 0; k < n; ++k) {
                const cplx amp = u(d, r) * l(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
                if (amp != cplx{0.0}) branches[j].push_back({d * n + k, amp});
            }
        }
    }

    std::map<std::vector<std::size_t>, cplx> coefficients;
    std::vector<std::size_t> tuple(n);
    std::vector<std::size_t> key(n);
    auto expand = [&](auto &&self, std::size_t j, cplx amp) -> void {
        if (j == n) {
            key = tuple;
            std::sort(key.begin(), key.end());
            coefficients[key] += amp;
            return;
        }
        for (const auto &b : branches[j]) {
            tuple[j] = b.composite;
            self(self, j + 1, amp * b.amplitude);
        }
    };
    expand(expand, 0, cplx{1.0});

    std::map<std::vector<int>, double> marginal;
    for (const auto &[composite, coeff] : coefficients) {
        std::vector<int> spatial(m, 0);
        double norm = 1.0;
        std::size_t run = 0;
        for (std::size_t i = 0; i < composite.size(); ++i) {
            ++spatial[composite[i] / n];
            run = (i > 0 && composite[i] == composite[i - 1]) ? run + 1 : 1;
            norm *= static_cast<double>(run);
        }
        marginal[spatial] += std::norm(coeff) * norm;
    }

    const auto patterns = enumerate_patterns(static_cast<int>(n), m);
    std::vector<double> probs;
    probs.reserve(patterns.size());
    for (const auto &t : patterns) {
        auto it = marginal.find(t.counts());
        probs.push_back(it == marginal.end() ? 0.0 : it->second);
    }
    return OutputDistribution(static_cast<int>(n), m, std::move(probs));
}

/// Pairwise indistinguishabilities M_ij (i < j, zero-based) to a real Gram
/// matrix with S_ij = sqrt(M_ij). Every pair must be present.
inline GramMatrix gram_from_pairwise(std::size_t n, const std::map<std::pair<std::size_t, std::size_t>, double> &overlaps) {
    const auto k = static_cast<Eigen::Index>(n);
    Matrix s = Matrix::Identity(k, k);
    std::size_t seen = 0;
    for (const auto &[pair, value] : overlaps) {
        auto [i, j] = pair;
        if (i > j) std::swap(i, j);
        if (i == j || j >= n) throw std::invalid_argument("invalid photon pair in overlaps");
        if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("indistinguishability must lie in [0, 1]");
        const double root = std::sqrt(value);
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = root;
        s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = root;
        ++seen;
    }
    if (seen != n * (n - 1) / 2) throw std::invalid_argument("overlaps must cover every photon pair exactly once");
    return GramMatrix(std::move(s));
}

/// g2 of a Poissonian laser admixture: g2 = chi (2 + chi) / (1 + chi)^2 with
/// chi = mu_laser / mu_qd.
inline double g2_from_chi(double chi) { return chi * (2.0 + chi) / ((1.0 + chi) * (1.0 + chi)); }

/// Non-negative inverse of g2_from_chi.
inline double chi_from_g2(double g2) {
    if (!(g2 >= 0.0 && g2 < 1.0)) throw std::invalid_argument("g2 must lie in [0, 1)");
    return 1.0 / std::sqrt(1.0 - g2) - 1.0;
}

struct SourceModel {
    double p1_qd = 0.07;
    double g2 = 0.071;
    double m_near = 0.90;
    double m_far = 0.88;

    void validate() const {
        if (!(p1_qd >= 0.0 && p1_qd <= 1.0)) throw std::invalid_argument("p1_qd must lie in [0, 1]");
        if (!(g2 >= 0.0 && g2 < 1.0)) throw std::invalid_argument("g2 must lie in [0, 1)");
        if (!(m_far >= 0.0 && m_far <= m_near && m_near <= 1.0)) {
            throw std::invalid_argument("need 0 <= m_far <= m_near <= 1");
        }
    }
};

/// Neighbouring photons (adjacent time bins) get m_near, all other pairs m_far.
inline GramMatrix gram_for_source(const SourceModel &src, std::size_t n) {
    src.validate();
    std::map<std::pair<std::size_t, std::size_t>, double> overlaps;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) overlaps[{i, j}] = (j == i + 1) ? src.m_near : src.m_far;
    }
    return gram_from_pairwise(n, overlaps);
}

struct MixtureTerm {
    double weight;  // renormalized over the retained n-photon inputs
    PhotonEnsemble ensemble;
};

/// Input states with exactly n photons when each of the n input modes holds a
/// QD photon with probability p1_qd and a residual laser photon with
/// p1_L = (g2 / 2) p1_qd. Retained: all-QD; one mode QD+laser with another
/// mode empty; one mode laser-only. Laser photons are orthogonal to every QD
/// photon. QD photon k (entering mode k) keeps row/column k of gram_qd.
inline std::vector<MixtureTerm> mixture_inputs(const SourceModel &src, const GramMatrix &gram_qd) {
    src.validate();
    const std::size_t n = gram_qd.size();
    const double p1 = src.p1_qd;
    const double pl = 0.5 * src.g2 * p1;
    const double p0 = 1.0 - p1 - pl - p1 * pl;
    if (p0 < 0.0) throw std::invalid_argument("source probabilities exceed 1");

    struct Raw {
        double weight;
        std::vector<std::size_t> qd;  // QD photons, identified by their input mode
        std::optional<std::size_t> laser;
    };
    std::vector<Raw> raw;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    raw.push_back({std::pow(p1, static_cast<double>(n)), all, std::nullopt});
    if (pl > 0.0 && n >= 2) {
        for (std::size_t doubled = 0; doubled < n; ++doubled) {
            for (std::size_t empty = 0; empty < n; ++empty) {
                if (empty == doubled) continue;
                std::vector<std::size_t> qd;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != empty) qd.push_back(k);
                }
                raw.push_back({p0 * std::pow(p1, static_cast<double>(n - 1)) * pl, qd, doubled});
            }
        }
        for (std::size_t swapped = 0; swapped < n; ++swapped) {
            std::vector<std::size_t> qd;
            for (std::size_t k = 0; k < n; ++k) {
                if (k != swapped) qd.push_back(k);
            }
            raw.push_back({std::pow(p1, static_cast<double>(n - 1)) * pl, qd, swapped});
        }
    }

    double total = 0.0;
    for (const auto &r : raw) total += r.weight;
    if (!(total > 0.0)) throw std::invalid_argument("source produces no n-photon input");

    std::vector<MixtureTerm> terms;
    for (const auto &r : raw) {
        std::vector<Photon> photons;
        for (std::size_t k : r.qd) photons.push_back({k, "qd" + std::to_string(k)});
        if (r.laser) photons.push_back({*r.laser, "laser"});
        const auto size = static_cast<Eigen::Index>(photons.size());
        Matrix s = Matrix::Identity(size, size);
        for (std::size_t a = 0; a < r.qd.size(); ++a) {
            for (std::size_t b = 0; b < r.qd.size(); ++b) {
                s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gram_qd(r.qd[a], r.qd[b]);
            }
        }
        terms.push_back({r.weight / total, PhotonEnsemble(std::move(photons), GramMatrix(std::move(s)))});
    }
    return terms;
}

/// Output distribution of the QD + laser input mixture, conditioned on
/// exactly n = gram_qd.size() photons.
inline OutputDistribution mixture_distribution(const CircuitUnitary &u, const SourceModel &src,
                                               const GramMatrix &gram_qd) {
    if (gram_qd.size() > u.modes()) throw std::invalid_argument("more QD photons than circuit modes");
    const auto terms = mixture_inputs(src, gram_qd);
    const std::size_t n = gram_qd.size();
    std::vector<double> probs(enumerate_patterns(static_cast<int>(n), u.modes()).size(), 0.0);
    for (const auto &term : terms) {
        const auto d = distribution(u, term.ensemble);
        for (std::size_t i = 0; i < probs.size(); ++i) probs[i] += term.weight * d[i];
    }
    return OutputDistribution(static_cast<int>(n), u.modes(), std::move(probs));
}

}  // namespace tritter
