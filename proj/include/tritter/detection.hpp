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
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "tritter/fock.hpp"
#include "tritter/interference.hpp"

namespace tritter {

/// One output mode split over binary detectors by cascaded couplers.
struct DetectorTree {
    std::vector<double> split_probs{0.5, 0.25, 0.25};
    double eta = 0.30;
    double dark_rate = 0.0;       // counts per second per detector
    double gate_window = 2e-9;    // coincidence window, seconds

    std::size_t detectors() const { return split_probs.size(); }
    double dark_click_probability() const { return -std::expm1(-dark_rate * gate_window); }

    void validate() const {
        if (split_probs.empty()) throw std::invalid_argument("detector tree needs at least one detector");
        double total = 0.0;
        for (double q : split_probs) {
            if (!(q >= 0.0)) throw std::invalid_argument("split probabilities must be non-negative");
            total += q;
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split probabilities must sum to 1");
        if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("detector efficiency must lie in [0, 1]");
        if (!(dark_rate >= 0.0) || !(gate_window >= 0.0)) throw std::invalid_argument("dark rate and gate must be non-negative");
    }
};

/// Probability that k photons in one mode give exactly `clicks` clicks. Each
/// photon picks a detector from split_probs and is registered with
/// probability eta; a detector clicks once however many photons it
/// registers, and idle detectors fire dark counts independently.
inline double click_probability(int k, const DetectorTree &tree, int clicks) {
    tree.validate();
    if (k < 0) throw std::invalid_argument("photon number must be non-negative");
    const std::size_t d = tree.detectors();
    if (clicks < 0 || static_cast<std::size_t>(clicks) > d) return 0.0;
    const double dark = tree.dark_click_probability();

    // Outcome index d means the photon was not registered.
    std::vector<double> outcome(d + 1);
    for (std::size_t i = 0; i < d; ++i) outcome[i] = tree.split_probs[i] * tree.eta;
    outcome[d] = 1.0 - tree.eta;

    std::vector<double> by_hits(d + 1, 0.0);
    std::vector<std::size_t> route(static_cast<std::size_t>(k), 0);
    std::vector<char> hit(d);
    while (true) {
        double p = 1.0;
        std::fill(hit.begin(), hit.end(), 0);
        for (std::size_t r : route) {
            p *= outcome[r];
            if (r < d) hit[r] = 1;
        }
        by_hits[static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1))] += p;
        std::size_t pos = 0;
        while (pos < route.size() && ++route[pos] == d + 1) route[pos++] = 0;
        if (pos == route.size()) break;
    }

    double total = 0.0;
    for (std::size_t h = 0; h <= d; ++h) {
        if (by_hits[h] == 0.0 || static_cast<std::size_t>(clicks) < h) continue;
        const std::size_t idle = d - h;
        const std::size_t extra = static_cast<std::size_t>(clicks) - h;
        if (extra > idle) continue;
        const double darks = static_cast<double>(binomial(idle, extra)) * std::pow(dark, static_cast<double>(extra)) *
                             std::pow(1.0 - dark, static_cast<double>(idle - extra));
        total += by_hits[h] * darks;
    }
    return total;
}

/// Recorded n-click events, keyed by clicks per output mode.
struct ClickPatternCounts {
    int photons = 0;
    std::size_t modes = 0;
    std::map<OccupationPattern, std::uint64_t> counts;
    std::uint64_t total = 0;       // recorded events (exactly `photons` clicks)
    std::uint64_t generated = 0;   // events sent through the detectors
    double integration_time = 0.0; // seconds, informational

    void add(const OccupationPattern &p, std::uint64_t c = 1) {
        counts[p] += c;
        total += c;
    }
    std::uint64_t count(const OccupationPattern &p) const {
        auto it = counts.find(p);
        return it == counts.end() ? 0 : it->second;
    }
    /// Shard merge.
    void merge(const ClickPatternCounts &other) {
        if (other.photons != photons || other.modes != modes) throw std::invalid_argument("cannot merge unlike counts");
        for (const auto &[p, c] : other.counts) add(p, c);
        generated += other.generated;
        integration_time += other.integration_time;
    }
};

namespace detail {

inline void check_trees(const std::vector<DetectorTree> &trees, std::size_t m) {
    if (trees.size() != m) throw std::invalid_argument("need one detector tree per output mode");
    for (const auto &t : trees) t.validate();
}

class ClickSampler {
   public:
    ClickSampler(const OutputDistribution &dist, const std::vector<DetectorTree> &trees, std::uint64_t seed)
        : dist_(dist), trees_(trees), rng_(seed), pick_(dist.probabilities().begin(), dist.probabilities().end()) {
        check_trees(trees_, dist.modes());
        for (const auto &t : trees_) {
            std::vector<double> cumulative(t.split_probs.size());
            std::partial_sum(t.split_probs.begin(), t.split_probs.end(), cumulative.begin());
            cumulative_.push_back(std::move(cumulative));
        }
    }

    /// Returns true and fills `clicks` when the event gives exactly n clicks.
    bool next(std::vector<int> &clicks) {
        const auto &pattern = dist_.patterns()[pick_(rng_)];
        int total = 0;
        for (std::size_t mode = 0; mode < pattern.modes(); ++mode) {
            const auto &tree = trees_[mode];
            hit_.assign(tree.detectors(), 0);
            for (int photon = 0; photon < pattern[mode]; ++photon) {
                if (uniform_(rng_) >= tree.eta) continue;
                const double u = uniform_(rng_);
                const auto &cum = cumulative_[mode];
                auto it = std::upper_bound(cum.begin(), cum.end(), u);
                const auto det = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
                hit_[det] = 1;
            }
            const double dark = tree.dark_click_probability();
            if (dark > 0.0) {
                for (auto &h : hit_) {
                    if (!h && uniform_(rng_) < dark) h = 1;
                }
            }
            clicks[mode] = static_cast<int>(std::count(hit_.begin(), hit_.end(), 1));
            total += clicks[mode];
        }
        return total == dist_.photons();
    }

   private:
    const OutputDistribution &dist_;
    const std::vector<DetectorTree> &trees_;
    std::mt19937_64 rng_;
    std::discrete_distribution<std::size_t> pick_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::vector<std::vector<double>> cumulative_;
    std::vector<char> hit_;
};

}  // namespace detail

/// Monte Carlo of n_events output events; keeps only events with exactly n
/// clicks. Deterministic for a given seed.
inline ClickPatternCounts simulate_counts(const OutputDistribution &dist, const std::vector<DetectorTree> &trees,
                                          std::uint64_t n_events, std::uint64_t seed) {
    if (n_events == 0) throw std::invalid_argument("need at least one event");
    detail::ClickSampler sampler(dist, trees, seed);
    ClickPatternCounts out{dist.photons(), dist.modes(), {}, 0, 0, 0.0};
    std::vector<int> clicks(dist.modes());
    for (std::uint64_t e = 0; e < n_events; ++e) {
        if (sampler.next(clicks)) out.add(OccupationPattern(clicks));
    }
    out.generated = n_events;
    return out;
}

/// Runs until `recorded` n-click events have been kept.
inline ClickPatternCounts simulate_recorded(const OutputDistribution &dist, const std::vector<DetectorTree> &trees,
                                            std::uint64_t recorded, std::uint64_t seed,
                                            std::uint64_t max_events = 1'000'000'000) {
    if (recorded == 0) throw std::invalid_argument("need at least one recorded event");
    detail::ClickSampler sampler(dist, trees, seed);
    ClickPatternCounts out{dist.photons(), dist.modes(), {}, 0, 0, 0.0};
    std::vector<int> clicks(dist.modes());
    while (out.total < recorded) {
        if (out.generated == max_events) throw std::runtime_error("event budget exhausted before enough clicks");
        ++out.generated;
        if (sampler.next(clicks)) out.add(OccupationPattern(clicks));
    }
    return out;
}

/// R(c, t) = prod_k click_probability(t_k, tree_k, c_k): probability that
/// true pattern t (columns, enumerate_patterns order) yields click pattern c
/// (rows, same order).
inline Eigen::MatrixXd response_matrix(int n, const std::vector<DetectorTree> &trees) {
    const std::size_t m = trees.size();
    detail::check_trees(trees, m);
    const auto patterns = enumerate_patterns(n, m);
    const int kmax = n;
    // table[mode][k][c]
    std::vector<std::vector<std::vector<double>>> table(m);
    for (std::size_t mode = 0; mode < m; ++mode) {
        table[mode].resize(static_cast<std::size_t>(kmax) + 1);
        for (int k = 0; k <= kmax; ++k) {
            for (int c = 0; c <= kmax; ++c) table[mode][static_cast<std::size_t>(k)].push_back(click_probability(k, trees[mode], c));
        }
    }
    const auto size = static_cast<Eigen::Index>(patterns.size());
    Eigen::MatrixXd r(size, size);
    for (Eigen::Index row = 0; row < size; ++row) {
        for (Eigen::Index col = 0; col < size; ++col) {
            double p = 1.0;
            const auto &c = patterns[static_cast<std::size_t>(row)];
            const auto &t = patterns[static_cast<std::size_t>(col)];
            for (std::size_t mode = 0; mode < m; ++mode) {
                p *= table[mode][static_cast<std::size_t>(t[mode])][static_cast<std::size_t>(c[mode])];
            }
            r(row, col) = p;
        }
    }
    return r;
}

/// Non-negative least squares, min |A x - b| subject to x >= 0
/// (Lawson-Hanson active set).
inline Eigen::VectorXd nnls(const Eigen::MatrixXd &a, const Eigen::VectorXd &b, double tol = 1e-14) {
    const Eigen::Index n = a.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff());

    auto solve_passive = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        }
        Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
        Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(b);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = sol(static_cast<Eigen::Index>(k));
        return z;
    };

    for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer) {
        const Eigen::VectorXd w = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_w = tol * scale;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = 1;

        Eigen::VectorXd z = solve_passive();
        for (int inner = 0; inner < 3 * static_cast<int>(n) + 10; ++inner) {
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
            }
            if (feasible) break;
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    alpha = std::min(alpha, x(j) / (x(j) - z(j)));
                }
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
                    passive[static_cast<std::size_t>(j)] = 0;
                    x(j) = 0.0;
                }
            }
            z = solve_passive();
        }
        x = z;
    }
    return x.cwiseMax(0.0);
}

struct EstimatorOptions {
    std::size_t bootstrap_samples = 1000;
    std::uint64_t seed = 1;
};

struct DistributionEstimate {
    OutputDistribution corrected;       // efficiency-bias corrected
    std::vector<double> uncorrected;    // raw click-pattern fractions, same order
    std::vector<double> std_error;      // bootstrap standard deviation
    std::vector<double> lower;          // bootstrap 2.5 percentile
    std::vector<double> upper;          // bootstrap 97.5 percentile, or rule-of-three bound for empty bins
    std::size_t bootstrap_samples = 0;
};

namespace detail {

inline Eigen::MatrixXd checked_response(int n, const std::vector<DetectorTree> &trees) {
    Eigen::MatrixXd r = response_matrix(n, trees);
    for (Eigen::Index col = 0; col < r.cols(); ++col) {
        if (r.col(col).sum() <= 1e-15) {
            throw std::invalid_argument("response matrix is singular: some pattern can never be recorded");
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(r);
    lu.setThreshold(1e-12);
    if (lu.rank() < r.cols()) throw std::invalid_argument("response matrix is singular");
    return r;
}

inline std::vector<double> unfold(const Eigen::MatrixXd &r, const Eigen::VectorXd &fractions) {
    Eigen::VectorXd x = nnls(r, fractions);
    const double total = x.sum();
    if (!(total > 0.0)) throw std::runtime_error("estimator found no support");
    x /= total;
    return {x.data(), x.data() + x.size()};
}

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Unfolds recorded click patterns into output-pattern probabilities by
/// non-negative least squares on the response matrix, then normalizes.
/// Uncertainties come from a multinomial bootstrap of the recorded counts.
inline DistributionEstimate estimate_distribution(const ClickPatternCounts &counts, const std::vector<DetectorTree> &trees,
                                                  const EstimatorOptions &options = {}) {
    if (counts.total == 0) throw std::invalid_argument("no recorded events to estimate from");
    const int n = counts.photons;
    const std::size_t m = counts.modes;
    if (trees.size() != m) throw std::invalid_argument("need one detector tree per output mode");
    const Eigen::MatrixXd r = detail::checked_response(n, trees);
    const auto patterns = enumerate_patterns(n, m);
    const std::size_t size = patterns.size();
    const double total = static_cast<double>(counts.total);

    std::vector<std::uint64_t> observed(size);
    Eigen::VectorXd fractions(static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i) {
        observed[i] = counts.count(patterns[i]);
        fractions(static_cast<Eigen::Index>(i)) = static_cast<double>(observed[i]) / total;
    }

    std::vector<double> point = detail::unfold(r, fractions);

    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < size; ++i) {
        if (observed[i] > 0) last_nonzero = i;
    }

    std::vector<std::vector<double>> samples(size);
    std::mt19937_64 rng(options.seed);
    for (std::size_t b = 0; b < options.bootstrap_samples; ++b) {
        Eigen::VectorXd resampled(static_cast<Eigen::Index>(size));
        std::uint64_t left = counts.total;
        double mass = 1.0;
        for (std::size_t i = 0; i < size; ++i) {
            const double p = fractions(static_cast<Eigen::Index>(i));
            std::uint64_t draw = 0;
            if (i == last_nonzero) {
                draw = left;
            } else if (left > 0 && p > 0.0) {
                std::binomial_distribution<std::uint64_t> binom(left, std::clamp(p / mass, 0.0, 1.0));
                draw = binom(rng);
            }
            resampled(static_cast<Eigen::Index>(i)) = static_cast<double>(draw) / total;
            left -= draw;
            mass -= p;
        }
        const auto est = detail::unfold(r, resampled);
        for (std::size_t i = 0; i < size; ++i) samples[i].push_back(est[i]);
    }

    DistributionEstimate out{OutputDistribution(n, m, point), {}, {}, {}, {}, options.bootstrap_samples};
    for (std::size_t i = 0; i < size; ++i) {
        out.uncorrected.push_back(fractions(static_cast<Eigen::Index>(i)));
        if (samples[i].empty()) {
            out.std_error.push_back(0.0);
            out.lower.push_back(point[i]);
            out.upper.push_back(point[i]);
            continue;
        }
        const double mean = std::accumulate(samples[i].begin(), samples[i].end(), 0.0) / static_cast<double>(samples[i].size());
        double var = 0.0;
        for (double s : samples[i]) var += (s - mean) * (s - mean);
        var /= static_cast<double>(std::max<std::size_t>(samples[i].size() - 1, 1));
        out.std_error.push_back(std::sqrt(var));
        out.lower.push_back(detail::quantile(samples[i], 0.025));
        out.upper.push_back(detail::quantile(samples[i], 0.975));
    }

    // The bootstrap cannot move mass into empty click patterns; bound those
    // bins by re-estimating with 3 events (95% Poisson bound) in the click
    // pattern that pattern t most often produces.
    for (std::size_t t = 0; t < size; ++t) {
        Eigen::Index best = 0;
        r.col(static_cast<Eigen::Index>(t)).maxCoeff(&best);
        if (observed[static_cast<std::size_t>(best)] != 0) continue;
        Eigen::VectorXd bumped = fractions;
        bumped(best) = 3.0 / total;
        const auto est = detail::unfold(r, bumped);
        out.upper[t] = std::max(out.upper[t], est[t]);
    }
    return out;
}

/// Relative recording efficiency of each true pattern (column sums of the
/// response matrix).
inline std::vector<double> pattern_efficiencies(int n, const std::vector<DetectorTree> &trees) {
    const Eigen::MatrixXd r = response_matrix(n, trees);
    std::vector<double> eff;
    for (Eigen::Index c = 0; c < r.cols(); ++c) eff.push_back(r.col(c).sum());
    return eff;
}

}  // namespace tritter
