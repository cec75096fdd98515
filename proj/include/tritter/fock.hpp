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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tritter {

/// Photon counts per mode, e.g. |2,1,0> is {2, 1, 0}.
class OccupationPattern {
   public:
    OccupationPattern() = default;

    explicit OccupationPattern(std::vector<int> counts) : counts_(std::move(counts)) {
        if (counts_.empty()) {
            throw std::invalid_argument("OccupationPattern needs at least one mode");
        }
        for (int c : counts_) {
            if (c < 0) {
                throw std::invalid_argument("OccupationPattern counts must be non-negative");
            }
            n_ += c;
        }
    }

    const std::vector<int> &counts() const { return counts_; }
    int operator[](std::size_t k) const { return counts_[k]; }
    std::size_t modes() const { return counts_.size(); }
    int photons() const { return n_; }

    /// Formats as "2:1:0"; parse_pattern() is the inverse.
    std::string str() const {
        std::string s;
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            if (k) s += ':';
            s += std::to_string(counts_[k]);
        }
        return s;
    }

    /// Ket notation for reports: |2,1,0>.
    std::string ket() const {
        std::string s = "|";
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            if (k) s += ',';
            s += std::to_string(counts_[k]);
        }
        return s + ">";
    }

    friend bool operator==(const OccupationPattern &a, const OccupationPattern &b) {
        return a.counts_ == b.counts_;
    }
    friend auto operator<=>(const OccupationPattern &a, const OccupationPattern &b) {
        return a.counts_ <=> b.counts_;
    }

   private:
    std::vector<int> counts_;
    int n_ = 0;
};

inline OccupationPattern parse_pattern(const std::string &text) {
    std::vector<int> counts;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = text.find(':', pos);
        std::string tok = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (tok.empty()) {
            throw std::invalid_argument("malformed pattern '" + text + "'");
        }
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) {
            throw std::invalid_argument("malformed pattern '" + text + "'");
        }
        counts.push_back(v);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return OccupationPattern(std::move(counts));
}

/// One mode index per photon. The canonical form lists modes in
/// non-decreasing order, so |2,0,1> becomes {0, 0, 2}.
struct ModeAssignment {
    std::vector<std::size_t> modes;

    static ModeAssignment canonical(const OccupationPattern &p) {
        ModeAssignment a;
        a.modes.reserve(static_cast<std::size_t>(p.photons()));
        for (std::size_t k = 0; k < p.modes(); ++k) {
            for (int c = 0; c < p[k]; ++c) a.modes.push_back(k);
        }
        return a;
    }

    OccupationPattern to_pattern(std::size_t num_modes) const {
        std::vector<int> counts(num_modes, 0);
        for (std::size_t k : modes) {
            if (k >= num_modes) {
                throw std::out_of_range("mode index " + std::to_string(k) + " outside " +
                                        std::to_string(num_modes) + " modes");
            }
            ++counts[k];
        }
        return OccupationPattern(std::move(counts));
    }
};

namespace detail {
inline void enumerate_into(int remaining, std::size_t mode, std::vector<int> &scratch,
                           std::vector<OccupationPattern> &out) {
    if (mode + 1 == scratch.size()) {
        scratch[mode] = remaining;
        out.emplace_back(scratch);
        return;
    }
    for (int c = remaining; c >= 0; --c) {
        scratch[mode] = c;
        enumerate_into(remaining - c, mode + 1, scratch, out);
    }
}
}  // namespace detail

/// All n-photon patterns over m modes, ordered with the first mode's count
/// descending, then the second's, and so on: (3,0,0), (2,1,0), (2,0,1), ...
inline std::vector<OccupationPattern> enumerate_patterns(int n, std::size_t m) {
    if (n < 0) throw std::invalid_argument("photon number must be non-negative");
    if (m < 1) throw std::invalid_argument("need at least one mode");
    std::vector<OccupationPattern> out;
    std::vector<int> scratch(m, 0);
    detail::enumerate_into(n, 0, scratch, out);
    return out;
}

inline std::uint64_t factorial(int k) {
    std::uint64_t f = 1;
    for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

/// prod_k counts[k]!
inline std::uint64_t pattern_multiplicity_factor(const OccupationPattern &p) {
    std::uint64_t f = 1;
    for (int c : p.counts()) f *= factorial(c);
    return f;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace tritter
