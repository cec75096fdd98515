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

#include "tritter/fock.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"

using namespace tritter;

TEST(Fock, ThreePhotonsInThreeModesGiveTenPatterns) {
    const auto p = enumerate_patterns(3, 3);
    ASSERT_EQ(p.size(), 10u);
    const std::vector<std::vector<int>> expected = {{3, 0, 0}, {2, 1, 0}, {2, 0, 1}, {1, 2, 0}, {1, 1, 1},
                                                    {1, 0, 2}, {0, 3, 0}, {0, 2, 1}, {0, 1, 2}, {0, 0, 3}};
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i].counts(), expected[i]);
}

TEST(Fock, VacuumIsSinglePattern) {
    const auto p = enumerate_patterns(0, 3);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].counts(), (std::vector<int>{0, 0, 0}));
}

TEST(Fock, TwoPhotonsInFourModesMatchesBruteForce) {
    const auto brute = oracle::brute_force_patterns(2, 4);
    const auto p = enumerate_patterns(2, 4);
    EXPECT_EQ(brute.size(), 10u);
    ASSERT_EQ(p.size(), brute.size());
    for (const auto &x : p) EXPECT_TRUE(brute.count(x.counts()));
}

TEST(Fock, EnumerationCountsDistinctnessAndSums) {
    for (int n = 0; n <= 5; ++n) {
        for (int m = 1; m <= 5; ++m) {
            const auto p = enumerate_patterns(n, static_cast<std::size_t>(m));
            EXPECT_EQ(p.size(), binomial(static_cast<std::uint64_t>(n + m - 1), static_cast<std::uint64_t>(n)));
            std::set<std::vector<int>> seen;
            for (const auto &x : p) {
                EXPECT_EQ(x.photons(), n);
                seen.insert(x.counts());
            }
            EXPECT_EQ(seen.size(), p.size());
            EXPECT_EQ(seen, oracle::brute_force_patterns(n, m));
            // Descending lexicographic order.
            for (std::size_t i = 1; i < p.size(); ++i) EXPECT_GT(p[i - 1], p[i]);
        }
    }
}

TEST(Fock, MultiplicityFactor) {
    EXPECT_EQ(pattern_multiplicity_factor(OccupationPattern({1, 1, 1})), 1u);
    EXPECT_EQ(pattern_multiplicity_factor(OccupationPattern({3, 0, 0})), 6u);
    EXPECT_EQ(pattern_multiplicity_factor(OccupationPattern({2, 1, 0})), 2u);
}

TEST(Fock, ModeAssignmentRoundTrip) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + rng() % 5;
        const int n = static_cast<int>(rng() % 6);
        const auto patterns = enumerate_patterns(n, m);
        const auto &p = patterns[rng() % patterns.size()];
        auto a = ModeAssignment::canonical(p);
        EXPECT_TRUE(std::is_sorted(a.modes.begin(), a.modes.end()));
        EXPECT_EQ(a.to_pattern(m), p);
        std::shuffle(a.modes.begin(), a.modes.end(), rng);
        EXPECT_EQ(a.to_pattern(m), p);
    }
}

TEST(Fock, InvalidInputsThrow) {
    EXPECT_THROW(OccupationPattern({1, -1}), std::invalid_argument);
    EXPECT_THROW(OccupationPattern(std::vector<int>{}), std::invalid_argument);
    EXPECT_THROW(enumerate_patterns(-1, 3), std::invalid_argument);
    EXPECT_THROW(enumerate_patterns(2, 0), std::invalid_argument);
    EXPECT_THROW((ModeAssignment{{0, 3}}.to_pattern(3)), std::out_of_range);
}

TEST(Fock, PatternTextRoundTrip) {
    for (const auto &p : enumerate_patterns(3, 4)) EXPECT_EQ(parse_pattern(p.str()), p);
    EXPECT_EQ(OccupationPattern({2, 1, 0}).ket(), "|2,1,0>");
    EXPECT_THROW(parse_pattern("1::2"), std::invalid_argument);
    EXPECT_THROW(parse_pattern("1:x"), std::invalid_argument);
}
