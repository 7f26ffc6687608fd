// Copyright 2026 The qlgf Authors
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

#include "qlgf/species.hpp"

#include <random>

#include "gtest/gtest.h"

using namespace qlgf;

namespace {

// e / m_p from CODATA-2018, evaluated by hand.
constexpr double kProtonChargeToMass = 9.5788331560e7;

}  // namespace

TEST(species, builtins_satisfy_moment_relation) {
    for (const Species &s : {species::proton(), species::antiproton(), species::beryllium9_ion()}) {
        const double mu = s.g_factor() * std::abs(s.charge()) * constants::hbar / (4.0 * s.mass());
        EXPECT_NEAR(s.spin_moment() / mu, 1.0, 1e-12) << s.name();
        EXPECT_GT(s.mass(), 0.0);
        EXPECT_NE(s.charge(), 0.0);
        EXPECT_EQ(std::signbit(s.spin_moment()), std::signbit(s.g_factor()));
    }
}

TEST(species, antiproton_mirrors_proton) {
    const Species p = species::proton(), pbar = species::antiproton();
    EXPECT_EQ(p.mass(), pbar.mass());
    EXPECT_EQ(p.g_factor(), pbar.g_factor());
    EXPECT_EQ(p.charge(), -pbar.charge());
    EXPECT_EQ(larmor_frequency(p, 1.7), larmor_frequency(pbar, 1.7));
    EXPECT_GT(free_cyclotron_frequency(pbar, 1.7), 0.0);
}

TEST(species, beryllium_moment_is_an_input) {
    const Species be = species::beryllium9_ion(1e-23);
    EXPECT_EQ(be.spin_moment(), 1e-23);
    // omega_L = 2 mu B / hbar for a spin-1/2 moment.
    EXPECT_NEAR(larmor_frequency(be, 2.0) / (2.0 * 1e-23 * 2.0 / constants::hbar), 1.0, 1e-14);
}

TEST(species, invalid_species_rejected) {
    EXPECT_THROW(Species::from_g("x", 1.0, 0.0, 2.0), DomainError);
    EXPECT_THROW(Species::from_g("x", 1.0, -1.0, 2.0), DomainError);
    EXPECT_THROW(Species::from_g("x", 0.0, 1.0, 2.0), DomainError);
}

TEST(larmor_frequency, equals_cyclotron_for_g2) {
    const Species s = Species::from_g("g2", constants::elementary_charge, constants::proton_mass, 2.0);
    EXPECT_DOUBLE_EQ(larmor_frequency(s, 1.0), free_cyclotron_frequency(s, 1.0));
}

TEST(larmor_frequency, proton_one_tesla) {
    const double expected = 0.5 * constants::proton_g * kProtonChargeToMass;
    EXPECT_NEAR(larmor_frequency(species::proton(), 1.0), expected, 1e3);
}

TEST(larmor_frequency, linear_in_field) {
    const Species p = species::proton();
    EXPECT_NEAR(larmor_frequency(p, 0.5) / larmor_frequency(p, 1.0), 0.5, 1e-15);
}

TEST(larmor_frequency, rejects_non_positive_field) {
    EXPECT_THROW(larmor_frequency(species::proton(), 0.0), DomainError);
    EXPECT_THROW(larmor_frequency(species::proton(), -1.0), DomainError);
    EXPECT_THROW(free_cyclotron_frequency(species::proton(), 0.0), DomainError);
}

TEST(free_cyclotron_frequency, proton_one_tesla) {
    EXPECT_NEAR(free_cyclotron_frequency(species::proton(), 1.0), kProtonChargeToMass, 1e3);
}

TEST(free_cyclotron_frequency, linear_in_charge_and_field) {
    const Species p = species::proton();
    const Species p2 = Species::from_g("2q", 2.0 * p.charge(), p.mass(), p.g_factor());
    EXPECT_NEAR(free_cyclotron_frequency(p2, 1.0) / free_cyclotron_frequency(p, 1.0), 2.0, 1e-15);
    EXPECT_NEAR(free_cyclotron_frequency(p, 1.9) / free_cyclotron_frequency(p, 1.0), 1.9, 1e-15);
}

TEST(g_from_frequencies, basics) {
    EXPECT_EQ(g_from_frequencies(3.0e8, 3.0e8), 2.0);
    const double wc = free_cyclotron_frequency(species::proton(), 1.0);
    EXPECT_NEAR(g_from_frequencies(2.792847 * wc, wc), 5.5857, 1e-4);
    EXPECT_THROW(g_from_frequencies(0.0, 1.0), DomainError);
    EXPECT_THROW(g_from_frequencies(1.0, -1.0), DomainError);
}

TEST(g_from_frequencies, round_trip_property) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> field(0.1, 10.0);
    for (const Species &s : {species::proton(), species::antiproton(), species::beryllium9_ion()}) {
        for (int i = 0; i < 200; ++i) {
            const double B = field(rng);
            const double g = g_from_frequencies(larmor_frequency(s, B), free_cyclotron_frequency(s, B));
            EXPECT_NEAR(g / s.g_factor(), 1.0, 1e-14) << s.name() << " B=" << B;
        }
    }
}
