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

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "qlgf/errors.hpp"

namespace qlgf {

/// CODATA-2018 reference values, SI units.
namespace constants {
inline constexpr double hbar = 1.054571817e-34;             // J s
inline constexpr double epsilon0 = 8.8541878128e-12;        // F/m
inline constexpr double k_boltzmann = 1.380649e-23;         // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double proton_mass = 1.67262192369e-27;    // kg
inline constexpr double electron_mass = 9.1093837015e-31;   // kg
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double bohr_magneton = 9.2740100783e-24;   // J/T
inline constexpr double proton_g = 5.5856946893;
inline constexpr double pi = std::numbers::pi;

// 9Be atomic mass (AME2016) and the 2S1/2 electronic g_J of 9Be+.
inline constexpr double be9_atomic_mass_u = 9.012183065;
inline constexpr double be9_ion_g_j = 2.00226206;
}  // namespace constants

/// Immutable particle record. The spin magnetic moment and g-factor are tied
/// by mu = g |q| hbar / (4 m); either may be the primary input.
class Species {
   public:
    static Species from_g(std::string name, double charge, double mass, double g_factor) {
        check(charge, mass);
        const double mu = g_factor * std::abs(charge) * constants::hbar / (4.0 * mass);
        return Species(std::move(name), charge, mass, g_factor, mu);
    }

    /// For species whose transition moment is measured rather than derived
    /// (e.g. the 9Be+ electron spin), the g-factor becomes the effective value
    /// referenced to the ion's own cyclotron frequency.
    static Species from_moment(std::string name, double charge, double mass, double spin_moment) {
        check(charge, mass);
        const double g = 4.0 * mass * spin_moment / (std::abs(charge) * constants::hbar);
        return Species(std::move(name), charge, mass, g, spin_moment);
    }

    const std::string &name() const noexcept { return name_; }
    double charge() const noexcept { return charge_; }
    double mass() const noexcept { return mass_; }
    double g_factor() const noexcept { return g_; }
    double spin_moment() const noexcept { return mu_; }
    double charge_to_mass() const noexcept { return std::abs(charge_) / mass_; }

    friend bool operator==(const Species &, const Species &) = default;

   private:
    Species(std::string name, double q, double m, double g, double mu)
        : name_(std::move(name)), charge_(q), mass_(m), g_(g), mu_(mu) {}

    static void check(double charge, double mass) {
        if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("species mass must be positive");
        if (charge == 0.0 || !std::isfinite(charge)) throw DomainError("species charge must be non-zero");
    }

    std::string name_;
    double charge_;
    double mass_;
    double g_;
    double mu_;
};

namespace species {

inline Species proton() {
    return Species::from_g("proton", constants::elementary_charge, constants::proton_mass, constants::proton_g);
}

/// Same |q|, m and g as the proton (CPT), negative charge.
inline Species antiproton() {
    return Species::from_g("antiproton", -constants::elementary_charge, constants::proton_mass, constants::proton_g);
}

inline double be9_ion_mass() {
    return constants::be9_atomic_mass_u * constants::atomic_mass_unit - constants::electron_mass;
}

/// Electron-spin moment of the 2S1/2 ground state; overridable from config.
inline double be9_default_spin_moment() { return 0.5 * constants::be9_ion_g_j * constants::bohr_magneton; }

inline Species beryllium9_ion(double spin_moment = be9_default_spin_moment()) {
    return Species::from_moment("be9", constants::elementary_charge, be9_ion_mass(), spin_moment);
}

}  // namespace species

namespace detail {
inline void require_positive_field(double B) {
    if (!(B > 0.0) || !std::isfinite(B)) throw DomainError("magnetic field must be positive, got " + std::to_string(B));
}
}  // namespace detail

/// omega_L = (g/2)(|q|/m) B, rad/s.
inline double larmor_frequency(const Species &s, double B) {
    detail::require_positive_field(B);
    return 0.5 * s.g_factor() * s.charge_to_mass() * B;
}

/// omega_C = (|q|/m) B, rad/s.
inline double free_cyclotron_frequency(const Species &s, double B) {
    detail::require_positive_field(B);
    return s.charge_to_mass() * B;
}

inline double g_from_frequencies(double omega_larmor, double omega_cyclotron) {
    if (!(omega_larmor > 0.0) || !(omega_cyclotron > 0.0))
        throw DomainError("g_from_frequencies needs positive frequencies");
    return 2.0 * omega_larmor / omega_cyclotron;
}

}  // namespace qlgf
