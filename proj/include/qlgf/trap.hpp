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

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qlgf/errors.hpp"
#include "qlgf/species.hpp"

namespace qlgf {

/// One trap region. The electrostatic potential in trap coordinates is
///
///   Phi = V0 c2 / d^2 * (z^2 - (x^2 + y^2)/2 - ellipticity (x^2 - y^2)/2)
///
/// and the magnetic field is B0 along an axis tilted by `tilt` from z in the
/// x-z plane. B2 is the axial curvature of the magnetic bottle.
struct TrapZone {
    double B0 = 1.0;           // T
    double B2 = 0.0;           // T/m^2
    double V0 = 1.0;           // V
    double d_char = 1e-3;      // m
    double c2 = 0.5;
    double tilt = 0.0;         // rad
    double ellipticity = 0.0;

    void validate() const {
        if (!(B0 > 0.0)) throw DomainError("trap zone: B0 must be positive");
        if (!(d_char > 0.0)) throw DomainError("trap zone: d_char must be positive");
        if (!(V0 > 0.0)) throw DomainError("trap zone: V0 must be positive");
        if (!(c2 > 0.0)) throw DomainError("trap zone: c2 must be positive");
        if (!(std::abs(tilt) < 0.1)) throw DomainError("trap zone: |tilt| must be < 0.1 rad");
        if (!(std::abs(ellipticity) < 0.5)) throw DomainError("trap zone: |ellipticity| must be < 0.5");
    }

    friend bool operator==(const TrapZone &, const TrapZone &) = default;
};

struct ModeFrequencies {
    double omega_plus = 0.0;
    double omega_minus = 0.0;
    double omega_z = 0.0;
    double omega_c_free = 0.0;

    double sum_of_squares() const {
        return omega_plus * omega_plus + omega_minus * omega_minus + omega_z * omega_z;
    }
    /// Free cyclotron frequency recovered from the three eigenfrequencies.
    double invariance_cyclotron() const { return std::sqrt(sum_of_squares()); }
    /// |sum omega_i^2 - omega_c^2| / omega_c^2
    double invariance_residual() const {
        const double wc2 = omega_c_free * omega_c_free;
        return std::abs(sum_of_squares() - wc2) / wc2;
    }
};

/// omega_z^2 = 2 |q| V0 c2 / (m d^2). With c2 = 1/2 this is the usual qV0/(md^2).
inline double axial_frequency_squared(const Species &s, const TrapZone &z) {
    return 2.0 * s.charge_to_mass() * z.V0 * z.c2 / (z.d_char * z.d_char);
}

inline ModeFrequencies ideal_modes(const Species &s, const TrapZone &z) {
    z.validate();
    if (z.tilt != 0.0 || z.ellipticity != 0.0)
        throw DomainError("ideal_modes requires tilt = 0 and ellipticity = 0; use perturbed_modes");
    const double wc = free_cyclotron_frequency(s, z.B0);
    const double wz2 = axial_frequency_squared(s, z);
    const double disc = 0.25 * wc * wc - 0.5 * wz2;
    // Marginal traps are rejected: downstream formulas divide by omega_+ - omega_-.
    if (!(disc > 1e-12 * wc * wc))
        throw UnstableTrapError("unstable trap: omega_c^2 <= 2 omega_z^2", wc, std::sqrt(wz2));
    ModeFrequencies m;
    m.omega_c_free = wc;
    m.omega_z = std::sqrt(wz2);
    m.omega_plus = 0.5 * wc + std::sqrt(disc);
    m.omega_minus = 0.5 * wz2 / m.omega_plus;  // omega_+ omega_- = omega_z^2 / 2
    return m;
}

namespace detail {

/// Coefficients of the secular cubic f(u) = u^3 + a2 u^2 + a1 u + a0 whose
/// roots are u = lambda^2 = -(omega/omega_c)^2, for the scaled potential
/// curvatures `k` (units of omega_c^2) and unit field direction `b`.
inline std::array<double, 3> secular_cubic(const std::array<double, 3> &k, const std::array<double, 3> &b) {
    const double a2 = k[0] + k[1] + k[2] + 1.0;
    const double a1 = k[0] * k[1] + k[0] * k[2] + k[1] * k[2] + b[0] * b[0] * k[0] + b[1] * b[1] * k[1] +
                      b[2] * b[2] * k[2];
    const double a0 = k[0] * k[1] * k[2];
    return {a0, a1, a2};
}

}  // namespace detail

/// Eigenfrequencies of the linearized motion in a tilted, elliptic trap. The
/// 6x6 first-order system is solved with a dense eigen-solver and each root
/// is then polished with Newton steps on the secular cubic.
inline ModeFrequencies perturbed_modes(const Species &s, const TrapZone &z) {
    z.validate();
    const double wc = free_cyclotron_frequency(s, z.B0);
    const double wz2 = axial_frequency_squared(s, z);
    const double zeta2 = wz2 / (wc * wc);

    // Everything below is in units of omega_c.
    const std::array<double, 3> k = {-0.5 * (1.0 + z.ellipticity) * zeta2, -0.5 * (1.0 - z.ellipticity) * zeta2,
                                     zeta2};
    const std::array<double, 3> b = {std::sin(z.tilt), 0.0, std::cos(z.tilt)};
    const double sign = s.charge() > 0.0 ? 1.0 : -1.0;

    Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
    A.topRightCorner<3, 3>().setIdentity();
    for (int i = 0; i < 3; ++i) A(3 + i, i) = -k[static_cast<std::size_t>(i)];
    // dv/dt = sign * v x b
    Eigen::Matrix3d cross;
    cross << 0.0, b[2], -b[1],
             -b[2], 0.0, b[0],
             b[1], -b[0], 0.0;
    A.bottomRightCorner<3, 3>() = sign * cross;

    Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> solver(A, false);
    if (solver.info() != Eigen::Success)
        throw UnstableTrapError("eigen-solve failed for trap modes", wc, std::sqrt(wz2));

    std::array<double, 3> freq{};
    int found = 0;
    for (int i = 0; i < 6; ++i) {
        const std::complex<double> lambda = solver.eigenvalues()(i);
        if (std::abs(lambda.real()) > 1e-7)
            throw UnstableTrapError("unstable trap: eigenvalue with non-zero real part", wc, std::sqrt(wz2));
        if (lambda.imag() > 0.0 && found < 3) freq[static_cast<std::size_t>(found++)] = lambda.imag();
    }
    if (found != 3) throw UnstableTrapError("unstable trap: degenerate or missing eigenfrequencies", wc, std::sqrt(wz2));
    std::sort(freq.begin(), freq.end(), std::greater<>());

    const auto c = detail::secular_cubic(k, b);
    for (double &w : freq) {
        double u = -w * w;
        for (int it = 0; it < 4; ++it) {
            const double f = ((u + c[2]) * u + c[1]) * u + c[0];
            const double df = (3.0 * u + 2.0 * c[2]) * u + c[1];
            if (df == 0.0) break;
            u -= f / df;
        }
        if (!(u < 0.0)) throw UnstableTrapError("unstable trap: non-real mode frequency", wc, std::sqrt(wz2));
        w = std::sqrt(-u);
    }
    if (!(freq[0] - freq[1] > 1e-9 && freq[1] - freq[2] > 1e-9 && freq[2] > 0.0))
        throw UnstableTrapError("unstable trap: mode frequencies are degenerate", wc, std::sqrt(wz2));

    ModeFrequencies m;
    m.omega_plus = freq[0] * wc;
    m.omega_z = freq[1] * wc;
    m.omega_minus = freq[2] * wc;
    m.omega_c_free = wc;
    return m;
}

/// Axial frequency shift from the magnetic bottle for a particle carrying an
/// effective moment mu_eff along B:
///
///   delta omega_z = sqrt(omega_z^2 + 2 mu_eff B2 / m) - omega_z
///                 ~ mu_eff B2 / (m omega_z)   (first order, the mu/m scaling)
inline double bottle_axial_shift(double mu_eff, const TrapZone &z, const Species &s, const ModeFrequencies &modes) {
    if (!(modes.omega_z > 0.0)) throw DomainError("bottle_axial_shift needs omega_z > 0");
    const double wz = modes.omega_z;
    const double extra = 2.0 * mu_eff * z.B2 / s.mass();
    const double radicand = wz * wz + extra;
    if (!(radicand > 0.0)) throw DomainError("magnetic bottle overwhelms the axial confinement");
    return extra / (std::sqrt(radicand) + wz);
}

inline double bottle_axial_shift_first_order(double mu_eff, const TrapZone &z, const Species &s,
                                             const ModeFrequencies &modes) {
    return mu_eff * z.B2 / (s.mass() * modes.omega_z);
}

/// Spin moment (sign set by spin_up) plus the orbital moment of the modified
/// cyclotron motion, (n + 1/2) hbar |q| omega_+ / (m omega_c).
inline double effective_moment(const Species &s, bool spin_up, long n_plus, const ModeFrequencies &modes) {
    if (n_plus < 0) throw DomainError("effective_moment: n_plus must be >= 0");
    const double spin = spin_up ? s.spin_moment() : -s.spin_moment();
    const double quantum = constants::hbar * s.charge_to_mass() * modes.omega_plus / modes.omega_c_free;
    return spin + (static_cast<double>(n_plus) + 0.5) * quantum;
}

}  // namespace qlgf
