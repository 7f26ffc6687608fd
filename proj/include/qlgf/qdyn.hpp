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

// Quantum dynamics on truncated spin x Fock spaces. All Hamiltonians are in
// the rotating-wave approximation and piecewise constant, so every
// propagator is applied by exact diagonalization of its (small) blocks.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qlgf/errors.hpp"
#include "qlgf/rng.hpp"
#include "qlgf/species.hpp"

namespace qlgf {

using Complex = std::complex<double>;

inline constexpr int spin_down = 0;
inline constexpr int spin_up = 1;

/// Pure state over {down, up} x Fock^modes, truncated at n_max per mode.
/// Index = spin * levels^modes + n_a * levels + n_b (spin slowest).
struct SpinMotionState {
    int n_max = 30;
    int mode_count = 1;
    double truncation_guard = 1e-6;
    Eigen::VectorXcd amplitudes;

    SpinMotionState() = default;
    SpinMotionState(int n_max_, int mode_count_, double guard = 1e-6)
        : n_max(n_max_), mode_count(mode_count_), truncation_guard(guard) {
        if (n_max < 1) throw DomainError("SpinMotionState: n_max must be >= 1");
        if (mode_count != 1 && mode_count != 2) throw DomainError("SpinMotionState: mode_count must be 1 or 2");
        amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dimension()));
    }

    /// |spin; n_a[, n_b]>
    static SpinMotionState basis(int n_max, int spin, int n_a, int n_b = -1, double guard = 1e-6) {
        SpinMotionState s(n_max, n_b < 0 ? 1 : 2, guard);
        s.amplitudes(static_cast<Eigen::Index>(s.index(spin, n_a, std::max(n_b, 0)))) = 1.0;
        return s;
    }

    int levels() const { return n_max + 1; }
    std::size_t motional_dimension() const {
        return static_cast<std::size_t>(mode_count == 1 ? levels() : levels() * levels());
    }
    std::size_t dimension() const { return 2 * motional_dimension(); }

    std::size_t index(int spin, int n_a, int n_b = 0) const {
        if (spin < 0 || spin > 1 || n_a < 0 || n_a > n_max || n_b < 0 || n_b > n_max || (mode_count == 1 && n_b != 0))
            throw DomainError("SpinMotionState: basis index out of range");
        const auto L = static_cast<std::size_t>(levels());
        const std::size_t motion = mode_count == 1 ? static_cast<std::size_t>(n_a) : static_cast<std::size_t>(n_a) * L + static_cast<std::size_t>(n_b);
        return static_cast<std::size_t>(spin) * motional_dimension() + motion;
    }

    Complex amplitude(int spin, int n_a, int n_b = 0) const {
        return amplitudes(static_cast<Eigen::Index>(index(spin, n_a, n_b)));
    }
    double population(int spin, int n_a, int n_b = 0) const { return std::norm(amplitude(spin, n_a, n_b)); }
    double norm() const { return amplitudes.norm(); }

    /// Reduced occupation distribution of one mode (0 = a, 1 = b).
    std::vector<double> fock_populations(int mode = 0) const {
        std::vector<double> p(static_cast<std::size_t>(levels()), 0.0);
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a <= n_max; ++a)
                for (int b = 0; b <= (mode_count == 2 ? n_max : 0); ++b)
                    p[static_cast<std::size_t>(mode == 0 ? a : b)] += population(s, a, b);
        return p;
    }

    double mean_occupation(int mode = 0) const {
        const auto p = fock_populations(mode);
        double m = 0.0;
        for (std::size_t n = 0; n < p.size(); ++n) m += static_cast<double>(n) * p[n];
        return m;
    }

    double spin_up_population() const {
        return amplitudes.segment(static_cast<Eigen::Index>(motional_dimension()),
                                  static_cast<Eigen::Index>(motional_dimension()))
            .squaredNorm();
    }

    /// Population in basis states with any mode at n_max.
    double top_level_population() const {
        double p = 0.0;
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a <= n_max; ++a)
                for (int b = 0; b <= (mode_count == 2 ? n_max : 0); ++b)
                    if (a == n_max || (mode_count == 2 && b == n_max)) p += population(s, a, b);
        return p;
    }

    void check_guard() const {
        const double top = top_level_population();
        if (!(top < truncation_guard))
            throw TruncationError("population " + std::to_string(top) + " in Fock level n_max=" +
                                      std::to_string(n_max) + " exceeds truncation guard",
                                  top);
    }

    std::string basis_label(std::size_t i) const {
        const std::size_t md = motional_dimension();
        const int spin = static_cast<int>(i / md);
        const std::size_t motion = i % md;
        std::string label = spin == spin_up ? "up|" : "down|";
        if (mode_count == 1) return label + std::to_string(motion) + ">";
        const auto L = static_cast<std::size_t>(levels());
        return label + std::to_string(motion / L) + "," + std::to_string(motion % L) + ">";
    }
};

enum class DriveKind { carrier, red_sideband, blue_sideband };

inline const char *to_string(DriveKind k) {
    switch (k) {
        case DriveKind::carrier: return "carrier";
        case DriveKind::red_sideband: return "red_sideband";
        case DriveKind::blue_sideband: return "blue_sideband";
    }
    return "?";
}

/// Near-field drive of a spin transition. Carrier Rabi rate `rabi`; the
/// sidebands couple at lamb_dicke * rabi * sqrt(n) (red) or sqrt(n+1) (blue).
struct SidebandDrive {
    double rabi = 0.0;        // Omega0, rad/s
    double lamb_dicke = 0.0;  // eta
    double detuning = 0.0;    // rad/s, drive minus transition
    double phase = 0.0;       // rad
    DriveKind kind = DriveKind::carrier;
    double lamb_dicke_limit = 0.5;

    void validate() const {
        if (!(rabi >= 0.0)) throw DomainError("sideband drive: rabi must be >= 0");
        if (!(lamb_dicke >= 0.0)) throw DomainError("sideband drive: lamb_dicke must be >= 0");
        if (!(lamb_dicke < lamb_dicke_limit)) throw DomainError("sideband drive: outside the Lamb-Dicke regime");
    }

    /// Rabi rate between |down, n> and its partner.
    double coupling(int n) const {
        switch (kind) {
            case DriveKind::carrier: return rabi;
            case DriveKind::red_sideband: return lamb_dicke * rabi * std::sqrt(static_cast<double>(n));
            case DriveKind::blue_sideband: return lamb_dicke * rabi * std::sqrt(static_cast<double>(n) + 1.0);
        }
        return 0.0;
    }
    /// Motional quantum number of the up-state partner of |down, n>.
    int partner(int n) const {
        switch (kind) {
            case DriveKind::carrier: return n;
            case DriveKind::red_sideband: return n - 1;
            case DriveKind::blue_sideband: return n + 1;
        }
        return n;
    }
    /// Duration of a resonant pi pulse on |down, n>.
    double pi_time(int n) const { return constants::pi / coupling(n); }
};

/// Ground-state extent sqrt(hbar / (2 m omega)).
inline double ground_state_extent(double mass, double omega) {
    return std::sqrt(constants::hbar / (2.0 * mass * omega));
}

/// Sideband Rabi rate eta * Omega0 = mu * B' * z0 / (2 hbar) of a magnetic
/// field gradient B' acting on a spin moment mu.
inline double gradient_sideband_rabi(double spin_moment, double field_gradient, double mass, double omega) {
    return std::abs(spin_moment * field_gradient) * ground_state_extent(mass, omega) / (2.0 * constants::hbar);
}

/// Two ions in separate wells, coupled through the Coulomb interaction.
struct DoubleWell {
    double separation = 300e-6;  // m
    Species species_a = species::proton();
    Species species_b = species::beryllium9_ion();
    double omega_a = 2.0 * constants::pi * 1e6;  // rad/s
    double omega_b = 2.0 * constants::pi * 1e6;  // rad/s

    void validate() const {
        if (!(separation > 0.0)) throw DomainError("double well: separation must be positive");
        if (!(omega_a > 0.0) || !(omega_b > 0.0)) throw DomainError("double well: well frequencies must be positive");
    }
};

/// Bilinear exchange rate of H = hbar Omega_ex (a b^+ + a^+ b):
///
///   Omega_ex = 2 q_a q_b z0_a z0_b / (4 pi eps0 d^3 hbar)
///            = q_a q_b / (4 pi eps0 d^3 sqrt(m_a m_b omega_a omega_b))
///
/// from the cross term -2 k q_a q_b z_a z_b / d^3 of the Coulomb energy
/// expanded to second order about the equilibrium separation.
inline double exchange_rate(const DoubleWell &dw) {
    dw.validate();
    const double d3 = dw.separation * dw.separation * dw.separation;
    const double z0a = ground_state_extent(dw.species_a.mass(), dw.omega_a);
    const double z0b = ground_state_extent(dw.species_b.mass(), dw.omega_b);
    return 2.0 * dw.species_a.charge() * dw.species_b.charge() * z0a * z0b /
           (4.0 * constants::pi * constants::epsilon0 * d3 * constants::hbar);
}

/// Time for a complete |1,0> -> |0,1> transfer, pi / (2 |Omega_ex|).
inline double exchange_swap_time(const DoubleWell &dw) { return constants::pi / (2.0 * std::abs(exchange_rate(dw))); }

/// Propagates a two-mode state under hbar Omega_ex (a b^+ + a^+ b) +
/// hbar detuning b^+ b for time t. Total excitation is conserved, so each
/// (spin, n_a + n_b) block is diagonalized separately.
inline SpinMotionState evolve_exchange(const SpinMotionState &state, const DoubleWell &dw, double detuning, double t) {
    if (state.mode_count != 2) throw DomainError("evolve_exchange needs a two-mode state");
    const double rate = exchange_rate(dw);
    SpinMotionState out = state;
    const int nm = state.n_max;
    for (int total = 0; total <= 2 * nm; ++total) {
        const int a_lo = std::max(0, total - nm);
        const int a_hi = std::min(total, nm);
        const int dim = a_hi - a_lo + 1;
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) {
            const int a = a_lo + i;
            const int b = total - a;
            h(i, i) = detuning * b;
            if (i + 1 < dim) {
                // <a+1, b-1| a^+ b |a, b> = sqrt((a+1) b)
                const double c = rate * std::sqrt(static_cast<double>(a + 1) * b);
                h(i + 1, i) = c;
                h(i, i + 1) = c;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        const Eigen::MatrixXcd V = es.eigenvectors().cast<Complex>();
        Eigen::VectorXcd phases(dim);
        for (int i = 0; i < dim; ++i) phases(i) = std::exp(Complex(0.0, -es.eigenvalues()(i) * t));
        const Eigen::MatrixXcd U = V * phases.asDiagonal() * V.adjoint();
        for (int s = 0; s < 2; ++s) {
            Eigen::VectorXcd block(dim);
            for (int i = 0; i < dim; ++i)
                block(i) = state.amplitudes(static_cast<Eigen::Index>(state.index(s, a_lo + i, total - a_lo - i)));
            block = U * block;
            for (int i = 0; i < dim; ++i)
                out.amplitudes(static_cast<Eigen::Index>(out.index(s, a_lo + i, total - a_lo - i))) = block(i);
        }
    }
    out.check_guard();
    return out;
}

namespace detail {

/// 2x2 propagator in the {|down, n>, |up, partner>} block for
/// H = [[delta/2, g/2 e^{-i phi}], [g/2 e^{i phi}, -delta/2]].
inline Eigen::Matrix2cd two_level_propagator(double coupling, double detuning, double phase, double t) {
    const double generalized = std::hypot(coupling, detuning);
    const double c = std::cos(0.5 * generalized * t);
    const double s = generalized > 0.0 ? std::sin(0.5 * generalized * t) / generalized : 0.5 * t;
    const Complex i(0.0, 1.0);
    Eigen::Matrix2cd u;
    u(0, 0) = c - i * s * detuning;
    u(1, 1) = c + i * s * detuning;
    u(0, 1) = -i * s * coupling * std::exp(-i * phase);
    u(1, 0) = -i * s * coupling * std::exp(i * phase);
    return u;
}

/// Visits every invariant block of a one-mode drive: f(down_index, up_index,
/// propagator) for coupled pairs, g(index, phase) for uncoupled states.
template <typename Pair, typename Single>
void for_each_pulse_block(const SpinMotionState &st, const SidebandDrive &drive, double t, Pair &&pair, Single &&single) {
    const int nm = st.n_max;
    std::vector<bool> up_used(static_cast<std::size_t>(nm + 1), false);
    for (int n = 0; n <= nm; ++n) {
        const int m = drive.partner(n);
        if (m < 0 || m > nm) {
            // |down, n> has no partner in the truncated space: it only picks up
            // the detuning phase, exp(-i delta t / 2).
            single(st.index(spin_down, n), std::exp(Complex(0.0, -0.5 * drive.detuning * t)));
            continue;
        }
        up_used[static_cast<std::size_t>(m)] = true;
        pair(st.index(spin_down, n), st.index(spin_up, m),
             two_level_propagator(drive.coupling(n), drive.detuning, drive.phase, t));
    }
    for (int m = 0; m <= nm; ++m)
        if (!up_used[static_cast<std::size_t>(m)])
            single(st.index(spin_up, m), std::exp(Complex(0.0, 0.5 * drive.detuning * t)));
}

}  // namespace detail

/// Jaynes-Cummings-type pulse on a one-mode state.
inline SpinMotionState evolve_pulse(const SpinMotionState &state, const SidebandDrive &drive, double t) {
    if (state.mode_count != 1) throw DomainError("evolve_pulse needs a one-mode state");
    drive.validate();
    SpinMotionState out = state;
    const auto &in = state.amplitudes;
    detail::for_each_pulse_block(
        state, drive, t,
        [&](std::size_t d, std::size_t u, const Eigen::Matrix2cd &U) {
            const auto di = static_cast<Eigen::Index>(d), ui = static_cast<Eigen::Index>(u);
            out.amplitudes(di) = U(0, 0) * in(di) + U(0, 1) * in(ui);
            out.amplitudes(ui) = U(1, 0) * in(di) + U(1, 1) * in(ui);
        },
        [&](std::size_t i, Complex phase) {
            out.amplitudes(static_cast<Eigen::Index>(i)) = phase * in(static_cast<Eigen::Index>(i));
        });
    out.check_guard();
    return out;
}

/// Dense unitary of the same pulse, for density-matrix propagation.
inline Eigen::MatrixXcd pulse_unitary(int n_max, const SidebandDrive &drive, double t) {
    const SpinMotionState shape(n_max, 1);
    const auto dim = static_cast<Eigen::Index>(shape.dimension());
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(dim, dim);
    detail::for_each_pulse_block(
        shape, drive, t,
        [&](std::size_t d, std::size_t u, const Eigen::Matrix2cd &B) {
            const auto di = static_cast<Eigen::Index>(d), ui = static_cast<Eigen::Index>(u);
            U(di, di) = B(0, 0);
            U(di, ui) = B(0, 1);
            U(ui, di) = B(1, 0);
            U(ui, ui) = B(1, 1);
        },
        [&](std::size_t i, Complex phase) { U(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = phase; });
    return U;
}

/// Motional heating (quanta per second, symmetric a / a^+ jumps) and pure
/// spin dephasing (1/T2, sigma_z jumps).
struct DecoherenceModel {
    double heating_rate = 0.0;
    double spin_t2 = std::numeric_limits<double>::infinity();

    bool active() const { return heating_rate > 0.0 || std::isfinite(spin_t2); }
    double dephasing_rate() const { return std::isfinite(spin_t2) ? 0.5 / spin_t2 : 0.0; }
};

/// One quantum trajectory of free decoherence for duration dt. The no-jump
/// generator is diagonal in the product basis, so waiting times are drawn
/// exactly by bisection on the decaying norm.
inline void apply_decoherence(SpinMotionState &state, const DecoherenceModel &model, double dt, Rng &rng) {
    if (!model.active() || dt <= 0.0) return;
    const auto dim = static_cast<Eigen::Index>(state.dimension());
    const int L = state.levels();
    const double gamma = model.heating_rate;
    const double dephase = model.dephasing_rate();

    auto occupations = [&](Eigen::Index i, int &a, int &b) {
        const auto motion = static_cast<int>(static_cast<std::size_t>(i) % state.motional_dimension());
        a = state.mode_count == 1 ? motion : motion / L;
        b = state.mode_count == 1 ? -1 : motion % L;
    };
    // Sum of L^+ L over all jump operators for basis state i.
    Eigen::VectorXd rates(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        int a = 0, b = 0;
        occupations(i, a, b);
        double r = dephase;
        for (int n : {a, b}) {
            if (n < 0) continue;
            r += gamma * (n + (n < state.n_max ? n + 1 : 0));
        }
        rates(i) = r;
    }

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double remaining = dt;
    while (remaining > 0.0) {
        const double target = uni(rng);
        auto norm_after = [&](double tau) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < dim; ++i) s += std::norm(state.amplitudes(i)) * std::exp(-rates(i) * tau);
            return s;
        };
        if (norm_after(remaining) >= target) {
            for (Eigen::Index i = 0; i < dim; ++i) state.amplitudes(i) *= std::exp(-0.5 * rates(i) * remaining);
            state.amplitudes.normalize();
            break;
        }
        double lo = 0.0, hi = remaining;
        for (int it = 0; it < 100 && hi - lo > 1e-15 * remaining; ++it) {
            const double mid = 0.5 * (lo + hi);
            (norm_after(mid) >= target ? lo : hi) = mid;
        }
        const double tau = hi;
        for (Eigen::Index i = 0; i < dim; ++i) state.amplitudes(i) *= std::exp(-0.5 * rates(i) * tau);
        state.amplitudes.normalize();
        remaining -= tau;

        // Jump channels: (mode, raise/lower) and dephasing.
        struct Channel { int mode; int step; };
        std::vector<Channel> channels;
        std::vector<double> weights;
        if (dephase > 0.0) {
            channels.push_back({-1, 0});
            weights.push_back(dephase);
        }
        if (gamma > 0.0) {
            for (int mode = 0; mode < state.mode_count; ++mode) {
                for (int step : {+1, -1}) {
                    double w = 0.0;
                    for (Eigen::Index i = 0; i < dim; ++i) {
                        int a = 0, b = 0;
                        occupations(i, a, b);
                        const int n = mode == 0 ? a : b;
                        const double f = step > 0 ? (n < state.n_max ? n + 1 : 0) : n;
                        w += gamma * f * std::norm(state.amplitudes(i));
                    }
                    channels.push_back({mode, step});
                    weights.push_back(w);
                }
            }
        }
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        const Channel ch = channels[pick(rng)];
        Eigen::VectorXcd next = Eigen::VectorXcd::Zero(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const Complex c = state.amplitudes(i);
            if (c == Complex(0.0)) continue;
            const int spin = static_cast<int>(static_cast<std::size_t>(i) / state.motional_dimension());
            int a = 0, b = 0;
            occupations(i, a, b);
            if (ch.mode < 0) {
                next(i) = spin == spin_up ? c : -c;
                continue;
            }
            int &n = ch.mode == 0 ? a : b;
            const int target_n = n + ch.step;
            if (target_n < 0 || target_n > state.n_max) continue;
            const double amp = std::sqrt(static_cast<double>(ch.step > 0 ? n + 1 : n));
            n = target_n;
            next(static_cast<Eigen::Index>(state.index(spin, a, std::max(b, 0)))) += amp * c;
        }
        state.amplitudes = next.normalized();
    }
    state.check_guard();
}

/// Thermal occupation distribution p(n) ~ (n_bar / (1 + n_bar))^n on
/// 0..n_max, renormalized.
inline std::vector<double> thermal_state(double n_bar, int n_max, double truncation_guard = 1e-6) {
    if (!(n_bar >= 0.0)) throw DomainError("thermal_state: n_bar must be >= 0");
    if (n_max < 1) throw DomainError("thermal_state: n_max must be >= 1");
    std::vector<double> p(static_cast<std::size_t>(n_max + 1), 0.0);
    const double ratio = n_bar / (1.0 + n_bar);
    double w = 1.0, total = 0.0;
    for (auto &x : p) {
        x = w;
        total += w;
        w *= ratio;
    }
    for (auto &x : p) x /= total;
    if (!(p.back() < truncation_guard))
        throw TruncationError("thermal_state: n_bar=" + std::to_string(n_bar) + " too large for n_max=" +
                                  std::to_string(n_max),
                              p.back());
    return p;
}

inline double mean_of(const std::vector<double> &p) {
    double m = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) m += static_cast<double>(n) * p[n];
    return m;
}

/// Optical-pumping spin reset between cooling pulses. A reset fails (leaves
/// the spin untouched) with `failure_probability`; decoherence acts during
/// `duration`.
struct SpinResetModel {
    double failure_probability = 0.0;
    double duration = 0.0;  // s
    DecoherenceModel decoherence;
};

struct CoolingOptions {
    double target_n_bar = 0.01;
    int max_pulses = 200;
};

struct CoolingResult {
    double final_n_bar = 0.0;
    int pulse_count = 0;
    bool converged = false;
    std::vector<double> n_bar_history;  // after each pulse + reset, starting with the initial value
};

namespace detail {

inline double density_mean_occupation(const Eigen::MatrixXcd &rho, int n_max) {
    const int L = n_max + 1;
    double m = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int n = 0; n <= n_max; ++n) m += n * rho(s * L + n, s * L + n).real();
    return m;
}

/// Euler-integrated Lindblad evolution for heating and dephasing.
inline void lindblad_decoherence(Eigen::MatrixXcd &rho, int n_max, const DecoherenceModel &model, double duration) {
    if (!model.active() || duration <= 0.0) return;
    const int L = n_max + 1;
    const auto dim = static_cast<Eigen::Index>(2 * L);
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int s = 0; s < 2; ++s)
        for (int n = 1; n <= n_max; ++n) a(s * L + n - 1, s * L + n) = std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd sz = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 0; n < L; ++n) {
        sz(n, n) = -1.0;
        sz(L + n, L + n) = 1.0;
    }
    std::vector<Eigen::MatrixXcd> jumps;
    if (model.heating_rate > 0.0) {
        jumps.push_back(std::sqrt(model.heating_rate) * a);
        jumps.push_back(std::sqrt(model.heating_rate) * a.adjoint());
    }
    if (model.dephasing_rate() > 0.0) jumps.push_back(std::sqrt(model.dephasing_rate()) * sz);
    const double max_rate = model.heating_rate * (2.0 * n_max + 1.0) + model.dephasing_rate();
    const int steps = std::max(1, static_cast<int>(std::ceil(duration * max_rate / 1e-3)));
    const double h = duration / steps;
    for (int k = 0; k < steps; ++k) {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(dim, dim);
        for (const auto &J : jumps) {
            const Eigen::MatrixXcd JdJ = J.adjoint() * J;
            d += J * rho * J.adjoint() - 0.5 * (JdJ * rho + rho * JdJ);
        }
        rho += h * d;
    }
}

}  // namespace detail

/// Sideband cooling by alternating red-sideband pi pulses and spin resets.
/// Each pulse is timed for the Fock level carrying the largest share of
/// the mean occupation among spin-down states. The state is tracked as a
/// density matrix, so failed resets keep their coherences.
inline CoolingResult ground_state_cool(const Eigen::MatrixXcd &initial_rho, int n_max, const SidebandDrive &drive,
                                       const SpinResetModel &reset, const CoolingOptions &opts = {},
                                       double truncation_guard = 1e-6) {
    if (drive.kind != DriveKind::red_sideband) throw DomainError("ground_state_cool needs a red-sideband drive");
    drive.validate();
    if (!(reset.failure_probability >= 0.0 && reset.failure_probability <= 1.0))
        throw DomainError("ground_state_cool: reset failure probability must be in [0, 1]");
    const int L = n_max + 1;
    Eigen::MatrixXcd rho = initial_rho;

    auto guard = [&] {
        double top = rho(n_max, n_max).real() + rho(L + n_max, L + n_max).real();
        if (!(top < truncation_guard)) throw TruncationError("ground_state_cool: population reached n_max", top);
    };

    CoolingResult res;
    double nbar = detail::density_mean_occupation(rho, n_max);
    res.n_bar_history.push_back(nbar);
    while (nbar >= opts.target_n_bar && res.pulse_count < opts.max_pulses) {
        int level = 1;
        double best = -1.0;
        for (int n = 1; n <= n_max; ++n) {
            const double w = n * rho(n, n).real();
            if (w > best) {
                best = w;
                level = n;
            }
        }
        const Eigen::MatrixXcd U = pulse_unitary(n_max, drive, drive.pi_time(level));
        rho = U * rho * U.adjoint();
        ++res.pulse_count;

        // Reset channel: with probability 1 - f move |up, n> to |down, n> and
        // drop spin coherences.
        const double ok = 1.0 - reset.failure_probability;
        Eigen::MatrixXcd next = rho;
        next.block(0, L, L, L) *= reset.failure_probability;
        next.block(L, 0, L, L) *= reset.failure_probability;
        next.block(L, L, L, L) *= reset.failure_probability;
        next.block(0, 0, L, L) += ok * rho.block(L, L, L, L);
        rho = next;
        detail::lindblad_decoherence(rho, n_max, reset.decoherence, reset.duration);
        guard();
        nbar = detail::density_mean_occupation(rho, n_max);
        res.n_bar_history.push_back(nbar);
    }
    res.final_n_bar = nbar;
    res.converged = nbar < opts.target_n_bar;
    return res;
}

/// Cooling from a spin-down mixture with the given Fock populations.
inline CoolingResult ground_state_cool(const std::vector<double> &fock_populations, const SidebandDrive &drive,
                                       const SpinResetModel &reset, const CoolingOptions &opts = {},
                                       double truncation_guard = 1e-6) {
    const int n_max = static_cast<int>(fock_populations.size()) - 1;
    if (n_max < 1) throw DomainError("ground_state_cool: need at least two Fock levels");
    const auto dim = static_cast<Eigen::Index>(2 * (n_max + 1));
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 0; n <= n_max; ++n) rho(n, n) = fock_populations[static_cast<std::size_t>(n)];
    return ground_state_cool(rho, n_max, drive, reset, opts, truncation_guard);
}

inline CoolingResult ground_state_cool(const SpinMotionState &state, const SidebandDrive &drive,
                                       const SpinResetModel &reset, const CoolingOptions &opts = {}) {
    if (state.mode_count != 1) throw DomainError("ground_state_cool needs a one-mode state");
    const Eigen::MatrixXcd rho = state.amplitudes * state.amplitudes.adjoint();
    return ground_state_cool(rho, state.n_max, drive, reset, opts, state.truncation_guard);
}

}  // namespace qlgf
