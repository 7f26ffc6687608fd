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
#include <random>

#include "qlgf/errors.hpp"
#include "qlgf/rng.hpp"
#include "qlgf/species.hpp"
#include "qlgf/trap.hpp"

namespace qlgf {

/// Resistive cooling of the modified cyclotron mode towards the temperature
/// of the detection circuit.
struct CoolingModel {
    double tau_resistive = 100.0;  // s
    double temperature = 4.2;      // K

    void validate() const {
        if (!(tau_resistive > 0.0)) throw DomainError("cooling model: tau_resistive must be positive");
        if (!(temperature > 0.0)) throw DomainError("cooling model: temperature must be positive");
    }
};

/// Axial-frequency jitter per measurement, sigma(n+) = sigma0 sqrt(n+ + 1).
struct AxialNoiseModel {
    double sigma0 = 0.0;          // rad/s
    double detection_time = 60.0;  // s per axial-frequency sample

    void validate() const {
        if (!(sigma0 >= 0.0)) throw DomainError("axial noise: sigma0 must be >= 0");
        if (!(detection_time > 0.0)) throw DomainError("axial noise: detection_time must be positive");
    }
    double sigma(double n_plus) const { return sigma0 * std::sqrt(n_plus + 1.0); }
};

struct DoubleTrapTimings {
    double transport_time = 10.0;                     // s, one way
    double precision_zone_interrogation_time = 60.0;  // s
    int analysis_zone_detection_repetitions = 1;

    void validate() const {
        if (!(transport_time >= 0.0) || !(precision_zone_interrogation_time >= 0.0))
            throw DomainError("double-trap timings must be non-negative");
        if (analysis_zone_detection_repetitions < 1)
            throw DomainError("double-trap timings: detection repetitions must be >= 1");
    }
};

/// How each detection repetition prepares the cyclotron mode.
struct DetectionPlan {
    int repetitions = 1;
    double cooling_wait = 300.0;  // s of resistive cooling before each repetition
    long n_initial = 0;           // cyclotron quantum number entering the cooling wait
};

inline double thermal_occupation(const CoolingModel &cm, const ModeFrequencies &modes) {
    return constants::k_boltzmann * cm.temperature / (constants::hbar * modes.omega_plus);
}

/// n(t) = n_th + (n_initial - n_th) exp(-t / tau)
inline double mean_occupation_after(double n_initial, const CoolingModel &cm, const ModeFrequencies &modes, double t) {
    const double n_th = thermal_occupation(cm, modes);
    return n_th + (n_initial - n_th) * std::exp(-t / cm.tau_resistive);
}

/// Draws n+ from a thermal distribution with the relaxed mean. At t = 0 the
/// mode has not evolved and n_initial is returned unchanged.
inline long resistive_cool(long n_initial, const CoolingModel &cm, const ModeFrequencies &modes, double t, Rng &rng) {
    cm.validate();
    if (n_initial < 0 || t < 0.0) throw DomainError("resistive_cool: n_initial and t must be >= 0");
    if (t == 0.0) return n_initial;
    const double mean = mean_occupation_after(static_cast<double>(n_initial), cm, modes, t);
    if (mean <= 0.0) return 0;
    std::geometric_distribution<long> dist(1.0 / (1.0 + mean));
    return dist(rng);
}

inline double axial_sample(double true_omega_z, long n_plus, const AxialNoiseModel &nm, Rng &rng) {
    if (!(true_omega_z > 0.0)) throw DomainError("axial_sample: omega_z must be positive");
    const double sigma = nm.sigma(static_cast<double>(n_plus));
    if (sigma == 0.0) return true_omega_z;
    std::normal_distribution<double> noise(0.0, sigma);
    return true_omega_z + noise(rng);
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(X >= k) for X ~ Binomial(n, p).
inline double binomial_upper_tail(int n, double p, int k) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double sum = 0.0;
    for (int i = k; i <= n; ++i) {
        const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                                i * std::log(p) + (n - i) * std::log1p(-p);
        sum += std::exp(log_term);
    }
    return std::min(sum, 1.0);
}

/// Error rates of the majority-vote spin-flip discriminator. Ties go to
/// "no flip".
struct SpinFlipErrorRates {
    double single_shot = 0.0;     // per repetition, either hypothesis
    double false_negative = 0.0;  // P(decide no flip | flip)
    double false_positive = 0.0;  // P(decide flip | no flip)
    double mean() const { return 0.5 * (false_negative + false_positive); }
};

inline SpinFlipErrorRates majority_vote_errors(double spin_shift, double sigma_difference, int repetitions) {
    SpinFlipErrorRates r;
    r.single_shot = sigma_difference > 0.0 ? standard_normal_cdf(-0.5 * spin_shift / sigma_difference) : 0.0;
    r.false_negative = binomial_upper_tail(repetitions, r.single_shot, (repetitions + 1) / 2);
    r.false_positive = binomial_upper_tail(repetitions, r.single_shot, repetitions / 2 + 1);
    return r;
}

/// Expected quantities of one continuous Stern-Gerlach detection in a given
/// analysis zone, evaluated at the mean cyclotron occupation after cooling.
struct SpinFlipSignal {
    ModeFrequencies modes;
    double n_plus_mean = 0.0;
    double spin_shift = 0.0;        // omega_z(up) - omega_z(down), rad/s
    double sigma_difference = 0.0;  // std of omega_z(after) - omega_z(before)
};

inline SpinFlipSignal spin_flip_signal(const Species &s, const TrapZone &z_analysis, const AxialNoiseModel &nm,
                                       const CoolingModel &cm, const DetectionPlan &plan) {
    SpinFlipSignal sig;
    sig.modes = ideal_modes(s, z_analysis);
    sig.n_plus_mean = plan.cooling_wait > 0.0
                          ? mean_occupation_after(static_cast<double>(plan.n_initial), cm, sig.modes, plan.cooling_wait)
                          : static_cast<double>(plan.n_initial);
    const auto n = static_cast<long>(std::lround(sig.n_plus_mean));
    const double up = bottle_axial_shift(effective_moment(s, true, n, sig.modes), z_analysis, s, sig.modes);
    const double down = bottle_axial_shift(effective_moment(s, false, n, sig.modes), z_analysis, s, sig.modes);
    sig.spin_shift = up - down;
    sig.sigma_difference = std::numbers::sqrt2 * nm.sigma(sig.n_plus_mean);
    return sig;
}

struct SpinFlipDetection {
    bool decision = false;
    double error_prob = 0.0;
    double wall_time = 0.0;
    double n_plus_mean = 0.0;  // mean of the sampled n+ over repetitions
};

/// Continuous Stern-Gerlach spin-flip detection in the analysis trap:
/// cool, measure omega_z, (flip), measure omega_z, compare the difference
/// with half the expected spin shift. Repeated and decided by majority.
inline SpinFlipDetection detect_spin_flip(const Species &s, const TrapZone &z_analysis, const AxialNoiseModel &nm,
                                          const CoolingModel &cm, const DetectionPlan &plan, bool flip_occurred,
                                          Rng &rng) {
    if (!(z_analysis.B2 > 0.0)) throw ConfigError("detect_spin_flip: analysis zone has no magnetic bottle (B2 <= 0)");
    if (plan.repetitions < 1) throw DomainError("detect_spin_flip: repetitions must be >= 1");
    nm.validate();
    cm.validate();
    const SpinFlipSignal sig = spin_flip_signal(s, z_analysis, nm, cm, plan);
    if (!(sig.spin_shift > 0.0)) throw ConfigError("detect_spin_flip: expected spin shift is not positive");

    const double threshold = 0.5 * sig.spin_shift;
    int flip_votes = 0;
    double n_sum = 0.0;
    for (int r = 0; r < plan.repetitions; ++r) {
        const long n = resistive_cool(plan.n_initial, cm, sig.modes, plan.cooling_wait, rng);
        n_sum += static_cast<double>(n);
        const double wz_down = sig.modes.omega_z +
                               bottle_axial_shift(effective_moment(s, false, n, sig.modes), z_analysis, s, sig.modes);
        const double wz_up = sig.modes.omega_z +
                             bottle_axial_shift(effective_moment(s, true, n, sig.modes), z_analysis, s, sig.modes);
        const double before = axial_sample(wz_down, n, nm, rng);
        const double after = axial_sample(flip_occurred ? wz_up : wz_down, n, nm, rng);
        if (after - before > threshold) ++flip_votes;
    }

    SpinFlipDetection out;
    out.decision = 2 * flip_votes > plan.repetitions;
    out.error_prob = majority_vote_errors(sig.spin_shift, sig.sigma_difference, plan.repetitions).mean();
    out.wall_time = plan.repetitions * (plan.cooling_wait + 2.0 * nm.detection_time);
    out.n_plus_mean = n_sum / plan.repetitions;
    return out;
}

/// Smallest repetition count whose majority-vote error is below `target`.
inline int repetitions_for_error(const SpinFlipSignal &sig, double target, int max_repetitions = 10001) {
    if (majority_vote_errors(sig.spin_shift, sig.sigma_difference, 1).single_shot >= 0.5 && target < 0.5)
        throw DomainError("repetitions_for_error: single-shot error is 1/2, no repetition count helps");
    for (int r = 1; r <= max_repetitions; r += 2) {
        if (majority_vote_errors(sig.spin_shift, sig.sigma_difference, r).mean() < target) return r;
    }
    throw DomainError("repetitions_for_error: target error probability unreachable");
}

/// Total wall time of one double-trap cycle: transport to the precision zone
/// and back, the precision-zone interrogation, and the analysis-zone
/// detection. Pure bookkeeping.
inline double double_trap_cycle(const DoubleTrapTimings &timings, double detection_wall_time) {
    timings.validate();
    return 2.0 * timings.transport_time + timings.precision_zone_interrogation_time + detection_wall_time;
}

inline double double_trap_cycle(const DoubleTrapTimings &timings, const SpinFlipDetection &detection) {
    return double_trap_cycle(timings, detection.wall_time);
}

}  // namespace qlgf
