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

#include "qlgf/classical.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"

using namespace qlgf;

namespace {

TrapZone analysis_zone() {
    TrapZone z;
    z.B0 = 1.945;
    z.B2 = 3e5;
    z.d_char = 1e-3;
    const Species p = species::proton();
    const double wz = 2.0 * constants::pi * 674e3;
    z.V0 = wz * wz * z.d_char * z.d_char / (2.0 * p.charge_to_mass() * z.c2);
    return z;
}

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

template <typename F>
Moments sample_moments(int n, F &&draw) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = draw();
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    return {mean, std::sqrt((s2 - n * mean * mean) / (n - 1))};
}

// Wilson-Hilferty approximation of the chi-square quantile.
double chi2_quantile(double df, double z) {
    const double a = 2.0 / (9.0 * df);
    return df * std::pow(1.0 - a + z * std::sqrt(a), 3);
}

}  // namespace

TEST(resistive_cool, zero_time_keeps_initial_state) {
    const ModeFrequencies m = ideal_modes(species::proton(), analysis_zone());
    CoolingModel cm;
    Rng rng(1);
    const Moments mo = sample_moments(100000, [&] { return static_cast<double>(resistive_cool(1234, cm, m, 0.0, rng)); });
    EXPECT_EQ(mo.mean, 1234.0);
}

TEST(resistive_cool, equilibrium_and_one_time_constant) {
    const ModeFrequencies m = ideal_modes(species::proton(), analysis_zone());
    CoolingModel cm;
    cm.temperature = 0.07;  // n_th ~ 50
    const double n_th = thermal_occupation(cm, m);
    ASSERT_GT(n_th, 20.0);
    Rng rng(2);
    const int N = 100000;

    const Moments eq = sample_moments(N, [&] {
        return static_cast<double>(resistive_cool(0, cm, m, 20.0 * cm.tau_resistive, rng));
    });
    const double sd_eq = std::sqrt(n_th * (n_th + 1.0));
    EXPECT_NEAR(eq.mean, n_th, 3.0 * sd_eq / std::sqrt(N));

    const auto n0 = static_cast<long>(std::lround(10.0 * n_th));
    const double expected = n_th + (static_cast<double>(n0) - n_th) / std::exp(1.0);
    const Moments one = sample_moments(N, [&] { return static_cast<double>(resistive_cool(n0, cm, m, cm.tau_resistive, rng)); });
    const double sd = std::sqrt(expected * (expected + 1.0));
    EXPECT_NEAR(one.mean, expected, 3.0 * sd / std::sqrt(N));
}

TEST(resistive_cool, thermal_sampler_chi_square) {
    const ModeFrequencies m = ideal_modes(species::proton(), analysis_zone());
    for (double temperature : {0.003, 0.02, 0.1}) {
        CoolingModel cm;
        cm.temperature = temperature;
        const double mean = mean_occupation_after(0.0, cm, m, 50.0 * cm.tau_resistive);
        const double r = mean / (1.0 + mean);
        Rng rng(static_cast<std::uint64_t>(temperature * 1e6));
        const int N = 100000;
        std::vector<double> observed;
        for (int i = 0; i < N; ++i) {
            const auto n = static_cast<std::size_t>(resistive_cool(0, cm, m, 50.0 * cm.tau_resistive, rng));
            if (n >= observed.size()) observed.resize(n + 1, 0.0);
            observed[n] += 1.0;
        }
        // Bins with >= 5 expected counts, the tail pooled into the last one.
        double chi2 = 0.0, p_cum = 0.0, obs_cum = 0.0;
        int bins = 0;
        for (std::size_t n = 0;; ++n) {
            const double p = (1.0 - r) * std::pow(r, static_cast<double>(n));
            if (N * (1.0 - p_cum - p) < 5.0) {
                const double e = N * (1.0 - p_cum);
                const double o = N - obs_cum;
                chi2 += (o - e) * (o - e) / e;
                ++bins;
                break;
            }
            const double o = n < observed.size() ? observed[n] : 0.0;
            chi2 += (o - N * p) * (o - N * p) / (N * p);
            p_cum += p;
            obs_cum += o;
            ++bins;
        }
        EXPECT_LT(chi2, chi2_quantile(bins - 1, 2.3263)) << "T=" << temperature << " bins=" << bins;
    }
}

TEST(resistive_cool, reproducible) {
    const ModeFrequencies m = ideal_modes(species::proton(), analysis_zone());
    CoolingModel cm;
    Rng a = make_stream(99, "cool"), b = make_stream(99, "cool");
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(resistive_cool(10, cm, m, 50.0, a), resistive_cool(10, cm, m, 50.0, b));
}

TEST(axial_sample, noiseless_and_sqrt_law) {
    AxialNoiseModel nm;
    nm.sigma0 = 0.0;
    Rng rng(3);
    EXPECT_EQ(axial_sample(4.2e6, 500, nm, rng), 4.2e6);

    nm.sigma0 = 0.1;
    const int N = 100000;
    const Moments s0 = sample_moments(N, [&] { return axial_sample(4.2e6, 0, nm, rng) - 4.2e6; });
    const Moments s3 = sample_moments(N, [&] { return axial_sample(4.2e6, 3, nm, rng) - 4.2e6; });
    const Moments s99 = sample_moments(N, [&] { return axial_sample(4.2e6, 99, nm, rng) - 4.2e6; });
    EXPECT_NEAR(s3.stddev / s0.stddev, 2.0, 0.1);
    EXPECT_NEAR(s99.stddev / nm.sigma0, 10.0, 0.5);
    EXPECT_THROW(axial_sample(0.0, 0, nm, rng), DomainError);
}

TEST(detect_spin_flip, noiseless_is_always_right) {
    const Species p = species::proton();
    AxialNoiseModel nm;
    nm.sigma0 = 0.0;
    CoolingModel cm;
    DetectionPlan plan{.repetitions = 1, .cooling_wait = 300.0, .n_initial = 5000};
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const bool flip = i % 2 == 0;
        const SpinFlipDetection d = detect_spin_flip(p, analysis_zone(), nm, cm, plan, flip, rng);
        EXPECT_EQ(d.decision, flip);
        EXPECT_EQ(d.error_prob, 0.0);
    }
}

TEST(detect_spin_flip, single_shot_error_matches_gaussian_overlap) {
    const Species p = species::proton();
    CoolingModel cm;
    // No cooling wait: n+ stays at n_initial, so the jitter is fixed.
    DetectionPlan plan{.repetitions = 1, .cooling_wait = 0.0, .n_initial = 3};
    AxialNoiseModel nm;
    nm.sigma0 = 1.0;
    const SpinFlipSignal sig = spin_flip_signal(p, analysis_zone(), nm, cm, plan);
    // Spin shift = 2 sigma of the discriminating difference.
    nm.sigma0 = sig.spin_shift / (2.0 * std::numbers::sqrt2 * std::sqrt(plan.n_initial + 1.0));
    Rng rng(5);
    const int N = 100000;
    int wrong = 0;
    double error_prob = 0.0;
    for (int i = 0; i < N; ++i) {
        const bool flip = i % 2 == 0;
        const SpinFlipDetection d = detect_spin_flip(p, analysis_zone(), nm, cm, plan, flip, rng);
        wrong += d.decision != flip;
        error_prob = d.error_prob;
    }
    EXPECT_NEAR(static_cast<double>(wrong) / N, 0.158655, 0.01);
    EXPECT_NEAR(error_prob, 0.158655, 1e-5);
}

TEST(detect_spin_flip, error_monotone_in_repetitions_and_snr) {
    for (double snr : {0.5, 1.0, 2.0, 4.0}) {
        double prev = 1.0;
        for (int r = 1; r <= 41; ++r) {
            const double e = majority_vote_errors(snr, 1.0, r).mean();
            EXPECT_LE(e, prev * (1.0 + 1e-12)) << "snr=" << snr << " r=" << r;
            prev = e;
        }
    }
    for (int r : {1, 2, 3, 8, 15}) {
        double prev = 1.0;
        for (double snr = 0.1; snr < 8.0; snr += 0.1) {
            const double e = majority_vote_errors(snr, 1.0, r).mean();
            EXPECT_LE(e, prev * (1.0 + 1e-12));
            prev = e;
        }
    }
}

TEST(detect_spin_flip, classical_detection_exceeds_an_hour) {
    const Species p = species::proton();
    CoolingModel cm;  // tau = 100 s
    AxialNoiseModel nm{.sigma0 = 0.012, .detection_time = 60.0};
    DetectionPlan plan{.repetitions = 1, .cooling_wait = 3.0 * cm.tau_resistive, .n_initial = 20000};
    const SpinFlipSignal sig = spin_flip_signal(p, analysis_zone(), nm, cm, plan);
    plan.repetitions = repetitions_for_error(sig, 0.01);
    Rng rng(6);
    const SpinFlipDetection d = detect_spin_flip(p, analysis_zone(), nm, cm, plan, true, rng);
    EXPECT_LT(d.error_prob, 0.01);
    EXPECT_GT(d.wall_time, 3600.0);
    EXPECT_EQ(d.wall_time, plan.repetitions * (plan.cooling_wait + 2.0 * nm.detection_time));
}

TEST(detect_spin_flip, needs_a_bottle) {
    TrapZone z = analysis_zone();
    z.B2 = 0.0;
    Rng rng(7);
    EXPECT_THROW(detect_spin_flip(species::proton(), z, AxialNoiseModel{}, CoolingModel{}, DetectionPlan{}, true, rng),
                 ConfigError);
}

TEST(detect_spin_flip, reproducible_with_fixed_seed) {
    const Species p = species::proton();
    AxialNoiseModel nm{.sigma0 = 0.05, .detection_time = 60.0};
    DetectionPlan plan{.repetitions = 5, .cooling_wait = 100.0, .n_initial = 1000};
    Rng a = make_stream(11, "detect"), b = make_stream(11, "detect");
    for (int i = 0; i < 100; ++i) {
        const auto x = detect_spin_flip(p, analysis_zone(), nm, CoolingModel{}, plan, true, a);
        const auto y = detect_spin_flip(p, analysis_zone(), nm, CoolingModel{}, plan, true, b);
        EXPECT_EQ(x.decision, y.decision);
        EXPECT_EQ(x.n_plus_mean, y.n_plus_mean);
    }
}

TEST(double_trap_cycle, bookkeeping) {
    DoubleTrapTimings t{.transport_time = 0.0, .precision_zone_interrogation_time = 0.0,
                        .analysis_zone_detection_repetitions = 1};
    EXPECT_EQ(double_trap_cycle(t, 4321.0), 4321.0);

    t = {.transport_time = 15.0, .precision_zone_interrogation_time = 120.0, .analysis_zone_detection_repetitions = 3};
    const double base = double_trap_cycle(t, 1000.0);
    EXPECT_EQ(base, 2 * 15.0 + 120.0 + 1000.0);
    DoubleTrapTimings doubled = t;
    doubled.transport_time *= 2.0;
    // The transport contribution (two legs) doubles.
    EXPECT_EQ(double_trap_cycle(doubled, 1000.0) - base, 2.0 * t.transport_time);

    t.transport_time = -1.0;
    EXPECT_THROW(double_trap_cycle(t, 1.0), DomainError);
}
