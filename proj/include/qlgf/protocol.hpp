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
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qlgf/classical.hpp"
#include "qlgf/errors.hpp"
#include "qlgf/lineshape.hpp"
#include "qlgf/qdyn.hpp"
#include "qlgf/rng.hpp"
#include "qlgf/species.hpp"
#include "qlgf/trap.hpp"

namespace qlgf {

enum class ReadoutStepKind { larmor_probe, proton_red_sideband_pi, exchange_swap, be_red_sideband_pi, fluorescence_detect };

inline const char *to_string(ReadoutStepKind k) {
    switch (k) {
        case ReadoutStepKind::larmor_probe: return "larmor_probe";
        case ReadoutStepKind::proton_red_sideband_pi: return "proton_red_sideband_pi";
        case ReadoutStepKind::exchange_swap: return "exchange_swap";
        case ReadoutStepKind::be_red_sideband_pi: return "be_red_sideband_pi";
        case ReadoutStepKind::fluorescence_detect: return "fluorescence_detect";
    }
    return "?";
}

struct ReadoutStep {
    ReadoutStepKind kind;
    double duration = 0.0;  // s
    double fidelity = 1.0;
};

/// Quantum-logic readout: proton spin -> proton motion (red sideband) ->
/// Be+ motion (Coulomb exchange) -> Be+ spin (red sideband) -> fluorescence.
struct ReadoutSequence {
    std::vector<ReadoutStep> steps;

    void validate() const {
        if (steps.empty()) throw DomainError("readout sequence is empty");
        for (const auto &s : steps) {
            if (!(s.duration > 0.0)) throw DomainError(std::string("readout step ") + to_string(s.kind) + ": duration must be positive");
            if (!(s.fidelity > 0.0 && s.fidelity <= 1.0))
                throw DomainError(std::string("readout step ") + to_string(s.kind) + ": fidelity must be in (0, 1]");
        }
    }
    double total_duration() const {
        double t = 0.0;
        for (const auto &s : steps) t += s.duration;
        return t;
    }
    /// Each step independently inverts the carried bit with probability
    /// 1 - f, so the outcome is correct for an even number of failures:
    ///   F = (1 + prod(2 f_i - 1)) / 2
    double assignment_fidelity() const {
        double prod = 1.0;
        for (const auto &s : steps) prod *= 2.0 * s.fidelity - 1.0;
        return 0.5 * (1.0 + prod);
    }
};

/// Physical inputs the readout sequence is derived from.
struct ReadoutPhysics {
    double larmor_probe_time = 0.02;  // s
    SidebandDrive proton_drive{.rabi = 2.0 * constants::pi * 2e3, .lamb_dicke = 0.05, .kind = DriveKind::red_sideband};
    DoubleWell well;
    SidebandDrive be_drive{.rabi = 2.0 * constants::pi * 250e3, .lamb_dicke = 0.2, .kind = DriveKind::red_sideband};
    double detection_time = 400e-6;  // s
    double fidelity_probe = 1.0;
    double fidelity_proton_sideband = 1.0;
    double fidelity_exchange = 1.0;
    double fidelity_be_sideband = 1.0;
    double fidelity_detection = 1.0;
};

inline ReadoutSequence make_readout_sequence(const ReadoutPhysics &p) {
    ReadoutSequence seq;
    seq.steps = {
        {ReadoutStepKind::larmor_probe, p.larmor_probe_time, p.fidelity_probe},
        {ReadoutStepKind::proton_red_sideband_pi, p.proton_drive.pi_time(1), p.fidelity_proton_sideband},
        {ReadoutStepKind::exchange_swap, exchange_swap_time(p.well), p.fidelity_exchange},
        {ReadoutStepKind::be_red_sideband_pi, p.be_drive.pi_time(1), p.fidelity_be_sideband},
        {ReadoutStepKind::fluorescence_detect, p.detection_time, p.fidelity_detection},
    };
    seq.validate();
    return seq;
}

struct ReadoutOutcome {
    bool bright = false;
    double duration = 0.0;
};

/// Classical-branching model of one readout. The proton motion is assumed
/// to be in its ground state on entry.
inline ReadoutOutcome run_readout(bool proton_spin_up, const ReadoutSequence &seq, Rng &rng) {
    bool bit = proton_spin_up;
    for (const auto &s : seq.steps) {
        if (s.fidelity < 1.0) {
            std::bernoulli_distribution fail(1.0 - s.fidelity);
            if (fail(rng)) bit = !bit;
        }
    }
    return {bit, seq.total_duration()};
}

/// Linear ramp plus Gaussian random walk, B(t) = B0 + rate t + W(t).
struct DriftModel {
    double linear_rate = 0.0;            // T/s
    double random_walk_amplitude = 0.0;  // T/sqrt(s)

    void validate() const {
        if (!(random_walk_amplitude >= 0.0)) throw DomainError("drift model: random_walk_amplitude must be >= 0");
    }
};

/// Sampled field history. Queries must be made in non-decreasing time;
/// `mark(t)` schedules a sample at a future instant that is taken when the
/// history first moves past it and is read back with `marked(t)`.
class FieldDrift {
   public:
    FieldDrift(double B0, DriftModel model, Rng rng) : B0_(B0), model_(model), rng_(std::move(rng)) { model_.validate(); }

    double field_at(double t) {
        if (t < t_last_) throw DomainError("FieldDrift: time must be non-decreasing");
        while (!pending_.empty() && pending_.front() <= t) {
            const double tp = pending_.front();
            pending_.erase(pending_.begin());
            marked_.emplace_back(tp, advance(tp));
        }
        return advance(t);
    }

    void mark(double t) {
        if (t < t_last_) throw DomainError("FieldDrift: cannot mark a past time");
        pending_.insert(std::upper_bound(pending_.begin(), pending_.end(), t), t);
    }

    double marked(double t) {
        if (std::find(pending_.begin(), pending_.end(), t) != pending_.end()) field_at(t);
        for (const auto &[tm, b] : marked_)
            if (tm == t) return b;
        throw DomainError("FieldDrift: time was never marked");
    }

    double nominal() const { return B0_; }

   private:
    double advance(double t) {
        if (model_.random_walk_amplitude > 0.0 && t > t_last_) {
            std::normal_distribution<double> step(0.0, model_.random_walk_amplitude * std::sqrt(t - t_last_));
            walk_ += step(rng_);
        }
        t_last_ = t;
        return B0_ + model_.linear_rate * t + walk_;
    }

    double B0_;
    DriftModel model_;
    Rng rng_;
    double t_last_ = 0.0;
    double walk_ = 0.0;
    std::vector<double> pending_;
    std::vector<std::pair<double, double>> marked_;
};

struct ScanPlan {
    std::vector<double> detunings;  // rad/s relative to the center guess
    int shots = 50;
    double rabi = 0.0;        // rad/s
    double probe_time = 0.0;  // s

    void validate() const {
        if (detunings.empty()) throw DomainError("scan plan: no detunings");
        if (shots <= 0) throw DomainError("scan plan: shots must be positive");
        if (!(rabi > 0.0) || !(probe_time > 0.0)) throw DomainError("scan plan: rabi and probe_time must be positive");
    }

    /// `points` detunings evenly spanning +-span_linewidths * rabi, pi-pulse probe.
    static ScanPlan symmetric(int points, double span_linewidths, int shots, double rabi) {
        ScanPlan p;
        p.shots = shots;
        p.rabi = rabi;
        p.probe_time = constants::pi / rabi;
        for (int i = 0; i < points; ++i)
            p.detunings.push_back(rabi * span_linewidths * (2.0 * i / (points - 1) - 1.0));
        return p;
    }
};

/// Maps "spin flipped" to a bright/dark outcome, with known error rates.
struct Discriminator {
    std::function<ReadoutOutcome(bool flipped, Rng &)> measure;
    double false_positive = 0.0;
    double false_negative = 0.0;
    double duration = 0.0;  // wall time per shot

    double expected_bright(double flip_probability) const {
        return false_positive + (1.0 - false_positive - false_negative) * flip_probability;
    }
};

inline Discriminator quantum_logic_discriminator(const ReadoutSequence &seq) {
    seq.validate();
    const double err = 1.0 - seq.assignment_fidelity();
    return {[seq](bool flipped, Rng &rng) { return run_readout(flipped, seq, rng); }, err, err, seq.total_duration()};
}

/// Be+ shots are read out directly by fluorescence.
inline Discriminator direct_fluorescence_discriminator(double fidelity, double duration) {
    const double err = 1.0 - fidelity;
    return {[fidelity, duration](bool flipped, Rng &rng) {
                bool bit = flipped;
                if (fidelity < 1.0 && std::bernoulli_distribution(1.0 - fidelity)(rng)) bit = !bit;
                return ReadoutOutcome{bit, duration};
            },
            err, err, duration};
}

/// Settings of the classical continuous Stern-Gerlach chain.
struct ClassicalDetection {
    TrapZone analysis_zone;
    AxialNoiseModel noise;
    CoolingModel cooling;
    DetectionPlan plan;
    DoubleTrapTimings timings;
};

inline Discriminator classical_discriminator(const Species &s, const ClassicalDetection &cd) {
    const SpinFlipSignal sig = spin_flip_signal(s, cd.analysis_zone, cd.noise, cd.cooling, cd.plan);
    const SpinFlipErrorRates rates = majority_vote_errors(sig.spin_shift, sig.sigma_difference, cd.plan.repetitions);
    const double detection_wall =
        cd.plan.repetitions * (cd.plan.cooling_wait + 2.0 * cd.noise.detection_time);
    const double cycle = double_trap_cycle(cd.timings, detection_wall);
    return {[s, cd, cycle](bool flipped, Rng &rng) {
                const SpinFlipDetection d =
                    detect_spin_flip(s, cd.analysis_zone, cd.noise, cd.cooling, cd.plan, flipped, rng);
                return ReadoutOutcome{d.decision, cycle};
            },
            rates.false_positive, rates.false_negative, cycle};
}

struct ShotRecord {
    double timestamp = 0.0;  // s
    std::string kind;
    double detuning = 0.0;  // rad/s relative to the scan's center guess
    int outcome = 0;
};

/// One species being scanned.
struct ScanTarget {
    std::string kind;
    const Species *species = nullptr;
    double center_guess = 0.0;
    ScanPlan plan;
    const Discriminator *discriminator = nullptr;
};

/// Shot ordering across targets. `alternate`: one shot per target in turn;
/// `synchronous`: all targets probed at the same instant; `block`: each
/// target runs a full pass over its points before the next one.
enum class Interleave { alternate, synchronous, block };

inline const char *to_string(Interleave m) {
    switch (m) {
        case Interleave::alternate: return "alternate";
        case Interleave::synchronous: return "synchronous";
        case Interleave::block: return "block";
    }
    return "?";
}

struct ScanOptions {
    Interleave interleave = Interleave::alternate;
    bool expected_values = false;  // counts are expectation values, no random numbers drawn
    std::vector<ShotRecord> *log = nullptr;
};

/// Runs the scans of all targets on a shared clock and field history.
/// Points are visited in serpentine order each pass so a linear drift
/// averages to the scan's mean time.
inline std::vector<LineshapeScan> scan_interleaved(const std::vector<ScanTarget> &targets, FieldDrift &drift,
                                                   double &clock, Rng &rng, const ScanOptions &opts = {}) {
    if (targets.empty()) throw DomainError("scan_interleaved: no targets");
    const std::size_t points = targets[0].plan.detunings.size();
    const int shots = targets[0].plan.shots;
    for (const auto &t : targets) {
        t.plan.validate();
        if (t.plan.detunings.size() != points || t.plan.shots != shots)
            throw DomainError("scan_interleaved: interleaved scans need equal points and shots");
    }
    std::vector<LineshapeScan> scans(targets.size());
    std::vector<double> time_sum(targets.size(), 0.0);
    for (std::size_t k = 0; k < targets.size(); ++k) {
        auto &s = scans[k];
        s.center_guess = targets[k].center_guess;
        s.detunings = targets[k].plan.detunings;
        s.shots = shots;
        s.counts.assign(points, 0.0);
        s.rabi = targets[k].plan.rabi;
        s.probe_time = targets[k].plan.probe_time;
        s.baseline = targets[k].discriminator->false_positive;
        s.t_start = clock;
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // One shot of target k at point i, taken at time t; returns its duration.
    auto shoot = [&](std::size_t k, std::size_t i, double t) {
        const auto &tg = targets[k];
        const double B = drift.field_at(t);
        const double delta = tg.center_guess + tg.plan.detunings[i] - larmor_frequency(*tg.species, B);
        const double p = rabi_flip_probability(delta, tg.plan.rabi, tg.plan.probe_time);
        double outcome = 0.0;
        double duration = tg.discriminator->duration;
        if (opts.expected_values) {
            outcome = tg.discriminator->expected_bright(p);
        } else {
            const bool flipped = uni(rng) < p;
            const ReadoutOutcome r = tg.discriminator->measure(flipped, rng);
            outcome = r.bright ? 1.0 : 0.0;
            duration = r.duration;
        }
        scans[k].counts[i] += outcome;
        time_sum[k] += t;
        if (opts.log) opts.log->push_back({t, tg.kind, tg.plan.detunings[i], outcome > 0.5 ? 1 : 0});
        return duration;
    };
    auto point_at = [&](int round, std::size_t j) { return round % 2 == 0 ? j : points - 1 - j; };
    for (int round = 0; round < shots; ++round) {
        if (opts.interleave == Interleave::block) {
            for (std::size_t k = 0; k < targets.size(); ++k)
                for (std::size_t j = 0; j < points; ++j) clock += shoot(k, point_at(round, j), clock);
            continue;
        }
        for (std::size_t j = 0; j < points; ++j) {
            const std::size_t i = point_at(round, j);
            if (opts.interleave == Interleave::synchronous) {
                double longest = 0.0;
                for (std::size_t k = 0; k < targets.size(); ++k) longest = std::max(longest, shoot(k, i, clock));
                clock += longest;
            } else {
                for (std::size_t k = 0; k < targets.size(); ++k) clock += shoot(k, i, clock);
            }
        }
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
        scans[k].t_end = clock;
        scans[k].t_mean = time_sum[k] / (static_cast<double>(shots) * static_cast<double>(points));
    }
    return scans;
}

/// Larmor resonance scan of a single species.
inline LineshapeScan scan_lineshape(double center_guess, const ScanPlan &plan, const Species &s, FieldDrift &drift,
                                    const Discriminator &disc, double &clock, Rng &rng, const ScanOptions &opts = {}) {
    return scan_interleaved({ScanTarget{"larmor", &s, center_guess, plan, &disc}}, drift, clock, rng, opts).front();
}

/// A frequency estimate tagged with the time window it was measured in.
struct TimedFrequency {
    double t_start = 0.0, t_end = 0.0, t_mean = 0.0;
    double omega = 0.0, sigma = 0.0;
};

inline TimedFrequency timed(const LineshapeScan &scan, const ResonanceFit &fit) {
    return {scan.t_start, scan.t_end, scan.t_mean, fit.omega_hat, fit.sigma};
}

struct FlywheelResult {
    double ratio = 0.0;  // omega_L(target) / omega_L(reference)
    double sigma = 0.0;
    std::vector<double> window_ratios;
    std::vector<double> window_sigmas;
};

/// Ratio of interleaved Larmor frequencies, which cancels the common-mode
/// field drift. The reference frequency at each target window's mean time
/// is interpolated linearly between the overlapping reference windows.
inline FlywheelResult flywheel_correct(const std::vector<TimedFrequency> &target,
                                       const std::vector<TimedFrequency> &reference) {
    if (target.empty()) throw AlignmentError("flywheel_correct: no target windows");
    FlywheelResult out;
    double wsum = 0.0, rsum = 0.0;
    for (const auto &p : target) {
        std::vector<const TimedFrequency *> overlap;
        for (const auto &r : reference)
            if (r.t_start <= p.t_end && p.t_start <= r.t_end) overlap.push_back(&r);
        if (overlap.empty()) throw AlignmentError("flywheel_correct: target window has no overlapping reference window");
        std::sort(overlap.begin(), overlap.end(), [](auto *a, auto *b) { return a->t_mean < b->t_mean; });

        double ref = overlap.front()->omega, ref_sigma = overlap.front()->sigma;
        if (overlap.size() > 1) {
            auto hi = std::find_if(overlap.begin(), overlap.end(), [&](auto *r) { return r->t_mean >= p.t_mean; });
            if (hi == overlap.end()) hi = std::prev(overlap.end());
            if (hi == overlap.begin()) hi = std::next(hi);
            const TimedFrequency &a = **std::prev(hi), &b = **hi;
            const double w = b.t_mean == a.t_mean ? 0.5 : (p.t_mean - a.t_mean) / (b.t_mean - a.t_mean);
            ref = (1.0 - w) * a.omega + w * b.omega;
            ref_sigma = std::hypot((1.0 - w) * a.sigma, w * b.sigma);
        }
        const double ratio = p.omega / ref;
        const double sigma = std::abs(ratio) * std::hypot(p.sigma / p.omega, ref_sigma / ref);
        out.window_ratios.push_back(ratio);
        out.window_sigmas.push_back(sigma);
        const double w = sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;
        wsum += w;
        rsum += w * ratio;
    }
    out.ratio = rsum / wsum;
    const bool exact = std::all_of(out.window_sigmas.begin(), out.window_sigmas.end(), [](double s) { return s == 0.0; });
    out.sigma = exact ? 0.0 : 1.0 / std::sqrt(wsum);
    return out;
}

enum class CampaignMode { quantum_logic, classical_baseline };

inline const char *to_string(CampaignMode m) {
    return m == CampaignMode::quantum_logic ? "quantum_logic" : "classical_baseline";
}

struct CampaignConfig {
    CampaignMode mode = CampaignMode::quantum_logic;
    Species target = species::proton();
    Species reference = species::beryllium9_ion();
    TrapZone precision_zone;
    int windows = 4;

    ScanPlan target_scan;
    double center_guess_offset = 0.0;  // rad/s added to the nominal Larmor frequency
    ScanPlan reference_scan;            // Be+ scan interleaved with the target scan
    ScanPlan reference_snapshot;        // Be+ scan taken alongside the cyclotron read
    double reference_detection_time = 400e-6;
    double reference_fidelity = 1.0;
    bool flywheel = true;
    Interleave interleave = Interleave::alternate;

    ReadoutPhysics readout;
    double cooling_time = 0.1;  // s of ground-state cooling per window (quantum logic)
    ClassicalDetection classical;

    double cyclotron_read_time = 1.0;        // s
    double cyclotron_read_sigma_rel = 1e-9;  // relative std of each eigenfrequency read

    DriftModel drift;
    bool expected_values = false;  // noiseless closed loop: expectation-valued scans, no read noise
};

/// Analysis zone with a strong magnetic bottle and the classical detection
/// chain sized for a spin-flip error below 1%.
inline ClassicalDetection default_classical_detection(const Species &s = species::proton()) {
    ClassicalDetection cd;
    cd.analysis_zone.B0 = 1.945;
    cd.analysis_zone.B2 = 3e5;
    cd.analysis_zone.d_char = 1e-3;
    const double wz = 2.0 * constants::pi * 674e3;
    cd.analysis_zone.V0 = wz * wz * cd.analysis_zone.d_char * cd.analysis_zone.d_char /
                          (2.0 * std::abs(s.charge_to_mass()) * cd.analysis_zone.c2);
    cd.noise = {.sigma0 = 0.012, .detection_time = 60.0};
    cd.plan = {.repetitions = 1, .cooling_wait = 3.0 * cd.cooling.tau_resistive, .n_initial = 20000};
    cd.plan.repetitions =
        repetitions_for_error(spin_flip_signal(s, cd.analysis_zone, cd.noise, cd.cooling, cd.plan), 0.01);
    return cd;
}

/// Reference scan matching a target scan line-for-line: detunings and Rabi
/// rate scaled by the ratio of the Larmor frequencies.
inline ScanPlan scaled_scan(const ScanPlan &plan, double scale, int shots) {
    ScanPlan p = plan;
    p.shots = shots;
    p.rabi *= scale;
    p.probe_time /= scale;
    for (double &d : p.detunings) d *= scale;
    return p;
}

inline CampaignConfig default_campaign_config() {
    CampaignConfig cfg;
    cfg.precision_zone.B0 = 1.945;
    cfg.precision_zone.d_char = 1e-3;
    const double wz = 2.0 * constants::pi * 674e3;
    cfg.precision_zone.V0 = wz * wz * 1e-6 / (2.0 * cfg.target.charge_to_mass() * cfg.precision_zone.c2);
    cfg.precision_zone.tilt = 1e-3;
    cfg.precision_zone.ellipticity = 1e-3;
    cfg.target_scan = ScanPlan::symmetric(21, 2.0, 50, constants::pi / 0.02);
    const double scale = larmor_frequency(cfg.reference, 1.0) / larmor_frequency(cfg.target, 1.0);
    cfg.reference_scan = scaled_scan(cfg.target_scan, scale, cfg.target_scan.shots);
    cfg.reference_snapshot = ScanPlan::symmetric(11, 2.0, 20, cfg.reference_scan.rabi);
    cfg.readout.fidelity_probe = 0.999;
    cfg.readout.fidelity_proton_sideband = 0.98;
    cfg.readout.fidelity_exchange = 0.97;
    cfg.readout.fidelity_be_sideband = 0.99;
    cfg.readout.fidelity_detection = 0.995;
    cfg.reference_fidelity = 0.995;
    cfg.classical = default_classical_detection(cfg.target);
    cfg.drift = {.linear_rate = 1e-11, .random_walk_amplitude = 1e-11};
    return cfg;
}

struct CycleLog {
    int window = 0;
    double t_start = 0.0, t_end = 0.0;
    double omega_larmor = 0.0, omega_larmor_sigma = 0.0;
    double omega_c = 0.0, omega_c_sigma = 0.0;
    double flywheel_ratio = 0.0;
    double g = 0.0, g_sigma = 0.0;
    bool ok = true;
    std::string failure;
};

struct CampaignReport {
    CampaignMode mode = CampaignMode::quantum_logic;
    std::uint64_t seed = 0;
    double g_estimate = 0.0;
    double g_sigma = 0.0;
    double total_wall_time = 0.0;
    double per_detection_time = 0.0;
    std::vector<CycleLog> cycles;
    std::vector<ShotRecord> shots;
};

/// Reads the three eigenfrequencies with Gaussian noise and recombines them
/// through the invariance theorem.
struct CyclotronRead {
    double omega_c = 0.0;
    double sigma = 0.0;
};

inline CyclotronRead measure_cyclotron(const Species &s, const TrapZone &zone, double sigma_rel, bool noiseless,
                                       Rng &rng) {
    const ModeFrequencies m = perturbed_modes(s, zone);
    double w[3] = {m.omega_plus, m.omega_z, m.omega_minus};
    double var = 0.0;
    for (double &x : w) {
        const double sd = sigma_rel * x;
        if (!noiseless && sd > 0.0) x += std::normal_distribution<double>(0.0, sd)(rng);
        var += x * x * sd * sd;
    }
    CyclotronRead r;
    r.omega_c = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    r.sigma = std::sqrt(var) / r.omega_c;
    return r;
}

/// Full g-factor campaign. Each window: (cooling), Larmor scan of the target
/// (interleaved with the Be+ flywheel in quantum-logic mode), then a
/// cyclotron-frequency read with a Be+ snapshot scan. Per-window g values
/// are combined by inverse-variance weighting.
inline CampaignReport run_campaign(const CampaignConfig &cfg, std::uint64_t master_seed, std::uint64_t replica = 0,
                                   bool keep_shot_log = true) {
    if (cfg.windows < 1) throw ConfigError("campaign: windows must be >= 1", "campaign.windows");
    cfg.precision_zone.validate();
    const bool ql = cfg.mode == CampaignMode::quantum_logic;
    const bool flywheel = ql && cfg.flywheel;

    Rng shot_rng = make_stream(master_seed, "campaign/shots", replica);
    Rng read_rng = make_stream(master_seed, "campaign/cyclotron", replica);
    FieldDrift drift(cfg.precision_zone.B0, cfg.drift, make_stream(master_seed, "campaign/drift", replica));

    ReadoutPhysics readout = cfg.readout;
    readout.larmor_probe_time = cfg.target_scan.probe_time;
    const ReadoutSequence seq = make_readout_sequence(readout);
    const Discriminator target_disc = ql ? quantum_logic_discriminator(seq) : classical_discriminator(cfg.target, cfg.classical);
    const Discriminator ref_disc = direct_fluorescence_discriminator(
        cfg.reference_fidelity, cfg.reference_scan.probe_time + cfg.reference_detection_time);
    const Discriminator snap_disc = direct_fluorescence_discriminator(
        cfg.reference_fidelity, cfg.reference_snapshot.probe_time + cfg.reference_detection_time);

    const double B0 = cfg.precision_zone.B0;
    const double target_guess = larmor_frequency(cfg.target, B0) + cfg.center_guess_offset;
    const double ref_guess = larmor_frequency(cfg.reference, B0);

    CampaignReport rep;
    rep.mode = cfg.mode;
    rep.seed = master_seed;
    rep.per_detection_time = target_disc.duration;
    const ScanOptions opts{cfg.interleave, cfg.expected_values, keep_shot_log ? &rep.shots : nullptr};

    double clock = 0.0;
    double wsum = 0.0, gsum = 0.0;
    for (int w = 0; w < cfg.windows; ++w) {
        CycleLog cyc;
        cyc.window = w;
        cyc.t_start = clock;
        if (ql) clock += cfg.cooling_time;

        std::vector<ScanTarget> targets{{"target_larmor", &cfg.target, target_guess, cfg.target_scan, &target_disc}};
        if (flywheel) targets.push_back({"reference_larmor", &cfg.reference, ref_guess, cfg.reference_scan, &ref_disc});
        const auto scans = scan_interleaved(targets, drift, clock, shot_rng, opts);

        // Cyclotron read, with a Be+ snapshot running alongside it.
        const double read_start = clock;
        double t_read = read_start + 0.5 * cfg.cyclotron_read_time;
        LineshapeScan snap;
        if (flywheel) {
            const double snap_shots =
                static_cast<double>(cfg.reference_snapshot.shots) * static_cast<double>(cfg.reference_snapshot.detunings.size());
            t_read = read_start + 0.5 * (snap_shots - 1.0) * snap_disc.duration;
            drift.mark(t_read);
            snap = scan_interleaved({ScanTarget{"reference_snapshot", &cfg.reference, ref_guess, cfg.reference_snapshot, &snap_disc}},
                                    drift, clock, shot_rng, opts)
                       .front();
        } else {
            drift.mark(t_read);
        }
        TrapZone zone = cfg.precision_zone;
        zone.B0 = drift.marked(t_read);
        const CyclotronRead cr = measure_cyclotron(cfg.target, zone, cfg.cyclotron_read_sigma_rel, cfg.expected_values, read_rng);
        clock = std::max(clock, read_start + cfg.cyclotron_read_time);
        cyc.omega_c = cr.omega_c;
        cyc.omega_c_sigma = cr.sigma;
        cyc.t_end = clock;

        // A window whose line cannot be fitted is logged and left out.
        try {
            const ResonanceFit target_fit = fit_resonance(scans[0]);
            cyc.omega_larmor = target_fit.omega_hat;
            cyc.omega_larmor_sigma = target_fit.sigma;
            if (flywheel) {
                const ResonanceFit ref_fit = fit_resonance(scans[1]);
                const FlywheelResult fw = flywheel_correct({timed(scans[0], target_fit)}, {timed(scans[1], ref_fit)});
                const ResonanceFit snap_fit = fit_resonance(snap);
                cyc.flywheel_ratio = fw.ratio;
                cyc.omega_larmor = fw.ratio * snap_fit.omega_hat;
                cyc.omega_larmor_sigma =
                    cyc.omega_larmor * std::hypot(fw.sigma / fw.ratio, snap_fit.sigma / snap_fit.omega_hat);
            }
            cyc.g = g_from_frequencies(cyc.omega_larmor, cr.omega_c);
            cyc.g_sigma = cyc.g * std::hypot(cyc.omega_larmor_sigma / cyc.omega_larmor, cr.sigma / cr.omega_c);
            const double wt = 1.0 / (cyc.g_sigma * cyc.g_sigma);
            wsum += wt;
            gsum += wt * cyc.g;
        } catch (const EstimationError &e) {
            cyc.ok = false;
            cyc.failure = e.what();
        }
        rep.cycles.push_back(cyc);
    }
    if (!(wsum > 0.0))
        throw EstimationError("campaign: no window produced a usable resonance fit (" + rep.cycles.back().failure + ")",
                              {});
    rep.g_estimate = gsum / wsum;
    rep.g_sigma = 1.0 / std::sqrt(wsum);
    rep.total_wall_time = clock;
    return rep;
}

}  // namespace qlgf
