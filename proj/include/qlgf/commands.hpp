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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qlgf/classical.hpp"
#include "qlgf/config.hpp"
#include "qlgf/errors.hpp"
#include "qlgf/output.hpp"
#include "qlgf/parallel.hpp"
#include "qlgf/protocol.hpp"
#include "qlgf/qdyn.hpp"
#include "qlgf/rng.hpp"
#include "qlgf/trap.hpp"

namespace qlgf {

/// Everything a subcommand needs besides the config.
struct RunOptions {
    std::filesystem::path out_dir = "qlgf-out";
    std::string format = "csv";
    int threads = 1;
    std::string suffix;  // appended to every file stem (sweeps)
};

struct CommandResult {
    int exit_code = 0;
    std::vector<std::string> files;
    Json summary = Json::object();
    std::string text;  // human-readable report for stdout
};

// ---------------------------------------------------------------------------

inline CommandResult cmd_modes(const RunConfig &c, const RunOptions &o) {
    const Species s = make_species(c, c.modes.species);
    const TrapZone z = make_zone(c, c.modes.zone);
    Table t{{"omega_plus", "omega_minus", "omega_z", "omega_c", "invariance_residual", "stable"}, {}};
    CommandResult r;
    try {
        const ModeFrequencies m = perturbed_modes(s, z);
        t.add({m.omega_plus, m.omega_minus, m.omega_z, m.omega_c_free, m.invariance_residual(), true});
    } catch (const UnstableTrapError &e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        t.add({nan, nan, e.omega_z(), e.omega_c(), nan, false});
        r.exit_code = static_cast<int>(ExitCode::physics);
        r.text = std::string("unstable trap: ") + e.what() + "\n";
    }
    r.files.push_back(write_table(t, o.out_dir, "modes" + o.suffix, o.format));
    if (r.text.empty()) {
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            r.text += t.columns[i] + std::string(22 - std::min<std::size_t>(21, t.columns[i].size()), ' ') +
                      cell_text(t.rows[0][i]) + "\n";
    }
    return r;
}

// ---------------------------------------------------------------------------

inline CommandResult cmd_invariance(const RunConfig &c, const RunOptions &o) {
    const InvarianceSection &v = c.invariance;
    const Species s = make_species(c, v.species);
    const TrapZone base = make_zone(c, v.zone);
    struct Row {
        double tilt, ellipticity;
        ModeFrequencies m;
        bool stable;
    };
    const auto rows = parallel_map(static_cast<std::size_t>(v.cases), o.threads, [&](std::size_t i) {
        Rng rng = make_stream(c.master_seed, "invariance/case", i);
        std::uniform_real_distribution<double> tilt(0.0, v.max_tilt), ell(0.0, v.max_ellipticity);
        TrapZone z = base;
        z.tilt = tilt(rng);
        z.ellipticity = ell(rng);
        try {
            return Row{z.tilt, z.ellipticity, perturbed_modes(s, z), true};
        } catch (const UnstableTrapError &) {
            return Row{z.tilt, z.ellipticity, {}, false};
        }
    });
    Table t{{"case", "tilt_rad", "ellipticity", "omega_plus", "omega_minus", "omega_z", "omega_c", "relative_residual",
             "stable"},
            {}};
    double worst = 0.0;
    int unstable = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row &r = rows[i];
        const double res = r.stable ? r.m.invariance_residual() : std::numeric_limits<double>::quiet_NaN();
        if (r.stable) worst = std::max(worst, res);
        else ++unstable;
        t.add({static_cast<std::int64_t>(i), r.tilt, r.ellipticity, r.m.omega_plus, r.m.omega_minus, r.m.omega_z,
               r.m.omega_c_free, res, r.stable});
    }
    constexpr double tolerance = 1e-9;
    CommandResult out;
    out.files.push_back(write_table(t, o.out_dir, "invariance" + o.suffix, o.format));
    out.summary = {{"cases", v.cases},           {"unstable_cases", unstable}, {"max_relative_residual", worst},
                   {"tolerance", tolerance},     {"pass", worst <= tolerance}, {"seed", c.master_seed}};
    out.files.push_back("invariance_summary" + o.suffix + ".json");
    write_file(o.out_dir / out.files.back(), dump_json(out.summary));
    out.text = "max relative residual " + format_number(worst) + " over " + std::to_string(v.cases) + " cases\n";
    if (worst > tolerance) out.exit_code = static_cast<int>(ExitCode::numerical);
    return out;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void add_populations(Table &t, double time, const std::string &prefix, const SpinMotionState &shape,
                            const std::vector<double> &pop) {
    for (std::size_t i = 0; i < pop.size(); ++i) t.add({time, prefix + shape.basis_label(i), pop[i]});
}

inline std::vector<double> populations(const SpinMotionState &s) {
    std::vector<double> p(s.dimension());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(s.amplitudes(static_cast<Eigen::Index>(i)));
    return p;
}

}  // namespace detail

inline CommandResult cmd_exchange(const RunConfig &c, const RunOptions &o) {
    const ExchangeSection &x = c.exchange;
    const DoubleWell dw = make_double_well(c);
    const DecoherenceModel deco = make_decoherence(c);
    const double rate = exchange_rate(dw);
    const double swap = exchange_swap_time(dw);
    const double duration = x.duration > 0.0 ? x.duration : swap;
    const double detuning = 2.0 * constants::pi * x.detuning_hz;
    const SpinMotionState initial = SpinMotionState::basis(x.n_max, spin_down, x.initial_n_a, x.initial_n_b);
    const auto steps = static_cast<std::size_t>(x.steps);
    const double dt = duration / static_cast<double>(steps);

    // history[k] = populations at t = k dt, averaged over trajectories.
    const std::size_t trajectories = deco.active() ? static_cast<std::size_t>(x.trajectories) : 1;
    const auto runs = parallel_map(trajectories, o.threads, [&](std::size_t k) {
        std::vector<std::vector<double>> h;
        h.reserve(steps + 1);
        if (!deco.active()) {
            for (std::size_t i = 0; i <= steps; ++i)
                h.push_back(detail::populations(evolve_exchange(initial, dw, detuning, dt * static_cast<double>(i))));
            return h;
        }
        Rng rng = make_stream(c.master_seed, "exchange/trajectory", k);
        SpinMotionState s = initial;
        h.push_back(detail::populations(s));
        for (std::size_t i = 1; i <= steps; ++i) {
            s = evolve_exchange(s, dw, detuning, dt);
            apply_decoherence(s, deco, dt, rng);
            h.push_back(detail::populations(s));
        }
        return h;
    });
    std::vector<std::vector<double>> mean = runs[0];
    for (std::size_t k = 1; k < runs.size(); ++k)
        for (std::size_t i = 0; i <= steps; ++i)
            for (std::size_t j = 0; j < mean[i].size(); ++j) mean[i][j] += runs[k][i][j];
    for (auto &row : mean)
        for (double &p : row) p /= static_cast<double>(runs.size());

    Table t{{"time_s", "basis_label", "population"}, {}};
    for (std::size_t i = 0; i <= steps; ++i) detail::add_populations(t, dt * static_cast<double>(i), "", initial, mean[i]);

    const std::size_t swapped = initial.index(spin_down, x.initial_n_b, x.initial_n_a);
    CommandResult r;
    r.files.push_back(write_table(t, o.out_dir, "exchange_populations" + o.suffix, o.format));
    r.summary = {{"species_a", x.species_a},
                 {"species_b", x.species_b},
                 {"separation_m", dw.separation},
                 {"omega_a_rad_s", dw.omega_a},
                 {"omega_b_rad_s", dw.omega_b},
                 {"exchange_rate_rad_s", rate},
                 {"swap_time_s", swap},
                 {"duration_s", duration},
                 {"final_swapped_population", mean[steps][swapped]},
                 {"trajectories", trajectories},
                 {"seed", c.master_seed}};
    r.files.push_back("exchange_summary" + o.suffix + ".json");
    write_file(o.out_dir / r.files.back(), dump_json(r.summary));
    r.text = "exchange rate " + format_number(rate) + " rad/s, swap time " + format_number(swap) + " s\n";
    return r;
}

// ---------------------------------------------------------------------------

/// Staged coherent simulation of the readout chain, handing populations from
/// one stage to the next incoherently: proton red-sideband pi pulse, motional
/// exchange to Be+, Be+ red-sideband pi pulse. Also runs the branching model
/// of the full sequence.
inline CommandResult cmd_readout(const RunConfig &c, const RunOptions &o) {
    const ReadoutSection &rs = c.readout;
    const ReadoutPhysics phys = make_readout_physics(c, c.campaign.target, c.campaign.reference);
    const ReadoutSequence seq = make_readout_sequence(phys);
    const bool up = rs.spin == "up";
    const int nm = rs.n_max;
    const auto steps = static_cast<std::size_t>(rs.steps);
    Table t{{"time_s", "basis_label", "population"}, {}};

    // Stage 1: proton spin -> proton motion.
    const double t1 = phys.proton_drive.pi_time(1);
    const SpinMotionState p0 = SpinMotionState::basis(nm, up ? spin_up : spin_down, 0);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double ti = t1 * static_cast<double>(i) / static_cast<double>(steps);
        detail::add_populations(t, ti, "proton:", p0, detail::populations(evolve_pulse(p0, phys.proton_drive, ti)));
    }
    const std::vector<double> proton_motion = evolve_pulse(p0, phys.proton_drive, t1).fock_populations();

    // Stage 2: proton motion -> Be+ motion, each Fock component separately.
    const double t2 = exchange_swap_time(phys.well);
    const SpinMotionState two(nm, 2);
    std::vector<double> be_motion(static_cast<std::size_t>(nm + 1), 0.0);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double ti = t2 * static_cast<double>(i) / static_cast<double>(steps);
        std::vector<double> pop(two.dimension(), 0.0);
        for (int n = 0; n <= nm; ++n) {
            const double w = proton_motion[static_cast<std::size_t>(n)];
            if (w == 0.0) continue;
            const auto p = detail::populations(
                evolve_exchange(SpinMotionState::basis(nm, spin_down, n, 0), phys.well, 0.0, ti));
            for (std::size_t j = 0; j < p.size(); ++j) pop[j] += w * p[j];
        }
        detail::add_populations(t, t1 + ti, "exchange:", two, pop);
        if (i == steps)
            for (int a = 0; a <= nm; ++a)
                for (int b = 0; b <= nm; ++b) be_motion[static_cast<std::size_t>(b)] += pop[two.index(spin_down, a, b)];
    }

    // Stage 3: Be+ motion -> Be+ spin.
    const double t3 = phys.be_drive.pi_time(1);
    const SpinMotionState one(nm, 1);
    double bright = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double ti = t3 * static_cast<double>(i) / static_cast<double>(steps);
        std::vector<double> pop(one.dimension(), 0.0);
        for (int n = 0; n <= nm; ++n) {
            const double w = be_motion[static_cast<std::size_t>(n)];
            if (w == 0.0) continue;
            const auto p =
                detail::populations(evolve_pulse(SpinMotionState::basis(nm, spin_down, n), phys.be_drive, ti));
            for (std::size_t j = 0; j < p.size(); ++j) pop[j] += w * p[j];
        }
        detail::add_populations(t, t1 + t2 + ti, "be:", one, pop);
        if (i == steps)
            for (int n = 0; n <= nm; ++n) bright += pop[one.index(spin_up, n)];
    }

    // Branching model, in fixed-size chunks with their own substreams.
    constexpr std::size_t chunk = 10000;
    const auto total = static_cast<std::size_t>(rs.runs);
    const std::size_t chunks = (total + chunk - 1) / chunk;
    const auto counts = parallel_map(chunks, o.threads, [&](std::size_t k) {
        Rng rng = make_stream(c.master_seed, "readout/branching", k);
        const std::size_t n = std::min(chunk, total - k * chunk);
        std::int64_t b = 0;
        for (std::size_t i = 0; i < n; ++i) b += run_readout(up, seq, rng).bright ? 1 : 0;
        return b;
    });
    std::int64_t bright_count = 0;
    for (auto b : counts) bright_count += b;
    const double fidelity = seq.assignment_fidelity();

    CommandResult r;
    r.files.push_back(write_table(t, o.out_dir, "readout_populations" + o.suffix, o.format));
    Json steps_json = Json::array();
    for (const auto &s : seq.steps)
        steps_json.push_back({{"step", to_string(s.kind)}, {"duration_s", s.duration}, {"fidelity", s.fidelity}});
    r.summary = {{"spin", rs.spin},
                 {"coherent_bright_probability", bright},
                 {"stage_durations_s", {t1, t2, t3}},
                 {"sequence", steps_json},
                 {"sequence_duration_s", seq.total_duration()},
                 {"assignment_fidelity", fidelity},
                 {"expected_bright_fraction", up ? fidelity : 1.0 - fidelity},
                 {"runs", rs.runs},
                 {"bright_fraction", static_cast<double>(bright_count) / static_cast<double>(total)},
                 {"seed", c.master_seed}};
    r.files.push_back("readout_summary" + o.suffix + ".json");
    write_file(o.out_dir / r.files.back(), dump_json(r.summary));
    r.text = "readout duration " + format_number(seq.total_duration()) + " s, assignment fidelity " +
             format_number(fidelity) + "\n";
    return r;
}

// ---------------------------------------------------------------------------

inline CommandResult cmd_classical(const RunConfig &c, const RunOptions &o) {
    const ClassicalSection &k = c.classical;
    const Species s = make_species(c, k.species);
    const ClassicalDetection cd = make_classical_detection(c);
    struct Trial {
        SpinFlipDetection det;
        bool flip;
    };
    const auto trials = parallel_map(static_cast<std::size_t>(k.trials), o.threads, [&](std::size_t i) {
        Rng rng = make_stream(c.master_seed, "classical/trial", i);
        const bool flip = i % 2 == 0;
        return Trial{detect_spin_flip(s, cd.analysis_zone, cd.noise, cd.cooling, cd.plan, flip, rng), flip};
    });
    Table t{{"trial", "n_plus_mean", "error_prob", "wall_time_s", "decision_correct"}, {}};
    int wrong = 0;
    double wall = 0.0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto &tr = trials[i];
        const bool correct = tr.det.decision == tr.flip;
        if (!correct) ++wrong;
        wall = double_trap_cycle(cd.timings, tr.det);
        t.add({static_cast<std::int64_t>(i), tr.det.n_plus_mean, tr.det.error_prob, wall, correct});
    }
    CommandResult r;
    r.files.push_back(write_table(t, o.out_dir, "classical_baseline" + o.suffix, o.format));
    r.summary = {{"species", k.species},
                 {"trials", k.trials},
                 {"repetitions", cd.plan.repetitions},
                 {"error_prob", trials.front().det.error_prob},
                 {"empirical_error_rate", static_cast<double>(wrong) / static_cast<double>(trials.size())},
                 {"detection_wall_time_s", trials.front().det.wall_time},
                 {"cycle_wall_time_s", wall},
                 {"seed", c.master_seed}};
    r.files.push_back("classical_summary" + o.suffix + ".json");
    write_file(o.out_dir / r.files.back(), dump_json(r.summary));
    r.text = "detection error " + format_number(trials.front().det.error_prob) + " with " +
             std::to_string(cd.plan.repetitions) + " repetitions, cycle " + format_number(wall) + " s\n";
    return r;
}

// ---------------------------------------------------------------------------

inline Json campaign_json(const CampaignReport &rep, const CampaignConfig &cfg, std::uint64_t seed) {
    Json cycles = Json::array();
    for (const auto &cy : rep.cycles) {
        Json j = {{"window", cy.window}, {"t_start_s", cy.t_start}, {"t_end_s", cy.t_end}, {"ok", cy.ok}};
        if (cy.ok) {
            j["g"] = cy.g;
            j["g_sigma"] = cy.g_sigma;
            j["omega_larmor_rad_s"] = cy.omega_larmor;
            j["omega_c_rad_s"] = cy.omega_c;
        } else {
            j["failure"] = cy.failure;
        }
        cycles.push_back(std::move(j));
    }
    return {{"g_estimate", rep.g_estimate},
            {"g_sigma", rep.g_sigma},
            {"wall_time", rep.total_wall_time},
            {"mode", to_string(rep.mode)},
            {"seed", seed},
            {"g_true", cfg.target.g_factor()},
            {"per_detection_time_s", rep.per_detection_time},
            {"windows", cycles}};
}

inline CommandResult cmd_campaign(const RunConfig &c, const RunOptions &o) {
    const CampaignConfig cfg = make_campaign_config(c);
    const auto replicas = static_cast<std::size_t>(c.campaign.replicas);
    const bool log = c.campaign.shot_log;
    const auto reports = parallel_map(replicas, o.threads, [&](std::size_t k) {
        return run_campaign(cfg, c.master_seed, k, log);
    });
    CommandResult r;
    auto shots_table = [](const CampaignReport &rep) {
        Table t{{"timestamp_s", "kind", "detuning_rad_s", "outcome"}, {}};
        for (const auto &s : rep.shots)
            t.add({s.timestamp, s.kind, s.detuning, static_cast<std::int64_t>(s.outcome)});
        return t;
    };
    if (replicas == 1) {
        r.summary = campaign_json(reports[0], cfg, c.master_seed);
        if (log) r.files.push_back(write_table(shots_table(reports[0]), o.out_dir, "campaign_shots" + o.suffix, o.format));
    } else {
        double w = 0.0, gw = 0.0, wall = 0.0;
        Json reps = Json::array();
        for (std::size_t k = 0; k < replicas; ++k) {
            const auto &rep = reports[k];
            const double wk = rep.g_sigma > 0.0 ? 1.0 / (rep.g_sigma * rep.g_sigma) : 1.0;
            w += wk;
            gw += wk * rep.g_estimate;
            wall += rep.total_wall_time;
            Json j = campaign_json(rep, cfg, c.master_seed);
            j["replica"] = k;
            reps.push_back(std::move(j));
            if (log)
                r.files.push_back(write_table(shots_table(rep), o.out_dir,
                                              "campaign_shots" + o.suffix + "_r" + std::to_string(k), o.format));
        }
        const bool exact = std::all_of(reports.begin(), reports.end(), [](const auto &x) { return x.g_sigma == 0.0; });
        r.summary = {{"g_estimate", gw / w},
                     {"g_sigma", exact ? 0.0 : 1.0 / std::sqrt(w)},
                     {"wall_time", wall},
                     {"mode", to_string(cfg.mode)},
                     {"seed", c.master_seed},
                     {"g_true", cfg.target.g_factor()},
                     {"replicas", reps}};
    }
    r.files.insert(r.files.begin(), "campaign" + o.suffix + ".json");
    write_file(o.out_dir / r.files.front(), dump_json(r.summary));
    r.text = "g = " + format_number(r.summary["g_estimate"].get<double>()) + " +- " +
             format_number(r.summary["g_sigma"].get<double>()) + "\n";
    return r;
}

// ---------------------------------------------------------------------------

using Command = std::function<CommandResult(const RunConfig &, const RunOptions &)>;

inline const std::map<std::string, Command> &commands() {
    static const std::map<std::string, Command> table{
        {"modes", cmd_modes},           {"invariance-check", cmd_invariance}, {"exchange", cmd_exchange},
        {"readout-sim", cmd_readout},   {"classical-baseline", cmd_classical}, {"campaign", cmd_campaign}};
    return table;
}

inline std::string sanitize_for_filename(const std::string &s) {
    std::string out;
    for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '+') ? ch : '_';
    return out;
}

/// One run of `command` per value of the scalar field `path`. Run i uses
/// master seed derive_seed(master, "sweep", i) and file suffix
/// "_<i>_<value>". The coordinator writes sweep_index.<fmt> afterwards.
inline CommandResult cmd_sweep(const RunConfig &c, const RunOptions &o, const std::string &command,
                               const std::string &path, const std::vector<std::string> &values) {
    const auto it = commands().find(command);
    if (it == commands().end() || command == "sweep") throw UsageError("sweep: unknown subcommand '" + command + "'");
    if (values.empty()) throw UsageError("sweep: the value list is empty");
    std::vector<RunConfig> configs;
    for (std::size_t i = 0; i < values.size(); ++i) {
        RunConfig ci = c;
        set_field(ci, path, values[i]);
        ci.master_seed = derive_seed(c.master_seed, "sweep", i);
        try {
            validate_config(ci);
        } catch (const ConfigError &e) {
            throw ConfigError(std::string(e.what()) + " (sweep value " + values[i] + ")", path);
        }
        configs.push_back(std::move(ci));
    }
    // Runs are spread over the workers; each run is single-threaded.
    RunOptions inner = o;
    inner.threads = 1;
    struct Outcome {
        CommandResult result;
        std::string error;
    };
    const auto outcomes = parallel_map(values.size(), o.threads, [&](std::size_t i) {
        RunOptions oi = inner;
        oi.suffix = o.suffix + "_" + std::to_string(i) + "_" + sanitize_for_filename(values[i]);
        try {
            return Outcome{it->second(configs[i], oi), {}};
        } catch (const Error &e) {
            CommandResult failed;
            failed.exit_code = static_cast<int>(e.exit_code());
            return Outcome{failed, e.what()};
        }
    });
    Table index{{"index", "parameter", "value", "seed", "exit_code", "files", "error"}, {}};
    CommandResult r;
    Json runs = Json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto &oc = outcomes[i];
        std::string files;
        for (const auto &f : oc.result.files) files += (files.empty() ? "" : ";") + f;
        index.add({static_cast<std::int64_t>(i), path, values[i], std::to_string(configs[i].master_seed),
                   static_cast<std::int64_t>(oc.result.exit_code), files, oc.error});
        runs.push_back({{"index", i}, {"value", values[i]}, {"summary", oc.result.summary}});
        if (r.exit_code == 0) r.exit_code = oc.result.exit_code;
        r.files.insert(r.files.end(), oc.result.files.begin(), oc.result.files.end());
        r.text += "[" + std::to_string(i) + "] " + path + " = " + values[i] + ": " +
                  (oc.error.empty() ? oc.result.text : oc.error + "\n");
    }
    r.files.push_back(write_table(index, o.out_dir, "sweep_index" + o.suffix, o.format));
    r.summary = {{"command", command}, {"parameter", path}, {"seed", c.master_seed}, {"runs", runs}};
    return r;
}

}  // namespace qlgf
