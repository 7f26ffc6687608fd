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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qlgf/classical.hpp"
#include "qlgf/commands.hpp"
#include "qlgf/config.hpp"
#include "qlgf/protocol.hpp"
#include "qlgf/qdyn.hpp"
#include "qlgf/trap.hpp"

using namespace qlgf;
namespace fs = std::filesystem;

namespace {

const std::string kExample = std::string(QLGF_SOURCE_DIR) + "/configs/example.yaml";

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) { return format_number(x); }

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1. Invariance theorem on randomized perturbed traps.
Verdict invariance() {
    const auto t0 = std::chrono::steady_clock::now();
    const Species p = species::proton();
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int cases = 0, unstable = 0;
    while (cases < 1000) {
        TrapZone z;
        z.B0 = 0.5 + 5.0 * u(rng);
        z.d_char = 1e-3 * (0.5 + u(rng));
        // Axial frequency between 5% and 50% of the cyclotron frequency.
        const double wc = free_cyclotron_frequency(p, z.B0);
        const double wz = wc * (0.05 + 0.45 * u(rng));
        z.V0 = wz * wz * z.d_char * z.d_char / (2.0 * p.charge_to_mass() * z.c2);
        z.tilt = 0.05 * u(rng);
        z.ellipticity = 0.2 * u(rng);
        try {
            worst = std::max(worst, perturbed_modes(p, z).invariance_residual());
            ++cases;
        } catch (const UnstableTrapError &) {
            ++unstable;
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst <= 1e-9 && elapsed < 10.0,
            "max relative residual " + num(worst) + " over 1000 traps (tol 1e-9, " + std::to_string(unstable) +
                " unstable draws skipped), " + num(elapsed) + " s (limit 10 s)"};
}

// 2. g closure: noiseless exactness and 3-sigma coverage of noisy replicas.
Verdict closure() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig rc = load_config(kExample).config;
    const CampaignConfig base = make_campaign_config(rc);
    const double g_true = base.target.g_factor();

    CampaignConfig quiet = base;
    quiet.expected_values = true;
    quiet.drift = {};
    quiet.center_guess_offset = 0.3 * quiet.target_scan.rabi;
    const double noiseless = std::abs(run_campaign(quiet, rc.master_seed, 0, false).g_estimate / g_true - 1.0);

    int inside = 0, failed = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        try {
            const CampaignReport rep = run_campaign(base, rc.master_seed, r, false);
            inside += std::abs(rep.g_estimate - g_true) < 3.0 * rep.g_sigma;
        } catch (const EstimationError &) {
            ++failed;
        }
    }
    const double elapsed = seconds_since(t0);
    return {noiseless <= 1e-10 && inside >= 99 && elapsed < 300.0,
            "noiseless relative error " + num(noiseless) + " (tol 1e-10); " + std::to_string(inside) +
                "/100 noisy replicas within 3 sigma (need 99, " + std::to_string(failed) + " failed fits); " +
                num(elapsed) + " s (limit 300 s)"};
}

// 3. Propagators against the dense matrix exponential.
Verdict oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(3003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g;
    auto random_state = [&](int n_max, int modes) {
        SpinMotionState s(n_max, modes, 2.0);
        for (Eigen::Index i = 0; i < s.amplitudes.size(); ++i) s.amplitudes(i) = Complex(g(rng), g(rng));
        s.amplitudes.normalize();
        return s;
    };
    double worst = 1.0;
    for (int c = 0; c < 100; ++c) {
        const int n_max = 1 + static_cast<int>(u(rng) * 8.0);  // 1..8
        oracle::Vec ref;
        Eigen::VectorXcd got;
        if (c % 4 == 3) {
            DoubleWell dw;
            dw.separation = (100.0 + 800.0 * u(rng)) * 1e-6;
            const double rate = exchange_rate(dw);
            const double delta = (u(rng) - 0.5) * 4.0 * rate;
            const double t = (0.1 + 6.0 * u(rng)) / rate;
            const SpinMotionState s = random_state(n_max, 2);
            got = evolve_exchange(s, dw, delta, t).amplitudes;
            ref = oracle::propagator(oracle::exchange_hamiltonian(n_max, rate, delta), t) * s.amplitudes;
        } else {
            SidebandDrive d;
            d.kind = static_cast<DriveKind>(c % 3);
            d.rabi = 2.0 * constants::pi * (1e3 + 1e5 * u(rng));
            d.lamb_dicke = 0.45 * u(rng);
            d.detuning = (u(rng) - 0.5) * d.rabi;
            d.phase = 2.0 * constants::pi * u(rng);
            const double t = (0.1 + 50.0 * u(rng)) / d.rabi;
            const SpinMotionState s = random_state(n_max, 1);
            got = evolve_pulse(s, d, t).amplitudes;
            ref = oracle::propagator(oracle::pulse_hamiltonian(n_max, c % 3, d.rabi, d.lamb_dicke, d.detuning, d.phase), t) *
                  s.amplitudes;
            worst = std::min(worst, oracle::fidelity(pulse_unitary(n_max, d, t) * s.amplitudes, ref));
        }
        worst = std::min(worst, oracle::fidelity(got, ref));
    }
    const double elapsed = seconds_since(t0);
    return {1.0 - worst <= 1e-8 && elapsed < 60.0,
            "worst infidelity " + num(1.0 - worst) + " over 100 cases, n_max <= 8 (tol 1e-8), " + num(elapsed) +
                " s (limit 60 s)"};
}

// 4. Quantum swap time against the classical normal-mode beat.
Verdict exchange_consistency() {
    const RunConfig rc = load_config(kExample).config;
    DoubleWell dw = make_double_well(rc);
    dw.separation = 300e-6;
    const double half_split = oracle::classical_half_splitting(dw.species_a.charge(), dw.species_b.charge(),
                                                               dw.species_a.mass(), dw.species_b.mass(),
                                                               dw.separation, dw.omega_a);
    // Energy moves fully from one well to the other in half a beat period.
    const double beat_transfer = constants::pi / (2.0 * half_split);
    const double swap = exchange_swap_time(dw);
    const double rel = std::abs(swap / beat_transfer - 1.0);
    return {rel <= 0.01, "swap time " + num(swap) + " s vs classical transfer time " + num(beat_transfer) +
                             " s at d = 300 um, relative difference " + num(rel) + " (tol 0.01)"};
}

// 5. Per-detection wall time of both schemes under the shipped config.
Verdict cycle_times() {
    const RunConfig rc = load_config(kExample).config;
    const CampaignConfig cfg = make_campaign_config(rc);
    const CampaignReport ql = run_campaign(cfg, rc.master_seed, 0, false);
    const ClassicalDetection cd = make_classical_detection(rc);
    Rng rng = make_stream(rc.master_seed, "acceptance/classical");
    const SpinFlipDetection det =
        detect_spin_flip(make_species(rc, rc.classical.species), cd.analysis_zone, cd.noise, cd.cooling, cd.plan, true, rng);
    const bool tau_ok = cd.cooling.tau_resistive == 100.0;
    return {ql.per_detection_time < 1.0 && det.wall_time > 3600.0 && tau_ok,
            "quantum logic " + num(ql.per_detection_time) + " s (< 1 s); classical " + num(det.wall_time) + " s (> 3600 s) with tau " +
                num(cd.cooling.tau_resistive) + " s, " + std::to_string(cd.plan.repetitions) + " repetitions for error " +
                num(det.error_prob) + "; assumptions: B2 " + num(cd.analysis_zone.B2) + " T/m^2, sigma0 " +
                num(cd.noise.sigma0) + " rad/s, n_initial " + std::to_string(cd.plan.n_initial) + ", wait " +
                num(cd.plan.cooling_wait) + " s, axial sample " + num(cd.noise.detection_time) + " s"};
}

// 6. Axial jitter grows as sqrt(n+ + 1).
Verdict noise_law() {
    const AxialNoiseModel nm{.sigma0 = 0.05, .detection_time = 60.0};
    const double wz = 2.0 * constants::pi * 674e3;
    Rng rng = make_stream(6006, "acceptance/noise");
    auto stddev = [&](long n) {
        double s = 0.0, s2 = 0.0;
        const int samples = 100000;
        for (int i = 0; i < samples; ++i) {
            const double d = axial_sample(wz, n, nm, rng) - wz;
            s += d;
            s2 += d * d;
        }
        const double mean = s / samples;
        return std::sqrt((s2 / samples - mean * mean) * samples / (samples - 1.0));
    };
    const double ratio = stddev(99) / stddev(0);
    return {std::abs(ratio / 10.0 - 1.0) <= 0.05,
            "std ratio n+ = 99 vs 0: " + num(ratio) + " over 1e5 samples each (10 +- 5%)"};
}

int run_cli(const std::string &args, const fs::path &log) {
    const std::string cmd = std::string(QLGF_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 7. Byte-identical outputs across repeated runs and thread counts.
Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / ("qlgf_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const std::vector<std::string> runs{
        "modes",
        "invariance-check",
        "exchange",
        "--set exchange.heating_rate=50 --set exchange.spin_t2=0.01 --set exchange.trajectories=16 exchange",
        "readout-sim",
        "classical-baseline",
        "campaign",
        "--set campaign.replicas=4 campaign",
        "sweep exchange --param exchange.separation --values 100e-6,300e-6,900e-6",
        "--set classical.repetitions=5 sweep classical-baseline --param zones.analysis.B2 --values 1e5,2e5,3e5",
    };
    int compared = 0;
    std::string problem;
    for (std::size_t i = 0; i < runs.size() && problem.empty(); ++i) {
        std::vector<fs::path> dirs;
        for (const auto &[tag, threads] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 4}}) {
            const fs::path dir = root / (std::to_string(i) + tag);
            const int code = run_cli("--config " + kExample + " --seed 12345 --threads " + std::to_string(threads) +
                                         " --out " + dir.string() + " " + runs[i],
                                     root / "log.txt");
            if (code != 0) problem = "'" + runs[i] + "' exited " + std::to_string(code);
            dirs.push_back(dir);
        }
        if (!problem.empty()) break;
        for (const auto &e : fs::directory_iterator(dirs[0])) {
            const std::string a = slurp(e.path());
            for (std::size_t k = 1; k < dirs.size(); ++k)
                if (slurp(dirs[k] / e.path().filename()) != a)
                    problem = "'" + runs[i] + "' differs in " + e.path().filename().string();
            ++compared;
        }
    }
    fs::remove_all(root);
    if (!problem.empty()) return {false, problem};
    return {compared > 0, std::to_string(compared) + " files from " + std::to_string(runs.size()) +
                              " invocations identical across two single-threaded runs and a 4-thread run"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"invariance theorem", invariance},
        {"g closure", closure},
        {"oracle equivalence", oracle_equivalence},
        {"exchange consistency", exchange_consistency},
        {"cycle-time ordering", cycle_times},
        {"noise law", noise_law},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception &e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += !v.pass;
        std::printf("%s  %zu  %-22s %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures;
}
