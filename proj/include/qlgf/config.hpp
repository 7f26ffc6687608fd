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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "qlgf/classical.hpp"
#include "qlgf/errors.hpp"
#include "qlgf/protocol.hpp"
#include "qlgf/qdyn.hpp"
#include "qlgf/species.hpp"
#include "qlgf/trap.hpp"

namespace qlgf {

/// Environment variable naming the directory searched for configs.
inline constexpr const char *kConfigDirEnv = "QLGF_CONFIG_DIR";
/// File looked up in that directory when no --config is given.
inline constexpr const char *kDefaultConfigName = "qlgf.yaml";

/// kind: proton | antiproton | be9_ion | custom. The physical fields apply to
/// custom species; be9_ion takes spin_moment when it is positive.
struct SpeciesSpec {
    std::string kind = "custom";
    double charge_e = 1.0;
    double mass_u = 1.0;
    double g_factor = 2.0;
    double spin_moment = 0.0;  // J/T, overrides g_factor when positive
    bool operator==(const SpeciesSpec &) const = default;
};

struct ZoneSpec {
    double B0 = 1.0, B2 = 0.0, V0 = 1.0, d_char = 1e-3, c2 = 0.5, tilt = 0.0, ellipticity = 0.0;
    bool operator==(const ZoneSpec &) const = default;
};

struct OutputSection {
    std::string directory = "qlgf-out";
    std::string format = "csv";
    bool operator==(const OutputSection &) const = default;
};

struct ModesSection {
    std::string species = "proton";
    std::string zone = "precision";
    bool operator==(const ModesSection &) const = default;
};

struct InvarianceSection {
    std::string species = "proton";
    std::string zone = "precision";
    int cases = 1000;
    double max_tilt = 0.05;
    double max_ellipticity = 0.2;
    bool operator==(const InvarianceSection &) const = default;
};

struct ClassicalSection {
    std::string species = "proton";
    std::string zone = "analysis";
    double tau_resistive = 100.0;
    double temperature = 4.2;
    double sigma0 = 0.012;
    double detection_time = 60.0;
    double cooling_wait = 300.0;
    long n_initial = 20000;
    int repetitions = 0;  // 0: smallest odd count reaching target_error
    double target_error = 0.01;
    double transport_time = 10.0;
    double interrogation_time = 60.0;
    int trials = 100;
    bool operator==(const ClassicalSection &) const = default;
};

struct ExchangeSection {
    std::string species_a = "proton";
    std::string species_b = "be9";
    double separation = 300e-6;
    double freq_a_hz = 1e6;
    double freq_b_hz = 1e6;
    double detuning_hz = 0.0;
    int n_max = 8;
    int initial_n_a = 1;
    int initial_n_b = 0;
    double duration = 0.0;  // 0: one full swap
    int steps = 100;
    double heating_rate = 0.0;  // quanta/s
    double spin_t2 = 0.0;       // s, 0 disables dephasing
    int trajectories = 1;
    bool operator==(const ExchangeSection &) const = default;
};

struct ReadoutSection {
    double larmor_probe_time = 0.02;
    double proton_rabi_hz = 2e3;
    double proton_lamb_dicke = 0.05;
    double be_rabi_hz = 250e3;
    double be_lamb_dicke = 0.2;
    double detection_time = 400e-6;
    double fidelity_probe = 0.999;
    double fidelity_proton_sideband = 0.98;
    double fidelity_exchange = 0.97;
    double fidelity_be_sideband = 0.99;
    double fidelity_detection = 0.995;
    std::string spin = "up";
    int n_max = 8;
    int steps = 50;
    int runs = 100000;
    bool operator==(const ReadoutSection &) const = default;
};

struct CampaignSection {
    std::string mode = "quantum_logic";
    std::string target = "proton";
    std::string reference = "be9";
    std::string zone = "precision";
    int windows = 4;
    int replicas = 1;
    int scan_points = 21;
    double scan_span_linewidths = 2.0;
    int scan_shots = 50;
    double probe_time = 0.02;
    int snapshot_points = 11;
    int snapshot_shots = 20;
    double center_guess_offset_hz = 0.0;
    double reference_detection_time = 400e-6;
    double reference_fidelity = 0.995;
    bool flywheel = true;
    std::string interleave = "alternate";
    double cooling_time = 0.1;
    double cyclotron_read_time = 1.0;
    double cyclotron_read_sigma_rel = 1e-9;
    double drift_linear_rate = 1e-11;
    double drift_random_walk = 1e-11;
    bool expected_values = false;
    bool shot_log = true;
    bool operator==(const CampaignSection &) const = default;
};

inline ZoneSpec zone_spec(const TrapZone &z) { return {z.B0, z.B2, z.V0, z.d_char, z.c2, z.tilt, z.ellipticity}; }

struct RunConfig {
    std::uint64_t master_seed = 1;
    OutputSection output;
    std::map<std::string, SpeciesSpec> species{
        {"proton", {.kind = "proton"}}, {"antiproton", {.kind = "antiproton"}}, {"be9", {.kind = "be9_ion"}}};
    std::map<std::string, ZoneSpec> zones{{"precision", zone_spec(default_campaign_config().precision_zone)},
                                          {"analysis", zone_spec(default_classical_detection().analysis_zone)}};
    ModesSection modes;
    InvarianceSection invariance;
    ClassicalSection classical;
    ExchangeSection exchange;
    ReadoutSection readout;
    CampaignSection campaign;
    bool operator==(const RunConfig &) const = default;
};

/// Calls f(path, field) for every scalar of the config, in canonical order.
template <typename Config, typename F>
    requires std::is_same_v<std::remove_const_t<Config>, RunConfig>
void for_each_field(Config &c, F &&f) {
    f("master_seed", c.master_seed);
    f("output.directory", c.output.directory);
    f("output.format", c.output.format);
    for (auto &[name, s] : c.species) {
        const std::string p = "species." + name + ".";
        f(p + "kind", s.kind);
        f(p + "charge_e", s.charge_e);
        f(p + "mass_u", s.mass_u);
        f(p + "g_factor", s.g_factor);
        f(p + "spin_moment", s.spin_moment);
    }
    for (auto &[name, z] : c.zones) {
        const std::string p = "zones." + name + ".";
        f(p + "B0", z.B0);
        f(p + "B2", z.B2);
        f(p + "V0", z.V0);
        f(p + "d_char", z.d_char);
        f(p + "c2", z.c2);
        f(p + "tilt", z.tilt);
        f(p + "ellipticity", z.ellipticity);
    }
    f("modes.species", c.modes.species);
    f("modes.zone", c.modes.zone);
    f("invariance.species", c.invariance.species);
    f("invariance.zone", c.invariance.zone);
    f("invariance.cases", c.invariance.cases);
    f("invariance.max_tilt", c.invariance.max_tilt);
    f("invariance.max_ellipticity", c.invariance.max_ellipticity);
    auto &k = c.classical;
    f("classical.species", k.species);
    f("classical.zone", k.zone);
    f("classical.tau_resistive", k.tau_resistive);
    f("classical.temperature", k.temperature);
    f("classical.sigma0", k.sigma0);
    f("classical.detection_time", k.detection_time);
    f("classical.cooling_wait", k.cooling_wait);
    f("classical.n_initial", k.n_initial);
    f("classical.repetitions", k.repetitions);
    f("classical.target_error", k.target_error);
    f("classical.transport_time", k.transport_time);
    f("classical.interrogation_time", k.interrogation_time);
    f("classical.trials", k.trials);
    auto &x = c.exchange;
    f("exchange.species_a", x.species_a);
    f("exchange.species_b", x.species_b);
    f("exchange.separation", x.separation);
    f("exchange.freq_a_hz", x.freq_a_hz);
    f("exchange.freq_b_hz", x.freq_b_hz);
    f("exchange.detuning_hz", x.detuning_hz);
    f("exchange.n_max", x.n_max);
    f("exchange.initial_n_a", x.initial_n_a);
    f("exchange.initial_n_b", x.initial_n_b);
    f("exchange.duration", x.duration);
    f("exchange.steps", x.steps);
    f("exchange.heating_rate", x.heating_rate);
    f("exchange.spin_t2", x.spin_t2);
    f("exchange.trajectories", x.trajectories);
    auto &r = c.readout;
    f("readout.larmor_probe_time", r.larmor_probe_time);
    f("readout.proton_rabi_hz", r.proton_rabi_hz);
    f("readout.proton_lamb_dicke", r.proton_lamb_dicke);
    f("readout.be_rabi_hz", r.be_rabi_hz);
    f("readout.be_lamb_dicke", r.be_lamb_dicke);
    f("readout.detection_time", r.detection_time);
    f("readout.fidelity_probe", r.fidelity_probe);
    f("readout.fidelity_proton_sideband", r.fidelity_proton_sideband);
    f("readout.fidelity_exchange", r.fidelity_exchange);
    f("readout.fidelity_be_sideband", r.fidelity_be_sideband);
    f("readout.fidelity_detection", r.fidelity_detection);
    f("readout.spin", r.spin);
    f("readout.n_max", r.n_max);
    f("readout.steps", r.steps);
    f("readout.runs", r.runs);
    auto &m = c.campaign;
    f("campaign.mode", m.mode);
    f("campaign.target", m.target);
    f("campaign.reference", m.reference);
    f("campaign.zone", m.zone);
    f("campaign.windows", m.windows);
    f("campaign.replicas", m.replicas);
    f("campaign.scan_points", m.scan_points);
    f("campaign.scan_span_linewidths", m.scan_span_linewidths);
    f("campaign.scan_shots", m.scan_shots);
    f("campaign.probe_time", m.probe_time);
    f("campaign.snapshot_points", m.snapshot_points);
    f("campaign.snapshot_shots", m.snapshot_shots);
    f("campaign.center_guess_offset_hz", m.center_guess_offset_hz);
    f("campaign.reference_detection_time", m.reference_detection_time);
    f("campaign.reference_fidelity", m.reference_fidelity);
    f("campaign.flywheel", m.flywheel);
    f("campaign.interleave", m.interleave);
    f("campaign.cooling_time", m.cooling_time);
    f("campaign.cyclotron_read_time", m.cyclotron_read_time);
    f("campaign.cyclotron_read_sigma_rel", m.cyclotron_read_sigma_rel);
    f("campaign.drift_linear_rate", m.drift_linear_rate);
    f("campaign.drift_random_walk", m.drift_random_walk);
    f("campaign.expected_values", m.expected_values);
    f("campaign.shot_log", m.shot_log);
}

namespace detail {

struct Leaf {
    YAML::Node node;
    int line = -1, column = -1;
};

inline int yaml_line(const YAML::Mark &m) { return m.line < 0 ? -1 : m.line + 1; }
inline int yaml_column(const YAML::Mark &m) { return m.column < 0 ? -1 : m.column + 1; }

inline void flatten(const YAML::Node &node, const std::string &prefix, std::vector<std::pair<std::string, Leaf>> &out) {
    const YAML::Mark mark = node.Mark();
    switch (node.Type()) {
        case YAML::NodeType::Map:
            for (const auto &kv : node) {
                const std::string key = kv.first.as<std::string>();
                const std::string path = prefix.empty() ? key : prefix + "." + key;
                // Positions refer to the key, which is what a reader fixes.
                const YAML::Mark km = kv.first.Mark();
                if (kv.second.IsNull()) {
                    throw ConfigError("key '" + path + "' has no value", path, yaml_line(km), yaml_column(km));
                } else if (kv.second.IsScalar()) {
                    out.push_back({path, {kv.second, yaml_line(km), yaml_column(km)}});
                } else {
                    flatten(kv.second, path, out);
                }
            }
            return;
        case YAML::NodeType::Sequence:
            throw ConfigError("lists are not supported (key '" + prefix + "')", prefix, yaml_line(mark),
                              yaml_column(mark));
        default:
            throw ConfigError("key '" + prefix + "' has no value", prefix, yaml_line(mark), yaml_column(mark));
    }
}

template <typename T>
void parse_scalar(const YAML::Node &node, const std::string &key, int line, int column, T &out) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            out = node.as<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            out = node.as<std::string>();
        } else {
            out = node.as<T>();
        }
    } catch (const YAML::Exception &) {
        const char *want = std::is_same_v<T, bool>       ? "a boolean"
                           : std::is_floating_point_v<T> ? "a number"
                           : std::is_integral_v<T>       ? "an integer"
                                                         : "a string";
        throw ConfigError("'" + key + "' must be " + want + ", got '" + node.Scalar() + "'", key, line, column);
    }
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return ".nan";
    if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    // Keep doubles recognisable as floating point when re-read.
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

template <typename T>
std::string format_value(const T &v) {
    if constexpr (std::is_same_v<T, bool>) {
        return v ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
        return v;
    } else if constexpr (std::is_floating_point_v<T>) {
        return format_double(v);
    } else {
        return std::to_string(v);
    }
}

}  // namespace detail

/// Result of loading: the config plus every field that took its default.
struct LoadedConfig {
    RunConfig config;
    std::vector<std::string> defaulted;  // "path = value"
    std::string source;                  // file path, or empty for built-in defaults
};

/// Species and zone names referenced elsewhere in the config.
inline std::vector<std::pair<std::string, std::string>> references() {
    return {{"modes.species", "species"},      {"modes.zone", "zones"},        {"invariance.species", "species"},
            {"invariance.zone", "zones"},      {"classical.species", "species"}, {"classical.zone", "zones"},
            {"exchange.species_a", "species"}, {"exchange.species_b", "species"}, {"campaign.target", "species"},
            {"campaign.reference", "species"}, {"campaign.zone", "zones"}};
}

inline std::string reference_value(const RunConfig &c, const std::string &key) {
    std::string value;
    for_each_field(c, [&](const std::string &path, const auto &v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::string>)
            if (path == key) value = v;
    });
    return value;
}

inline void validate_config(const RunConfig &c, const std::map<std::string, detail::Leaf> *marks = nullptr);

/// Parses a YAML document. Unknown keys, malformed values and dangling
/// species/zone references are errors carrying the key and its position.
inline LoadedConfig parse_config(const std::string &text, const std::string &source = {}) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException &e) {
        throw ConfigError("parse error: " + e.msg, {}, detail::yaml_line(e.mark), detail::yaml_column(e.mark));
    }
    std::vector<std::pair<std::string, detail::Leaf>> leaves;
    if (root.IsMap()) {
        detail::flatten(root, "", leaves);
    } else if (!root.IsNull()) {
        throw ConfigError("top level must be a mapping", {}, detail::yaml_line(root.Mark()),
                          detail::yaml_column(root.Mark()));
    }

    LoadedConfig out;
    out.source = source;
    RunConfig &c = out.config;
    // Table entries named in the document are created first, so their fields
    // are visited like any other.
    for (const auto &[key, leaf] : leaves) {
        const auto dot1 = key.find('.');
        if (dot1 == std::string::npos) continue;
        const std::string table = key.substr(0, dot1);
        if (table != "species" && table != "zones") continue;
        const auto dot2 = key.find('.', dot1 + 1);
        if (dot2 == std::string::npos)
            throw ConfigError("'" + key + "' must be a mapping of fields", key, leaf.line, leaf.column);
        const std::string name = key.substr(dot1 + 1, dot2 - dot1 - 1);
        if (table == "species") c.species.try_emplace(name);
        else c.zones.try_emplace(name);
    }

    std::map<std::string, detail::Leaf> by_key;
    for (const auto &[key, leaf] : leaves) {
        if (!by_key.emplace(key, leaf).second)
            throw ConfigError("duplicate key '" + key + "'", key, leaf.line, leaf.column);
    }
    std::set<std::string> used;
    for_each_field(c, [&](const std::string &path, auto &v) {
        const auto it = by_key.find(path);
        if (it == by_key.end()) {
            out.defaulted.push_back(path + " = " + detail::format_value(v));
            return;
        }
        detail::parse_scalar(it->second.node, path, it->second.line, it->second.column, v);
        used.insert(path);
    });
    for (const auto &[key, leaf] : leaves) {
        if (!used.count(key)) throw ConfigError("unknown key '" + key + "'", key, leaf.line, leaf.column);
    }
    validate_config(c, &by_key);
    return out;
}

inline std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::string> &requested) {
    namespace fs = std::filesystem;
    const char *dir = std::getenv(kConfigDirEnv);
    if (requested) {
        const fs::path p(*requested);
        if (fs::exists(p)) return p;
        if (p.is_relative() && dir && fs::exists(fs::path(dir) / p)) return fs::path(dir) / p;
        throw IoError("config file not found: " + *requested);
    }
    if (dir && fs::exists(fs::path(dir) / kDefaultConfigName)) return fs::path(dir) / kDefaultConfigName;
    return std::nullopt;
}

/// Loads the config named on the command line, the default file in
/// $QLGF_CONFIG_DIR, or the built-in defaults, in that order.
inline LoadedConfig load_config(const std::optional<std::string> &requested) {
    const auto path = resolve_config_path(requested);
    if (!path) return parse_config("", "");
    std::ifstream in(*path);
    if (!in) throw IoError("cannot read config file: " + path->string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path->string());
}

/// Canonical YAML: every field, canonical order, round-trip precision.
inline std::string emit_config(const RunConfig &c) {
    YAML::Node root(YAML::NodeType::Map);
    for_each_field(c, [&](const std::string &path, const auto &v) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (std::size_t dot = path.find('.'); dot != std::string::npos; dot = path.find('.', start)) {
            parts.push_back(path.substr(start, dot - start));
            start = dot + 1;
        }
        parts.push_back(path.substr(start));
        // Walk down by reassigning handles; yaml-cpp nodes are references.
        std::vector<YAML::Node> chain{root};
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) chain.push_back(chain.back()[parts[i]]);
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
            chain.back()[parts.back()] = v;
        } else {
            YAML::Node scalar(detail::format_value(v));
            chain.back()[parts.back()] = scalar;
        }
    });
    YAML::Emitter e;
    e << root;
    return std::string(e.c_str()) + "\n";
}

/// Sets one scalar field from its textual value (sweeps, overrides).
inline void set_field(RunConfig &c, const std::string &path, const std::string &value) {
    bool found = false, is_prefix = false;
    for_each_field(c, [&](const std::string &p, auto &v) {
        if (p == path) {
            detail::parse_scalar(YAML::Load(value), path, -1, -1, v);
            found = true;
        } else if (p.rfind(path + ".", 0) == 0) {
            is_prefix = true;
        }
    });
    if (found) return;
    if (is_prefix) throw UsageError("'" + path + "' is a section, not a scalar config field");
    throw UsageError("unknown config field '" + path + "'");
}

inline std::string get_field(const RunConfig &c, const std::string &path) {
    std::optional<std::string> out;
    for_each_field(c, [&](const std::string &p, const auto &v) {
        if (p == path) out = detail::format_value(v);
    });
    if (!out) throw UsageError("unknown config field '" + path + "'");
    return *out;
}

// ---------------------------------------------------------------------------
// Domain objects built from a RunConfig.

inline Species make_species(const RunConfig &c, const std::string &name) {
    const auto it = c.species.find(name);
    if (it == c.species.end()) throw ConfigError("undefined species '" + name + "'", name);
    const SpeciesSpec &s = it->second;
    if (s.kind == "proton") return species::proton();
    if (s.kind == "antiproton") return species::antiproton();
    if (s.kind == "be9_ion")
        return s.spin_moment > 0.0 ? species::beryllium9_ion(s.spin_moment) : species::beryllium9_ion();
    if (s.kind == "custom") {
        const double q = s.charge_e * constants::elementary_charge;
        const double m = s.mass_u * constants::atomic_mass_unit;
        return s.spin_moment > 0.0 ? Species::from_moment(name, q, m, s.spin_moment)
                                   : Species::from_g(name, q, m, s.g_factor);
    }
    throw ConfigError("species '" + name + "': unknown kind '" + s.kind + "'", "species." + name + ".kind");
}

inline TrapZone make_zone(const RunConfig &c, const std::string &name) {
    const auto it = c.zones.find(name);
    if (it == c.zones.end()) throw ConfigError("undefined zone '" + name + "'", name);
    const ZoneSpec &z = it->second;
    TrapZone t{z.B0, z.B2, z.V0, z.d_char, z.c2, z.tilt, z.ellipticity};
    return t;
}

inline ClassicalDetection make_classical_detection(const RunConfig &c) {
    const ClassicalSection &k = c.classical;
    const Species s = make_species(c, k.species);
    ClassicalDetection cd;
    cd.analysis_zone = make_zone(c, k.zone);
    cd.cooling = {k.tau_resistive, k.temperature};
    cd.noise = {k.sigma0, k.detection_time};
    cd.plan = {.repetitions = std::max(k.repetitions, 1), .cooling_wait = k.cooling_wait, .n_initial = k.n_initial};
    cd.timings = {k.transport_time, k.interrogation_time, 1};
    if (k.repetitions == 0)
        cd.plan.repetitions =
            repetitions_for_error(spin_flip_signal(s, cd.analysis_zone, cd.noise, cd.cooling, cd.plan), k.target_error);
    cd.timings.analysis_zone_detection_repetitions = cd.plan.repetitions;
    return cd;
}

inline DoubleWell make_double_well(const RunConfig &c, const std::string &species_a, const std::string &species_b) {
    DoubleWell dw;
    dw.separation = c.exchange.separation;
    dw.species_a = make_species(c, species_a);
    dw.species_b = make_species(c, species_b);
    dw.omega_a = 2.0 * constants::pi * c.exchange.freq_a_hz;
    dw.omega_b = 2.0 * constants::pi * c.exchange.freq_b_hz;
    return dw;
}

inline DoubleWell make_double_well(const RunConfig &c) {
    return make_double_well(c, c.exchange.species_a, c.exchange.species_b);
}

inline DecoherenceModel make_decoherence(const RunConfig &c) {
    DecoherenceModel d;
    d.heating_rate = c.exchange.heating_rate;
    if (c.exchange.spin_t2 > 0.0) d.spin_t2 = c.exchange.spin_t2;
    return d;
}

inline ReadoutPhysics make_readout_physics(const RunConfig &c, const std::string &target, const std::string &reference) {
    const ReadoutSection &r = c.readout;
    ReadoutPhysics p;
    p.larmor_probe_time = r.larmor_probe_time;
    p.proton_drive = {.rabi = 2.0 * constants::pi * r.proton_rabi_hz, .lamb_dicke = r.proton_lamb_dicke,
                      .kind = DriveKind::red_sideband};
    p.be_drive = {.rabi = 2.0 * constants::pi * r.be_rabi_hz, .lamb_dicke = r.be_lamb_dicke,
                  .kind = DriveKind::red_sideband};
    p.well = make_double_well(c, target, reference);
    p.detection_time = r.detection_time;
    p.fidelity_probe = r.fidelity_probe;
    p.fidelity_proton_sideband = r.fidelity_proton_sideband;
    p.fidelity_exchange = r.fidelity_exchange;
    p.fidelity_be_sideband = r.fidelity_be_sideband;
    p.fidelity_detection = r.fidelity_detection;
    return p;
}

inline CampaignMode parse_campaign_mode(const std::string &s) {
    if (s == "quantum_logic") return CampaignMode::quantum_logic;
    if (s == "classical_baseline") return CampaignMode::classical_baseline;
    throw ConfigError("campaign.mode must be quantum_logic or classical_baseline, got '" + s + "'", "campaign.mode");
}

inline Interleave parse_interleave(const std::string &s) {
    if (s == "alternate") return Interleave::alternate;
    if (s == "synchronous") return Interleave::synchronous;
    if (s == "block") return Interleave::block;
    throw ConfigError("campaign.interleave must be alternate, synchronous or block, got '" + s + "'",
                      "campaign.interleave");
}

inline CampaignConfig make_campaign_config(const RunConfig &c) {
    const CampaignSection &m = c.campaign;
    CampaignConfig cfg;
    cfg.mode = parse_campaign_mode(m.mode);
    cfg.target = make_species(c, m.target);
    cfg.reference = make_species(c, m.reference);
    cfg.precision_zone = make_zone(c, m.zone);
    cfg.windows = m.windows;
    if (m.scan_points < 5) throw ConfigError("campaign.scan_points must be >= 5", "campaign.scan_points");
    if (m.snapshot_points < 5) throw ConfigError("campaign.snapshot_points must be >= 5", "campaign.snapshot_points");
    if (!(m.probe_time > 0.0)) throw ConfigError("campaign.probe_time must be positive", "campaign.probe_time");
    cfg.target_scan = ScanPlan::symmetric(m.scan_points, m.scan_span_linewidths, m.scan_shots, constants::pi / m.probe_time);
    const double scale = larmor_frequency(cfg.reference, 1.0) / larmor_frequency(cfg.target, 1.0);
    cfg.reference_scan = scaled_scan(cfg.target_scan, scale, m.scan_shots);
    cfg.reference_snapshot =
        ScanPlan::symmetric(m.snapshot_points, m.scan_span_linewidths, m.snapshot_shots, cfg.reference_scan.rabi);
    cfg.center_guess_offset = 2.0 * constants::pi * m.center_guess_offset_hz;
    cfg.reference_detection_time = m.reference_detection_time;
    cfg.reference_fidelity = m.reference_fidelity;
    cfg.flywheel = m.flywheel;
    cfg.interleave = parse_interleave(m.interleave);
    cfg.readout = make_readout_physics(c, m.target, m.reference);
    cfg.cooling_time = m.cooling_time;
    RunConfig classical_view = c;
    classical_view.classical.species = m.target;
    cfg.classical = make_classical_detection(classical_view);
    cfg.cyclotron_read_time = m.cyclotron_read_time;
    cfg.cyclotron_read_sigma_rel = m.cyclotron_read_sigma_rel;
    cfg.drift = {m.drift_linear_rate, m.drift_random_walk};
    cfg.expected_values = m.expected_values;
    return cfg;
}

/// Cross-references and value domains. `marks` (from the parser) adds
/// line/column to reference errors.
inline void validate_config(const RunConfig &c, const std::map<std::string, detail::Leaf> *marks) {
    auto where = [&](const std::string &key, int &line, int &column) {
        line = column = -1;
        if (!marks) return;
        const auto it = marks->find(key);
        if (it != marks->end()) {
            line = it->second.line;
            column = it->second.column;
        }
    };
    for (const auto &[key, table] : references()) {
        const std::string name = reference_value(c, key);
        const bool ok = table == "zones" ? c.zones.count(name) > 0 : c.species.count(name) > 0;
        if (!ok) {
            int line = 0, column = 0;
            where(key, line, column);
            const std::string what = table == "zones" ? "zone" : "species";
            throw ConfigError(key + " references undefined " + what + " '" + name + "'", key, line, column);
        }
    }
    auto fail = [&](const std::string &key, const std::string &msg) {
        int line = 0, column = 0;
        where(key, line, column);
        throw ConfigError(key + " " + msg, key, line, column);
    };
    if (c.output.format != "csv" && c.output.format != "json") fail("output.format", "must be csv or json");
    if (c.readout.spin != "up" && c.readout.spin != "down") fail("readout.spin", "must be up or down");
    if (c.invariance.cases < 1) fail("invariance.cases", "must be >= 1");
    if (c.classical.trials < 1) fail("classical.trials", "must be >= 1");
    if (c.classical.repetitions < 0) fail("classical.repetitions", "must be >= 0 (0 = automatic)");
    if (c.campaign.replicas < 1) fail("campaign.replicas", "must be >= 1");
    if (c.exchange.steps < 1) fail("exchange.steps", "must be >= 1");
    if (c.exchange.trajectories < 1) fail("exchange.trajectories", "must be >= 1");
    if (c.readout.steps < 1) fail("readout.steps", "must be >= 1");
    if (c.readout.runs < 1) fail("readout.runs", "must be >= 1");
    for (const auto &[name, s] : c.species) {
        const std::string key = "species." + name + ".kind";
        if (s.kind != "proton" && s.kind != "antiproton" && s.kind != "be9_ion" && s.kind != "custom")
            fail(key, "must be proton, antiproton, be9_ion or custom");
    }
    // Building the domain objects runs their own validation.
    try {
        for (const auto &[name, z] : c.zones) make_zone(c, name).validate();
        for (const auto &[name, s] : c.species) make_species(c, name);
        const CampaignConfig cc = make_campaign_config(c);
        (void)make_readout_sequence(cc.readout);
        if (!(cc.reference_fidelity > 0.0 && cc.reference_fidelity <= 1.0))
            fail("campaign.reference_fidelity", "must be in (0, 1]");
        (void)make_double_well(c);
        make_classical_detection(c).timings.validate();
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError(e.what());
    }
}

}  // namespace qlgf
