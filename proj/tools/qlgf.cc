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

// qlgf: command-line front end.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qlgf/commands.hpp"
#include "qlgf/config.hpp"
#include "qlgf/errors.hpp"

namespace {

std::string describe(const qlgf::ConfigError &e) {
    std::string where;
    if (!e.key().empty()) where += " [" + e.key() + "]";
    if (e.line() > 0) where += " at line " + std::to_string(e.line()) + ", column " + std::to_string(e.column());
    return std::string(e.what()) + where;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Simulation toolkit for quantum-logic g-factor measurements in Penning traps", "qlgf"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::string> overrides;
    bool show_defaults = false, dump_config = false;

    app.add_option("--config", config_path,
                   std::string("YAML config file; relative paths are also looked up in $") + qlgf::kConfigDirEnv);
    app.add_option("--seed", seed, "master seed (overrides master_seed)");
    app.add_option("--out", out_dir, "output directory (overrides output.directory)");
    app.add_option("--format", format, "table format (overrides output.format)")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    app.add_option("--set", overrides, "override a scalar config field, PATH=VALUE (repeatable)");
    app.add_flag("--show-defaults", show_defaults, "list every field that took its default on stderr");
    app.add_flag("--dump-config", dump_config, "print the resolved config as canonical YAML and exit");

    std::map<std::string, CLI::App *> subs;
    subs["modes"] = app.add_subcommand("modes", "eigenfrequencies and invariance residual of one trap zone");
    subs["invariance-check"] = app.add_subcommand("invariance-check", "invariance theorem over randomized perturbed traps");
    subs["exchange"] = app.add_subcommand("exchange", "Coulomb motional exchange between two wells");
    subs["readout-sim"] = app.add_subcommand("readout-sim", "quantum-logic readout chain, staged and branching");
    subs["classical-baseline"] = app.add_subcommand("classical-baseline", "continuous Stern-Gerlach detection trials");
    subs["campaign"] = app.add_subcommand("campaign", "full g-factor measurement campaign");
    CLI::App *sweep = app.add_subcommand("sweep", "run a subcommand once per value of a scalar config field");
    std::string sweep_command, sweep_param;
    std::vector<std::string> sweep_values;
    bool values_given = false;
    sweep->add_option("command", sweep_command, "subcommand to run")->required();
    sweep->add_option("--param", sweep_param, "dotted config path, e.g. exchange.separation")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->delimiter(',')->expected(0, -1)->each([&](const std::string &) {
        values_given = true;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return static_cast<int>(qlgf::ExitCode::usage);
    }

    if (app.get_subcommands().empty() && !dump_config) {
        std::cerr << "qlgf: a subcommand is required\nRun with --help for more information.\n";
        return static_cast<int>(qlgf::ExitCode::usage);
    }

    try {
        qlgf::LoadedConfig loaded = qlgf::load_config(config_path);
        qlgf::RunConfig &cfg = loaded.config;
        if (seed) cfg.master_seed = *seed;
        if (out_dir) cfg.output.directory = *out_dir;
        if (format) cfg.output.format = *format;
        for (const auto &ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos) throw qlgf::UsageError("--set expects PATH=VALUE, got '" + ov + "'");
            qlgf::set_field(cfg, ov.substr(0, eq), ov.substr(eq + 1));
        }
        qlgf::validate_config(cfg);
        if (show_defaults) {
            std::cerr << "config: " << (loaded.source.empty() ? "<built-in defaults>" : loaded.source) << "\n";
            for (const auto &d : loaded.defaulted) std::cerr << "  default " << d << "\n";
        }
        if (dump_config) {
            std::cout << qlgf::emit_config(cfg);
            return 0;
        }

        qlgf::RunOptions opts;
        opts.out_dir = cfg.output.directory;
        opts.format = cfg.output.format;
        opts.threads = threads;

        qlgf::CommandResult result;
        if (sweep->parsed()) {
            if (!values_given) sweep_values.clear();
            result = qlgf::cmd_sweep(cfg, opts, sweep_command, sweep_param, sweep_values);
        } else {
            for (const auto &[name, sub] : subs)
                if (sub->parsed()) result = qlgf::commands().at(name)(cfg, opts);
        }
        std::cout << result.text;
        for (const auto &f : result.files) std::cout << "wrote " << (std::filesystem::path(opts.out_dir) / f).string() << "\n";
        return result.exit_code;
    } catch (const qlgf::ConfigError &e) {
        std::cerr << "qlgf: config error: " << describe(e) << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const qlgf::Error &e) {
        std::cerr << "qlgf: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "qlgf: " << e.what() << "\n";
        return static_cast<int>(qlgf::ExitCode::io);
    } catch (const std::exception &e) {
        std::cerr << "qlgf: internal error: " << e.what() << "\n";
        return static_cast<int>(qlgf::ExitCode::numerical);
    }
}
