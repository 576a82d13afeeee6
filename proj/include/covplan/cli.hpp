/*
* Copyright (C) 2026 covplan contributors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#pragma once

#include "covplan/pipeline.hpp"
#include "covplan/service.hpp"
#include "covplan/synthetic.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace covplan::cli
{

/// Exit codes.
inline constexpr int ok               = 0;
inline constexpr int runtime_error    = 1;
inline constexpr int validation_error = 2;

namespace detail
{
inline void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot create '" + dir + "': " + ec.message());
    }
}

inline std::string in_dir(const std::string& dir, const std::string& file)
{
    return (std::filesystem::path(dir) / file).string();
}

/// Manifest-relative paths resolve against the manifest's directory.
inline std::string relative_to(const std::string& manifest, const std::string& path)
{
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(manifest).parent_path() / p).string();
}

inline httplib::Server* active_server = nullptr;

inline void stop_server(int)
{
    if (active_server) {
        active_server->stop();
    }
}

/// Sample inputs: 150 observed days, a 40-day holdout, the mobility feed,
/// a calibration manifest and a two-week lockdown scenario.
inline void write_samples(const std::string& dir)
{
    ensure_dir(dir);
    const int observed_days = 150, holdout_days = 40;
    const auto problem      = synthetic::default_problem(observed_days + holdout_days);
    write_file(in_dir(dir, "observed.csv"), write_observed_csv(problem.observed.slice(0, observed_days)));
    write_file(in_dir(dir, "holdout.csv"), write_observed_csv(problem.observed.slice(observed_days, holdout_days)));
    write_file(in_dir(dir, "mobility.csv"), write_mobility_csv(synthetic::default_mobility(observed_days)));

    json bounds      = json::object();
    const auto names = synthetic::default_layout().names();
    const auto b     = synthetic::default_bounds();
    for (std::size_t k = 0; k < names.size(); ++k) {
        bounds[names[k]] = {b.lo[k], b.hi[k]};
    }
    const auto swarm    = synthetic::benchmark_swarm();
    const json manifest = {{"config", to_json(synthetic::default_population())},
                           {"observed", "observed.csv"},
                           {"mobility", "mobility.csv"},
                           {"smoothing_days", 7},
                           {"beta_breakpoints", synthetic::default_layout().beta_breakpoints},
                           {"bounds", bounds},
                           {"swarm",
                            {{"n_particles", swarm.n_particles},
                             {"n_iterations", swarm.n_iterations},
                             {"novelty_weight", swarm.novelty_weight},
                             {"final_inertia", *swarm.final_inertia},
                             {"rng_seed", swarm.rng_seed}}},
                           {"ensemble", {{"delta", 0.15}, {"n_max", 200}, {"min_dist", 0.01}}},
                           {"forecast_days", holdout_days}};
    write_file(in_dir(dir, "manifest.json"), manifest.dump(2) + "\n");

    Scenario s;
    s.name         = "two-week-lockdown";
    s.config       = synthetic::default_population();
    s.base_rates   = synthetic::default_rates(2.5);
    s.horizon_days = 180;
    s.windows.push_back({Date(2020, 3, 21), 14, {EffectKind::rt_target, 0.8}});
    write_file(in_dir(dir, "scenario.json"), to_json(s).dump(2) + "\n");
}
} // namespace detail

/// Runs the command line in-process; returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"covplan: compartmental epidemic planning engine"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads for ensemble runs (0 = all cores)");

    std::string config, schedule, sim_out;
    int horizon  = 0;
    auto* simcmd = app.add_subcommand("simulate", "Simulate one parameter schedule to a trajectory CSV");
    simcmd->add_option("--config", config, "Population config JSON")->required()->check(CLI::ExistingFile);
    simcmd->add_option("--schedule", schedule, "Parameter schedule JSON")->required()->check(CLI::ExistingFile);
    simcmd->add_option("--horizon", horizon, "Days to simulate")->required()->check(CLI::NonNegativeNumber);
    simcmd->add_option("--out", sim_out, "Trajectory CSV to write")->required();

    std::string observed, mobility, manifest, cal_out;
    auto* calcmd = app.add_subcommand("calibrate", "Fit rates to registry series and select an ensemble");
    calcmd->add_option("--observed", observed, "Observed series CSV (default: manifest 'observed')");
    calcmd->add_option("--mobility", mobility, "Mobility CSV (default: manifest 'mobility')");
    calcmd->add_option("--manifest", manifest, "Calibration manifest JSON")->required()->check(CLI::ExistingFile);
    calcmd->add_option("--out", cal_out, "Output directory")->required();

    std::string scenario, ensemble, scen_out;
    auto* scencmd = app.add_subcommand("scenario", "Scenario operations");
    scencmd->require_subcommand(1);
    auto* runcmd = scencmd->add_subcommand("run", "Run a scenario over an ensemble");
    runcmd->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    runcmd->add_option("--ensemble", ensemble, "Calibration artifact or rate-set array JSON")
        ->required()
        ->check(CLI::ExistingFile);
    runcmd->add_option("--out", scen_out, "Output directory")->required();

    std::string bands, holdout;
    auto* valcmd = app.add_subcommand("validate", "Score bands against held-out observations");
    valcmd->add_option("--bands", bands, "Bands CSV")->required()->check(CLI::ExistingFile);
    valcmd->add_option("--holdout", holdout, "Observed series CSV")->required()->check(CLI::ExistingFile);

    std::string ext_bands;
    bool ext_json = false;
    auto* extcmd  = app.add_subcommand("extrema", "Report peaks and valleys of I, H and U");
    extcmd->add_option("--bands", ext_bands, "Bands CSV")->required()->check(CLI::ExistingFile);
    extcmd->add_flag("--json", ext_json, "Print JSON instead of CSV");

    std::string results = "covplan-results", host = "127.0.0.1";
    int port         = 8080;
    unsigned workers = 0;
    auto* servecmd   = app.add_subcommand("serve", "Run the HTTP job service");
    servecmd->add_option("--results", results, "Results directory")->capture_default_str();
    servecmd->add_option("--host", host, "Bind address")->capture_default_str();
    servecmd->add_option("--port", port, "Port")->capture_default_str()->check(CLI::Range(1, 65535));
    servecmd->add_option("--workers", workers, "Job workers (0 = all cores)");

    std::string synth_out;
    auto* synthcmd = app.add_subcommand("synth", "Write synthetic sample inputs");
    synthcmd->add_option("--out", synth_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : validation_error;
    }

    try {
        if (*simcmd) {
            write_file(sim_out, pipeline::simulate_documents(read_file(config), read_file(schedule), horizon));
        }
        else if (*calcmd) {
            const auto doc = parse_json(read_file(manifest));
            const auto m   = pipeline::guarded([&] { return manifest_from_json(doc); });
            if (observed.empty()) {
                if (!m.observed_path) {
                    throw Error(ErrorCode::schema_invalid, "no --observed and no manifest 'observed'", "observed");
                }
                observed = detail::relative_to(manifest, *m.observed_path);
            }
            if (mobility.empty() && m.mobility_path) {
                mobility = detail::relative_to(manifest, *m.mobility_path);
            }
            std::optional<MobilitySeries> mob;
            if (!mobility.empty()) {
                mob = parse_mobility_csv(read_file(mobility));
            }
            const auto run = pipeline::run_calibration(m, parse_observed_csv(read_file(observed)), mob);
            detail::ensure_dir(cal_out);
            write_file(detail::in_dir(cal_out, "calibration.json"), run.artifact_json);
            write_file(detail::in_dir(cal_out, "bands.csv"), run.bands_csv);
            out << "best loss " << run.artifact.result.best_loss << ", ensemble of "
                << run.artifact.result.ensemble.size() << "\n";
        }
        else if (*runcmd) {
            const auto run = pipeline::run_scenario_documents(read_file(scenario), read_file(ensemble), threads);
            detail::ensure_dir(scen_out);
            write_file(detail::in_dir(scen_out, "bands.csv"), run.bands_csv);
            write_file(detail::in_dir(scen_out, "extrema.csv"), run.extrema_csv);
            write_file(detail::in_dir(scen_out, "extrema.json"), to_json(run.extrema).dump(2) + "\n");
        }
        else if (*valcmd) {
            out << to_json(pipeline::validate_documents(read_file(bands), read_file(holdout))).dump(2) << "\n";
        }
        else if (*extcmd) {
            const auto report = pipeline::extrema_from_bands(read_file(ext_bands));
            if (ext_json) {
                out << to_json(report).dump(2) << "\n";
            }
            else {
                out << write_extrema_csv(report);
            }
        }
        else if (*servecmd) {
            JobService service(results, workers);
            httplib::Server server;
            install_routes(server, service);
            detail::active_server = &server;
            std::signal(SIGINT, detail::stop_server);
            std::signal(SIGTERM, detail::stop_server);
            out << "listening on http://" << host << ":" << port << "\n" << std::flush;
            const bool listened = server.listen(host, port);
            detail::active_server = nullptr;
            if (!listened) {
                throw Error(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
            }
        }
        else if (*synthcmd) {
            detail::write_samples(synth_out);
        }
    }
    catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]";
        if (!e.field_path().empty()) {
            err << " at " << e.field_path();
        }
        err << ": " << e.what() << "\n";
        return e.is_validation() ? validation_error : runtime_error;
    }
    catch (const std::exception& e) {
        err << "error [internal]: " << e.what() << "\n";
        return runtime_error;
    }
    return ok;
}

} // namespace covplan::cli
