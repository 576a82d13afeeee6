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

// Document-level entry points shared by the CLI and the HTTP service, so the
// two paths produce byte-identical artifacts from the same inputs.

#include "covplan/calibration.hpp"
#include "covplan/data_io.hpp"
#include "covplan/json_io.hpp"
#include "covplan/scenario.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace covplan::pipeline
{

/// Compartments reported in extrema tables.
inline constexpr Compartment reported_compartments[] = {Compartment::I, Compartment::H, Compartment::U};

/// nlohmann type errors inside a document become schema-invalid.
template <class Fn>
auto guarded(Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    }
    catch (const json::exception& e) {
        throw Error(ErrorCode::schema_invalid, std::string("malformed document: ") + e.what());
    }
}

struct ScenarioRun {
    EnsembleResult bands;
    ExtremaReport extrema;
    std::string bands_csv;
    std::string extrema_csv;
};

inline ScenarioRun run_scenario(const Scenario& scenario, std::span<const RateSet> ensemble, unsigned threads = 0)
{
    ScenarioRun out;
    out.bands       = run_ensemble(scenario, ensemble, threads);
    out.extrema     = detect_extrema(out.bands, reported_compartments);
    out.bands_csv   = write_bands_csv(out.bands);
    out.extrema_csv = write_extrema_csv(out.extrema);
    return out;
}

inline ScenarioRun run_scenario_documents(std::string_view scenario_json, std::string_view ensemble_json,
                                          unsigned threads = 0)
{
    return guarded([&] {
        const auto scenario = scenario_from_json(parse_json(scenario_json));
        const auto ensemble = ensemble_from_json(parse_json(ensemble_json));
        return run_scenario(scenario, ensemble, threads);
    });
}

struct CalibrationRun {
    CalibrationArtifact artifact;
    EnsembleResult bands;
    std::string artifact_json;
    std::string bands_csv;
};

inline CalibrationProblem make_problem(const CalibrationManifest& manifest, const ObservedSeries& observed,
                                       const std::optional<MobilitySeries>& mobility)
{
    CalibrationProblem p;
    p.config   = manifest.config;
    p.observed = observed;
    if (mobility) {
        p.quarantine = derive_quarantine_schedule(*mobility, manifest.smoothing_days, manifest.quarantine_rule);
    }
    p.layout  = manifest.layout;
    p.bounds  = manifest.bounds;
    p.weights = manifest.weights;
    p.validate();
    return p;
}

inline CalibrationRun run_calibration(const CalibrationManifest& manifest, const ObservedSeries& observed,
                                      const std::optional<MobilitySeries>& mobility)
{
    const auto problem = make_problem(manifest, observed, mobility);
    CalibrationRun out;
    const auto result  = calibrate(problem, manifest.swarm, manifest.selection);
    out.artifact       = make_artifact(problem.layout, result);
    out.artifact_json  = to_json(out.artifact).dump(2) + "\n";
    const auto members = ensemble_trajectories(problem, result.ensemble, manifest.forecast_days);
    out.bands          = percentile_bands(members, problem.config.start_date);
    out.bands_csv      = write_bands_csv(out.bands);
    return out;
}

inline CalibrationRun run_calibration_documents(std::string_view manifest_json, std::string_view observed_csv,
                                                std::optional<std::string_view> mobility_csv)
{
    return guarded([&] {
        const auto manifest = manifest_from_json(parse_json(manifest_json));
        const auto observed = parse_observed_csv(observed_csv);
        std::optional<MobilitySeries> mobility;
        if (mobility_csv) {
            mobility = parse_mobility_csv(*mobility_csv);
        }
        return run_calibration(manifest, observed, mobility);
    });
}

inline std::string simulate_documents(std::string_view config_json, std::string_view schedule_json, int horizon_days)
{
    return guarded([&] {
        const auto config   = config_from_json(parse_json(config_json));
        const auto schedule = schedule_from_json(parse_json(schedule_json));
        return write_trajectory_csv(simulate(config, schedule, horizon_days), config.start_date);
    });
}

inline HoldoutMetrics validate_documents(std::string_view bands_csv, std::string_view holdout_csv)
{
    return validate_holdout(parse_bands_csv(bands_csv), parse_observed_csv(holdout_csv));
}

inline ExtremaReport extrema_from_bands(std::string_view bands_csv)
{
    return detect_extrema(parse_bands_csv(bands_csv), reported_compartments);
}

} // namespace covplan::pipeline
