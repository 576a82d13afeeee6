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

// JSON documents: population config, parameter schedule, scenario,
// calibration manifest and calibration artifact. Readers reject unknown
// keys and report the dotted path of the first offending field.

#include "covplan/calibration.hpp"
#include "covplan/data_io.hpp"
#include "covplan/scenario.hpp"

#include <json.hpp>

#include <initializer_list>
#include <optional>
#include <string>

namespace covplan
{

using json = nlohmann::json;

namespace schema
{
inline std::string join(const std::string& path, std::string_view key)
{
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

inline std::string index(const std::string& path, std::size_t k)
{
    return path + "[" + std::to_string(k) + "]";
}

inline Error invalid(const std::string& path, const std::string& what)
{
    return Error(ErrorCode::schema_invalid, (path.empty() ? std::string("document") : path) + ": " + what, path);
}

inline const json& object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed)
{
    if (!j.is_object()) {
        throw invalid(path, "expected an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw invalid(join(path, it.key()), "unknown field");
        }
    }
    return j;
}

inline const json& field(const json& j, std::string_view key, const std::string& path)
{
    auto it = j.find(std::string(key));
    if (it == j.end()) {
        throw invalid(join(path, key), "required field missing");
    }
    return *it;
}

inline double number(const json& j, const std::string& path)
{
    if (!j.is_number()) {
        throw invalid(path, "expected a number");
    }
    return j.get<double>();
}

inline double number(const json& j, std::string_view key, const std::string& path)
{
    return number(field(j, key, path), join(path, key));
}

inline double number_or(const json& j, std::string_view key, const std::string& path, double fallback)
{
    return j.contains(std::string(key)) ? number(j, key, path) : fallback;
}

inline long long integer(const json& j, const std::string& path)
{
    if (!j.is_number_integer()) {
        throw invalid(path, "expected an integer");
    }
    return j.get<long long>();
}

inline int integer(const json& j, std::string_view key, const std::string& path)
{
    return int(integer(field(j, key, path), join(path, key)));
}

inline int integer_or(const json& j, std::string_view key, const std::string& path, int fallback)
{
    return j.contains(std::string(key)) ? integer(j, key, path) : fallback;
}

inline std::string string(const json& j, std::string_view key, const std::string& path)
{
    const auto& v = field(j, key, path);
    if (!v.is_string()) {
        throw invalid(join(path, key), "expected a string");
    }
    return v.get<std::string>();
}

inline Date date(const json& j, std::string_view key, const std::string& path)
{
    const auto text = string(j, key, path);
    try {
        return Date::parse(text);
    }
    catch (const Error&) {
        throw invalid(join(path, key), "expected a YYYY-MM-DD date, got '" + text + "'");
    }
}

inline const json& array(const json& j, std::string_view key, const std::string& path)
{
    const auto& v = field(j, key, path);
    if (!v.is_array()) {
        throw invalid(join(path, key), "expected an array");
    }
    return v;
}

/// Runs a domain validator and re-tags its failure with a document path.
template <class Fn>
void checked(const std::string& path, Fn&& fn)
{
    try {
        fn();
    }
    catch (const Error& e) {
        if (e.code() == ErrorCode::schema_invalid) {
            throw;
        }
        throw Error(e.code(), (path.empty() ? std::string("document") : path) + ": " + e.what(),
                    e.field_path().empty() ? path : join(path, e.field_path()));
    }
}
} // namespace schema

inline json to_json(const RateSet& r)
{
    json j = json::object();
    for (std::size_t k = 0; k < rate_field_names.size(); ++k) {
        j[std::string(rate_field_names[k])] = r.*rate_field(k);
    }
    return j;
}

/// Clinical rates are required; beta, s_q and q_s default to zero.
inline RateSet rates_from_json(const json& j, const std::string& path)
{
    schema::object(j, path, {"beta", "s_q", "q_s", "i_l", "i_r", "i_h", "i_u", "h_u", "h_f", "h_a", "u_f", "u_hu", "hu_a"});
    RateSet r;
    for (std::size_t k = 0; k < rate_field_names.size(); ++k) {
        const auto name = rate_field_names[k];
        const bool optional = name == "beta" || name == "s_q" || name == "q_s";
        r.*rate_field(k) = optional ? schema::number_or(j, name, path, 0.0) : schema::number(j, name, path);
    }
    schema::checked(path, [&] { r.validate(); });
    return r;
}

inline json to_json(const CompartmentState& s)
{
    json j = json::object();
    for (auto c : all_compartments) {
        std::string key(to_string(c));
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
        j[key] = s[c];
    }
    return j;
}

/// Lower-case compartment keys; missing groups are zero.
inline CompartmentState state_from_json(const json& j, const std::string& path)
{
    schema::object(j, path, {"s", "q", "l", "i", "r", "h", "u", "f", "hu", "a"});
    CompartmentState s;
    for (auto c : all_compartments) {
        std::string key(to_string(c));
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
        s[c] = schema::number_or(j, key, path, 0.0);
    }
    schema::checked(path, [&] { s.validate(); });
    return s;
}

inline json to_json(const PopulationConfig& c)
{
    return {{"p_total", c.p_total}, {"start_date", c.start_date.to_string()}, {"initial_state", to_json(c.initial_state)}};
}

inline PopulationConfig config_from_json(const json& j, const std::string& path = "")
{
    schema::object(j, path, {"p_total", "start_date", "initial_state"});
    PopulationConfig c;
    c.p_total       = schema::number(j, "p_total", path);
    c.start_date    = schema::date(j, "start_date", path);
    c.initial_state = state_from_json(schema::field(j, "initial_state", path), schema::join(path, "initial_state"));
    schema::checked(path, [&] { c.validate(); });
    return c;
}

inline json to_json(const RateOverride& o)
{
    json j = json::object();
    for (std::size_t k = 0; k < o.values.size(); ++k) {
        if (o.values[k]) {
            j[std::string(rate_field_names[k])] = *o.values[k];
        }
    }
    return j;
}

inline json to_json(const ParameterSchedule& s)
{
    json overrides = json::array();
    for (const auto& o : s.overrides) {
        overrides.push_back({{"day_from", o.day_from}, {"day_to", o.day_to}, {"rates", to_json(o.rates)}});
    }
    return {{"base", to_json(s.base)}, {"overrides", overrides}};
}

inline ParameterSchedule schedule_from_json(const json& j, const std::string& path = "")
{
    schema::object(j, path, {"base", "overrides"});
    ParameterSchedule s;
    s.base = rates_from_json(schema::field(j, "base", path), schema::join(path, "base"));
    if (j.contains("overrides")) {
        const auto& list = schema::array(j, "overrides", path);
        for (std::size_t k = 0; k < list.size(); ++k) {
            const auto p = schema::index(schema::join(path, "overrides"), k);
            schema::object(list[k], p, {"day_from", "day_to", "rates"});
            ScheduledOverride o;
            o.day_from         = schema::integer(list[k], "day_from", p);
            o.day_to           = schema::integer(list[k], "day_to", p);
            const auto& rates  = schema::field(list[k], "rates", p);
            const auto rp      = schema::join(p, "rates");
            if (!rates.is_object()) {
                throw schema::invalid(rp, "expected an object");
            }
            for (auto it = rates.begin(); it != rates.end(); ++it) {
                if (!rate_field_index(it.key())) {
                    throw schema::invalid(schema::join(rp, it.key()), "unknown field");
                }
                o.rates.set(it.key(), schema::number(it.value(), schema::join(rp, it.key())));
            }
            if (o.day_from < 0 || o.day_to < o.day_from) {
                throw schema::invalid(p, "day_from/day_to interval is malformed");
            }
            s.overrides.push_back(o);
        }
    }
    return s;
}

inline json to_json(const Scenario& s)
{
    json windows = json::array();
    for (const auto& w : s.windows) {
        windows.push_back({{"start_date", w.start_date.to_string()},
                           {"duration_days", w.duration_days},
                           {"effect", {{"kind", std::string(to_string(w.effect.kind))}, {"value", w.effect.value}}}});
    }
    json j = {{"name", s.name},
              {"config", to_json(s.config)},
              {"base_rates", to_json(s.base_rates)},
              {"windows", windows},
              {"horizon_days", s.horizon_days},
              {"confinement",
               {{"window_q_s", s.confinement.window_q_s},
                {"release_s_q", s.confinement.release_s_q},
                {"release_q_s", s.confinement.release_q_s}}}};
    if (s.release_rt) {
        j["release_rt"] = *s.release_rt;
    }
    return j;
}

inline Scenario scenario_from_json(const json& j, const std::string& path = "")
{
    schema::object(j, path, {"name", "config", "base_rates", "windows", "horizon_days", "release_rt", "confinement"});
    Scenario s;
    s.name         = schema::string(j, "name", path);
    s.config       = config_from_json(schema::field(j, "config", path), schema::join(path, "config"));
    s.base_rates   = rates_from_json(schema::field(j, "base_rates", path), schema::join(path, "base_rates"));
    s.horizon_days = schema::integer(j, "horizon_days", path);
    if (j.contains("release_rt")) {
        s.release_rt = schema::number(j, "release_rt", path);
    }
    if (j.contains("confinement")) {
        const auto p   = schema::join(path, "confinement");
        const auto& cj = schema::object(j["confinement"], p, {"window_q_s", "release_s_q", "release_q_s"});
        s.confinement.window_q_s  = schema::number_or(cj, "window_q_s", p, s.confinement.window_q_s);
        s.confinement.release_s_q = schema::number_or(cj, "release_s_q", p, s.confinement.release_s_q);
        s.confinement.release_q_s = schema::number_or(cj, "release_q_s", p, s.confinement.release_q_s);
    }
    const auto& list = schema::array(j, "windows", path);
    for (std::size_t k = 0; k < list.size(); ++k) {
        const auto p = schema::index(schema::join(path, "windows"), k);
        schema::object(list[k], p, {"start_date", "duration_days", "effect"});
        InterventionWindow w;
        w.start_date        = schema::date(list[k], "start_date", p);
        w.duration_days     = schema::integer(list[k], "duration_days", p);
        const auto ep       = schema::join(p, "effect");
        const auto& e       = schema::object(schema::field(list[k], "effect", p), ep, {"kind", "value"});
        const auto kind     = schema::string(e, "kind", ep);
        if (kind == "rt_target") {
            w.effect.kind = EffectKind::rt_target;
        }
        else if (kind == "beta_multiplier") {
            w.effect.kind = EffectKind::beta_multiplier;
        }
        else if (kind == "confine_fraction") {
            w.effect.kind = EffectKind::confine_fraction;
        }
        else {
            throw schema::invalid(schema::join(ep, "kind"), "unknown effect kind '" + kind + "'");
        }
        w.effect.value = schema::number(e, "value", ep);
        schema::checked(p, [&] { w.validate(); });
        s.windows.push_back(w);
    }
    schema::checked(path, [&] { s.validate(); });
    return s;
}

struct CalibrationManifest {
    PopulationConfig config;
    std::optional<std::string> observed_path;
    std::optional<std::string> mobility_path;
    int smoothing_days = 7;
    QuarantineRule quarantine_rule;
    ParameterLayout layout;
    Bounds bounds;
    SwarmConfig swarm;
    EnsembleSelection selection;
    LossWeights weights;
    int forecast_days = 0; ///< extra days simulated past the last observation for the bands
};

inline CalibrationManifest manifest_from_json(const json& j, const std::string& path = "")
{
    schema::object(j, path, {"config", "observed", "mobility", "smoothing_days", "quarantine_rule", "beta_breakpoints",
                             "bounds", "swarm", "ensemble", "weights", "forecast_days"});
    CalibrationManifest m;
    m.config = config_from_json(schema::field(j, "config", path), schema::join(path, "config"));
    if (j.contains("observed")) {
        m.observed_path = schema::string(j, "observed", path);
    }
    if (j.contains("mobility")) {
        m.mobility_path = schema::string(j, "mobility", path);
    }
    m.smoothing_days = schema::integer_or(j, "smoothing_days", path, 7);
    if (m.smoothing_days < 1) {
        throw schema::invalid(schema::join(path, "smoothing_days"), "must be at least 1");
    }
    m.forecast_days = schema::integer_or(j, "forecast_days", path, 0);
    if (m.forecast_days < 0) {
        throw schema::invalid(schema::join(path, "forecast_days"), "must be nonnegative");
    }
    if (j.contains("quarantine_rule")) {
        const auto p = schema::join(path, "quarantine_rule");
        const auto& q = schema::object(j["quarantine_rule"], p,
                                       {"threshold", "anchor_change", "anchor_s_q", "max_s_q", "drain_q_s"});
        auto& r        = m.quarantine_rule;
        r.threshold     = schema::number_or(q, "threshold", p, r.threshold);
        r.anchor_change = schema::number_or(q, "anchor_change", p, r.anchor_change);
        r.anchor_s_q    = schema::number_or(q, "anchor_s_q", p, r.anchor_s_q);
        r.max_s_q       = schema::number_or(q, "max_s_q", p, r.max_s_q);
        r.drain_q_s     = schema::number_or(q, "drain_q_s", p, r.drain_q_s);
    }
    if (j.contains("beta_breakpoints")) {
        const auto& list = schema::array(j, "beta_breakpoints", path);
        for (std::size_t k = 0; k < list.size(); ++k) {
            m.layout.beta_breakpoints.push_back(
                int(schema::integer(list[k], schema::index(schema::join(path, "beta_breakpoints"), k))));
        }
    }
    schema::checked(path, [&] { m.layout.validate(); });

    const auto bp      = schema::join(path, "bounds");
    const auto& bounds = schema::field(j, "bounds", path);
    if (!bounds.is_object()) {
        throw schema::invalid(bp, "expected an object");
    }
    const auto names = m.layout.names();
    for (auto it = bounds.begin(); it != bounds.end(); ++it) {
        if (std::find(names.begin(), names.end(), it.key()) == names.end()) {
            throw schema::invalid(schema::join(bp, it.key()), "unknown parameter");
        }
    }
    for (const auto& name : names) {
        const auto& pair = schema::field(bounds, name, bp);
        const auto p     = schema::join(bp, name);
        if (!pair.is_array() || pair.size() != 2) {
            throw schema::invalid(p, "expected [lo, hi]");
        }
        m.bounds.lo.push_back(schema::number(pair[0], schema::index(p, 0)));
        m.bounds.hi.push_back(schema::number(pair[1], schema::index(p, 1)));
    }
    schema::checked(bp, [&] { m.bounds.validate(); });

    if (j.contains("swarm")) {
        const auto p   = schema::join(path, "swarm");
        const auto& s  = schema::object(j["swarm"], p,
                                        {"n_particles", "n_iterations", "inertia", "cognitive", "social",
                                         "novelty_weight", "archive_k", "rng_seed", "max_velocity", "threads",
                                         "final_inertia"});
        auto& c        = m.swarm;
        c.n_particles    = schema::integer_or(s, "n_particles", p, c.n_particles);
        c.n_iterations   = schema::integer_or(s, "n_iterations", p, c.n_iterations);
        c.inertia        = schema::number_or(s, "inertia", p, c.inertia);
        c.cognitive      = schema::number_or(s, "cognitive", p, c.cognitive);
        c.social         = schema::number_or(s, "social", p, c.social);
        c.novelty_weight = schema::number_or(s, "novelty_weight", p, c.novelty_weight);
        c.archive_k      = schema::integer_or(s, "archive_k", p, c.archive_k);
        c.max_velocity   = schema::number_or(s, "max_velocity", p, c.max_velocity);
        if (s.contains("final_inertia")) {
            c.final_inertia = schema::number(s["final_inertia"], schema::join(p, "final_inertia"));
        }
        if (s.contains("rng_seed")) {
            const auto seed = schema::integer(s["rng_seed"], schema::join(p, "rng_seed"));
            if (seed < 0) {
                throw schema::invalid(schema::join(p, "rng_seed"), "must be nonnegative");
            }
            c.rng_seed = std::uint64_t(seed);
        }
        const int threads = schema::integer_or(s, "threads", p, int(c.threads));
        if (threads < 0) {
            throw schema::invalid(schema::join(p, "threads"), "must be nonnegative");
        }
        c.threads = unsigned(threads);
        schema::checked(p, [&] { c.validate(); });
    }
    if (j.contains("ensemble")) {
        const auto p  = schema::join(path, "ensemble");
        const auto& e = schema::object(j["ensemble"], p, {"delta", "n_max", "min_dist"});
        m.selection.delta    = schema::number_or(e, "delta", p, m.selection.delta);
        m.selection.min_dist = schema::number_or(e, "min_dist", p, m.selection.min_dist);
        const int n_max      = schema::integer_or(e, "n_max", p, int(m.selection.n_max));
        if (n_max < 1) {
            throw schema::invalid(schema::join(p, "n_max"), "must be at least 1");
        }
        m.selection.n_max = std::size_t(n_max);
    }
    if (j.contains("weights")) {
        const auto p  = schema::join(path, "weights");
        const auto& w = schema::object(j["weights"], p, {"hospitalized", "icu", "recovered", "deceased"});
        m.weights.hospitalized = schema::number_or(w, "hospitalized", p, 1.0);
        m.weights.icu          = schema::number_or(w, "icu", p, 1.0);
        m.weights.recovered    = schema::number_or(w, "recovered", p, 1.0);
        m.weights.deceased     = schema::number_or(w, "deceased", p, 1.0);
    }
    return m;
}

/// Result of a calibration run, as stored on disk and consumed by scenario runs.
struct CalibrationArtifact {
    std::vector<std::string> parameters;
    std::vector<int> beta_breakpoints;
    CalibrationResult result;
    /// Clinical rates of each ensemble member with the last segment's beta.
    std::vector<RateSet> ensemble_rates;
};

inline CalibrationArtifact make_artifact(const ParameterLayout& layout, const CalibrationResult& result)
{
    CalibrationArtifact a;
    a.parameters       = layout.names();
    a.beta_breakpoints = layout.beta_breakpoints;
    a.result           = result;
    for (const auto& e : result.ensemble) {
        a.ensemble_rates.push_back(layout.rates(e.position, layout.segments() - 1));
    }
    return a;
}

inline json to_json(const CalibrationArtifact& a)
{
    json ensemble = json::array();
    for (const auto& e : a.result.ensemble) {
        ensemble.push_back({{"values", e.position}, {"loss", e.loss}});
    }
    json rates = json::array();
    for (const auto& r : a.ensemble_rates) {
        rates.push_back(to_json(r));
    }
    return {{"parameters", a.parameters},
            {"beta_breakpoints", a.beta_breakpoints},
            {"best", {{"values", a.result.best}, {"loss", a.result.best_loss}}},
            {"loss_history", a.result.loss_history},
            {"ensemble", ensemble},
            {"ensemble_rates", rates}};
}

namespace schema
{
inline std::vector<double> numbers(const json& j, const std::string& path)
{
    if (!j.is_array()) {
        throw invalid(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(number(j[k], index(path, k)));
    }
    return out;
}
} // namespace schema

inline CalibrationArtifact artifact_from_json(const json& j, const std::string& path = "")
{
    schema::object(j, path, {"parameters", "beta_breakpoints", "best", "loss_history", "ensemble", "ensemble_rates"});
    CalibrationArtifact a;
    for (const auto& name : schema::array(j, "parameters", path)) {
        a.parameters.push_back(name.get<std::string>());
    }
    for (const auto& b : schema::array(j, "beta_breakpoints", path)) {
        a.beta_breakpoints.push_back(b.get<int>());
    }
    const auto bp  = schema::join(path, "best");
    const auto& best = schema::object(schema::field(j, "best", path), bp, {"values", "loss"});
    a.result.best      = schema::numbers(schema::field(best, "values", bp), schema::join(bp, "values"));
    a.result.best_loss = schema::number(best, "loss", bp);
    a.result.loss_history = schema::numbers(schema::field(j, "loss_history", path), schema::join(path, "loss_history"));
    const auto& ens = schema::array(j, "ensemble", path);
    for (std::size_t k = 0; k < ens.size(); ++k) {
        const auto p = schema::index(schema::join(path, "ensemble"), k);
        schema::object(ens[k], p, {"values", "loss"});
        a.result.ensemble.push_back(
            {schema::numbers(schema::field(ens[k], "values", p), schema::join(p, "values")), schema::number(ens[k], "loss", p)});
    }
    const auto& rates = schema::array(j, "ensemble_rates", path);
    for (std::size_t k = 0; k < rates.size(); ++k) {
        a.ensemble_rates.push_back(rates_from_json(rates[k], schema::index(schema::join(path, "ensemble_rates"), k)));
    }
    return a;
}

/// Ensemble input for scenario runs: a calibration artifact or a bare array of rate sets.
inline std::vector<RateSet> ensemble_from_json(const json& j)
{
    std::vector<RateSet> out;
    if (j.is_array()) {
        for (std::size_t k = 0; k < j.size(); ++k) {
            out.push_back(rates_from_json(j[k], schema::index("", k)));
        }
    }
    else {
        out = artifact_from_json(j).ensemble_rates;
    }
    if (out.empty()) {
        throw Error(ErrorCode::empty_ensemble, "ensemble is empty");
    }
    return out;
}

inline json to_json(const ExtremaReport& report)
{
    json entries = json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"date", e.date.to_string()},
                           {"compartment", std::string(to_string(e.compartment))},
                           {"kind", std::string(to_string(e.kind))},
                           {"mean", e.mean},
                           {"ci_low", e.ci_low},
                           {"ci_high", e.ci_high},
                           {"label", format_count_triple(e.mean, e.ci_low, e.ci_high)}});
    }
    return {{"entries", entries}};
}

inline json to_json(const SeriesMetrics& m)
{
    return {{"points", m.points}, {"coverage", m.coverage}, {"rmse", m.rmse}, {"slope_agreement", m.slope_agreement}};
}

inline json to_json(const HoldoutMetrics& m)
{
    return {{"first_date", m.first_date.to_string()},
            {"overlap_days", m.overlap_days},
            {"hospitalized", to_json(m.hospitalized)},
            {"icu", to_json(m.icu)}};
}

/// Parse text as JSON, mapping syntax errors to schema-invalid.
inline json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    }
    catch (const json::parse_error& e) {
        throw Error(ErrorCode::schema_invalid, std::string("malformed JSON: ") + e.what());
    }
}

} // namespace covplan
