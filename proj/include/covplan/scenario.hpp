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

#include "covplan/ensemble.hpp"
#include "covplan/model.hpp"
#include "covplan/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace covplan
{

enum class EffectKind { rt_target, beta_multiplier, confine_fraction };

inline constexpr std::string_view to_string(EffectKind kind)
{
    switch (kind) {
    case EffectKind::rt_target: return "rt_target";
    case EffectKind::beta_multiplier: return "beta_multiplier";
    case EffectKind::confine_fraction: return "confine_fraction";
    }
    return "unknown";
}

struct InterventionEffect {
    EffectKind kind = EffectKind::rt_target;
    double value    = 0;

    void validate() const
    {
        const bool ok = kind == EffectKind::confine_fraction ? (value >= 0 && value <= 1)
                                                             : (value >= 0 && std::isfinite(value));
        if (!ok) {
            throw Error(ErrorCode::invalid_effect,
                        std::string(to_string(kind)) + " value " + std::to_string(value) + " out of domain");
        }
    }

    bool operator==(const InterventionEffect&) const = default;
};

struct InterventionWindow {
    Date start_date;
    int duration_days = 1;
    InterventionEffect effect;

    void validate() const
    {
        if (duration_days < 1) {
            throw Error(ErrorCode::invalid_effect, "window starting " + start_date.to_string() +
                                                       " has duration " + std::to_string(duration_days));
        }
        effect.validate();
    }

    bool operator==(const InterventionWindow&) const = default;
};

/// How a confinement fraction c is turned into quarantine rates. Inside the
/// window q_s = window_q_s and s_q = window_q_s * c / (1 - c), so the
/// Q/(Q+S) equilibrium equals c. After the window the release pair applies.
struct ConfinementPolicy {
    double window_q_s  = 0.05;
    double release_s_q = 0.0;
    double release_q_s = 0.3;

    bool operator==(const ConfinementPolicy&) const = default;
};

struct Scenario {
    std::string name;
    PopulationConfig config;
    RateSet base_rates;
    std::vector<InterventionWindow> windows;
    int horizon_days = 0;
    /// Reproduction number outside windows. Unset keeps each member's own beta.
    std::optional<double> release_rt;
    ConfinementPolicy confinement;

    void validate() const
    {
        config.validate();
        base_rates.validate();
        if (horizon_days < 1) {
            throw Error(ErrorCode::invalid_scenario, "horizon_days must be at least 1", "horizon_days");
        }
        if (release_rt && !(*release_rt >= 0 && std::isfinite(*release_rt))) {
            throw Error(ErrorCode::invalid_scenario, "release_rt must be nonnegative", "release_rt");
        }
        for (std::size_t k = 0; k < windows.size(); ++k) {
            windows[k].validate();
            if (k > 0 && windows[k].start_date < windows[k - 1].start_date) {
                throw Error(ErrorCode::invalid_scenario, "windows must be sorted by start_date",
                            "windows[" + std::to_string(k) + "].start_date");
            }
            const int from = windows[k].start_date - config.start_date;
            const int to   = from + windows[k].duration_days - 1;
            if (from < 0 || to >= horizon_days) {
                throw Error(ErrorCode::window_out_of_horizon,
                            "window " + std::to_string(k) + " covers days [" + std::to_string(from) + ", " +
                                std::to_string(to) + "] outside the horizon of " + std::to_string(horizon_days) +
                                " days",
                            "windows[" + std::to_string(k) + "]");
            }
        }
    }
};

/// Schedule for one ensemble member: clinical rates come from the member,
/// window effects are re-resolved against those rates.
inline ParameterSchedule compile_scenario(const Scenario& scenario, const RateSet& member)
{
    scenario.validate();
    member.validate();

    ParameterSchedule schedule;
    schedule.base = member;
    if (scenario.release_rt) {
        schedule.base.beta = beta_for_r0(*scenario.release_rt, member);
    }
    const auto& policy = scenario.confinement;
    for (const auto& w : scenario.windows) {
        const int from = w.start_date - scenario.config.start_date;
        const int to   = from + w.duration_days - 1;
        RateOverride rates;
        switch (w.effect.kind) {
        case EffectKind::rt_target:
            rates.set("beta", beta_for_r0(w.effect.value, member));
            break;
        case EffectKind::beta_multiplier:
            rates.set("beta", w.effect.value * schedule.base.beta);
            break;
        case EffectKind::confine_fraction: {
            const double c = w.effect.value;
            if (c >= 1) {
                throw Error(ErrorCode::invalid_effect, "confine_fraction 1 has no finite quarantine rate");
            }
            const double s_q = policy.window_q_s * c / (1 - c);
            if (s_q > 1) {
                throw Error(ErrorCode::invalid_effect, "confine_fraction " + std::to_string(c) +
                                                           " needs s_q = " + std::to_string(s_q) + " > 1");
            }
            rates.set("s_q", s_q).set("q_s", policy.window_q_s);
            break;
        }
        }
        schedule.overrides.push_back({from, to, rates});
        if (w.effect.kind == EffectKind::confine_fraction && to + 1 < scenario.horizon_days) {
            RateOverride release;
            release.set("s_q", policy.release_s_q).set("q_s", policy.release_q_s);
            schedule.overrides.push_back({to + 1, scenario.horizon_days - 1, release});
        }
    }
    return schedule;
}

inline ParameterSchedule compile_scenario(const Scenario& scenario)
{
    return compile_scenario(scenario, scenario.base_rates);
}

/// One trajectory per member, in member order.
inline std::vector<Trajectory> simulate_members(const Scenario& scenario, std::span<const RateSet> members,
                                                unsigned threads = 0)
{
    if (members.empty()) {
        throw Error(ErrorCode::empty_ensemble, "ensemble is empty");
    }
    scenario.validate();
    std::vector<Trajectory> out(members.size());
    parallel_for(members.size(), threads, [&](std::size_t m) {
        try {
            out[m] = simulate(scenario.config, compile_scenario(scenario, members[m]), scenario.horizon_days);
        }
        catch (const Error& e) {
            throw Error(ErrorCode::member_invalid, "ensemble member " + std::to_string(m) + ": " + e.what());
        }
    });
    return out;
}

inline EnsembleResult run_ensemble(const Scenario& scenario, std::span<const RateSet> members, unsigned threads = 0)
{
    const auto trajectories = simulate_members(scenario, members, threads);
    return percentile_bands(trajectories, scenario.config.start_date);
}

enum class ExtremumKind { peak, valley };

inline constexpr std::string_view to_string(ExtremumKind kind)
{
    return kind == ExtremumKind::peak ? "peak" : "valley";
}

struct ExtremumEntry {
    Date date;
    int day = 0;
    Compartment compartment = Compartment::I;
    ExtremumKind kind       = ExtremumKind::peak;
    double mean    = 0;
    double ci_low  = 0;
    double ci_high = 0;

    bool operator==(const ExtremumEntry&) const = default;
};

struct ExtremaReport {
    std::vector<ExtremumEntry> entries;

    std::vector<ExtremumEntry> for_compartment(Compartment c) const
    {
        std::vector<ExtremumEntry> out;
        std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                     [c](const ExtremumEntry& e) { return e.compartment == c; });
        return out;
    }
};

struct TurningPoint {
    std::size_t index;
    ExtremumKind kind;
};

/// Interior local extrema of a series after persistence-style pruning.
///
/// Raw turning points (plateaus collapse to their first day) form an
/// alternating chain with the two endpoints as free-kind boundary nodes. The
/// weakest violating link, either amplitude below min_prominence or two
/// interior extrema closer than min_separation_days, is removed repeatedly.
/// Removing an interior link drops both of its extrema; removing a boundary
/// link drops the interior extremum and flips the boundary kind. Since the
/// smallest link is always taken first, surviving extrema are the more
/// extreme of any merged pair and the chain keeps alternating.
inline std::vector<TurningPoint> find_turning_points(std::span<const double> series, int min_separation_days,
                                                     double min_prominence)
{
    struct Node {
        std::size_t index;
        double value;
        ExtremumKind kind;
        bool boundary;
    };
    std::vector<Node> chain;
    int prev_sign           = 0;
    std::size_t level_start = 0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        const double d = series[t] - series[t - 1];
        if (d == 0) {
            continue;
        }
        const int sign = d > 0 ? 1 : -1;
        if (prev_sign != 0 && sign != prev_sign) {
            chain.push_back({level_start, series[level_start],
                             prev_sign > 0 ? ExtremumKind::peak : ExtremumKind::valley, false});
        }
        prev_sign   = sign;
        level_start = t;
    }
    if (chain.empty()) {
        return {};
    }
    auto opposite = [](ExtremumKind k) { return k == ExtremumKind::peak ? ExtremumKind::valley : ExtremumKind::peak; };
    chain.insert(chain.begin(), Node{0, series.front(), opposite(chain.front().kind), true});
    chain.push_back(Node{series.size() - 1, series.back(), opposite(chain.back().kind), true});

    while (chain.size() > 2) {
        std::optional<std::size_t> weakest;
        double weakest_amplitude = 0;
        for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
            const auto& a          = chain[k];
            const auto& b          = chain[k + 1];
            const double amplitude = std::abs(a.value - b.value);
            bool violates          = amplitude < min_prominence;
            if (!a.boundary && !b.boundary && int(b.index - a.index) < min_separation_days) {
                violates = true;
            }
            if (violates && (!weakest || amplitude < weakest_amplitude)) {
                weakest           = k;
                weakest_amplitude = amplitude;
            }
        }
        if (!weakest) {
            break;
        }
        const std::size_t k = *weakest;
        if (chain[k].boundary) {
            chain[k].kind = opposite(chain[k].kind);
            chain.erase(chain.begin() + std::ptrdiff_t(k + 1));
        }
        else if (chain[k + 1].boundary) {
            chain[k + 1].kind = opposite(chain[k + 1].kind);
            chain.erase(chain.begin() + std::ptrdiff_t(k));
        }
        else {
            chain.erase(chain.begin() + std::ptrdiff_t(k), chain.begin() + std::ptrdiff_t(k + 2));
        }
    }

    std::vector<TurningPoint> out;
    for (const auto& n : chain) {
        if (!n.boundary) {
            out.push_back({n.index, n.kind});
        }
    }
    return out;
}

/// Peaks and valleys of the mean series of each requested compartment,
/// carrying that day's band. Entries are sorted by date, then compartment.
inline ExtremaReport detect_extrema(const EnsembleResult& result, std::span<const Compartment> compartments,
                                    int min_separation_days, double min_prominence)
{
    if (min_separation_days < 1) {
        throw Error(ErrorCode::out_of_range, "min_separation_days must be at least 1");
    }
    if (!(min_prominence >= 0)) {
        throw Error(ErrorCode::out_of_range, "min_prominence must be nonnegative");
    }
    ExtremaReport report;
    for (auto c : all_compartments) {
        if (std::find(compartments.begin(), compartments.end(), c) == compartments.end() || !result.has(c)) {
            continue;
        }
        const auto& band = result.band(c);
        for (auto tp : find_turning_points(band.mean, min_separation_days, min_prominence)) {
            report.entries.push_back({result.start_date + int(tp.index), int(tp.index), c, tp.kind,
                                      band.mean[tp.index], band.low[tp.index], band.high[tp.index]});
        }
    }
    std::stable_sort(report.entries.begin(), report.entries.end(), [](const auto& x, const auto& y) {
        return x.day != y.day ? x.day < y.day : x.compartment < y.compartment;
    });
    return report;
}

struct ExtremaDefaults {
    int min_separation_days    = 7;
    double prominence_fraction = 0.02; ///< of each series' maximum
};

inline ExtremaReport detect_extrema(const EnsembleResult& result, std::span<const Compartment> compartments,
                                    const ExtremaDefaults& defaults = {})
{
    ExtremaReport report;
    for (auto c : compartments) {
        if (!result.has(c) || result.days() == 0) {
            continue;
        }
        const auto& mean    = result.band(c).mean;
        const double top    = *std::max_element(mean.begin(), mean.end());
        const Compartment one[] = {c};
        auto part = detect_extrema(result, one, defaults.min_separation_days,
                                   std::max(0.0, defaults.prominence_fraction * top));
        report.entries.insert(report.entries.end(), part.entries.begin(), part.entries.end());
    }
    std::stable_sort(report.entries.begin(), report.entries.end(), [](const auto& x, const auto& y) {
        return x.day != y.day ? x.day < y.day : x.compartment < y.compartment;
    });
    return report;
}

/// "58.379 (45.942-72.245)": rounded counts with '.' grouping thousands.
inline std::string format_count_triple(double mean, double low, double high)
{
    auto group = [](double v) {
        const long long n = std::llround(v);
        std::string digits = std::to_string(n < 0 ? -n : n);
        std::string out;
        for (std::size_t k = 0; k < digits.size(); ++k) {
            if (k > 0 && (digits.size() - k) % 3 == 0) {
                out += '.';
            }
            out += digits[k];
        }
        return n < 0 ? "-" + out : out;
    };
    return group(mean) + " (" + group(low) + "-" + group(high) + ")";
}

} // namespace covplan
