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
#include "covplan/swarm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace covplan
{

/// Registry counts on consecutive days from start_date.
struct ObservedSeries {
    Date start_date;
    std::vector<double> h_census; ///< ward occupancy
    std::vector<double> u_census; ///< ICU occupancy
    std::vector<double> r_cum;    ///< cumulative recovered
    std::vector<double> f_cum;    ///< cumulative deceased

    std::size_t size() const
    {
        return h_census.size();
    }

    void validate() const
    {
        const auto n = h_census.size();
        if (u_census.size() != n || r_cum.size() != n || f_cum.size() != n) {
            throw Error(ErrorCode::length_mismatch, "observed series differ in length");
        }
        const std::array<std::pair<const char*, const std::vector<double>*>, 4> named = {
            {{"hospitalized", &h_census}, {"icu", &u_census}, {"recovered", &r_cum}, {"deceased", &f_cum}}};
        for (auto [name, series] : named) {
            for (std::size_t d = 0; d < n; ++d) {
                if (!((*series)[d] >= 0) || !std::isfinite((*series)[d])) {
                    throw Error(ErrorCode::out_of_range, std::string(name) + " is negative on day " +
                                                             std::to_string(d) + " (" + (start_date + int(d)).to_string() +
                                                             ")");
                }
            }
        }
        for (auto [name, series] : {named[2], named[3]}) {
            for (std::size_t d = 1; d < n; ++d) {
                if ((*series)[d] < (*series)[d - 1]) {
                    throw Error(ErrorCode::non_monotone_cumulative,
                                std::string(name) + " decreases on day " + std::to_string(d) + " (" +
                                    (start_date + int(d)).to_string() + ")");
                }
            }
        }
    }

    /// Days [from, from+count) as a new series.
    ObservedSeries slice(std::size_t from, std::size_t count) const
    {
        ObservedSeries out;
        out.start_date = start_date + int(from);
        auto cut = [&](const std::vector<double>& v) {
            return std::vector<double>(v.begin() + std::ptrdiff_t(from), v.begin() + std::ptrdiff_t(from + count));
        };
        out.h_census = cut(h_census);
        out.u_census = cut(u_census);
        out.r_cum    = cut(r_cum);
        out.f_cum    = cut(f_cum);
        return out;
    }

    bool operator==(const ObservedSeries&) const = default;
};

/// Model observables compared against registries: ward census is H+HU,
/// ICU census is U, recovered is R+A, deceased is F.
inline ObservedSeries observe(const Trajectory& trajectory, Date start_date, std::size_t first_day = 0)
{
    ObservedSeries out;
    out.start_date = start_date + int(first_day);
    for (std::size_t d = first_day; d < trajectory.size(); ++d) {
        const auto& s = trajectory.states[d];
        out.h_census.push_back(s.h + s.hu);
        out.u_census.push_back(s.u);
        out.r_cum.push_back(s.r + s.a);
        out.f_cum.push_back(s.f);
    }
    return out;
}

/// Per-day quarantine rates derived from mobility. Days before the
/// series start keep the base rates; days after its end repeat the last value.
struct QuarantineSchedule {
    Date start_date;
    std::vector<double> s_q;
    std::vector<double> q_s;

    bool empty() const
    {
        return s_q.empty();
    }

    /// Run-length compressed overrides on the simulation day axis.
    std::vector<ScheduledOverride> overrides(Date simulation_start, int horizon_days) const
    {
        std::vector<ScheduledOverride> out;
        if (empty() || horizon_days < 1) {
            return out;
        }
        const int offset = start_date - simulation_start;
        auto value_at    = [&](int sim_day) {
            int k = std::clamp(sim_day - offset, 0, int(s_q.size()) - 1);
            return std::pair{s_q[std::size_t(k)], q_s[std::size_t(k)]};
        };
        int run_start = std::max(0, offset);
        if (run_start >= horizon_days) {
            return out;
        }
        auto current = value_at(run_start);
        for (int d = run_start + 1; d <= horizon_days; ++d) {
            const bool end = d == horizon_days;
            auto next      = end ? current : value_at(d);
            if (end || next != current) {
                RateOverride o;
                o.set("s_q", current.first).set("q_s", current.second);
                out.push_back({run_start, d - 1, o});
                run_start = d;
                current   = next;
            }
        }
        return out;
    }

    bool operator==(const QuarantineSchedule&) const = default;
};

inline constexpr std::array<std::string_view, 10> clinical_rate_names = {"i_l", "i_r", "i_h", "i_u",  "h_u",
                                                                         "h_f", "h_a", "u_f", "u_hu", "hu_a"};

/// Free-parameter layout: the ten clinical rates followed by one beta per
/// segment. Segment k starts at day beta_breakpoints[k-1] (segment 0 at day 0).
struct ParameterLayout {
    std::vector<int> beta_breakpoints;

    std::size_t segments() const
    {
        return beta_breakpoints.size() + 1;
    }
    std::size_t size() const
    {
        return clinical_rate_names.size() + segments();
    }

    void validate() const
    {
        for (std::size_t k = 0; k < beta_breakpoints.size(); ++k) {
            if (beta_breakpoints[k] <= (k == 0 ? 0 : beta_breakpoints[k - 1])) {
                throw Error(ErrorCode::invalid_config, "beta breakpoints must be positive and strictly increasing",
                            "beta_breakpoints[" + std::to_string(k) + "]");
            }
        }
    }

    std::vector<std::string> names() const
    {
        std::vector<std::string> out(clinical_rate_names.begin(), clinical_rate_names.end());
        for (std::size_t k = 0; k < segments(); ++k) {
            out.push_back("beta[" + std::to_string(k) + "]");
        }
        return out;
    }

    std::size_t beta_index(std::size_t segment) const
    {
        return clinical_rate_names.size() + segment;
    }

    /// Clinical rates with beta from the given segment; quarantine rates zero.
    RateSet rates(std::span<const double> values, std::size_t segment) const
    {
        check(values);
        RateSet r;
        for (std::size_t k = 0; k < clinical_rate_names.size(); ++k) {
            r.*rate_field(*rate_field_index(clinical_rate_names[k])) = values[k];
        }
        r.beta = values[beta_index(segment)];
        return r;
    }

    ParameterSchedule schedule(std::span<const double> values, const QuarantineSchedule& quarantine,
                               Date simulation_start, int horizon_days) const
    {
        ParameterSchedule s;
        s.base = rates(values, 0);
        for (std::size_t k = 0; k < beta_breakpoints.size(); ++k) {
            const int from = beta_breakpoints[k];
            const int to   = k + 1 < beta_breakpoints.size() ? beta_breakpoints[k + 1] - 1 : horizon_days - 1;
            if (from > to || from >= horizon_days) {
                continue;
            }
            RateOverride o;
            o.set("beta", values[beta_index(k + 1)]);
            s.overrides.push_back({from, to, o});
        }
        auto q = quarantine.overrides(simulation_start, horizon_days);
        s.overrides.insert(s.overrides.end(), q.begin(), q.end());
        return s;
    }

    void check(std::span<const double> values) const
    {
        if (values.size() != size()) {
            throw Error(ErrorCode::dimension_mismatch, "expected " + std::to_string(size()) + " parameters, got " +
                                                           std::to_string(values.size()));
        }
    }
};

struct LossWeights {
    double hospitalized = 1;
    double icu          = 1;
    double recovered    = 1;
    double deceased     = 1;
};

/// Everything the objective needs besides the parameter values.
struct CalibrationProblem {
    PopulationConfig config;
    ObservedSeries observed;
    QuarantineSchedule quarantine;
    ParameterLayout layout;
    Bounds bounds;
    LossWeights weights;

    /// Simulation day of the first observation.
    int offset() const
    {
        return observed.start_date - config.start_date;
    }
    int horizon() const
    {
        return offset() + int(observed.size()) - 1;
    }

    void validate() const
    {
        config.validate();
        observed.validate();
        layout.validate();
        bounds.validate();
        if (observed.size() == 0) {
            throw Error(ErrorCode::empty_series, "observed series is empty");
        }
        if (offset() < 0) {
            throw Error(ErrorCode::no_overlap, "observations start before the simulation");
        }
        if (bounds.size() != layout.size()) {
            throw Error(ErrorCode::dimension_mismatch, "bounds have " + std::to_string(bounds.size()) +
                                                           " dimensions, layout has " + std::to_string(layout.size()));
        }
    }

    ParameterSchedule schedule(std::span<const double> values) const
    {
        return layout.schedule(values, quarantine, config.start_date, std::max(horizon(), 1));
    }

    Trajectory simulate(std::span<const double> values) const
    {
        return covplan::simulate(config, schedule(values), horizon());
    }
};

namespace detail
{
inline double normalized_rmse(std::span<const double> model, std::span<const double> observed)
{
    double sq = 0;
    double top = 0;
    for (std::size_t d = 0; d < observed.size(); ++d) {
        const double e = model[d] - observed[d];
        sq += e * e;
        top = std::max(top, observed[d]);
    }
    const double rmse = std::sqrt(sq / double(observed.size()));
    return rmse / (top > 0 ? top : 1.0);
}

inline double loss_of(const Trajectory& traj, const CalibrationProblem& problem)
{
    const auto model = observe(traj, problem.config.start_date, std::size_t(problem.offset()));
    const auto& obs  = problem.observed;
    const auto& w    = problem.weights;
    return w.hospitalized * normalized_rmse(model.h_census, obs.h_census) +
           w.icu * normalized_rmse(model.u_census, obs.u_census) +
           w.recovered * normalized_rmse(model.r_cum, obs.r_cum) +
           w.deceased * normalized_rmse(model.f_cum, obs.f_cum);
}

inline std::vector<double> descriptor_of(const Trajectory& traj)
{
    double ward_peak = -1, icu_peak = -1;
    std::size_t ward_day = 0, icu_day = 0;
    for (std::size_t d = 0; d < traj.size(); ++d) {
        const auto& s = traj.states[d];
        if (s.h + s.hu > ward_peak) {
            ward_peak = s.h + s.hu;
            ward_day  = d;
        }
        if (s.u > icu_peak) {
            icu_peak = s.u;
            icu_day  = d;
        }
    }
    return {ward_peak, double(ward_day), icu_peak, double(icu_day), traj.states.back().f};
}
} // namespace detail

/// Sum over the four registries of RMSE divided by the series maximum.
/// Infeasible parameters (the simulation throws) give +infinity.
inline double loss(std::span<const double> values, const CalibrationProblem& problem)
{
    problem.layout.check(values);
    try {
        return detail::loss_of(problem.simulate(values), problem);
    }
    catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

/// (ward peak H+HU, its day, ICU peak, its day, final deaths) of the induced
/// trajectory, unnormalised; the swarm scales it by the running range.
/// Zeros if the simulation fails.
inline std::vector<double> behavioral_descriptor(std::span<const double> values, const CalibrationProblem& problem)
{
    problem.layout.check(values);
    try {
        return detail::descriptor_of(problem.simulate(values));
    }
    catch (const Error&) {
        return std::vector<double>(5, 0.0);
    }
}

/// Loss and descriptor from a single simulation.
inline Evaluated evaluate(std::span<const double> values, const CalibrationProblem& problem)
{
    problem.layout.check(values);
    try {
        const auto traj = problem.simulate(values);
        return {detail::loss_of(traj, problem), detail::descriptor_of(traj)};
    }
    catch (const Error&) {
        return {std::numeric_limits<double>::infinity(), std::vector<double>(5, 0.0)};
    }
}

struct EnsembleSelection {
    double delta    = 0.15;
    std::size_t n_max = 200;
    double min_dist = 0.01;
};

/// Root-mean-square coordinate distance with each axis scaled to its bounds.
inline double normalized_distance(std::span<const double> a, std::span<const double> b, const Bounds& bounds)
{
    double sum = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double z = (a[d] - b[d]) / (bounds.hi[d] - bounds.lo[d]);
        sum += z * z;
    }
    return std::sqrt(sum / double(std::max<std::size_t>(a.size(), 1)));
}

/// Near-optimal, mutually distant evaluations, best first. Always contains
/// the best evaluation (earliest on ties). Each further pick is the
/// near-optimal candidate farthest from everything chosen so far.
inline std::vector<Evaluation> select_ensemble(std::span<const Evaluation> history, const Bounds& bounds,
                                              const EnsembleSelection& selection = {})
{
    if (history.empty()) {
        throw Error(ErrorCode::empty_input, "history is empty");
    }
    if (!(selection.delta >= 0)) {
        throw Error(ErrorCode::out_of_range, "delta must be nonnegative");
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < history.size(); ++k) {
        if (history[k].loss < history[best].loss) {
            best = k;
        }
    }
    const double threshold = (1 + selection.delta) * history[best].loss;

    std::vector<std::size_t> pool;
    for (std::size_t k = 0; k < history.size(); ++k) {
        if (k != best && history[k].loss <= threshold) {
            pool.push_back(k);
        }
    }
    // gap[i] is the distance from pool[i] to the nearest chosen member.
    std::vector<double> gap(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        gap[i] = normalized_distance(history[pool[i]].position, history[best].position, bounds);
    }
    std::vector<Evaluation> chosen{history[best]};
    while (chosen.size() < selection.n_max && !pool.empty()) {
        const auto far = std::size_t(std::max_element(gap.begin(), gap.end()) - gap.begin());
        if (!(gap[far] >= selection.min_dist)) {
            break;
        }
        const auto& pick = history[pool[far]];
        chosen.push_back(pick);
        pool.erase(pool.begin() + std::ptrdiff_t(far));
        gap.erase(gap.begin() + std::ptrdiff_t(far));
        for (std::size_t i = 0; i < pool.size(); ++i) {
            gap[i] = std::min(gap[i], normalized_distance(history[pool[i]].position, pick.position, bounds));
        }
    }
    return chosen;
}

struct CalibrationResult {
    std::vector<double> best;
    double best_loss = 0;
    std::vector<Evaluation> ensemble;
    std::vector<double> loss_history;
};

inline CalibrationResult calibrate(const CalibrationProblem& problem, const SwarmConfig& swarm,
                                   const EnsembleSelection& selection = {})
{
    problem.validate();
    auto run = novelty_swarm([&](std::span<const double> x) { return evaluate(x, problem); }, problem.bounds, swarm);
    CalibrationResult out;
    out.best         = run.best;
    out.best_loss    = run.best_loss;
    out.loss_history = std::move(run.loss_history);
    out.ensemble     = select_ensemble(run.evaluations, problem.bounds, selection);
    return out;
}

/// Trajectories of every ensemble member over the calibration horizon extended by extra_days.
inline std::vector<Trajectory> ensemble_trajectories(const CalibrationProblem& problem,
                                                     std::span<const Evaluation> ensemble, int extra_days = 0)
{
    std::vector<Trajectory> out;
    const int horizon = problem.horizon() + extra_days;
    for (const auto& e : ensemble) {
        out.push_back(simulate(problem.config,
                               problem.layout.schedule(e.position, problem.quarantine, problem.config.start_date,
                                                       std::max(horizon, 1)),
                               horizon));
    }
    return out;
}

struct SeriesMetrics {
    std::size_t points    = 0;
    double coverage       = 0; ///< share of observations inside [low, high]
    double rmse           = 0; ///< against the mean curve
    double slope_agreement = 0; ///< share of day-to-day changes with matching sign

    bool operator==(const SeriesMetrics&) const = default;
};

struct HoldoutMetrics {
    Date first_date;
    std::size_t overlap_days = 0;
    SeriesMetrics hospitalized;
    SeriesMetrics icu;
};

namespace detail
{
inline SeriesMetrics series_metrics(std::span<const double> obs, std::span<const double> mean,
                                    std::span<const double> low, std::span<const double> high)
{
    SeriesMetrics m;
    m.points = obs.size();
    std::size_t inside = 0;
    double sq          = 0;
    for (std::size_t d = 0; d < obs.size(); ++d) {
        if (obs[d] >= low[d] && obs[d] <= high[d]) {
            ++inside;
        }
        sq += (obs[d] - mean[d]) * (obs[d] - mean[d]);
    }
    m.coverage = double(inside) / double(obs.size());
    m.rmse     = std::sqrt(sq / double(obs.size()));
    if (obs.size() < 2) {
        m.slope_agreement = 1;
        return m;
    }
    auto sign = [](double v) { return (v > 0) - (v < 0); };
    std::size_t agree = 0;
    for (std::size_t d = 1; d < obs.size(); ++d) {
        if (sign(obs[d] - obs[d - 1]) == sign(mean[d] - mean[d - 1])) {
            ++agree;
        }
    }
    m.slope_agreement = double(agree) / double(obs.size() - 1);
    return m;
}
} // namespace detail

/// Compare ward and ICU census against the bands on overlapping dates.
/// The ward band is the sum of the H and HU bands.
inline HoldoutMetrics validate_holdout(const EnsembleResult& result, const ObservedSeries& holdout)
{
    const Date first = std::max(result.start_date, holdout.start_date);
    const Date last_result  = result.start_date + int(result.days()) - 1;
    const Date last_holdout = holdout.start_date + int(holdout.size()) - 1;
    const Date last         = std::min(last_result, last_holdout);
    if (result.days() == 0 || holdout.size() == 0 || last < first) {
        throw Error(ErrorCode::no_overlap, "holdout and bands share no dates");
    }
    const auto n      = std::size_t(last - first + 1);
    const auto res_from = std::size_t(first - result.start_date);
    const auto obs_from = std::size_t(first - holdout.start_date);

    std::vector<double> ward_mean(n), ward_low(n), ward_high(n);
    const auto& h = result.band(Compartment::H);
    for (std::size_t d = 0; d < n; ++d) {
        ward_mean[d] = h.mean[res_from + d];
        ward_low[d]  = h.low[res_from + d];
        ward_high[d] = h.high[res_from + d];
    }
    if (result.has(Compartment::HU)) {
        const auto& hu = result.band(Compartment::HU);
        for (std::size_t d = 0; d < n; ++d) {
            ward_mean[d] += hu.mean[res_from + d];
            ward_low[d] += hu.low[res_from + d];
            ward_high[d] += hu.high[res_from + d];
        }
    }
    const auto& u = result.band(Compartment::U);
    auto window   = [&](const std::vector<double>& v, std::size_t from) {
        return std::span<const double>(v).subspan(from, n);
    };

    HoldoutMetrics out;
    out.first_date   = first;
    out.overlap_days = n;
    out.hospitalized = detail::series_metrics(window(holdout.h_census, obs_from), ward_mean, ward_low, ward_high);
    out.icu = detail::series_metrics(window(holdout.u_census, obs_from), window(u.mean, res_from), window(u.low, res_from),
                                     window(u.high, res_from));
    return out;
}

} // namespace covplan
