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

#include "covplan/date.hpp"
#include "covplan/error.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace covplan
{

/// The ten population groups, in canonical output order.
enum class Compartment { S, Q, L, I, R, H, U, F, HU, A };

inline constexpr std::size_t compartment_count = 10;

inline constexpr std::array<Compartment, compartment_count> all_compartments = {
    Compartment::S, Compartment::Q, Compartment::L, Compartment::I,  Compartment::R,
    Compartment::H, Compartment::U, Compartment::F, Compartment::HU, Compartment::A};

inline constexpr std::string_view to_string(Compartment c)
{
    constexpr std::array<std::string_view, compartment_count> names = {"S", "Q", "L", "I", "R",
                                                                       "H", "U", "F", "HU", "A"};
    return names[static_cast<std::size_t>(c)];
}

inline std::optional<Compartment> parse_compartment(std::string_view name)
{
    for (auto c : all_compartments) {
        if (to_string(c) == name) {
            return c;
        }
    }
    return std::nullopt;
}

/// Person counts per group on one simulated day.
struct CompartmentState {
    double s  = 0; ///< susceptible
    double q  = 0; ///< quarantined at home
    double l  = 0; ///< latent (infected, not yet infectious)
    double i  = 0; ///< infectious
    double r  = 0; ///< recovered without hospital care
    double h  = 0; ///< ward
    double u  = 0; ///< ICU
    double f  = 0; ///< deceased
    double hu = 0; ///< ward after ICU
    double a  = 0; ///< discharged
    int day   = 0;

    double& operator[](Compartment c)
    {
        return this->*member(c);
    }
    double operator[](Compartment c) const
    {
        return this->*member(c);
    }

    double total() const
    {
        return s + q + l + i + r + h + u + f + hu + a;
    }

    /// Throws negative-state when any group is negative or not finite.
    void validate() const
    {
        for (auto c : all_compartments) {
            double v = (*this)[c];
            if (!(v >= 0) || !std::isfinite(v)) {
                throw Error(ErrorCode::negative_state, "compartment " + std::string(to_string(c)) + " on day " +
                                                           std::to_string(day) + " is " + std::to_string(v));
            }
        }
    }

    bool operator==(const CompartmentState&) const = default;

private:
    static double CompartmentState::*member(Compartment c)
    {
        static constexpr std::array<double CompartmentState::*, compartment_count> members = {
            &CompartmentState::s, &CompartmentState::q, &CompartmentState::l,  &CompartmentState::i,
            &CompartmentState::r, &CompartmentState::h, &CompartmentState::u,  &CompartmentState::f,
            &CompartmentState::hu, &CompartmentState::a};
        return members[static_cast<std::size_t>(c)];
    }
};

/// Per-day transmission rate and transition fractions.
struct RateSet {
    double beta = 0;
    double s_q  = 0;
    double q_s  = 0;
    double i_l  = 0;
    double i_r  = 0;
    double i_h  = 0;
    double i_u  = 0;
    double h_u  = 0;
    double h_f  = 0;
    double h_a  = 0;
    double u_f  = 0;
    double u_hu = 0;
    double hu_a = 0;

    double infectious_exit() const
    {
        return i_r + i_h + i_u;
    }
    double ward_exit() const
    {
        return h_u + h_f + h_a;
    }
    double icu_exit() const
    {
        return u_f + u_hu;
    }

    void validate() const
    {
        auto fail = [](const std::string& what) {
            throw Error(ErrorCode::invalid_rates, what);
        };
        if (!(beta >= 0) || !std::isfinite(beta)) {
            fail("beta must be a finite nonnegative rate, got " + std::to_string(beta));
        }
        for (auto [name, value] : named_fractions()) {
            if (!(value >= 0 && value <= 1)) {
                fail(std::string(name) + " must lie in [0,1], got " + std::to_string(value));
            }
        }
        if (infectious_exit() > 1) {
            fail("i_r + i_h + i_u exceeds 1");
        }
        if (ward_exit() > 1) {
            fail("h_u + h_f + h_a exceeds 1");
        }
        if (icu_exit() > 1) {
            fail("u_f + u_hu exceeds 1");
        }
    }

    std::array<std::pair<std::string_view, double>, 12> named_fractions() const
    {
        return {{{"s_q", s_q},
                 {"q_s", q_s},
                 {"i_l", i_l},
                 {"i_r", i_r},
                 {"i_h", i_h},
                 {"i_u", i_u},
                 {"h_u", h_u},
                 {"h_f", h_f},
                 {"h_a", h_a},
                 {"u_f", u_f},
                 {"u_hu", u_hu},
                 {"hu_a", hu_a}}};
    }

    bool operator==(const RateSet&) const = default;
};

/// Names of every RateSet field, beta first.
inline constexpr std::array<std::string_view, 13> rate_field_names = {
    "beta", "s_q", "q_s", "i_l", "i_r", "i_h", "i_u", "h_u", "h_f", "h_a", "u_f", "u_hu", "hu_a"};

inline double RateSet::*rate_field(std::size_t index)
{
    static constexpr std::array<double RateSet::*, 13> fields = {
        &RateSet::beta, &RateSet::s_q, &RateSet::q_s, &RateSet::i_l, &RateSet::i_r, &RateSet::i_h,  &RateSet::i_u,
        &RateSet::h_u,  &RateSet::h_f, &RateSet::h_a, &RateSet::u_f, &RateSet::u_hu, &RateSet::hu_a};
    return fields.at(index);
}

inline std::optional<std::size_t> rate_field_index(std::string_view name)
{
    for (std::size_t k = 0; k < rate_field_names.size(); ++k) {
        if (rate_field_names[k] == name) {
            return k;
        }
    }
    return std::nullopt;
}

struct PopulationConfig {
    double p_total = 0;
    Date start_date;
    CompartmentState initial_state;

    void validate() const
    {
        if (!(p_total > 0) || !std::isfinite(p_total)) {
            throw Error(ErrorCode::nonpositive_population, "p_total must be positive");
        }
        initial_state.validate();
        double sum = initial_state.total();
        if (std::abs(sum - p_total) > 1e-9 * p_total) {
            throw Error(ErrorCode::invalid_config, "initial state sums to " + std::to_string(sum) +
                                                       ", expected p_total = " + std::to_string(p_total));
        }
    }

    bool operator==(const PopulationConfig&) const = default;
};

/// Subset of RateSet fields; unset fields leave the underlying value alone.
struct RateOverride {
    std::array<std::optional<double>, 13> values{};

    RateOverride& set(std::string_view name, double value)
    {
        auto k = rate_field_index(name);
        if (!k) {
            throw Error(ErrorCode::invalid_schedule, "unknown rate '" + std::string(name) + "'");
        }
        values[*k] = value;
        return *this;
    }

    void apply_to(RateSet& rates) const
    {
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (values[k]) {
                rates.*rate_field(k) = *values[k];
            }
        }
    }

    bool empty() const
    {
        for (auto& v : values) {
            if (v) {
                return false;
            }
        }
        return true;
    }

    bool operator==(const RateOverride&) const = default;
};

/// Override active on days [day_from, day_to], both inclusive.
struct ScheduledOverride {
    int day_from = 0;
    int day_to   = 0;
    RateOverride rates;

    bool operator==(const ScheduledOverride&) const = default;
};

/// Base rates plus ordered overrides. Later overrides shadow earlier ones field by field.
struct ParameterSchedule {
    RateSet base;
    std::vector<ScheduledOverride> overrides;

    /// Effective RateSet for each stepping day 0..horizon-1, validated after merging.
    /// Overrides reaching past the horizon are clipped.
    std::vector<RateSet> resolve(int horizon_days) const
    {
        if (horizon_days < 0) {
            throw Error(ErrorCode::invalid_schedule, "negative horizon");
        }
        std::vector<RateSet> daily(std::size_t(horizon_days), base);
        for (const auto& o : overrides) {
            if (o.day_from < 0 || o.day_to < o.day_from) {
                throw Error(ErrorCode::invalid_schedule, "override interval [" + std::to_string(o.day_from) + ", " +
                                                             std::to_string(o.day_to) + "] is malformed");
            }
            for (int d = o.day_from; d <= o.day_to && d < horizon_days; ++d) {
                o.rates.apply_to(daily[std::size_t(d)]);
            }
        }
        for (std::size_t d = 0; d < daily.size(); ++d) {
            try {
                daily[d].validate();
            }
            catch (const Error& e) {
                throw Error(e.code(), "day " + std::to_string(d) + ": " + e.what());
            }
        }
        return daily;
    }

    RateSet effective(int day) const
    {
        RateSet rates = base;
        for (const auto& o : overrides) {
            if (day >= o.day_from && day <= o.day_to) {
                o.rates.apply_to(rates);
            }
        }
        return rates;
    }

    bool operator==(const ParameterSchedule&) const = default;
};

struct Trajectory {
    std::vector<CompartmentState> states;

    std::size_t size() const
    {
        return states.size();
    }

    std::vector<double> series(Compartment c) const
    {
        std::vector<double> out;
        out.reserve(states.size());
        for (const auto& st : states) {
            out.push_back(st[c]);
        }
        return out;
    }
    bool operator==(const Trajectory&) const = default;
};

/// Advance one day through the difference equations. Quarantine flows are
/// per-capita: s_q*S leaves S for Q and q_s*Q returns.
inline CompartmentState step(const CompartmentState& state, const RateSet& rates, double p_total)
{
    if (!(p_total > 0) || !std::isfinite(p_total)) {
        throw Error(ErrorCode::nonpositive_population, "p_total must be positive");
    }
    rates.validate();
    state.validate();

    const double infections   = rates.beta * state.s * (state.i / p_total);
    const double to_quarantine = rates.s_q * state.s;
    const double from_quarantine = rates.q_s * state.q;
    const double onset        = rates.i_l * state.l;
    const double to_recovered = rates.i_r * state.i;
    const double to_ward      = rates.i_h * state.i;
    const double to_icu       = rates.i_u * state.i;
    const double ward_to_icu  = rates.h_u * state.h;
    const double ward_deaths  = rates.h_f * state.h;
    const double ward_discharge = rates.h_a * state.h;
    const double icu_deaths   = rates.u_f * state.u;
    const double icu_to_ward  = rates.u_hu * state.u;
    const double step_down_discharge = rates.hu_a * state.hu;

    CompartmentState next;
    next.s   = state.s + from_quarantine - to_quarantine - infections;
    next.q   = state.q + to_quarantine - from_quarantine;
    next.l   = state.l + infections - onset;
    next.i   = state.i + onset - rates.infectious_exit() * state.i;
    next.r   = state.r + to_recovered;
    next.h   = state.h + to_ward - rates.ward_exit() * state.h;
    next.u   = state.u + to_icu + ward_to_icu - rates.icu_exit() * state.u;
    next.f   = state.f + ward_deaths + icu_deaths;
    next.hu  = state.hu + icu_to_ward - step_down_discharge;
    next.a   = state.a + ward_discharge + step_down_discharge;
    next.day = state.day + 1;
    next.validate();
    return next;
}

/// Iterate step() for horizon_days days. Errors carry the failing day.
inline Trajectory simulate(const PopulationConfig& config, const ParameterSchedule& schedule, int horizon_days)
{
    config.validate();
    const auto daily = schedule.resolve(horizon_days);
    Trajectory out;
    out.states.reserve(std::size_t(horizon_days) + 1);
    CompartmentState first = config.initial_state;
    first.day              = 0;
    out.states.push_back(first);
    for (int d = 0; d < horizon_days; ++d) {
        try {
            out.states.push_back(step(out.states.back(), daily[std::size_t(d)], config.p_total));
        }
        catch (const Error& e) {
            throw Error(e.code(), "simulation failed stepping from day " + std::to_string(d) + ": " + e.what());
        }
    }
    return out;
}

inline double r0(const RateSet& rates)
{
    const double exit = rates.infectious_exit();
    if (!(exit > 0)) {
        throw Error(ErrorCode::zero_denominator, "i_r + i_h + i_u is zero; R0 undefined");
    }
    return rates.beta / exit;
}

/// Transmission rate realizing a target reproduction number under the given clinical rates.
inline double beta_for_r0(double target_r0, const RateSet& rates)
{
    if (!(target_r0 >= 0) || !std::isfinite(target_r0)) {
        throw Error(ErrorCode::invalid_rates, "target R0 must be finite and nonnegative");
    }
    const double exit = rates.infectious_exit();
    if (!(exit > 0)) {
        throw Error(ErrorCode::zero_denominator, "i_r + i_h + i_u is zero; R0 undefined");
    }
    return target_r0 * exit;
}

} // namespace covplan
