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

// Synthetic province used for demos, closed-loop tests and sample data.

#include "covplan/calibration.hpp"
#include "covplan/data_io.hpp"

#include <cstdint>
#include <random>

namespace covplan::synthetic
{

inline constexpr double population = 914678;

/// 300 latent and 150 infectious people on 2020-03-01, everyone else susceptible.
inline PopulationConfig default_population()
{
    PopulationConfig c;
    c.p_total              = population;
    c.start_date           = Date(2020, 3, 1);
    c.initial_state.l      = 300;
    c.initial_state.i      = 150;
    c.initial_state.s      = population - 450;
    return c;
}

/// Clinical rates of the synthetic province with beta set for the given R0.
inline RateSet default_rates(double r0_value = 2.5)
{
    RateSet r;
    r.i_l  = 0.5;
    r.i_r  = 0.30;
    r.i_h  = 0.025;
    r.i_u  = 0.005;
    r.h_u  = 0.03;
    r.h_f  = 0.015;
    r.h_a  = 0.08;
    r.u_f  = 0.04;
    r.u_hu = 0.06;
    r.hu_a = 0.1;
    r.beta = beta_for_r0(r0_value, r);
    return r;
}

/// Mobility with a short lockdown dip: baseline, -30% on days 14..25, then -10%.
inline MobilitySeries default_mobility(int days = 190)
{
    MobilitySeries m;
    m.start_date = default_population().start_date;
    for (int d = 0; d < days; ++d) {
        m.change.push_back(d < 14 ? 0.0 : d < 26 ? -0.30 : -0.10);
    }
    return m;
}

/// Three beta segments: growth, lockdown, partial reopening.
inline ParameterLayout default_layout()
{
    return ParameterLayout{{21, 80}};
}

/// Ground-truth parameter vector for default_layout().
inline std::vector<double> default_truth()
{
    const auto r = default_rates();
    std::vector<double> v;
    for (auto name : clinical_rate_names) {
        v.push_back(r.*rate_field(*rate_field_index(name)));
    }
    for (double seg_r0 : {2.4, 0.8, 1.25}) {
        v.push_back(beta_for_r0(seg_r0, r));
    }
    return v;
}

/// Bounds of +/-10% around the truth for clinical rates (registry-informed priors) and [0.05, 1.2] for each beta.
inline Bounds default_bounds()
{
    const auto truth = default_truth();
    Bounds b;
    for (std::size_t k = 0; k < clinical_rate_names.size(); ++k) {
        b.lo.push_back(truth[k] * 0.9);
        b.hi.push_back(std::min(1.0, truth[k] * 1.1));
    }
    for (std::size_t k = clinical_rate_names.size(); k < truth.size(); ++k) {
        b.lo.push_back(0.05);
        b.hi.push_back(1.2);
    }
    return b;
}

/// Least-squares projection onto nondecreasing sequences (pool adjacent violators).
inline void make_nondecreasing(std::vector<double>& v)
{
    std::vector<double> mean;
    std::vector<std::size_t> count;
    for (double x : v) {
        mean.push_back(x);
        count.push_back(1);
        while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
            const auto n = count[count.size() - 2] + count.back();
            const auto m = (mean[mean.size() - 2] * double(count[count.size() - 2]) + mean.back() * double(count.back())) /
                           double(n);
            mean.pop_back();
            count.pop_back();
            mean.back()  = m;
            count.back() = n;
        }
    }
    std::size_t d = 0;
    for (std::size_t b = 0; b < mean.size(); ++b) {
        for (std::size_t k = 0; k < count[b]; ++k) {
            v[d++] = mean[b];
        }
    }
}

/// Multiplies every value by (1 + e) with e ~ N(0, relative_sd); cumulative
/// series are then projected back onto nondecreasing sequences.
inline ObservedSeries add_noise(ObservedSeries series, double relative_sd, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, relative_sd);
    auto perturb = [&](std::vector<double>& v) {
        for (auto& x : v) {
            x = std::max(0.0, x * (1 + noise(rng)));
        }
    };
    perturb(series.h_census);
    perturb(series.u_census);
    perturb(series.r_cum);
    perturb(series.f_cum);
    make_nondecreasing(series.r_cum);
    make_nondecreasing(series.f_cum);
    return series;
}

/// Calibration problem over `days` observed days generated by the truth,
/// with quarantine derived from default_mobility().
inline CalibrationProblem default_problem(int days = 190, double relative_sd = 0.02, std::uint64_t seed = 1)
{
    CalibrationProblem p;
    p.config     = default_population();
    p.layout     = default_layout();
    p.bounds     = default_bounds();
    p.quarantine = derive_quarantine_schedule(default_mobility(days), 7);
    p.observed.start_date = p.config.start_date;
    p.observed.h_census.assign(std::size_t(days), 0.0);
    p.observed.u_census = p.observed.r_cum = p.observed.f_cum = p.observed.h_census;
    const auto clean = observe(p.simulate(default_truth()), p.config.start_date);
    p.observed       = relative_sd > 0 ? add_noise(clean, relative_sd, seed) : clean;
    return p;
}

/// Swarm settings for the synthetic benchmarks: 60 particles, 300 iterations,
/// attractor chosen mostly by novelty, inertia annealed to 0.4.
inline SwarmConfig benchmark_swarm(std::uint64_t seed = 1)
{
    SwarmConfig c;
    c.n_particles    = 60;
    c.n_iterations   = 300;
    c.novelty_weight = 0.9;
    c.final_inertia  = 0.4;
    c.rng_seed       = seed;
    return c;
}

} // namespace covplan::synthetic
