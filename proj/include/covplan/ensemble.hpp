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

#include "covplan/model.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace covplan
{

/// Linearly interpolated quantile of an ascending sample, q in percent.
/// Quantile q sits at fractional rank (n-1)*q/100.
inline double quantile_sorted(std::span<const double> sorted, double q_percent)
{
    if (sorted.empty()) {
        throw Error(ErrorCode::empty_input, "quantile of an empty sample");
    }
    if (!(q_percent >= 0 && q_percent <= 100)) {
        throw Error(ErrorCode::out_of_range, "quantile probability must be in [0,100]");
    }
    const double rank = double(sorted.size() - 1) * q_percent / 100.0;
    const auto lo     = std::size_t(std::floor(rank));
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double frac = rank - double(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct BandSeries {
    std::vector<double> mean;
    std::vector<double> low;
    std::vector<double> high;

    bool operator==(const BandSeries&) const = default;
};

/// Per-day mean and percentile band for a set of compartments.
struct EnsembleResult {
    Date start_date;
    std::vector<Compartment> compartments; ///< canonical order, no duplicates
    std::vector<BandSeries> bands;         ///< parallel to compartments

    std::size_t days() const
    {
        return bands.empty() ? 0 : bands.front().mean.size();
    }

    bool has(Compartment c) const
    {
        return std::find(compartments.begin(), compartments.end(), c) != compartments.end();
    }

    const BandSeries& band(Compartment c) const
    {
        auto it = std::find(compartments.begin(), compartments.end(), c);
        if (it == compartments.end()) {
            throw Error(ErrorCode::not_found, "result has no band for " + std::string(to_string(c)));
        }
        return bands[std::size_t(it - compartments.begin())];
    }

    bool operator==(const EnsembleResult&) const = default;
};

/// Pointwise mean and [lower, upper] percentiles across trajectories.
inline EnsembleResult percentile_bands(std::span<const Trajectory> trajectories, Date start_date,
                                       double lower_percent = 2.5, double upper_percent = 97.5,
                                       std::span<const Compartment> compartments = all_compartments)
{
    if (trajectories.empty()) {
        throw Error(ErrorCode::empty_input, "percentile_bands needs at least one trajectory");
    }
    const std::size_t days = trajectories.front().size();
    for (const auto& t : trajectories) {
        if (t.size() != days) {
            throw Error(ErrorCode::length_mismatch, "trajectories differ in length");
        }
    }

    EnsembleResult out;
    out.start_date = start_date;
    for (auto c : all_compartments) {
        if (std::find(compartments.begin(), compartments.end(), c) != compartments.end()) {
            out.compartments.push_back(c);
        }
    }
    out.bands.resize(out.compartments.size());

    std::vector<double> sample(trajectories.size());
    for (std::size_t k = 0; k < out.compartments.size(); ++k) {
        const auto c = out.compartments[k];
        auto& band   = out.bands[k];
        band.mean.resize(days);
        band.low.resize(days);
        band.high.resize(days);
        for (std::size_t d = 0; d < days; ++d) {
            // running mean stays bit-exact for identical samples
            double mean = 0;
            for (std::size_t m = 0; m < trajectories.size(); ++m) {
                sample[m] = trajectories[m].states[d][c];
                mean += (sample[m] - mean) / double(m + 1);
            }
            std::sort(sample.begin(), sample.end());
            band.mean[d] = mean;
            band.low[d]  = quantile_sorted(sample, lower_percent);
            band.high[d] = quantile_sorted(sample, upper_percent);
        }
    }
    return out;
}

} // namespace covplan
