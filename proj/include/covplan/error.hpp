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

#include <stdexcept>
#include <string>
#include <string_view>

namespace covplan
{

enum class ErrorCode {
    // model
    invalid_rates,
    negative_state,
    nonpositive_population,
    zero_denominator,
    invalid_schedule,
    invalid_config,
    // scenario
    window_out_of_horizon,
    invalid_effect,
    invalid_scenario,
    empty_ensemble,
    member_invalid,
    // calibration
    length_mismatch,
    empty_input,
    dimension_mismatch,
    empty_bounds,
    no_overlap,
    invalid_swarm_config,
    // data-io
    invalid_date,
    malformed_row,
    non_monotone_cumulative,
    date_gap,
    out_of_range,
    empty_series,
    // interface
    schema_invalid,
    unknown_artifact,
    not_found,
    job_not_done,
    io,
    internal,
};

inline constexpr std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_rates: return "invalid-rates";
    case ErrorCode::negative_state: return "negative-state";
    case ErrorCode::nonpositive_population: return "nonpositive-population";
    case ErrorCode::zero_denominator: return "zero-denominator";
    case ErrorCode::invalid_schedule: return "invalid-schedule";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::window_out_of_horizon: return "window-out-of-horizon";
    case ErrorCode::invalid_effect: return "invalid-effect";
    case ErrorCode::invalid_scenario: return "invalid-scenario";
    case ErrorCode::empty_ensemble: return "empty-ensemble";
    case ErrorCode::member_invalid: return "member-invalid";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::empty_bounds: return "empty-bounds";
    case ErrorCode::no_overlap: return "no-overlap";
    case ErrorCode::invalid_swarm_config: return "invalid-swarm-config";
    case ErrorCode::invalid_date: return "invalid-date";
    case ErrorCode::malformed_row: return "malformed-row";
    case ErrorCode::non_monotone_cumulative: return "non-monotone-cumulative";
    case ErrorCode::date_gap: return "date-gap";
    case ErrorCode::out_of_range: return "out-of-range";
    case ErrorCode::empty_series: return "empty-series";
    case ErrorCode::schema_invalid: return "schema-invalid";
    case ErrorCode::unknown_artifact: return "unknown-artifact";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::job_not_done: return "job-not-done";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
    }
    return "unknown";
}

/// Single exception type for the library. Carries a machine-readable code and,
/// for document validation failures, the dotted path of the offending field.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message, std::string field_path = {})
        : std::runtime_error(message)
        , m_code(code)
        , m_field_path(std::move(field_path))
    {
    }

    ErrorCode code() const noexcept
    {
        return m_code;
    }
    const std::string& field_path() const noexcept
    {
        return m_field_path;
    }

    /// Bad input as opposed to an environment or internal failure.
    bool is_validation() const noexcept
    {
        return m_code != ErrorCode::io && m_code != ErrorCode::internal;
    }

private:
    ErrorCode m_code;
    std::string m_field_path;
};

} // namespace covplan
