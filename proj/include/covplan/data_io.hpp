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

// Flat-file formats. Comma separated, '\n' line endings, no quoting, ISO dates.
// Numbers are written in shortest round-trip form so parse(write(x)) == x.

#include "covplan/calibration.hpp"
#include "covplan/ensemble.hpp"
#include "covplan/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace covplan
{

namespace csv
{
inline std::vector<std::string_view> lines(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        out.push_back(line);
        pos = end + 1;
    }
    while (!out.empty() && out.back().empty()) {
        out.pop_back();
    }
    return out;
}

inline std::vector<std::string_view> fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

inline Error row_error(std::size_t line_no, const std::string& what)
{
    return Error(ErrorCode::malformed_row, "line " + std::to_string(line_no) + ": " + what);
}

inline double number(std::string_view field, std::size_t line_no)
{
    double value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw row_error(line_no, "'" + std::string(field) + "' is not a number");
    }
    return value;
}

inline Date date(std::string_view field, std::size_t line_no)
{
    try {
        return Date::parse(field);
    }
    catch (const Error&) {
        throw row_error(line_no, "'" + std::string(field) + "' is not a YYYY-MM-DD date");
    }
}

inline void append(std::string& out, double value)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    out.append(buf, ptr);
}

inline void expect_header(const std::vector<std::string_view>& rows, std::string_view header)
{
    if (rows.empty() || rows.front() != header) {
        throw Error(ErrorCode::malformed_row, "line 1: expected header '" + std::string(header) + "'");
    }
}

/// Checks a row's date continues the series without gaps.
inline void expect_next_date(Date expected, Date got, std::size_t line_no)
{
    if (got != expected) {
        throw Error(ErrorCode::date_gap, "line " + std::to_string(line_no) + ": expected " + expected.to_string() +
                                             ", got " + got.to_string());
    }
}
} // namespace csv

inline constexpr std::string_view observed_header = "date,hospitalized,icu,recovered,deceased";

/// date,hospitalized,icu,recovered,deceased; consecutive dates.
inline ObservedSeries parse_observed_csv(std::string_view text)
{
    const auto rows = csv::lines(text);
    csv::expect_header(rows, observed_header);
    if (rows.size() < 2) {
        throw Error(ErrorCode::empty_series, "observed CSV has no data rows");
    }
    ObservedSeries out;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const std::size_t line_no = k + 1;
        const auto f              = csv::fields(rows[k]);
        if (f.size() != 5) {
            throw csv::row_error(line_no, "expected 5 fields, got " + std::to_string(f.size()));
        }
        const Date d = csv::date(f[0], line_no);
        if (k == 1) {
            out.start_date = d;
        }
        else {
            csv::expect_next_date(out.start_date + int(k - 1), d, line_no);
        }
        const double values[4] = {csv::number(f[1], line_no), csv::number(f[2], line_no), csv::number(f[3], line_no),
                                  csv::number(f[4], line_no)};
        for (double v : values) {
            if (v < 0) {
                throw csv::row_error(line_no, "negative count");
            }
        }
        out.h_census.push_back(values[0]);
        out.u_census.push_back(values[1]);
        out.r_cum.push_back(values[2]);
        out.f_cum.push_back(values[3]);
    }
    out.validate();
    return out;
}

inline std::string write_observed_csv(const ObservedSeries& series)
{
    series.validate();
    std::string out(observed_header);
    out += '\n';
    for (std::size_t d = 0; d < series.size(); ++d) {
        out += (series.start_date + int(d)).to_string();
        for (double v : {series.h_census[d], series.u_census[d], series.r_cum[d], series.f_cum[d]}) {
            out += ',';
            csv::append(out, v);
        }
        out += '\n';
    }
    return out;
}

/// Fractional change of mobility from baseline per day, in [-1, 1].
struct MobilitySeries {
    Date start_date;
    std::vector<double> change;

    std::size_t size() const
    {
        return change.size();
    }

    bool operator==(const MobilitySeries&) const = default;
};

inline constexpr std::string_view mobility_header = "date,percent_change";

/// date,percent_change with percentages in [-100, 100].
inline MobilitySeries parse_mobility_csv(std::string_view text)
{
    const auto rows = csv::lines(text);
    csv::expect_header(rows, mobility_header);
    if (rows.size() < 2) {
        throw Error(ErrorCode::empty_series, "mobility CSV has no data rows");
    }
    MobilitySeries out;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const std::size_t line_no = k + 1;
        const auto f              = csv::fields(rows[k]);
        if (f.size() != 2) {
            throw csv::row_error(line_no, "expected 2 fields, got " + std::to_string(f.size()));
        }
        const Date d = csv::date(f[0], line_no);
        if (k == 1) {
            out.start_date = d;
        }
        else {
            csv::expect_next_date(out.start_date + int(k - 1), d, line_no);
        }
        const double pct = csv::number(f[1], line_no);
        if (pct < -100 || pct > 100) {
            throw Error(ErrorCode::out_of_range,
                        "line " + std::to_string(line_no) + ": percent_change " + std::string(f[1]) + " outside [-100, 100]");
        }
        out.change.push_back(pct / 100.0);
    }
    return out;
}

inline std::string write_mobility_csv(const MobilitySeries& series)
{
    std::string out(mobility_header);
    out += '\n';
    for (std::size_t d = 0; d < series.size(); ++d) {
        out += (series.start_date + int(d)).to_string();
        out += ',';
        csv::append(out, series.change[d] * 100.0);
        out += '\n';
    }
    return out;
}

/// Linear mobility-to-quarantine map. While smoothed mobility is below
/// threshold, s_q = min(max_s_q, -m * anchor_s_q / -anchor_change) and
/// q_s = 0; once it recovers after a dip, s_q = 0 and q_s = drain_q_s.
struct QuarantineRule {
    double threshold     = -0.2;
    double anchor_change = -0.55;
    double anchor_s_q    = 0.3;
    double max_s_q       = 0.3;
    double drain_q_s     = 0.1;
};

/// Centered moving average over smoothing_days, truncated at the ends.
inline std::vector<double> smooth_centered(std::span<const double> values, int smoothing_days)
{
    if (smoothing_days < 1) {
        throw Error(ErrorCode::out_of_range, "smoothing_days must be at least 1");
    }
    const int n      = int(values.size());
    const int before = (smoothing_days - 1) / 2;
    const int after  = smoothing_days / 2;
    std::vector<double> out(values.size());
    for (int t = 0; t < n; ++t) {
        const int lo = std::max(0, t - before);
        const int hi = std::min(n - 1, t + after);
        double sum   = 0;
        for (int k = lo; k <= hi; ++k) {
            sum += values[std::size_t(k)];
        }
        out[std::size_t(t)] = sum / double(hi - lo + 1);
    }
    return out;
}

inline QuarantineSchedule derive_quarantine_schedule(const MobilitySeries& mobility, int smoothing_days,
                                                     const QuarantineRule& rule = {})
{
    if (mobility.change.empty()) {
        throw Error(ErrorCode::empty_series, "mobility series is empty");
    }
    const auto smooth = smooth_centered(mobility.change, smoothing_days);
    QuarantineSchedule out;
    out.start_date = mobility.start_date;
    out.s_q.resize(smooth.size());
    out.q_s.resize(smooth.size());
    bool confined_before = false;
    for (std::size_t t = 0; t < smooth.size(); ++t) {
        if (smooth[t] < rule.threshold) {
            out.s_q[t]      = std::min(rule.max_s_q, -smooth[t] * rule.anchor_s_q / -rule.anchor_change);
            out.q_s[t]      = 0;
            confined_before = true;
        }
        else {
            out.s_q[t] = 0;
            out.q_s[t] = confined_before ? rule.drain_q_s : 0;
        }
    }
    return out;
}

inline constexpr std::string_view bands_header = "date,compartment,mean,p2_5,p97_5";

/// One row per day per compartment, days ascending, canonical compartment order.
inline std::string write_bands_csv(const EnsembleResult& result)
{
    std::string out(bands_header);
    out += '\n';
    for (std::size_t d = 0; d < result.days(); ++d) {
        const auto date = (result.start_date + int(d)).to_string();
        for (std::size_t k = 0; k < result.compartments.size(); ++k) {
            const auto& b = result.bands[k];
            out += date;
            out += ',';
            out += to_string(result.compartments[k]);
            for (double v : {b.mean[d], b.low[d], b.high[d]}) {
                out += ',';
                csv::append(out, v);
            }
            out += '\n';
        }
    }
    return out;
}

inline EnsembleResult parse_bands_csv(std::string_view text)
{
    const auto rows = csv::lines(text);
    csv::expect_header(rows, bands_header);
    if (rows.size() < 2) {
        throw Error(ErrorCode::empty_series, "bands CSV has no data rows");
    }
    struct Row {
        Date date;
        Compartment c;
        double mean, low, high;
    };
    std::vector<Row> parsed;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const std::size_t line_no = k + 1;
        const auto f              = csv::fields(rows[k]);
        if (f.size() != 5) {
            throw csv::row_error(line_no, "expected 5 fields, got " + std::to_string(f.size()));
        }
        auto c = parse_compartment(f[1]);
        if (!c) {
            throw csv::row_error(line_no, "unknown compartment '" + std::string(f[1]) + "'");
        }
        parsed.push_back({csv::date(f[0], line_no), *c, csv::number(f[2], line_no), csv::number(f[3], line_no),
                          csv::number(f[4], line_no)});
    }

    EnsembleResult out;
    out.start_date = parsed.front().date;
    for (const auto& r : parsed) {
        if (r.date != out.start_date) {
            break;
        }
        if (!out.compartments.empty() && r.c <= out.compartments.back()) {
            throw csv::row_error(out.compartments.size() + 2, "compartments out of canonical order");
        }
        out.compartments.push_back(r.c);
    }
    const std::size_t per_day = out.compartments.size();
    if (parsed.size() % per_day != 0) {
        throw Error(ErrorCode::malformed_row, "bands CSV has an incomplete final day");
    }
    const std::size_t days = parsed.size() / per_day;
    out.bands.assign(per_day, BandSeries{std::vector<double>(days), std::vector<double>(days), std::vector<double>(days)});
    for (std::size_t idx = 0; idx < parsed.size(); ++idx) {
        const std::size_t d = idx / per_day, k = idx % per_day;
        const auto& r       = parsed[idx];
        const std::size_t line_no = idx + 2;
        if (r.date != out.start_date + int(d)) {
            throw Error(ErrorCode::date_gap, "line " + std::to_string(line_no) + ": expected " +
                                                 (out.start_date + int(d)).to_string() + ", got " + r.date.to_string());
        }
        if (r.c != out.compartments[k]) {
            throw csv::row_error(line_no, "expected compartment " + std::string(to_string(out.compartments[k])));
        }
        out.bands[k].mean[d] = r.mean;
        out.bands[k].low[d]  = r.low;
        out.bands[k].high[d] = r.high;
    }
    return out;
}

/// day,date,S,Q,L,I,R,H,U,F,HU,A
inline std::string write_trajectory_csv(const Trajectory& trajectory, Date start_date)
{
    std::string out = "day,date";
    for (auto c : all_compartments) {
        out += ',';
        out += to_string(c);
    }
    out += '\n';
    for (const auto& s : trajectory.states) {
        out += std::to_string(s.day);
        out += ',';
        out += (start_date + s.day).to_string();
        for (auto c : all_compartments) {
            out += ',';
            csv::append(out, s[c]);
        }
        out += '\n';
    }
    return out;
}

inline constexpr std::string_view extrema_header = "date,compartment,kind,mean,ci_low,ci_high";

inline std::string write_extrema_csv(const ExtremaReport& report)
{
    std::string out(extrema_header);
    out += '\n';
    for (const auto& e : report.entries) {
        out += e.date.to_string();
        out += ',';
        out += to_string(e.compartment);
        out += ',';
        out += to_string(e.kind);
        for (double v : {e.mean, e.ci_low, e.ci_high}) {
            out += ',';
            csv::append(out, v);
        }
        out += '\n';
    }
    return out;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot write '" + path + "'");
    }
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::io, "write to '" + path + "' failed");
    }
}

} // namespace covplan
