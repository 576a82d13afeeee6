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
#include "covplan/data_io.hpp"
#include "covplan/scenario.hpp"
#include "covplan/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace covplan;

namespace
{

Error error_of(auto&& fn)
{
    try {
        fn();
    }
    catch (const Error& e) {
        return e;
    }
    return Error(ErrorCode::internal, "no error");
}

bool mentions(const Error& e, std::string_view text)
{
    return std::string_view(e.what()).find(text) != std::string_view::npos;
}

const char* observed_text = "date,hospitalized,icu,recovered,deceased\n"
                            "2020-03-01,10,2,0,0\n"
                            "2020-03-02,12,3,1,0\n"
                            "2020-03-03,15,3,4,1\n";

} // namespace

TEST(ObservedCsv, Parses)
{
    const auto s = parse_observed_csv(observed_text);
    EXPECT_EQ(s.start_date, Date(2020, 3, 1));
    EXPECT_EQ(s.h_census, (std::vector<double>{10, 12, 15}));
    EXPECT_EQ(s.u_census, (std::vector<double>{2, 3, 3}));
    EXPECT_EQ(s.r_cum, (std::vector<double>{0, 1, 4}));
    EXPECT_EQ(s.f_cum, (std::vector<double>{0, 0, 1}));
}

TEST(ObservedCsv, AcceptsCrlfAndTrailingBlankLines)
{
    EXPECT_EQ(parse_observed_csv("date,hospitalized,icu,recovered,deceased\r\n2020-03-01,1,2,3,4\r\n\n"),
              parse_observed_csv("date,hospitalized,icu,recovered,deceased\n2020-03-01,1,2,3,4"));
}

TEST(ObservedCsv, RoundTripsExactly)
{
    const auto p    = synthetic::default_problem(90, 0.05, 4);
    const auto text = write_observed_csv(p.observed);
    EXPECT_EQ(parse_observed_csv(text), p.observed);
    EXPECT_EQ(write_observed_csv(parse_observed_csv(text)), text);
}

TEST(ObservedCsv, ErrorsNameTheLine)
{
    const std::string head = "date,hospitalized,icu,recovered,deceased\n";
    std::string rows;
    for (int d = 1; d <= 4; ++d) {
        rows += "2020-03-0" + std::to_string(d) + ",1,1,1,1\n";
    }
    auto e = error_of([&] { parse_observed_csv(head + rows + "2020-03-05,1,x,1,1\n"); });
    EXPECT_EQ(e.code(), ErrorCode::malformed_row);
    EXPECT_TRUE(mentions(e, "line 6"));
    e = error_of([&] { parse_observed_csv(head + rows + "2020-03-07,1,1,1,1\n"); });
    EXPECT_EQ(e.code(), ErrorCode::date_gap);
    EXPECT_TRUE(mentions(e, "2020-03-05"));
    e = error_of([&] { parse_observed_csv(head + rows + "2020-03-05,1,1,0,1\n"); });
    EXPECT_EQ(e.code(), ErrorCode::non_monotone_cumulative);
    EXPECT_TRUE(mentions(e, "2020-03-05"));
    e = error_of([&] { parse_observed_csv(head + rows + "2020-03-05,1,1,1\n"); });
    EXPECT_EQ(e.code(), ErrorCode::malformed_row);
    e = error_of([&] { parse_observed_csv(head + rows + "2020-03-05,-1,1,1,1\n"); });
    EXPECT_EQ(e.code(), ErrorCode::malformed_row);
    e = error_of([&] { parse_observed_csv(head + rows + "2020-02-30,1,1,1,1\n"); });
    EXPECT_EQ(e.code(), ErrorCode::malformed_row);
    EXPECT_EQ(error_of([&] { parse_observed_csv("day,h\n"); }).code(), ErrorCode::malformed_row);
    EXPECT_EQ(error_of([&] { parse_observed_csv(head); }).code(), ErrorCode::empty_series);
    EXPECT_EQ(error_of([&] { parse_observed_csv(""); }).code(), ErrorCode::malformed_row);
}

TEST(MobilityCsv, ParsesPercentagesAsFractions)
{
    const auto m = parse_mobility_csv("date,percent_change\n2020-03-01,0\n2020-03-02,-30\n2020-03-03,12.5\n");
    EXPECT_EQ(m.start_date, Date(2020, 3, 1));
    EXPECT_EQ(m.change, (std::vector<double>{0, -0.3, 0.125}));
    EXPECT_EQ(parse_mobility_csv(write_mobility_csv(m)), m);
}

TEST(MobilityCsv, RejectsOutOfRangeAndGaps)
{
    EXPECT_EQ(error_of([] { parse_mobility_csv("date,percent_change\n2020-03-01,-101\n"); }).code(),
              ErrorCode::out_of_range);
    EXPECT_EQ(error_of([] { parse_mobility_csv("date,percent_change\n2020-03-01,1\n2020-03-01,1\n"); }).code(),
              ErrorCode::date_gap);
    EXPECT_EQ(error_of([] { parse_mobility_csv("date,percent_change\n2020-03-01\n"); }).code(),
              ErrorCode::malformed_row);
}

TEST(Smoothing, CenteredTruncatedMean)
{
    const std::vector<double> v{0, 3, 6, 9, 12};
    EXPECT_EQ(smooth_centered(v, 1), v);
    EXPECT_EQ(smooth_centered(v, 3), (std::vector<double>{1.5, 3, 6, 9, 10.5}));
    // even window leans forward
    EXPECT_EQ(smooth_centered(v, 2), (std::vector<double>{1.5, 4.5, 7.5, 10.5, 12}));
    EXPECT_EQ(error_of([&] { smooth_centered(v, 0); }).code(), ErrorCode::out_of_range);
}

TEST(QuarantineDerivation, LinearMapWithDrainAfterDip)
{
    MobilitySeries m;
    m.start_date = Date(2020, 3, 1);
    m.change     = {0, -0.1, -0.3, -0.55, -0.8, -0.15, 0};
    const auto q = derive_quarantine_schedule(m, 1);
    EXPECT_EQ(q.start_date, m.start_date);
    EXPECT_EQ(q.s_q[0], 0);
    EXPECT_EQ(q.q_s[0], 0);
    EXPECT_EQ(q.s_q[1], 0);
    EXPECT_EQ(q.q_s[1], 0);
    EXPECT_NEAR(q.s_q[2], 0.3 * 0.3 / 0.55, 1e-15);
    EXPECT_NEAR(q.s_q[3], 0.3, 1e-15);
    EXPECT_EQ(q.s_q[4], 0.3);
    EXPECT_EQ(q.q_s[4], 0);
    EXPECT_EQ(q.s_q[5], 0);
    EXPECT_EQ(q.q_s[5], 0.1);
    EXPECT_EQ(q.q_s[6], 0.1);
}

TEST(QuarantineDerivation, UsesSmoothedMobility)
{
    MobilitySeries m;
    m.start_date = Date(2020, 3, 1);
    m.change     = {0, 0, -0.5, 0, 0};
    EXPECT_EQ(derive_quarantine_schedule(m, 1).s_q[2], 0.5 * 0.3 / 0.55);
    // a single-day dip averages away over three days
    for (double v : derive_quarantine_schedule(m, 3).s_q) {
        EXPECT_EQ(v, 0);
    }
    EXPECT_EQ(error_of([] { derive_quarantine_schedule({}, 7); }).code(), ErrorCode::empty_series);
}

TEST(BandsCsv, RoundTripsBytes)
{
    Scenario s;
    s.config       = synthetic::default_population();
    s.base_rates   = synthetic::default_rates(2.5);
    s.horizon_days = 50;
    std::vector<RateSet> members;
    for (int k = 0; k < 20; ++k) {
        members.push_back(synthetic::default_rates(2.0 + 0.05 * k));
    }
    const auto result = run_ensemble(s, members);
    const auto text   = write_bands_csv(result);
    const auto back   = parse_bands_csv(text);
    EXPECT_EQ(back, result);
    EXPECT_EQ(write_bands_csv(back), text);
    EXPECT_EQ(text.substr(0, text.find('\n')), "date,compartment,mean,p2_5,p97_5");
}

TEST(BandsCsv, SubsetKeepsCanonicalOrder)
{
    const std::string text = "date,compartment,mean,p2_5,p97_5\n"
                             "2020-03-01,I,5,4,6\n2020-03-01,U,1,0,2\n"
                             "2020-03-02,I,6,5,7\n2020-03-02,U,2,1,3\n";
    const auto r = parse_bands_csv(text);
    EXPECT_EQ(r.compartments, (std::vector<Compartment>{Compartment::I, Compartment::U}));
    EXPECT_EQ(r.band(Compartment::U).high, (std::vector<double>{2, 3}));
    EXPECT_EQ(write_bands_csv(r), text);
}

TEST(BandsCsv, RejectsMalformedLayouts)
{
    const std::string head = "date,compartment,mean,p2_5,p97_5\n";
    EXPECT_EQ(error_of([&] { parse_bands_csv(head + "2020-03-01,U,1,0,2\n2020-03-01,I,5,4,6\n"); }).code(),
              ErrorCode::malformed_row);
    EXPECT_EQ(error_of([&] { parse_bands_csv(head + "2020-03-01,X,1,0,2\n"); }).code(), ErrorCode::malformed_row);
    EXPECT_EQ(error_of([&] { parse_bands_csv(head + "2020-03-01,I,1,0,2\n2020-03-03,I,1,0,2\n"); }).code(),
              ErrorCode::date_gap);
    EXPECT_EQ(error_of([&] {
                  parse_bands_csv(head + "2020-03-01,I,1,0,2\n2020-03-01,U,1,0,2\n2020-03-02,I,1,0,2\n");
              }).code(),
              ErrorCode::malformed_row);
    EXPECT_EQ(error_of([&] { parse_bands_csv(head); }).code(), ErrorCode::empty_series);
}

TEST(TrajectoryCsv, HeaderAndRows)
{
    const auto t    = simulate(synthetic::default_population(), ParameterSchedule{synthetic::default_rates(), {}}, 2);
    const auto text = write_trajectory_csv(t, Date(2020, 3, 1));
    const auto rows = csv::lines(text);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], "day,date,S,Q,L,I,R,H,U,F,HU,A");
    EXPECT_EQ(rows[1].substr(0, 13), "0,2020-03-01,");
    EXPECT_EQ(rows[3].substr(0, 13), "2,2020-03-03,");
}

TEST(ExtremaCsv, Layout)
{
    ExtremaReport r;
    r.entries.push_back({Date(2020, 3, 22), 21, Compartment::I, ExtremumKind::peak, 10.5, 9, 12});
    EXPECT_EQ(write_extrema_csv(r), "date,compartment,kind,mean,ci_low,ci_high\n2020-03-22,I,peak,10.5,9,12\n");
}

TEST(Files, ReadWriteAndMissing)
{
    const auto path = testing::TempDir() + "covplan_io_test.txt";
    write_file(path, "abc\n");
    EXPECT_EQ(read_file(path), "abc\n");
    EXPECT_EQ(error_of([] { read_file("/nonexistent/dir/file"); }).code(), ErrorCode::io);
    EXPECT_EQ(error_of([] { write_file("/nonexistent/dir/file", "x"); }).code(), ErrorCode::io);
}
