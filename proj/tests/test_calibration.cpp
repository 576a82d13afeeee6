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
#include "covplan/calibration.hpp"
#include "covplan/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace covplan;

namespace
{

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    }
    catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::internal;
}

Bounds unit_box(std::size_t dim)
{
    return Bounds{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

EnsembleResult constant_bands(Date start, std::size_t days, double low, double mean, double high)
{
    EnsembleResult r;
    r.start_date   = start;
    r.compartments = {Compartment::H, Compartment::U};
    for (int k = 0; k < 2; ++k) {
        r.bands.push_back({std::vector<double>(days, mean), std::vector<double>(days, low),
                           std::vector<double>(days, high)});
    }
    return r;
}

} // namespace

TEST(Loss, ZeroOnItsOwnClean)
{
    const auto p = synthetic::default_problem(120, 0.0);
    EXPECT_EQ(loss(synthetic::default_truth(), p), 0);
}

TEST(Loss, PerturbedBetaScoresWorse)
{
    const auto p = synthetic::default_problem(120, 0.0);
    auto x       = synthetic::default_truth();
    const double base = loss(x, p);
    x[p.layout.beta_index(0)] *= 1.5;
    EXPECT_GT(loss(x, p), base);
}

TEST(Loss, MatchesHandComputedRmse)
{
    auto p = synthetic::default_problem(60, 0.0);
    const auto clean = p.observed;
    for (auto& v : p.observed.h_census) {
        v += 3;
    }
    double top = 0;
    for (double v : p.observed.h_census) {
        top = std::max(top, v);
    }
    // constant error 3 on the ward series only
    EXPECT_NEAR(loss(synthetic::default_truth(), p), 3 / top, 1e-9);
    p.observed         = clean;
    p.weights.icu      = 2;
    p.observed.u_census.assign(p.observed.size(), 0.0);
    double u_sq = 0;
    for (double v : clean.u_census) {
        u_sq += v * v;
    }
    EXPECT_NEAR(loss(synthetic::default_truth(), p), 2 * std::sqrt(u_sq / double(clean.size())), 1e-9);
}

TEST(Loss, InfeasibleParametersScoreInfinity)
{
    const auto p = synthetic::default_problem(30, 0.0);
    auto x       = synthetic::default_truth();
    x[1]         = 0.6; // i_r + i_h > 1
    x[2]         = 0.6;
    EXPECT_EQ(loss(x, p), INFINITY);
    EXPECT_EQ(behavioral_descriptor(x, p), std::vector<double>(5, 0.0));
    EXPECT_EQ(code_of([&] { loss(std::vector<double>{1, 2}, p); }), ErrorCode::dimension_mismatch);
}

TEST(Descriptor, ZeroEpidemicGivesZeros)
{
    auto p = synthetic::default_problem(40, 0.0);
    p.config.initial_state = {};
    p.config.initial_state.s = p.config.p_total;
    const auto d = behavioral_descriptor(synthetic::default_truth(), p);
    EXPECT_EQ(d, std::vector<double>(5, 0.0));
}

TEST(Descriptor, IdenticalInputsGiveIdenticalDescriptors)
{
    const auto p = synthetic::default_problem(120, 0.0);
    EXPECT_EQ(behavioral_descriptor(synthetic::default_truth(), p),
              behavioral_descriptor(synthetic::default_truth(), p));
    const auto e = evaluate(synthetic::default_truth(), p);
    EXPECT_EQ(e.descriptor, behavioral_descriptor(synthetic::default_truth(), p));
    EXPECT_EQ(e.loss, loss(synthetic::default_truth(), p));
}

TEST(Descriptor, FasterSpreadPeaksEarlier)
{
    auto p = synthetic::default_problem(190, 0.0);
    p.quarantine = {};
    p.layout     = ParameterLayout{};
    p.bounds.lo.resize(p.layout.size());
    p.bounds.hi.resize(p.layout.size());
    auto x = synthetic::default_truth();
    x.resize(p.layout.size());
    const auto slow = behavioral_descriptor(x, p);
    x.back() *= 2;
    const auto fast = behavioral_descriptor(x, p);
    EXPECT_LT(fast[1], slow[1]);
    EXPECT_GT(fast[0], slow[0]);
}

TEST(SelectEnsemble, SingleEvaluation)
{
    const std::vector<Evaluation> h{{{0.5, 0.5}, 1.0}};
    const auto e = select_ensemble(h, unit_box(2));
    ASSERT_EQ(e.size(), 1u);
    EXPECT_EQ(e[0].position, h[0].position);
}

TEST(SelectEnsemble, IdenticalEvaluationsCollapse)
{
    const std::vector<Evaluation> h(50, Evaluation{{0.2, 0.3}, 1.0});
    EXPECT_EQ(select_ensemble(h, unit_box(2)).size(), 1u);
}

TEST(SelectEnsemble, RandomHistoryRespectsThresholdAndSpacing)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Evaluation> h;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> x{u(rng), u(rng), u(rng)};
        h.push_back({x, 1 + u(rng)});
    }
    EnsembleSelection sel;
    sel.delta    = 0.1;
    sel.min_dist = 0.05;
    sel.n_max    = 30;
    const auto e = select_ensemble(h, unit_box(3), sel);
    double best  = INFINITY;
    for (const auto& v : h) {
        best = std::min(best, v.loss);
    }
    ASSERT_FALSE(e.empty());
    EXPECT_EQ(e.front().loss, best);
    EXPECT_LE(e.size(), sel.n_max);
    for (std::size_t a = 0; a < e.size(); ++a) {
        EXPECT_LE(e[a].loss, 1.1 * best);
        for (std::size_t b = a + 1; b < e.size(); ++b) {
            EXPECT_GE(normalized_distance(e[a].position, e[b].position, unit_box(3)), sel.min_dist);
        }
    }
    std::size_t eligible = 0;
    for (const auto& v : h) {
        eligible += v.loss <= 1.1 * best;
    }
    EXPECT_GT(eligible, 1u);
    EXPECT_GT(e.size(), 1u);
}

TEST(SelectEnsemble, RejectsEmptyHistory)
{
    EXPECT_EQ(code_of([] { select_ensemble(std::vector<Evaluation>{}, unit_box(1)); }), ErrorCode::empty_input);
}

TEST(NormalizedDistance, ScalesByBounds)
{
    const Bounds b{{0, 0}, {2, 4}};
    EXPECT_NEAR(normalized_distance(std::vector<double>{0, 0}, std::vector<double>{2, 4}, b), 1, 1e-15);
    EXPECT_NEAR(normalized_distance(std::vector<double>{0, 0}, std::vector<double>{1, 0}, b), std::sqrt(0.125), 1e-15);
}

TEST(Calibrate, ShortRunImprovesOnRandomStart)
{
    const auto p = synthetic::default_problem(60, 0.02, 3);
    SwarmConfig c;
    c.n_particles  = 12;
    c.n_iterations = 20;
    c.rng_seed     = 5;
    const auto r   = calibrate(p, c);
    EXPECT_LE(r.loss_history.back(), r.loss_history.front());
    EXPECT_EQ(r.best_loss, r.loss_history.back());
    ASSERT_FALSE(r.ensemble.empty());
    EXPECT_EQ(r.ensemble.front().position, r.best);
    EXPECT_EQ(calibrate(p, c).ensemble.size(), r.ensemble.size());
    const auto traj = ensemble_trajectories(p, r.ensemble, 10);
    ASSERT_EQ(traj.size(), r.ensemble.size());
    EXPECT_EQ(traj.front().size(), std::size_t(p.horizon() + 10 + 1));
}

TEST(Calibrate, RejectsInconsistentProblems)
{
    auto p = synthetic::default_problem(30, 0.0);
    p.bounds.lo.pop_back();
    p.bounds.hi.pop_back();
    SwarmConfig c;
    EXPECT_EQ(code_of([&] { calibrate(p, c); }), ErrorCode::dimension_mismatch);
    p = synthetic::default_problem(30, 0.0);
    p.observed.start_date = p.config.start_date - 1;
    EXPECT_EQ(code_of([&] { calibrate(p, c); }), ErrorCode::no_overlap);
    p = synthetic::default_problem(30, 0.0);
    p.layout.beta_breakpoints = {5, 5};
    EXPECT_EQ(code_of([&] { calibrate(p, c); }), ErrorCode::invalid_config);
}

TEST(ObservedSeries, ValidationNamesTheDay)
{
    ObservedSeries s;
    s.start_date = Date(2020, 3, 1);
    s.h_census   = {1, 2, 3};
    s.u_census   = {1, 1, 1};
    s.r_cum      = {0, 2, 1};
    s.f_cum      = {0, 0, 0};
    try {
        s.validate();
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::non_monotone_cumulative);
        EXPECT_NE(std::string(e.what()).find("2020-03-03"), std::string::npos);
    }
    s.r_cum = {0, 1, 2};
    s.u_census[1] = -1;
    EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::out_of_range);
    s.u_census = {1, 1};
    EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::length_mismatch);
}

TEST(Holdout, CoverageRmseAndSlope)
{
    ObservedSeries h;
    h.start_date = Date(2020, 5, 1);
    h.h_census   = {10, 12, 30, 8};
    h.u_census   = {5, 5, 5, 5};
    h.r_cum = h.f_cum = {0, 0, 0, 0};
    // bands start two days earlier and cover the first three holdout days
    auto bands = constant_bands(Date(2020, 4, 29), 5, 0, 10, 20);
    const auto m = validate_holdout(bands, h);
    EXPECT_EQ(m.first_date, Date(2020, 5, 1));
    EXPECT_EQ(m.overlap_days, 3u);
    EXPECT_NEAR(m.hospitalized.coverage, 2.0 / 3, 1e-15);
    EXPECT_NEAR(m.hospitalized.rmse, std::sqrt((0 + 4 + 400) / 3.0), 1e-12);
    EXPECT_EQ(m.hospitalized.slope_agreement, 0);
    EXPECT_EQ(m.icu.coverage, 1);
    EXPECT_EQ(m.icu.slope_agreement, 1);
}

TEST(Holdout, WardBandIncludesHu)
{
    ObservedSeries h;
    h.start_date = Date(2020, 5, 1);
    h.h_census   = {15, 15};
    h.u_census   = {1, 1};
    h.r_cum = h.f_cum = {0, 0};
    auto bands = constant_bands(h.start_date, 2, 0, 5, 10);
    EXPECT_EQ(validate_holdout(bands, h).hospitalized.coverage, 0);
    bands.compartments.insert(bands.compartments.begin() + 1, Compartment::HU);
    bands.bands.insert(bands.bands.begin() + 1, bands.bands.front());
    EXPECT_EQ(validate_holdout(bands, h).hospitalized.coverage, 1);
}

TEST(Holdout, DisjointDatesAreRejected)
{
    ObservedSeries h;
    h.start_date = Date(2021, 1, 1);
    h.h_census = h.u_census = h.r_cum = h.f_cum = {1};
    EXPECT_EQ(code_of([&] { validate_holdout(constant_bands(Date(2020, 1, 1), 10, 0, 1, 2), h); }),
              ErrorCode::no_overlap);
}

TEST(QuarantineSchedule, CompressesRunsAndClampsEnds)
{
    QuarantineSchedule q;
    q.start_date = Date(2020, 3, 3);
    q.s_q        = {0.1, 0.1, 0.2};
    q.q_s        = {0.0, 0.0, 0.05};
    const auto o = q.overrides(Date(2020, 3, 1), 8);
    ASSERT_EQ(o.size(), 2u);
    // days before the series keep the base rates
    EXPECT_EQ(o[0].day_from, 2);
    EXPECT_EQ(o[0].day_to, 3);
    EXPECT_EQ(o[1].day_from, 4);
    EXPECT_EQ(o[1].day_to, 7);
    EXPECT_EQ(o[1].rates.values[*rate_field_index("s_q")], 0.2);
    EXPECT_EQ(o[0].rates.values[*rate_field_index("q_s")], 0.0);
}
