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
#include "covplan/swarm.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace covplan;

namespace
{

Bounds box(std::size_t dim, double lo, double hi)
{
    return Bounds{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

double sphere(std::span<const double> x)
{
    double s = 0;
    for (double v : x) {
        s += v * v;
    }
    return s;
}

SwarmConfig small_config(std::uint64_t seed)
{
    SwarmConfig c;
    c.n_particles  = 30;
    c.n_iterations = 200;
    c.rng_seed     = seed;
    return c;
}

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

} // namespace

TEST(NoveltySwarm, MinimisesSphere)
{
    const auto r = novelty_swarm(sphere, box(5, -5, 5), small_config(7));
    EXPECT_LT(r.best_loss, 1e-3);
    EXPECT_EQ(sphere(r.best), r.best_loss);
}

TEST(NoveltySwarm, MinimisesSphereForEveryNoveltyWeight)
{
    for (double w : {0.0, 0.3, 0.6}) {
        auto c           = small_config(11);
        c.novelty_weight = w;
        c.max_velocity   = 0.2;
        EXPECT_LT(novelty_swarm(sphere, box(3, -5, 5), c).best_loss, 1e-3) << "novelty_weight " << w;
    }
}

TEST(NoveltySwarm, ConstantObjectiveReturnsThatConstant)
{
    auto c         = small_config(3);
    c.n_iterations = 10;
    const auto r   = novelty_swarm([](std::span<const double>) { return 4.25; }, box(2, 0, 1), c);
    EXPECT_EQ(r.best_loss, 4.25);
    EXPECT_TRUE(box(2, 0, 1).contains(r.best));
}

TEST(NoveltySwarm, SameSeedSameResult)
{
    auto c    = small_config(21);
    c.threads = 1;
    const auto a = novelty_swarm(sphere, box(4, -2, 3), c);
    c.threads    = 4;
    const auto b = novelty_swarm(sphere, box(4, -2, 3), c);
    EXPECT_EQ(a, b);
    c.rng_seed = 22;
    EXPECT_NE(novelty_swarm(sphere, box(4, -2, 3), c).evaluations.front().position, a.evaluations.front().position);
}

TEST(NoveltySwarm, PositionsStayInsideBounds)
{
    // minimum outside the box drives particles onto the walls
    auto shifted = [](std::span<const double> x) {
        double s = 0;
        for (double v : x) {
            s += (v - 10) * (v - 10);
        }
        return s;
    };
    auto c         = small_config(5);
    c.max_velocity = 0.5;
    const auto b   = box(3, -1, 2);
    const auto r   = novelty_swarm(shifted, b, c);
    ASSERT_EQ(r.evaluations.size(), std::size_t(c.n_particles * c.n_iterations));
    for (const auto& e : r.evaluations) {
        EXPECT_TRUE(b.contains(e.position));
    }
    for (double v : r.best) {
        EXPECT_NEAR(v, 2, 1e-9);
    }
}

TEST(NoveltySwarm, HistoryIsNonincreasingAndEndsAtBest)
{
    const auto r = novelty_swarm(sphere, box(5, -5, 5), small_config(13));
    ASSERT_EQ(r.loss_history.size(), 200u);
    for (std::size_t k = 1; k < r.loss_history.size(); ++k) {
        EXPECT_LE(r.loss_history[k], r.loss_history[k - 1]);
    }
    EXPECT_EQ(r.loss_history.back(), r.best_loss);
    double lowest = INFINITY;
    for (const auto& e : r.evaluations) {
        lowest = std::min(lowest, e.loss);
    }
    EXPECT_EQ(lowest, r.best_loss);
}

TEST(NoveltySwarm, NonFiniteLossesNeverWin)
{
    auto c         = small_config(2);
    c.n_iterations = 30;
    const auto r   = novelty_swarm(
        [](std::span<const double> x) { return x[0] > 0 ? std::nan("") : -x[0]; }, box(1, -1, 1), c);
    EXPECT_TRUE(std::isfinite(r.best_loss));
    EXPECT_LE(r.best[0], 0);
}

TEST(NoveltySwarm, AnnealedInertiaStillConverges)
{
    auto c          = small_config(7);
    c.final_inertia = 0.4;
    EXPECT_LT(novelty_swarm(sphere, box(5, -5, 5), c).best_loss, 1e-3);
}

TEST(NoveltySwarm, RejectsInvalidConfigAndBounds)
{
    auto run = [](SwarmConfig c, Bounds b) { return code_of([&] { novelty_swarm(sphere, b, c); }); };
    auto c   = small_config(1);
    c.n_particles = 1;
    EXPECT_EQ(run(c, box(2, 0, 1)), ErrorCode::invalid_swarm_config);
    c = small_config(1);
    c.n_iterations = 0;
    EXPECT_EQ(run(c, box(2, 0, 1)), ErrorCode::invalid_swarm_config);
    c = small_config(1);
    c.novelty_weight = 1.5;
    EXPECT_EQ(run(c, box(2, 0, 1)), ErrorCode::invalid_swarm_config);
    c = small_config(1);
    c.archive_k = 0;
    EXPECT_EQ(run(c, box(2, 0, 1)), ErrorCode::invalid_swarm_config);
    c = small_config(1);
    c.max_velocity = 0;
    EXPECT_EQ(run(c, box(2, 0, 1)), ErrorCode::invalid_swarm_config);
    EXPECT_EQ(run(small_config(1), Bounds{}), ErrorCode::empty_bounds);
    EXPECT_EQ(run(small_config(1), Bounds{{0, 0}, {1}}), ErrorCode::dimension_mismatch);
    EXPECT_EQ(run(small_config(1), Bounds{{1}, {1}}), ErrorCode::empty_bounds);
}

TEST(NoveltyScore, MeanDistanceToNearestNeighbours)
{
    const std::vector<std::vector<double>> archive{{0.0}, {1.0}, {3.0}};
    DescriptorScale scale;
    for (const auto& a : archive) {
        scale.observe(a);
    }
    // scaled: 0, 1/3, 1; query 0 has distances 0, 1/3, 1
    EXPECT_NEAR(novelty_score(std::vector<double>{0.0}, archive, scale, 2), (0 + 1.0 / 3) / 2, 1e-12);
    EXPECT_EQ(novelty_score(std::vector<double>{0.0}, {}, scale, 2), 0);
}
