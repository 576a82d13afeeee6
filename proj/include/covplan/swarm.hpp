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

#include "covplan/error.hpp"
#include "covplan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace covplan
{

/// Axis-aligned search box.
struct Bounds {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t size() const
    {
        return lo.size();
    }

    void validate() const
    {
        if (lo.size() != hi.size()) {
            throw Error(ErrorCode::dimension_mismatch, "bounds lo/hi differ in length");
        }
        if (lo.empty()) {
            throw Error(ErrorCode::empty_bounds, "bounds are empty");
        }
        for (std::size_t d = 0; d < lo.size(); ++d) {
            if (!std::isfinite(lo[d]) || !std::isfinite(hi[d]) || !(lo[d] < hi[d])) {
                throw Error(ErrorCode::empty_bounds, "dimension " + std::to_string(d) + " has empty or infinite range");
            }
        }
    }

    bool contains(std::span<const double> x) const
    {
        if (x.size() != lo.size()) {
            return false;
        }
        for (std::size_t d = 0; d < x.size(); ++d) {
            if (x[d] < lo[d] || x[d] > hi[d]) {
                return false;
            }
        }
        return true;
    }
};

struct SwarmConfig {
    int n_particles       = 30;
    int n_iterations      = 200;
    double inertia        = 0.72;
    /// When set, inertia falls linearly from `inertia` to this value over the run.
    std::optional<double> final_inertia;
    double cognitive      = 1.49;
    double social         = 1.49;
    double novelty_weight = 0.3;
    int archive_k         = 10;
    std::uint64_t rng_seed = 0;
    /// Velocity limit as a fraction of each dimension's range.
    double max_velocity = 0.05;
    /// Evaluation threads; 0 means hardware concurrency.
    unsigned threads = 1;

    void validate() const
    {
        auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_swarm_config, what); };
        if (n_particles < 2) {
            fail("n_particles must be at least 2");
        }
        if (n_iterations < 1) {
            fail("n_iterations must be positive");
        }
        if (!(novelty_weight >= 0 && novelty_weight <= 1)) {
            fail("novelty_weight must lie in [0,1]");
        }
        if (archive_k < 1 || std::int64_t(archive_k) >= std::int64_t(n_particles) * n_iterations) {
            fail("archive_k must be positive and below n_particles * n_iterations");
        }
        if (!(max_velocity > 0)) {
            fail("max_velocity must be positive");
        }
    }
};

/// One objective evaluation: the loss and the behaviour it produced.
struct Evaluated {
    double loss = 0;
    std::vector<double> descriptor;
};

struct Evaluation {
    std::vector<double> position;
    double loss = 0;
};

struct SwarmResult {
    std::vector<double> best;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> loss_history; ///< best-so-far loss after each iteration
    std::vector<Evaluation> evaluations; ///< every evaluated position, in evaluation order

    bool operator==(const SwarmResult& o) const
    {
        auto same = [](const std::vector<Evaluation>& a, const std::vector<Evaluation>& b) {
            return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](auto& x, auto& y) {
                       return x.position == y.position && (x.loss == y.loss || (std::isnan(x.loss) && std::isnan(y.loss)));
                   });
        };
        return best == o.best && best_loss == o.best_loss && loss_history == o.loss_history &&
               same(evaluations, o.evaluations);
    }
};

/// Min-max normalisation of behaviour descriptors by the range seen so far.
class DescriptorScale
{
public:
    void observe(std::span<const double> d)
    {
        if (m_lo.empty()) {
            m_lo.assign(d.begin(), d.end());
            m_hi.assign(d.begin(), d.end());
            return;
        }
        if (d.size() != m_lo.size()) {
            throw Error(ErrorCode::dimension_mismatch, "behaviour descriptor changed length");
        }
        for (std::size_t k = 0; k < d.size(); ++k) {
            m_lo[k] = std::min(m_lo[k], d[k]);
            m_hi[k] = std::max(m_hi[k], d[k]);
        }
    }

    /// Distance in normalised space; components with zero range contribute nothing.
    double distance(std::span<const double> a, std::span<const double> b) const
    {
        double sum = 0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double range = m_hi[k] - m_lo[k];
            if (range > 0) {
                const double z = (a[k] - b[k]) / range;
                sum += z * z;
            }
        }
        return std::sqrt(sum);
    }

private:
    std::vector<double> m_lo;
    std::vector<double> m_hi;
};

/// Mean distance to the k nearest archive members; 0 for an empty archive.
inline double novelty_score(std::span<const double> descriptor, const std::vector<std::vector<double>>& archive,
                            const DescriptorScale& scale, int k)
{
    if (archive.empty()) {
        return 0;
    }
    std::vector<double> dist;
    dist.reserve(archive.size());
    for (const auto& entry : archive) {
        dist.push_back(scale.distance(descriptor, entry));
    }
    const auto kk = std::min<std::size_t>(std::size_t(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + std::ptrdiff_t(kk), dist.end());
    return std::accumulate(dist.begin(), dist.begin() + std::ptrdiff_t(kk), 0.0) / double(kk);
}

namespace detail
{
/// Rank of each entry in [0,1], 0 for the best. Ties keep index order.
template <class Better>
std::vector<double> normalized_ranks(std::span<const double> values, Better better)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return better(values[a], values[b]); });
    std::vector<double> rank(values.size(), 0.0);
    const double denom = values.size() > 1 ? double(values.size() - 1) : 1.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        rank[order[r]] = double(r) / denom;
    }
    return rank;
}
} // namespace detail

/// Particle swarm whose social attractor is chosen by a blend of fitness and
/// behavioural novelty.
///
/// Each particle keeps a personal best by loss. After every iteration the
/// personal bests are ranked by loss and by novelty of their descriptors
/// against the archive; the attractor is the personal best minimising
/// (1-w)*fitness_rank + w*novelty_rank. The archive receives the descriptor
/// of the most novel particle of each iteration. With novelty_weight = 0
/// this is a plain global-best PSO. Non-finite losses are treated as +inf.
inline SwarmResult novelty_swarm(const std::function<Evaluated(std::span<const double>)>& evaluate,
                                 const Bounds& bounds, const SwarmConfig& cfg)
{
    bounds.validate();
    cfg.validate();
    const std::size_t dim = bounds.size();
    const auto n          = std::size_t(cfg.n_particles);
    constexpr double inf  = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> range(dim), vmax(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        range[d] = bounds.hi[d] - bounds.lo[d];
        vmax[d]  = cfg.max_velocity * range[d];
    }

    std::vector<std::vector<double>> x(n, std::vector<double>(dim)), v(n, std::vector<double>(dim));
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t d = 0; d < dim; ++d) {
            x[p][d] = bounds.lo[d] + unit(rng) * range[d];
            v[p][d] = (2 * unit(rng) - 1) * 0.1 * range[d];
        }
    }

    std::vector<std::vector<double>> pbest = x;
    std::vector<double> pbest_loss(n, inf);
    std::vector<std::vector<double>> pbest_desc(n);

    std::vector<std::vector<double>> archive;
    DescriptorScale scale;
    SwarmResult result;
    result.evaluations.reserve(n * std::size_t(cfg.n_iterations));
    std::size_t descriptor_size = 0;
    bool have_descriptor_size   = false;

    std::vector<Evaluated> current(n);
    for (int it = 0; it < cfg.n_iterations; ++it) {
        parallel_for(n, cfg.threads, [&](std::size_t p) { current[p] = evaluate(x[p]); });

        // serial reduction in particle order
        for (std::size_t p = 0; p < n; ++p) {
            auto& e = current[p];
            if (!std::isfinite(e.loss)) {
                e.loss = inf;
            }
            if (!have_descriptor_size) {
                descriptor_size      = e.descriptor.size();
                have_descriptor_size = true;
            }
            else if (e.descriptor.size() != descriptor_size) {
                throw Error(ErrorCode::dimension_mismatch, "behaviour descriptor changed length");
            }
            scale.observe(e.descriptor);
            result.evaluations.push_back({x[p], e.loss});
            if (it == 0 || e.loss < pbest_loss[p]) {
                pbest[p]      = x[p];
                pbest_loss[p] = e.loss;
                pbest_desc[p] = e.descriptor;
            }
            if (result.best.empty() || e.loss < result.best_loss) {
                result.best      = x[p];
                result.best_loss = e.loss;
            }
        }

        std::vector<double> novelty(n);
        for (std::size_t p = 0; p < n; ++p) {
            novelty[p] = novelty_score(current[p].descriptor, archive, scale, cfg.archive_k);
        }
        const auto most_novel = std::size_t(std::max_element(novelty.begin(), novelty.end()) - novelty.begin());

        std::vector<double> pbest_novelty(n);
        for (std::size_t p = 0; p < n; ++p) {
            pbest_novelty[p] = novelty_score(pbest_desc[p], archive, scale, cfg.archive_k);
        }
        archive.push_back(current[most_novel].descriptor);

        const auto fit_rank = detail::normalized_ranks(pbest_loss, std::less<>{});
        const auto nov_rank = detail::normalized_ranks(pbest_novelty, std::greater<>{});
        std::size_t attractor = 0;
        double attractor_score = inf;
        for (std::size_t p = 0; p < n; ++p) {
            const double score = (1 - cfg.novelty_weight) * fit_rank[p] + cfg.novelty_weight * nov_rank[p];
            if (score < attractor_score ||
                (score == attractor_score && pbest_loss[p] < pbest_loss[attractor])) {
                attractor       = p;
                attractor_score = score;
            }
        }
        result.loss_history.push_back(result.best_loss);

        if (it + 1 == cfg.n_iterations) {
            break;
        }
        const auto& guide = pbest[attractor];
        double w          = cfg.inertia;
        if (cfg.final_inertia && cfg.n_iterations > 1) {
            w += (*cfg.final_inertia - cfg.inertia) * double(it) / double(cfg.n_iterations - 1);
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t d = 0; d < dim; ++d) {
                const double r1 = unit(rng);
                const double r2 = unit(rng);
                double vel      = w * v[p][d] + cfg.cognitive * r1 * (pbest[p][d] - x[p][d]) +
                             cfg.social * r2 * (guide[d] - x[p][d]);
                vel       = std::clamp(vel, -vmax[d], vmax[d]);
                double xd = x[p][d] + vel;
                if (xd < bounds.lo[d]) {
                    xd  = bounds.lo[d];
                    vel = 0;
                }
                else if (xd > bounds.hi[d]) {
                    xd  = bounds.hi[d];
                    vel = 0;
                }
                x[p][d] = xd;
                v[p][d] = vel;
            }
        }
    }
    return result;
}

/// Objective-only form: the descriptor is the position scaled to the unit box.
inline SwarmResult novelty_swarm(const std::function<double(std::span<const double>)>& objective, const Bounds& bounds,
                                 const SwarmConfig& cfg)
{
    bounds.validate();
    return novelty_swarm(
        [&](std::span<const double> x) {
            Evaluated e;
            e.loss = objective(x);
            e.descriptor.resize(x.size());
            for (std::size_t d = 0; d < x.size(); ++d) {
                e.descriptor[d] = (x[d] - bounds.lo[d]) / (bounds.hi[d] - bounds.lo[d]);
            }
            return e;
        },
        bounds, cfg);
}

} // namespace covplan
