#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace trussfa {

struct Bounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// Firefly configuration. `alpha0` is a fraction of each dimension's box
/// width; `delta` multiplies alpha once per generation.
struct FaParams {
    int n = 40;
    int max_generation = 2500;
    double alpha0 = 0.2;
    double beta0 = 1.0;
    double gamma = 1.0;
    double delta = 0.97;
    double m_exp = 2.0;
    int dim = 1;
    std::vector<Bounds> bounds{Bounds{}};
    std::uint64_t seed = 1;
};

inline void validate(const FaParams& p)
{
    auto fail = [](const std::string& m) { throw ValidationError("firefly parameters: " + m); };
    if (p.n < 2)
        fail("population size n must be at least 2");
    if (p.max_generation < 1)
        fail("max_generation must be at least 1");
    if (!(p.alpha0 >= 0.0 && p.alpha0 <= 1.0))
        fail("alpha0 must lie in [0, 1]");
    if (!(p.beta0 > 0.0))
        fail("beta0 must be positive");
    if (!(p.gamma >= 0.0))
        fail("gamma must be non-negative");
    if (!(p.delta > 0.0 && p.delta <= 1.0))
        fail("delta must lie in (0, 1]");
    if (!(p.m_exp > 1.0))
        fail("distance exponent m must exceed 1");
    if (p.dim < 1 || static_cast<int>(p.bounds.size()) != p.dim)
        fail("bounds must give one interval per dimension");
    for (const auto& b : p.bounds)
        if (!(b.lo < b.hi))
            fail("each bound needs lo < hi");
}

struct Firefly {
    std::vector<double> position;
    double intensity = -std::numeric_limits<double>::infinity(); // -f(x)
};

struct FaResult {
    std::vector<double> best_position;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> history; // best-so-far after each generation
    std::uint64_t evaluations = 0;

    friend bool operator==(const FaResult&, const FaResult&) = default;
};

/// beta(r) = beta0 * exp(-gamma * r^m)
inline double attractiveness(const FaParams& p, double r)
{
    const double rm = p.m_exp == 2.0 ? r * r : std::pow(r, p.m_exp);
    return p.beta0 * std::exp(-p.gamma * rm);
}

namespace detail {

inline void clamp_to_box(std::vector<double>& x, const FaParams& p)
{
    for (std::size_t d = 0; d < x.size(); ++d)
        x[d] = std::clamp(x[d], p.bounds[d].lo, p.bounds[d].hi);
}

template <class Random>
void random_step(std::vector<double>& x, double alpha, const FaParams& p, Random& rng)
{
    for (std::size_t d = 0; d < x.size(); ++d)
        x[d] += alpha * (rng.uniform01() - 0.5) * (p.bounds[d].hi - p.bounds[d].lo);
}

} // namespace detail

/// x_i + beta(|x_j - x_i|) (x_j - x_i) + alpha (u - 0.5) w, clamped to the box.
/// One uniform draw per dimension. The returned intensity is stale; the
/// caller re-evaluates.
template <class Random>
Firefly move_firefly(const Firefly& i, const Firefly& j, double alpha, const FaParams& p, Random& rng)
{
    Firefly out = i;
    double r2 = 0.0;
    for (std::size_t d = 0; d < i.position.size(); ++d) {
        const double diff = j.position[d] - i.position[d];
        r2 += diff * diff;
    }
    const double beta = attractiveness(p, std::sqrt(r2));
    for (std::size_t d = 0; d < i.position.size(); ++d)
        out.position[d] += beta * (j.position[d] - i.position[d]);
    detail::random_step(out.position, alpha, p, rng);
    detail::clamp_to_box(out.position, p);
    return out;
}

/// Minimize `objective` over the box. Inner-loop moves update firefly i in
/// place and re-evaluate it immediately, so later comparisons in the same
/// sweep see the new intensity. A firefly with no strictly brighter
/// neighbour takes a pure random alpha-step. Non-finite objective values
/// count as worst possible.
///
/// `observer(position, value)` is called after every evaluation.
template <class Objective, class Observer>
FaResult run(Objective&& objective, const FaParams& p, Observer&& observer)
{
    validate(p);
    Rng rng(p.seed);
    FaResult res;
    res.history.reserve(static_cast<std::size_t>(p.max_generation));

    auto evaluate = [&](Firefly& f) {
        double v = objective(static_cast<const std::vector<double>&>(f.position));
        ++res.evaluations;
        observer(static_cast<const std::vector<double>&>(f.position), v);
        if (!std::isfinite(v))
            v = std::numeric_limits<double>::infinity();
        f.intensity = -v;
        if (v < res.best_value) {
            res.best_value = v;
            res.best_position = f.position;
        }
    };

    std::vector<Firefly> swarm(static_cast<std::size_t>(p.n));
    for (auto& f : swarm) {
        f.position.resize(static_cast<std::size_t>(p.dim));
        for (int d = 0; d < p.dim; ++d)
            f.position[static_cast<std::size_t>(d)] = rng.uniform(p.bounds[static_cast<std::size_t>(d)].lo,
                                                                  p.bounds[static_cast<std::size_t>(d)].hi);
    }
    for (auto& f : swarm)
        evaluate(f);
    if (res.best_position.empty())
        res.best_position = swarm.front().position;

    double alpha = p.alpha0;
    for (int t = 0; t < p.max_generation; ++t) {
        for (std::size_t i = 0; i < swarm.size(); ++i) {
            bool attracted = false;
            for (std::size_t j = 0; j < swarm.size(); ++j) {
                if (swarm[i].intensity < swarm[j].intensity) {
                    swarm[i] = move_firefly(swarm[i], swarm[j], alpha, p, rng);
                    evaluate(swarm[i]);
                    attracted = true;
                }
            }
            if (!attracted) {
                detail::random_step(swarm[i].position, alpha, p, rng);
                detail::clamp_to_box(swarm[i].position, p);
                evaluate(swarm[i]);
            }
        }
        res.history.push_back(res.best_value);
        alpha *= p.delta;
    }
    return res;
}

template <class Objective>
FaResult run(Objective&& objective, const FaParams& p)
{
    return run(std::forward<Objective>(objective), p, [](const std::vector<double>&, double) {});
}

} // namespace trussfa
