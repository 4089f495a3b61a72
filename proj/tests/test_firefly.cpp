#include <gtest/gtest.h>

#include <cmath>

#include "trussfa/firefly.hpp"

using namespace trussfa;

namespace {

struct FixedRandom {
    double u = 0.5;
    double uniform01() { return u; }
};

FaParams box(int dim)
{
    FaParams p;
    p.dim = dim;
    p.bounds.assign(static_cast<std::size_t>(dim), Bounds{0.0, 1.0});
    return p;
}

double parabola(const std::vector<double>& x) { return (x[0] - 0.7) * (x[0] - 0.7); }

} // namespace

TEST(Attractiveness, Examples)
{
    FaParams p;
    EXPECT_DOUBLE_EQ(attractiveness(p, 0.0), 1.0);
    EXPECT_NEAR(attractiveness(p, 1.0), 0.367879441171, 1e-12);
    p.gamma = 0.0;
    EXPECT_DOUBLE_EQ(attractiveness(p, 5.0), 1.0);
    p.gamma = 1.0;
    p.m_exp = 3.0;
    p.beta0 = 2.0;
    EXPECT_NEAR(attractiveness(p, 0.5), 2.0 * std::exp(-0.125), 1e-15);
}

TEST(Move, Examples)
{
    FaParams p = box(2);
    FixedRandom rng{0.9};
    Firefly i{{0.2, 0.3}}, j{{0.2, 0.3}};
    EXPECT_EQ(move_firefly(i, j, 0.0, p, rng).position, i.position);

    p.gamma = 0.0;
    j.position = {0.8, 0.1};
    EXPECT_EQ(move_firefly(i, j, 0.0, p, rng).position, j.position);

    // Random term alone, scaled by box width.
    FaParams wide;
    wide.dim = 1;
    wide.bounds = {Bounds{-2.0, 2.0}};
    Firefly a{{0.0}};
    EXPECT_NEAR(move_firefly(a, a, 0.5, wide, rng).position[0], 0.5 * 0.4 * 4.0, 1e-15);

    // Clamping.
    FixedRandom up{1.0};
    Firefly edge{{0.95, 0.05}};
    const Firefly moved = move_firefly(edge, edge, 1.0, box(2), up);
    EXPECT_EQ(moved.position[0], 1.0);
    EXPECT_NEAR(moved.position[1], 0.55, 1e-15);
}

TEST(Move, HugeGammaLeavesOnlyTheRandomTerm)
{
    FaParams p = box(2);
    p.gamma = 1e12;
    FixedRandom rng{0.8};
    const Firefly i{{0.4, 0.4}};
    const Firefly j{{0.4 + 1e-5, 0.4}};
    const Firefly far{{0.9, 0.1}};
    for (const Firefly& target : {j, far}) {
        const Firefly m = move_firefly(i, target, 0.1, p, rng);
        const double step = 0.1 * (0.8 - 0.5) * 1.0;
        EXPECT_EQ(m.position[0], i.position[0] + step);
        EXPECT_EQ(m.position[1], i.position[1] + step);
    }
}

TEST(Run, ConvexOneDimensional)
{
    FaParams p = box(1);
    p.n = 25;
    p.max_generation = 200;
    p.seed = 42;
    const FaResult r = run(parabola, p);
    EXPECT_LT(r.best_value, 1e-4);
    EXPECT_NEAR(r.best_position[0], 0.7, 1e-2);
    EXPECT_EQ(r.history.size(), 200u);
    EXPECT_EQ(r.best_value, parabola(r.best_position));

    double grid_best = 1e9;
    for (int k = 0; k <= 1000; ++k)
        grid_best = std::min(grid_best, parabola({k / 1000.0}));
    EXPECT_LE(r.best_value, grid_best + 1e-4);
}

TEST(Run, FrozenPairStaysPut)
{
    FaParams p = box(1);
    p.n = 2;
    p.max_generation = 1;
    p.alpha0 = 0.0;
    std::vector<std::vector<double>> seen;
    const FaResult r = run([](const std::vector<double>&) { return 1.0; }, p,
                           [&](const std::vector<double>& x, double) { seen.push_back(x); });
    ASSERT_EQ(seen.size(), 4u);
    EXPECT_EQ(seen[2], seen[0]);
    EXPECT_EQ(seen[3], seen[1]);
    EXPECT_EQ(r.best_position, seen[0]);
    EXPECT_EQ(r.best_value, 1.0);
    EXPECT_EQ(r.evaluations, 4u);
}

TEST(Run, DeterministicPerSeed)
{
    FaParams p = box(3);
    p.n = 10;
    p.max_generation = 30;
    auto f = [](const std::vector<double>& x) { return std::sin(7 * x[0]) + x[1] * x[2]; };
    EXPECT_EQ(run(f, p), run(f, p));
    FaParams q = p;
    q.seed = 2;
    EXPECT_NE(run(f, p).best_position, run(f, q).best_position);
}

TEST(Run, HistoryMonotoneAndPositionsInBox)
{
    FaParams p;
    p.dim = 2;
    p.bounds = {Bounds{-1.0, 3.0}, Bounds{10.0, 11.0}};
    p.n = 12;
    p.max_generation = 60;
    p.alpha0 = 1.0;
    p.delta = 1.0;
    p.seed = 9;
    bool inside = true;
    double min_seen = 1e300;
    auto f = [](const std::vector<double>& x) { return std::cos(3 * x[0]) * std::sin(5 * x[1]); };
    const FaResult r = run(f, p, [&](const std::vector<double>& x, double v) {
        inside = inside && x[0] >= -1.0 && x[0] <= 3.0 && x[1] >= 10.0 && x[1] <= 11.0;
        min_seen = std::min(min_seen, v);
    });
    EXPECT_TRUE(inside);
    for (std::size_t t = 1; t < r.history.size(); ++t)
        EXPECT_LE(r.history[t], r.history[t - 1]);
    EXPECT_EQ(r.best_value, min_seen);
}

TEST(Run, NonFiniteValuesNeverWin)
{
    FaParams p = box(1);
    p.n = 6;
    p.max_generation = 20;
    const FaResult r = run(
        [](const std::vector<double>& x) { return x[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : x[0]; },
        p);
    EXPECT_TRUE(std::isfinite(r.best_value));
    EXPECT_GE(r.best_position[0], 0.5);
}

TEST(Params, Validation)
{
    FaParams p;
    EXPECT_NO_THROW(validate(p));
    auto bad = [](auto f) {
        FaParams q;
        f(q);
        return q;
    };
    EXPECT_THROW(validate(bad([](FaParams& q) { q.n = 1; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.max_generation = 0; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.alpha0 = 1.5; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.beta0 = 0.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.gamma = -1.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.delta = 0.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.m_exp = 1.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.dim = 2; })), ValidationError);
    EXPECT_THROW(validate(bad([](FaParams& q) { q.bounds = {Bounds{1.0, 1.0}}; })), ValidationError);
}
