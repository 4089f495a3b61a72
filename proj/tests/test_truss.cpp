#include <gtest/gtest.h>

#include <cmath>

#include "trussfa/truss.hpp"

using namespace trussfa;

TEST(BenchmarkTruss, MaterialAndCounts)
{
    const TrussModel m = benchmark_truss();
    EXPECT_EQ(m.material.young_modulus, 2e11);
    EXPECT_EQ(m.material.cross_area, 4e-4);
    EXPECT_EQ(m.material.density, 7850.0);
    EXPECT_EQ(m.material.poisson_ratio, 0.3);
    EXPECT_EQ(m.node_count(), 8);
    EXPECT_EQ(m.bar_count(), 13);
    // Maxwell count for a statically determinate planar truss: m = 2n - 3.
    EXPECT_EQ(m.bar_count(), 2 * m.node_count() - 3);
    EXPECT_EQ(m.constrained_dof_count(), 3);
    EXPECT_EQ(m.free_dof_count(), 13);
    EXPECT_GE(m.free_dof_count(), 8);
    EXPECT_NO_THROW(validate(m));
}

TEST(BenchmarkTruss, Geometry)
{
    const TrussModel m = benchmark_truss();
    double xmin = 1e9, xmax = -1e9, ymax = -1e9;
    for (const auto& n : m.nodes) {
        xmin = std::min(xmin, n.x);
        xmax = std::max(xmax, n.x);
        ymax = std::max(ymax, n.y);
    }
    EXPECT_NEAR(xmax - xmin, 7.3152, 1e-12);
    EXPECT_NEAR(ymax, 2.4284, 1e-12);
    EXPECT_EQ(m.supports.size(), 2u);
    EXPECT_EQ(m.supports[0].node, 1);
    EXPECT_TRUE(m.supports[0].fix_x && m.supports[0].fix_y);
    EXPECT_EQ(m.supports[1].node, 5);
    EXPECT_TRUE(!m.supports[1].fix_x && m.supports[1].fix_y);
}

TEST(BarLength, HandArithmetic)
{
    const TrussModel m = benchmark_truss();
    EXPECT_NEAR(bar_length(m, 1), 1.8288, 1e-12); // 1-2
    EXPECT_EQ(m.bar(6).node_i, 6);
    EXPECT_EQ(m.bar(6).node_j, 7);
    EXPECT_NEAR(bar_length(m, 6), std::sqrt(1.8288 * 1.8288 + 1.2142 * 1.2142), 1e-12);
    EXPECT_NEAR(bar_length(m, 6), 2.1953, 2e-4);
    EXPECT_THROW(bar_length(m, 14), ValidationError);
    EXPECT_THROW(bar_length(m, 0), ValidationError);
}

TEST(Validate, RejectsBadModels)
{
    TrussModel m = benchmark_truss();
    m.nodes[7].x = m.nodes[2].x;
    m.nodes[7].y = m.nodes[2].y; // bar 13 (8-3) becomes zero length
    EXPECT_THROW(validate(m), ValidationError);

    m = benchmark_truss();
    m.supports[1].fix_y = false;
    EXPECT_THROW(validate(m), ValidationError); // constrains nothing

    m = benchmark_truss();
    m.supports.pop_back();
    m.supports[0].fix_y = false;
    EXPECT_THROW(validate(m), ValidationError); // < 3 constrained DOFs

    m = benchmark_truss();
    m.bars[0].node_j = 42;
    EXPECT_THROW(validate(m), ValidationError);

    m = benchmark_truss();
    m.bars[0].node_j = m.bars[0].node_i;
    EXPECT_THROW(validate(m), ValidationError);

    m = benchmark_truss();
    m.nodes[3].id = 9;
    EXPECT_THROW(validate(m), ValidationError);

    m = benchmark_truss();
    m.material.poisson_ratio = 0.5;
    EXPECT_THROW(validate(m), ValidationError);
    m.material.poisson_ratio = 0.3;
    m.material.density = 0.0;
    EXPECT_THROW(validate(m), ValidationError);
}

TEST(ApplyDamage, EmptyStateLeavesStiffnessUnchanged)
{
    const TrussModel m = benchmark_truss();
    const TrussModel d = apply_damage(m, {});
    for (int b = 1; b <= m.bar_count(); ++b)
        EXPECT_EQ(d.effective_modulus(b), m.effective_modulus(b));
    EXPECT_EQ(d.material, m.material);
    EXPECT_EQ(d.nodes, m.nodes);
}

TEST(ApplyDamage, ReducesModulusOnly)
{
    const TrussModel m = benchmark_truss();
    const TrussModel d = apply_damage(m, DamageState{{{3, 0.30}}});
    EXPECT_NEAR(d.effective_modulus(3), 1.4e11, 1e-3);
    for (int b = 1; b <= m.bar_count(); ++b)
        if (b != 3) {
            EXPECT_EQ(d.effective_modulus(b), 2e11);
        }
    EXPECT_EQ(d.material.density, m.material.density);
    EXPECT_EQ(d.material.cross_area, m.material.cross_area);
}

TEST(ApplyDamage, StartsFromPristine)
{
    const TrussModel m = benchmark_truss();
    const DamageState s{{{2, 0.4}, {9, 0.85}}};
    const TrussModel once = apply_damage(m, s);
    EXPECT_EQ(apply_damage(once, s), once);

    DamageState zeros;
    for (int b = 1; b <= m.bar_count(); ++b)
        zeros.damage[b] = 0.0;
    const TrussModel z = apply_damage(m, zeros);
    EXPECT_EQ(apply_damage(z, zeros), z);
    for (int b = 1; b <= m.bar_count(); ++b)
        EXPECT_EQ(z.effective_modulus(b), m.material.young_modulus);
}

TEST(ApplyDamage, Errors)
{
    const TrussModel m = benchmark_truss();
    EXPECT_THROW(apply_damage(m, DamageState{{{3, 1.0}}}), ValidationError);
    EXPECT_THROW(apply_damage(m, DamageState{{{3, -0.1}}}), ValidationError);
    EXPECT_THROW(apply_damage(m, DamageState{{{14, 0.2}}}), ValidationError);
}

TEST(ModelFile, JsonRoundTripAndFingerprint)
{
    const TrussModel m = benchmark_truss();
    const auto j = model_to_json(m);
    EXPECT_EQ(model_from_json(j), m);
    EXPECT_EQ(model_fingerprint(model_from_json(j)), model_fingerprint(m));

    // Order of nodes in the file does not matter.
    auto shuffled = j;
    std::swap(shuffled["nodes"][0], shuffled["nodes"][7]);
    std::swap(shuffled["bars"][1], shuffled["bars"][12]);
    EXPECT_EQ(model_fingerprint(model_from_json(shuffled)), model_fingerprint(m));

    auto moved = j;
    moved["nodes"][6]["y"] = 2.5;
    EXPECT_NE(model_fingerprint(model_from_json(moved)), model_fingerprint(m));

    auto broken = j;
    broken["material"].erase("E");
    EXPECT_THROW(model_from_json(broken), ValidationError);
}

TEST(ModelFile, ParseErrorCarriesByteOffset)
{
    try {
        parse_json_text("{\"nodes\": [1, 2", "model");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_GT(e.byte(), 0u);
    }
}
