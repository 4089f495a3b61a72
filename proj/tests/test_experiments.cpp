#include <gtest/gtest.h>

#include <sstream>

#include "trussfa/experiments.hpp"

using namespace trussfa;

namespace {

const ScenarioDatabase& k1_db()
{
    static const ScenarioDatabase db = build_database(benchmark_truss(), 1, 5, 8, 1);
    return db;
}

ExperimentSettings brute()
{
    ExperimentSettings s;
    s.detector = Detector::BruteForce;
    return s;
}

FactorialResponses synthetic(double slope_n, double sigma, std::uint64_t seed)
{
    Rng rng(seed);
    FactorialResponses y;
    for (unsigned t = 0; t < 8; ++t)
        for (int r = 0; r < 10; ++r) {
            // Sum of uniforms: approximately normal with the given sigma.
            double z = 0.0;
            for (int k = 0; k < 12; ++k)
                z += rng.uniform01();
            y[t].push_back(10.0 + slope_n * (t & 1u ? 1.0 : 0.0) + sigma * (z - 6.0));
        }
    return y;
}

} // namespace

TEST(Score, Rules)
{
    const Scenario truth = parse_scenario("3:30,8:85");
    EXPECT_TRUE(score(truth, truth, 5).magnitude);
    const Score near = score(truth, parse_scenario("3:35,8:85"), 5);
    EXPECT_TRUE(near.location);
    EXPECT_FALSE(near.magnitude);
    EXPECT_TRUE(near.near);
    const Score far = score(truth, parse_scenario("3:50,8:85"), 5);
    EXPECT_TRUE(far.location);
    EXPECT_FALSE(far.near);
    EXPECT_FALSE(score(truth, parse_scenario("3:30"), 5).location);
    EXPECT_FALSE(score(truth, parse_scenario("3:30,9:85"), 5).location);
}

TEST(NoiseSets, Constants)
{
    const auto s = noise_scenario_set();
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0].name, "N1");
    EXPECT_EQ(s[0].spec.n_omega, 0.0);
    EXPECT_EQ(s[1].spec.n_omega, 0.005);
    EXPECT_EQ(s[1].spec.n_phi, 0.01);
    EXPECT_EQ(s[2].spec.n_phi, 0.03);
    EXPECT_EQ(s[3].spec.n_omega, 0.02);
    EXPECT_EQ(s[3].spec.n_phi, 0.05);
}

TEST(Factorial, SyntheticRecovery)
{
    const EffectTable t = analyze_factorial(synthetic(-3.0, 0.01, 5));
    ASSERT_EQ(t.terms.size(), 8u);
    EXPECT_EQ(t.df, 72);
    EXPECT_NEAR(t.t_crit, 1.9935, 1e-4);
    const std::vector<std::string> names{"const", "n", "gamma", "MaxGeneration", "n*gamma", "n*MaxGeneration",
                                         "gamma*MaxGeneration", "n*gamma*MaxGeneration"};
    for (std::size_t k = 0; k < 8; ++k)
        EXPECT_EQ(t.terms[k].name, names[k]);
    EXPECT_NEAR(t.terms[1].coef, -1.5, 0.05);
    EXPECT_TRUE(t.terms[1].significant);
    for (std::size_t k = 2; k < 8; ++k)
        EXPECT_LT(std::abs(t.terms[k].t_value), t.t_crit) << t.terms[k].name;
    for (std::size_t k = 1; k < 8; ++k)
        EXPECT_EQ(t.terms[k].effect, 2.0 * t.terms[k].coef);
    EXPECT_NEAR(t.terms[0].coef, 8.5, 0.05);
}

TEST(Factorial, OrthogonalContrasts)
{
    // A pure gamma*MaxGeneration interaction shows up in that term only.
    FactorialResponses y;
    for (unsigned t = 0; t < 8; ++t) {
        const double g = t & 2u ? 1.0 : -1.0, m = t & 4u ? 1.0 : -1.0;
        y[t] = {g * m + 0.01, g * m - 0.01};
    }
    const EffectTable tab = analyze_factorial(y);
    for (const auto& term : tab.terms) {
        if (term.name == "gamma*MaxGeneration")
            EXPECT_NEAR(term.coef, 1.0, 1e-12);
        else
            EXPECT_NEAR(term.coef, 0.0, 1e-12) << term.name;
    }
    EXPECT_EQ(tab.df, 8);
}

TEST(Factorial, RejectsTooFewReplicates)
{
    FactorialResponses y;
    for (auto& v : y)
        v = {1.0};
    EXPECT_THROW(analyze_factorial(y), ValidationError);
    FactorialDesign d;
    d.replicates = 1;
    EXPECT_THROW(run_factorial(k1_db(), d, 1, brute()), ValidationError);
}

TEST(Pareto, OrderingAndZeroEffects)
{
    const EffectTable t = analyze_factorial(synthetic(-3.0, 0.01, 8));
    const ParetoChart c = pareto_effects(t);
    ASSERT_EQ(c.entries.size(), 7u);
    EXPECT_EQ(c.entries[0].term, "n");
    for (std::size_t k = 1; k < 7; ++k)
        EXPECT_GE(c.entries[k - 1].abs_t, c.entries[k].abs_t);
    EXPECT_EQ(c.t_crit, t.t_crit);

    FactorialResponses flat;
    for (auto& v : flat)
        v = {1.0, 2.0};
    const ParetoChart z = pareto_effects(analyze_factorial(flat));
    for (const auto& e : z.entries)
        EXPECT_LT(e.abs_t, z.t_crit);
}

TEST(Studies, ZeroTrialsGiveEmptyReports)
{
    const auto fam = mode_count_family(k1_db());
    EXPECT_TRUE(run_mode_count_study(fam, 0, 1, brute()).rows.empty());
    EXPECT_TRUE(run_noise_sweep(k1_db(), 1, brute(), default_sweep_levels(), 0).rows.empty());
}

TEST(Studies, ModeCountZeroNoiseIsExact)
{
    const auto fam = mode_count_family(k1_db());
    EXPECT_THROW(run_mode_count_study(fam, 1, 1, brute(), {3}), ValidationError);
    const AccuracyReport r = run_mode_count_study(fam, 3, 4, brute());
    ASSERT_EQ(r.rows.size(), 16u);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.trials, 3);
        EXPECT_LE(row.magnitude_correct, row.location_correct);
        if (row.noise_name == "N1")
            EXPECT_EQ(r.accuracy(row), 1.0) << row.condition;
    }
    // The same truth is used for every mode count.
    EXPECT_EQ(r.rows[3].records[0].truth, r.rows[15].records[0].truth);
}

TEST(Studies, LocationDominatesCombinedWithSharedSeeds)
{
    std::vector<double> levels{0.0, 10.0, 25.0};
    const AccuracyReport comb = run_noise_sweep(k1_db(), 3, brute(), levels, 6);
    const AccuracyReport loc = run_location_only(k1_db(), 3, brute(), levels, 6);
    ASSERT_EQ(comb.rows.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_GE(loc.accuracy(loc.rows[k]), comb.accuracy(comb.rows[k]));
        for (int i = 0; i < 6; ++i)
            EXPECT_EQ(loc.rows[k].records[i].truth, comb.rows[k].records[i].truth);
    }
    EXPECT_EQ(comb.accuracy(comb.rows[0]), 1.0);
    EXPECT_EQ(loc.accuracy(loc.rows[0]), 1.0);
}

TEST(Studies, SweepRowsIndependentOfLevelList)
{
    const AccuracyReport a = run_noise_sweep(k1_db(), 9, brute(), {13.0}, 4);
    const AccuracyReport b = run_noise_sweep(k1_db(), 9, brute(), {0.0, 13.0}, 4);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(a.rows[0].records[i].seed, b.rows[1].records[i].seed);
        EXPECT_EQ(a.rows[0].records[i].predicted, b.rows[1].records[i].predicted);
    }
}

TEST(Studies, FireflyRunsAreThreadIndependent)
{
    ExperimentSettings s;
    s.fa.max_generation = 40;
    s.threads = 1;
    const AccuracyReport one = run_noise_sweep(k1_db(), 2, s, {4.0, 16.0}, 3);
    s.threads = 4;
    const AccuracyReport four = run_noise_sweep(k1_db(), 2, s, {4.0, 16.0}, 3);
    std::ostringstream a, b;
    write_sweep_csv(a, one);
    write_sweep_csv(b, four);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Csv, Schemas)
{
    const AccuracyReport r = run_noise_sweep(k1_db(), 1, brute(), {4.0}, 2);
    std::ostringstream sweep, summary, loc, trials;
    write_sweep_csv(sweep, r, {"seed=1"});
    write_sweep_summary_csv(summary, r);
    write_location_csv(loc, r);
    write_trials_csv(trials, r);
    EXPECT_EQ(sweep.str().rfind("# seed=1\nnoise_pct,iteration,in_scenario,out_scenario,P,D,D_near\n", 0), 0u);
    EXPECT_EQ(summary.str().rfind("noise_pct,trials,loc_acc,mag_acc,combined_acc,near_acc\n", 0), 0u);
    EXPECT_EQ(loc.str().rfind("noise_pct,trials,loc_correct,loc_acc\n", 0), 0u);
    EXPECT_EQ(trials.str().rfind("condition,trial,seed,in_scenario,out_scenario,objective,P,D,D_near\n", 0), 0u);

    std::ostringstream mc;
    write_mode_count_csv(mc, run_mode_count_study(mode_count_family(k1_db()), 1, 1, brute()));
    EXPECT_EQ(mc.str().rfind("n_modes,noise_set,trials,loc_acc,mag_acc,combined_acc\n", 0), 0u);

    std::ostringstream fac, par;
    const EffectTable t = analyze_factorial(synthetic(-3.0, 0.01, 5));
    write_factorial_csv(fac, t);
    write_pareto_csv(par, pareto_effects(t));
    EXPECT_NE(fac.str().find("term,effect,coef,se,t,p\n"), std::string::npos);
    EXPECT_EQ(par.str().rfind("# t_crit=", 0), 0u);
    EXPECT_NE(par.str().find("term,abs_t\n"), std::string::npos);
}

TEST(Studies, SmallFactorialRunIsDeterministic)
{
    FactorialDesign d;
    d.n = {4, 8};
    d.max_generation = {10, 20};
    d.replicates = 2;
    ExperimentSettings s;
    const FactorialRun a = run_factorial(k1_db(), d, 5, s);
    const FactorialRun b = run_factorial(k1_db(), d, 5, s);
    EXPECT_EQ(a.responses, b.responses);
    EXPECT_FALSE(a.truth.healthy());
    for (const auto& v : a.responses)
        EXPECT_EQ(v.size(), 2u);
}
