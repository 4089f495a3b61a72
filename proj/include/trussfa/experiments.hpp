#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "database.hpp"
#include "detection.hpp"
#include "firefly.hpp"
#include "format.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace trussfa {

struct NamedNoise {
    std::string name;
    NoiseSpec spec;
};

/// (Nω, Nφ) sets used by the mode-count study.
inline std::vector<NamedNoise> noise_scenario_set()
{
    return {{"N1", {0.0, 0.0}}, {"N2", {0.005, 0.01}}, {"N3", {0.01, 0.03}}, {"N4", {0.02, 0.05}}};
}

inline std::vector<double> default_sweep_levels() { return {4, 7, 10, 13, 16, 19, 22, 25}; }

enum class Detector { Firefly, BruteForce };

struct ExperimentSettings {
    FaParams fa;
    Detector detector = Detector::Firefly;
    unsigned threads = 1;
};

/// P: same set of damaged bars. D: P and every percent exact.
/// near: P and every percent within one grid step.
struct Score {
    bool location = false;
    bool magnitude = false;
    bool near = false;
};

inline Score score(const Scenario& truth, const Scenario& predicted, int step)
{
    Score s;
    if (truth.size() != predicted.size())
        return s;
    for (std::size_t k = 0; k < truth.size(); ++k)
        if (truth.damaged[k].bar != predicted.damaged[k].bar)
            return s;
    s.location = true;
    s.magnitude = truth.damaged == predicted.damaged;
    s.near = true;
    for (std::size_t k = 0; k < truth.size(); ++k)
        if (std::abs(truth.damaged[k].percent - predicted.damaged[k].percent) > step)
            s.near = false;
    return s;
}

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0; // trial sub-stream seed
    Scenario truth;
    Scenario predicted;
    double objective_value = 0.0;
    Score score;
};

struct AccuracyRow {
    std::string condition;
    int n_modes = 0;
    std::string noise_name;
    NoiseSpec noise;
    double noise_pct = 0.0;
    int trials = 0;
    int location_correct = 0;
    int magnitude_correct = 0; // implies location
    int near_correct = 0;
    std::vector<TrialRecord> records;

    double location_accuracy() const { return trials ? double(location_correct) / trials : 0.0; }
    double magnitude_accuracy() const { return trials ? double(magnitude_correct) / trials : 0.0; }
    double combined_accuracy() const { return magnitude_accuracy(); }
    double near_accuracy() const { return trials ? double(near_correct) / trials : 0.0; }
};

enum class Scoring { Combined, LocationOnly };

struct AccuracyReport {
    std::uint64_t root_seed = 0;
    Scoring scoring = Scoring::Combined;
    std::vector<AccuracyRow> rows;

    /// Headline accuracy of a row under this report's scoring rule.
    double accuracy(const AccuracyRow& r) const
    {
        return scoring == Scoring::LocationOnly ? r.location_accuracy() : r.combined_accuracy();
    }
};

namespace detail {

// Sub-stream tags.
inline constexpr std::uint64_t kModeCountStream = 0x4d4f4445; // "MODE"
inline constexpr std::uint64_t kSweepStream = 0x53574550;     // "SWEP"
inline constexpr std::uint64_t kFactorialStream = 0x46414354; // "FACT"
inline constexpr std::uint64_t kFireflySubstream = 0x46464c59;

/// Uniform over every non-healthy scenario of the database.
inline std::size_t draw_damaged_entry(const ScenarioDatabase& db, Rng& rng)
{
    if (db.size() < 2)
        throw ValidationError("database has no damaged scenarios");
    return 1 + static_cast<std::size_t>(rng.below(db.size() - 1));
}

struct Job {
    const ScenarioDatabase* db = nullptr;
    ModalSignature test;
    std::uint64_t fa_seed = 0;
    FaParams fa;
};

inline std::vector<Prediction> run_jobs(const std::vector<Job>& jobs, const ExperimentSettings& s)
{
    std::vector<Prediction> out(jobs.size());
    parallel_for(jobs.size(), s.threads, [&](std::size_t k) {
        const Job& j = jobs[k];
        const Weights w = Weights::uniform(j.db->meta().n_modes, j.db->meta().dof_count);
        if (s.detector == Detector::BruteForce) {
            out[k] = brute_force(j.test, *j.db, w);
        } else {
            FaParams fa = j.fa;
            fa.seed = j.fa_seed;
            out[k] = detect(j.test, *j.db, w, fa);
        }
    });
    return out;
}

inline void tally(AccuracyRow& row, TrialRecord rec)
{
    ++row.trials;
    row.location_correct += rec.score.location;
    row.magnitude_correct += rec.score.magnitude;
    row.near_correct += rec.score.near;
    row.records.push_back(std::move(rec));
}

} // namespace detail

/// The same database truncated to each requested mode count.
inline std::map<int, ScenarioDatabase> mode_count_family(const ScenarioDatabase& db,
                                                         const std::vector<int>& mode_counts = {2, 4, 6, 8})
{
    std::map<int, ScenarioDatabase> family;
    for (int m : mode_counts)
        family.emplace(m, m == db.meta().n_modes ? db : truncate_database(db, m));
    return family;
}

/// Accuracy for every (mode count, noise set) cell. Within a noise set, trial
/// t uses the same true scenario and the same noise draws for every mode
/// count: the noisy signature of the largest family member is truncated.
inline AccuracyReport run_mode_count_study(const std::map<int, ScenarioDatabase>& family, int trials_per_cell,
                                           std::uint64_t seed, const ExperimentSettings& settings,
                                           const std::vector<int>& mode_counts = {2, 4, 6, 8})
{
    if (trials_per_cell < 0)
        throw ValidationError("trials per cell must be non-negative");
    for (int m : mode_counts)
        if (!family.count(m))
            throw ValidationError("no database for " + std::to_string(m) + " modes");
    if (family.empty())
        throw ValidationError("empty database family");
    const ScenarioDatabase& ref = family.rbegin()->second;
    for (const auto& [m, db] : family)
        if (db.size() != ref.size() || db.meta().model_fingerprint != ref.meta().model_fingerprint)
            throw ValidationError("database family members disagree on model or scenario grid");

    const auto sets = noise_scenario_set();
    AccuracyReport report;
    report.root_seed = seed;
    if (trials_per_cell == 0)
        return report;
    std::vector<detail::Job> jobs;
    std::vector<std::pair<std::size_t, TrialRecord>> pending; // (row index, partial record)
    for (int m : mode_counts) {
        for (const auto& set : sets) {
            AccuracyRow row;
            row.condition = "modes=" + std::to_string(m) + " " + set.name;
            row.n_modes = m;
            row.noise_name = set.name;
            row.noise = set.spec;
            report.rows.push_back(std::move(row));
        }
    }
    for (std::size_t s = 0; s < sets.size(); ++s) {
        for (int t = 0; t < trials_per_cell; ++t) {
            const std::uint64_t sub = derive_seed(seed, {detail::kModeCountStream, s, static_cast<std::uint64_t>(t)});
            Rng rng(sub);
            const std::size_t k = detail::draw_damaged_entry(ref, rng);
            const ModalSignature noisy = add_noise(ref.signature(k), sets[s].spec, rng);
            for (std::size_t mi = 0; mi < mode_counts.size(); ++mi) {
                const int m = mode_counts[mi];
                detail::Job job;
                job.db = &family.at(m);
                job.test = truncate_modes(noisy, m);
                job.fa = settings.fa;
                job.fa_seed = derive_seed(sub, {detail::kFireflySubstream, static_cast<std::uint64_t>(m)});
                jobs.push_back(std::move(job));
                TrialRecord rec;
                rec.trial = t + 1;
                rec.seed = sub;
                rec.truth = ref.scenario(k);
                pending.emplace_back(mi * sets.size() + s, std::move(rec));
            }
        }
    }
    const auto preds = detail::run_jobs(jobs, settings);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& [row, rec] = pending[j];
        rec.predicted = preds[j].scenario;
        rec.objective_value = preds[j].objective_value;
        rec.score = score(rec.truth, rec.predicted, ref.meta().grid_step);
        detail::tally(report.rows[row], std::move(rec));
    }
    return report;
}

/// Noise sweep: at each level (percent, applied to both Nω and Nφ) run
/// `iterations` trials on random damaged scenarios.
inline AccuracyReport run_noise_sweep(const ScenarioDatabase& db, std::uint64_t seed,
                                      const ExperimentSettings& settings,
                                      const std::vector<double>& levels_pct = default_sweep_levels(),
                                      int iterations = 10, Scoring scoring = Scoring::Combined)
{
    if (iterations < 0)
        throw ValidationError("iterations must be non-negative");
    AccuracyReport report;
    report.root_seed = seed;
    report.scoring = scoring;
    if (iterations == 0)
        return report;
    std::vector<detail::Job> jobs;
    std::vector<std::pair<std::size_t, TrialRecord>> pending;
    for (std::size_t l = 0; l < levels_pct.size(); ++l) {
        const double frac = levels_pct[l] / 100.0;
        if (!(frac >= 0.0))
            throw ValidationError("noise levels must be non-negative");
        AccuracyRow row;
        row.condition = "noise=" + format_double(levels_pct[l]) + "%";
        row.n_modes = db.meta().n_modes;
        row.noise = {frac, frac};
        row.noise_pct = levels_pct[l];
        report.rows.push_back(std::move(row));
        for (int i = 0; i < iterations; ++i) {
            // Keyed by the level value, not its position, so prepending a
            // level leaves the other rows untouched.
            const auto level_key = static_cast<std::uint64_t>(std::llround(levels_pct[l] * 1000.0));
            const std::uint64_t sub = derive_seed(seed, {detail::kSweepStream, level_key, static_cast<std::uint64_t>(i)});
            Rng rng(sub);
            const std::size_t k = detail::draw_damaged_entry(db, rng);
            detail::Job job;
            job.db = &db;
            job.test = add_noise(db.signature(k), NoiseSpec{frac, frac}, rng);
            job.fa = settings.fa;
            job.fa_seed = derive_seed(sub, {detail::kFireflySubstream});
            jobs.push_back(std::move(job));
            TrialRecord rec;
            rec.trial = i + 1;
            rec.seed = sub;
            rec.truth = db.scenario(k);
            pending.emplace_back(l, std::move(rec));
        }
    }
    const auto preds = detail::run_jobs(jobs, settings);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& [row, rec] = pending[j];
        rec.predicted = preds[j].scenario;
        rec.objective_value = preds[j].objective_value;
        rec.score = score(rec.truth, rec.predicted, db.meta().grid_step);
        detail::tally(report.rows[row], std::move(rec));
    }
    return report;
}

/// Same trials as run_noise_sweep (identical seeds), scored on location only.
inline AccuracyReport run_location_only(const ScenarioDatabase& db, std::uint64_t seed,
                                        const ExperimentSettings& settings,
                                        const std::vector<double>& levels_pct = default_sweep_levels(),
                                        int iterations = 10)
{
    return run_noise_sweep(db, seed, settings, levels_pct, iterations, Scoring::LocationOnly);
}

// Factorial design ------------------------------------------------------------

/// Two-level factors in term order n, gamma, MaxGeneration. Treatment t of
/// the 8 runs sets factor f high when bit f of t is set (Yates order).
struct FactorialDesign {
    std::array<int, 2> n{25, 40};
    std::array<double, 2> gamma{0.21, 1.0};
    std::array<int, 2> max_generation{2500, 5000};
    int replicates = 10;
    NoiseSpec noise{0.02, 0.05};
};

struct EffectTerm {
    std::string name;
    double effect = 0.0; // high minus low; 0 for the constant
    double coef = 0.0;
    double se = 0.0;
    double t_value = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct EffectTable {
    std::vector<EffectTerm> terms; // constant first
    int df = 0;
    double sigma2 = 0.0;
    double t_crit = 0.0;
};

using FactorialResponses = std::array<std::vector<double>, 8>;

struct FactorialRun {
    Scenario truth;
    std::uint64_t test_seed = 0;
    FactorialResponses responses;
};

/// Term bit masks in reporting order.
inline constexpr std::array<unsigned, 8> kFactorialTerms = {0, 1, 2, 4, 3, 5, 6, 7};

inline std::string factorial_term_name(unsigned mask)
{
    if (mask == 0)
        return "const";
    static const char* names[3] = {"n", "gamma", "MaxGeneration"};
    std::string out;
    for (int f = 0; f < 3; ++f)
        if (mask & (1u << f))
            out += (out.empty() ? "" : "*") + std::string(names[f]);
    return out;
}

/// Contrast-method effects with pooled within-treatment variance.
inline EffectTable analyze_factorial(const FactorialResponses& y)
{
    const std::size_t reps = y[0].size();
    for (const auto& v : y)
        if (v.size() != reps)
            throw ValidationError("factorial: every treatment needs the same replicate count");
    if (reps < 2)
        throw ValidationError("factorial: at least 2 replicates are needed for a variance estimate");

    std::array<double, 8> mean{};
    double ss = 0.0;
    for (std::size_t t = 0; t < 8; ++t) {
        for (double v : y[t])
            mean[t] += v;
        mean[t] /= static_cast<double>(reps);
        for (double v : y[t])
            ss += (v - mean[t]) * (v - mean[t]);
    }
    const double n_total = 8.0 * static_cast<double>(reps);
    EffectTable table;
    table.df = static_cast<int>(n_total) - 8;
    table.sigma2 = ss / table.df;
    table.t_crit = t_quantile(0.975, table.df);
    const double se = std::sqrt(table.sigma2 / n_total);
    for (unsigned mask : kFactorialTerms) {
        EffectTerm term;
        term.name = factorial_term_name(mask);
        double contrast = 0.0;
        for (unsigned t = 0; t < 8; ++t) {
            const int low_factors = std::popcount(mask & ~t);
            contrast += (low_factors % 2 ? -1.0 : 1.0) * mean[t];
        }
        term.coef = contrast / 8.0;
        term.effect = mask == 0 ? 0.0 : 2.0 * term.coef;
        term.se = se;
        if (se > 0.0)
            term.t_value = term.coef / se;
        else
            term.t_value = term.coef == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), term.coef);
        term.p_value = term.t_value == 0.0 ? 1.0 : t_two_sided_p(term.t_value, table.df);
        term.significant = term.p_value < 0.05;
        table.terms.push_back(term);
    }
    return table;
}

/// Runs detect for every treatment and replicate against one fixed noisy
/// test case. Replicate r uses the same firefly seed in all 8 treatments.
inline FactorialRun run_factorial(const ScenarioDatabase& db, const FactorialDesign& design, std::uint64_t seed,
                                  const ExperimentSettings& settings)
{
    if (design.replicates < 2)
        throw ValidationError("factorial: at least 2 replicates are needed for a variance estimate");
    FactorialRun run;
    run.test_seed = derive_seed(seed, {detail::kFactorialStream, 0});
    Rng rng(run.test_seed);
    const std::size_t k = detail::draw_damaged_entry(db, rng);
    run.truth = db.scenario(k);
    const ModalSignature test = add_noise(db.signature(k), design.noise, rng);

    std::vector<detail::Job> jobs;
    for (unsigned t = 0; t < 8; ++t) {
        for (int r = 0; r < design.replicates; ++r) {
            detail::Job job;
            job.db = &db;
            job.test = test;
            job.fa = settings.fa;
            job.fa.n = design.n[t & 1u ? 1 : 0];
            job.fa.gamma = design.gamma[t & 2u ? 1 : 0];
            job.fa.max_generation = design.max_generation[t & 4u ? 1 : 0];
            job.fa_seed = derive_seed(seed, {detail::kFactorialStream, 1, static_cast<std::uint64_t>(r)});
            jobs.push_back(std::move(job));
        }
    }
    const auto preds = detail::run_jobs(jobs, settings);
    for (unsigned t = 0; t < 8; ++t)
        for (int r = 0; r < design.replicates; ++r)
            run.responses[t].push_back(preds[t * static_cast<unsigned>(design.replicates) + static_cast<unsigned>(r)].objective_value);
    return run;
}

inline EffectTable factorial_2k(const ScenarioDatabase& db, const FactorialDesign& design, std::uint64_t seed,
                                const ExperimentSettings& settings)
{
    return analyze_factorial(run_factorial(db, design, seed, settings).responses);
}

struct ParetoEntry {
    std::string term;
    double abs_t = 0.0;
};

struct ParetoChart {
    std::vector<ParetoEntry> entries; // descending |t|, ties in term order
    double t_crit = 0.0;
};

inline ParetoChart pareto_effects(const EffectTable& table)
{
    ParetoChart chart;
    chart.t_crit = table.t_crit;
    for (const auto& t : table.terms)
        if (t.name != "const")
            chart.entries.push_back({t.name, std::abs(t.t_value)});
    std::stable_sort(chart.entries.begin(), chart.entries.end(),
                     [](const ParetoEntry& a, const ParetoEntry& b) { return a.abs_t > b.abs_t; });
    return chart;
}

// CSV output ------------------------------------------------------------------

inline void write_header(std::ostream& os, const std::vector<std::string>& header)
{
    for (const auto& line : header)
        os << "# " << line << '\n';
}

inline void write_mode_count_csv(std::ostream& os, const AccuracyReport& r, const std::vector<std::string>& header = {})
{
    write_header(os, header);
    os << "n_modes,noise_set,trials,loc_acc,mag_acc,combined_acc\n";
    for (const auto& row : r.rows)
        os << row.n_modes << ',' << row.noise_name << ',' << row.trials << ',' << format_double(row.location_accuracy())
           << ',' << format_double(row.magnitude_accuracy()) << ',' << format_double(row.combined_accuracy()) << '\n';
}

/// One line per trial. Scenarios are written as "bar:pct;bar:pct".
inline void write_sweep_csv(std::ostream& os, const AccuracyReport& r, const std::vector<std::string>& header = {})
{
    write_header(os, header);
    os << "noise_pct,iteration,in_scenario,out_scenario,P,D,D_near\n";
    for (const auto& row : r.rows)
        for (const auto& rec : row.records)
            os << format_double(row.noise_pct) << ',' << rec.trial << ',' << to_string(rec.truth, ';') << ','
               << to_string(rec.predicted, ';') << ',' << int(rec.score.location) << ',' << int(rec.score.magnitude)
               << ',' << int(rec.score.near) << '\n';
}

inline void write_sweep_summary_csv(std::ostream& os, const AccuracyReport& r,
                                    const std::vector<std::string>& header = {})
{
    write_header(os, header);
    os << "noise_pct,trials,loc_acc,mag_acc,combined_acc,near_acc\n";
    for (const auto& row : r.rows)
        os << format_double(row.noise_pct) << ',' << row.trials << ',' << format_double(row.location_accuracy()) << ','
           << format_double(row.magnitude_accuracy()) << ',' << format_double(row.combined_accuracy()) << ','
           << format_double(row.near_accuracy()) << '\n';
}

inline void write_location_csv(std::ostream& os, const AccuracyReport& r, const std::vector<std::string>& header = {})
{
    write_header(os, header);
    os << "noise_pct,trials,loc_correct,loc_acc\n";
    for (const auto& row : r.rows)
        os << format_double(row.noise_pct) << ',' << row.trials << ',' << row.location_correct << ','
           << format_double(row.location_accuracy()) << '\n';
}

inline void write_trials_csv(std::ostream& os, const AccuracyReport& r, const std::vector<std::string>& header = {})
{
    write_header(os, header);
    os << "condition,trial,seed,in_scenario,out_scenario,objective,P,D,D_near\n";
    for (const auto& row : r.rows)
        for (const auto& rec : row.records)
            os << row.condition << ',' << rec.trial << ',' << rec.seed << ',' << to_string(rec.truth, ';') << ','
               << to_string(rec.predicted, ';') << ',' << format_double(rec.objective_value) << ','
               << int(rec.score.location) << ',' << int(rec.score.magnitude) << ',' << int(rec.score.near) << '\n';
}

inline void write_factorial_csv(std::ostream& os, const EffectTable& t, std::vector<std::string> header = {})
{
    header.push_back("df=" + std::to_string(t.df) + " t_crit=" + format_double(t.t_crit));
    write_header(os, header);
    os << "term,effect,coef,se,t,p\n";
    for (const auto& term : t.terms)
        os << term.name << ',' << format_double(term.effect) << ',' << format_double(term.coef) << ','
           << format_double(term.se) << ',' << format_double(term.t_value) << ',' << format_double(term.p_value)
           << '\n';
}

inline void write_pareto_csv(std::ostream& os, const ParetoChart& c, std::vector<std::string> header = {})
{
    header.push_back("t_crit=" + format_double(c.t_crit));
    write_header(os, header);
    os << "term,abs_t\n";
    for (const auto& e : c.entries)
        os << e.term << ',' << format_double(e.abs_t) << '\n';
}

inline void write_factorial_responses_csv(std::ostream& os, const FactorialRun& run, const FactorialDesign& d,
                                          const std::vector<std::string>& header = {})
{
    write_header(os, header);
    os << "n,gamma,MaxGeneration,replicate,objective\n";
    for (unsigned t = 0; t < 8; ++t)
        for (std::size_t r = 0; r < run.responses[t].size(); ++r)
            os << d.n[t & 1u ? 1 : 0] << ',' << format_double(d.gamma[t & 2u ? 1 : 0]) << ','
               << d.max_generation[t & 4u ? 1 : 0] << ',' << r + 1 << ',' << format_double(run.responses[t][r])
               << '\n';
}

} // namespace trussfa
