// trussfa: database generation, modal inspection, damage detection and the
// accuracy / factorial experiments, as one subcommand-style executable.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 numerical failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "trussfa/trussfa.hpp"

namespace {

using namespace trussfa;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> model;
    std::optional<int> fa_n, fa_max_generation;
    std::optional<double> fa_alpha, fa_beta0, fa_gamma, fa_delta, fa_m;
    std::optional<int> max_bars, step, modes;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* app, Flags& f)
{
    app->add_option("--config", f.config, "JSON config file (flags override it)");
    app->add_option("--seed", f.seed, "Root random seed");
    app->add_option("--threads", f.threads, "Worker threads (default: $TRUSSFA_THREADS, else all cores)");
}

void add_model(CLI::App* app, Flags& f)
{
    app->add_option("--model", f.model, "Model JSON file, or 'builtin' for the 13-bar benchmark truss");
}

void add_fa(CLI::App* app, Flags& f)
{
    app->add_option("--fa-n", f.fa_n, "Population size");
    app->add_option("--fa-max-generation", f.fa_max_generation, "Number of generations");
    app->add_option("--fa-alpha", f.fa_alpha, "Initial randomness (fraction of box width)");
    app->add_option("--fa-beta0", f.fa_beta0, "Attractiveness at r = 0");
    app->add_option("--fa-gamma", f.fa_gamma, "Light absorption coefficient");
    app->add_option("--fa-delta", f.fa_delta, "Per-generation randomness reduction factor");
    app->add_option("--fa-m", f.fa_m, "Distance exponent");
}

Config effective_config(const Flags& f)
{
    Config c = load_config(f.config);
    auto set = [](auto& dst, const auto& src) {
        if (src)
            dst = *src;
    };
    set(c.model, f.model);
    set(c.fa_n, f.fa_n);
    set(c.fa_max_generation, f.fa_max_generation);
    set(c.fa_alpha, f.fa_alpha);
    set(c.fa_beta0, f.fa_beta0);
    set(c.fa_gamma, f.fa_gamma);
    set(c.fa_delta, f.fa_delta);
    set(c.fa_m, f.fa_m);
    set(c.max_bars, f.max_bars);
    set(c.grid_step, f.step);
    set(c.n_modes, f.modes);
    set(c.seed, f.seed);
    validate(c);
    return c;
}

unsigned effective_threads(const Flags& f) { return resolve_threads(f.threads.value_or(0)); }

/// Writes to `path`, or standard output for "-".
void emit(const std::string& path, const std::string& text)
{
    if (path == "-") {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write " + path);
    out << text;
    if (!out)
        throw ValidationError("write failed: " + path);
}

std::filesystem::path plot_dir(const std::string& dir)
{
    std::filesystem::create_directories(dir);
    return dir;
}

nlohmann::json provenance_json(const Config& c)
{
    return {{"tool", kToolVersion}, {"config_hash", config_hash(c)}, {"seed", c.seed}, {"config", config_to_json(c)}};
}

nlohmann::json nullable(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

// gen-db ------------------------------------------------------------------------

struct GenDbArgs {
    Flags f;
    std::string out;
};

int cmd_gen_db(const GenDbArgs& a)
{
    const Config c = effective_config(a.f);
    const TrussModel model = load_model(c.model);
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioDatabase db =
        build_database(model, c.max_bars, c.grid_step, c.n_modes, effective_threads(a.f), provenance_lines(c)[0]);
    std::ostringstream os;
    write_database(os, db);
    emit(a.out, os.str());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "gen-db: " << db.size() << " scenarios, " << c.n_modes << " modes, fingerprint "
              << db.meta().model_fingerprint << ", " << secs << " s\n";
    return 0;
}

// modal -------------------------------------------------------------------------

struct ModalArgs {
    Flags f;
    std::string out = "-";
    std::string scenario;
    std::string format = "csv";
};

int cmd_modal(const ModalArgs& a)
{
    const Config c = effective_config(a.f);
    const TrussModel model = load_model(c.model);
    const ModalSignature sig = scenario_signature(model, parse_scenario(a.scenario), c.n_modes);
    std::ostringstream os;
    if (a.format == "json") {
        nlohmann::json j = signature_to_json(sig);
        j["provenance"] = provenance_json(c);
        os << j.dump(1) << '\n';
    } else {
        write_header(os, provenance_lines(c));
        os << "mode,omega_rad_s,freq_hz";
        for (int i = 1; i <= sig.dof_count(); ++i)
            os << ",phi_" << i;
        os << '\n';
        for (int j = 0; j < sig.n_modes(); ++j) {
            const double w = sig.omegas[static_cast<std::size_t>(j)];
            os << j + 1 << ',' << format_double(w) << ',' << format_double(w / (2.0 * M_PI));
            for (int i = 0; i < sig.dof_count(); ++i)
                os << ',' << format_double(sig.modes(i, j));
            os << '\n';
        }
    }
    emit(a.out, os.str());
    return 0;
}

// detect ------------------------------------------------------------------------

struct DetectArgs {
    Flags f;
    std::string db;
    std::string test;
    std::string scenario;
    double noise_omega = 0.0;
    double noise_phi = 0.0;
    bool brute = false;
    bool force = false;
    bool timing = false;
    std::string out = "-";
};

constexpr std::uint64_t kNoiseStream = 0x4e4f4953; // "NOIS"
constexpr std::uint64_t kSearchStream = 0x46464c59;

int cmd_detect(const DetectArgs& a)
{
    const Config c = effective_config(a.f);
    if (a.test.empty() == a.scenario.empty())
        throw ValidationError("detect needs exactly one of --test or --scenario");
    const ScenarioDatabase db = load_database(a.db);

    ModalSignature clean;
    if (!a.scenario.empty() || a.f.model) {
        const TrussModel model = load_model(c.model);
        require_fingerprint(db, model, a.force);
        if (!a.scenario.empty())
            clean = scenario_signature(model, parse_scenario(a.scenario), db.meta().n_modes);
    }
    if (!a.test.empty()) {
        try {
            clean = signature_from_json(parse_json_text(read_file(a.test), a.test));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(a.test + ": " + e.what());
        }
    }
    Rng noise_rng(derive_seed(c.seed, {kNoiseStream}));
    const ModalSignature test = add_noise(clean, NoiseSpec{a.noise_omega, a.noise_phi}, noise_rng);
    const Weights w = Weights::uniform(db.meta().n_modes, db.meta().dof_count);

    const auto t0 = std::chrono::steady_clock::now();
    Prediction p;
    if (a.brute) {
        p = brute_force(test, db, w);
    } else {
        FaParams fa = fa_params(c);
        fa.seed = derive_seed(c.seed, {kSearchStream});
        p = detect(test, db, w, fa);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json out;
    out["provenance"] = provenance_json(c);
    out["method"] = a.brute ? "brute_force" : "firefly";
    out["noise"] = {{"omega", a.noise_omega}, {"phi", a.noise_phi}};
    out["scenario"] = to_string(p.scenario);
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& d : p.scenario.damaged)
        pairs.push_back({d.bar, d.percent});
    out["damaged"] = pairs;
    out["objective_value"] = nullable(p.objective_value);
    out["runner_up_gap"] = nullable(p.runner_up_gap);
    out["evaluations"] = p.evaluations;
    out["distinct_candidates"] = p.distinct_candidates;
    // Wall time breaks byte-for-byte reproducibility, so it is opt-in.
    if (a.timing)
        out["wall_time_s"] = secs;
    std::cerr << "detect: " << to_string(p.scenario) << " (" << secs << " s)\n";
    emit(a.out, out.dump(1) + "\n");
    return 0;
}

// experiment --------------------------------------------------------------------

struct ExperimentArgs {
    Flags f;
    std::string db;
    std::string out = "-";
    std::string plot_data;
    int trials = 3;
    int iterations = 10;
    int replicates = 10;
    std::vector<double> levels = default_sweep_levels();
    bool brute = false;
};

ExperimentSettings settings_of(const ExperimentArgs& a, const Config& c)
{
    ExperimentSettings s;
    s.fa = fa_params(c);
    s.detector = a.brute ? Detector::BruteForce : Detector::Firefly;
    s.threads = effective_threads(a.f);
    return s;
}

std::vector<std::string> experiment_header(const Config& c, const std::string& line)
{
    auto h = provenance_lines(c);
    h.push_back(line);
    return h;
}

std::string levels_text(const std::vector<double>& levels)
{
    std::string s;
    for (double v : levels)
        s += (s.empty() ? "" : " ") + format_double(v);
    return s;
}

int cmd_mode_count(const ExperimentArgs& a)
{
    const Config c = effective_config(a.f);
    const ScenarioDatabase db = load_database(a.db);
    if (db.meta().n_modes < 8)
        throw ValidationError("mode-count study needs a database with at least 8 modes");
    const auto family = mode_count_family(db, {2, 4, 6, 8});
    const AccuracyReport r = run_mode_count_study(family, a.trials, c.seed, settings_of(a, c));
    const auto header = experiment_header(c, "experiment=mode-count trials_per_cell=" + std::to_string(a.trials) +
                                                 (a.brute ? " detector=brute_force" : " detector=firefly"));
    std::ostringstream os;
    write_mode_count_csv(os, r, header);
    emit(a.out, os.str());
    if (!a.plot_data.empty()) {
        std::ostringstream t;
        write_trials_csv(t, r, header);
        emit((plot_dir(a.plot_data) / "mode_count_trials.csv").string(), t.str());
    }
    return 0;
}

int cmd_sweep(const ExperimentArgs& a, bool location_only)
{
    const Config c = effective_config(a.f);
    const ScenarioDatabase db = load_database(a.db);
    const ExperimentSettings s = settings_of(a, c);
    const AccuracyReport r = location_only ? run_location_only(db, c.seed, s, a.levels, a.iterations)
                                           : run_noise_sweep(db, c.seed, s, a.levels, a.iterations);
    const auto header =
        experiment_header(c, std::string("experiment=") + (location_only ? "location-only" : "noise-sweep") +
                                 " iterations=" + std::to_string(a.iterations) + " levels=" + levels_text(a.levels) +
                                 (a.brute ? " detector=brute_force" : " detector=firefly"));
    std::ostringstream os;
    if (location_only)
        write_location_csv(os, r, header);
    else
        write_sweep_csv(os, r, header);
    emit(a.out, os.str());
    if (!a.plot_data.empty()) {
        std::ostringstream t;
        if (location_only)
            write_sweep_csv(t, r, header);
        else
            write_sweep_summary_csv(t, r, header);
        emit((plot_dir(a.plot_data) / (location_only ? "location_trials.csv" : "sweep_summary.csv")).string(), t.str());
    }
    return 0;
}

int cmd_factorial(const ExperimentArgs& a)
{
    const Config c = effective_config(a.f);
    const ScenarioDatabase db = load_database(a.db);
    FactorialDesign design;
    design.replicates = a.replicates;
    const FactorialRun run = run_factorial(db, design, c.seed, settings_of(a, c));
    const EffectTable table = analyze_factorial(run.responses);
    const auto header = experiment_header(c, "experiment=factorial replicates=" + std::to_string(a.replicates) +
                                                 " test_scenario=" + to_string(run.truth, ';') +
                                                 (a.brute ? " detector=brute_force" : " detector=firefly"));
    std::ostringstream os;
    write_factorial_csv(os, table, header);
    emit(a.out, os.str());
    if (!a.plot_data.empty()) {
        const auto dir = plot_dir(a.plot_data);
        std::ostringstream p, y;
        write_pareto_csv(p, pareto_effects(table), header);
        write_factorial_responses_csv(y, run, design, header);
        emit((dir / "pareto.csv").string(), p.str());
        emit((dir / "factorial_responses.csv").string(), y.str());
    }
    return 0;
}

// verify-db ---------------------------------------------------------------------

struct VerifyArgs {
    Flags f;
    std::string db;
    double fraction = 0.01;
    bool force = false;
};

int cmd_verify(const VerifyArgs& a)
{
    const Config c = effective_config(a.f);
    const ScenarioDatabase db = load_database(a.db);
    const TrussModel model = load_model(c.model);
    require_fingerprint(db, model, a.force);
    const VerifyReport r = verify_database(db, model, a.fraction, c.seed);
    std::cout << "entries=" << db.size() << " checked=" << r.checked << " failed=" << r.failed
              << " max_residual=" << format_double(r.worst.max_residual)
              << " max_normalization_error=" << format_double(r.worst.max_normalization)
              << " max_orthogonality_error=" << format_double(r.worst.max_orthogonality) << '\n';
    for (const auto& s : r.failures)
        std::cerr << "verify-db: invariant violated for " << s << '\n';
    return r.failed == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Truss damage detection with a firefly search over a modal-signature database"};
    app.require_subcommand(1);
    app.set_version_flag("--version", trussfa::kToolVersion);

    GenDbArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-db", "Enumerate damage scenarios and precompute their signatures");
    add_common(gen_cmd, gen.f);
    add_model(gen_cmd, gen.f);
    gen_cmd->add_option("--max-bars", gen.f.max_bars, "Maximum simultaneously damaged bars (K)");
    gen_cmd->add_option("--step", gen.f.step, "Damage grid step in percent");
    gen_cmd->add_option("--modes", gen.f.modes, "Modes per signature");
    gen_cmd->add_option("--out", gen.out, "Output database file ('-' for stdout)")->required();

    ModalArgs modal;
    auto* modal_cmd = app.add_subcommand("modal", "Print natural frequencies and mode shapes");
    add_common(modal_cmd, modal.f);
    add_model(modal_cmd, modal.f);
    modal_cmd->add_option("--modes", modal.f.modes, "Number of modes");
    modal_cmd->add_option("--scenario", modal.scenario, "Damage to apply first, e.g. \"3:30,8:85\"");
    modal_cmd->add_option("--format", modal.format, "csv or json (json is accepted by detect --test)")
        ->check(CLI::IsMember({"csv", "json"}));
    modal_cmd->add_option("--out", modal.out, "Output file ('-' for stdout)");

    DetectArgs det;
    auto* det_cmd = app.add_subcommand("detect", "Find the database scenario that best matches a test signature");
    add_common(det_cmd, det.f);
    add_model(det_cmd, det.f);
    add_fa(det_cmd, det.f);
    det_cmd->add_option("--db", det.db, "Database file")->required();
    auto* test_opt = det_cmd->add_option("--test", det.test, "Test signature JSON");
    auto* scen_opt = det_cmd->add_option("--scenario", det.scenario, "Synthesize the test from a scenario, e.g. \"3:30,8:85\"");
    test_opt->excludes(scen_opt);
    det_cmd->add_option("--noise-omega", det.noise_omega, "Frequency noise fraction")->check(CLI::NonNegativeNumber);
    det_cmd->add_option("--noise-phi", det.noise_phi, "Mode-shape noise fraction")->check(CLI::NonNegativeNumber);
    det_cmd->add_flag("--brute-force", det.brute, "Exhaustive search instead of the firefly algorithm");
    det_cmd->add_flag("--force", det.force, "Proceed despite a model fingerprint mismatch");
    det_cmd->add_flag("--timing", det.timing, "Include wall time in the output");
    det_cmd->add_option("--out", det.out, "Output file ('-' for stdout)");

    auto* exp_cmd = app.add_subcommand("experiment", "Accuracy studies and the factorial parameter analysis");
    exp_cmd->require_subcommand(1);
    ExperimentArgs mc, sweep, loc, fact;
    auto add_experiment = [&](const char* name, const char* help, ExperimentArgs& e) {
        auto* cmd = exp_cmd->add_subcommand(name, help);
        add_common(cmd, e.f);
        add_fa(cmd, e.f);
        cmd->add_option("--db", e.db, "Database file")->required();
        cmd->add_option("--out", e.out, "Report CSV ('-' for stdout)");
        cmd->add_option("--plot-data", e.plot_data, "Directory for plot-ready CSV files");
        cmd->add_flag("--brute-force", e.brute, "Exhaustive search instead of the firefly algorithm");
        return cmd;
    };
    auto* mc_cmd = add_experiment("mode-count", "Accuracy vs number of modes under noise sets N1-N4", mc);
    mc_cmd->add_option("--trials", mc.trials, "Trials per (modes, noise) cell")->check(CLI::NonNegativeNumber);
    auto* sweep_cmd = add_experiment("noise-sweep", "Location and magnitude accuracy vs noise level", sweep);
    auto* loc_cmd = add_experiment("location-only", "Location accuracy vs noise level", loc);
    for (auto [cmd, e] : {std::pair{sweep_cmd, &sweep}, std::pair{loc_cmd, &loc}}) {
        cmd->add_option("--iterations", e->iterations, "Trials per noise level")->check(CLI::NonNegativeNumber);
        cmd->add_option("--levels", e->levels, "Noise levels in percent")->delimiter(',');
    }
    auto* fact_cmd = add_experiment("factorial", "2^3 design over n, gamma and MaxGeneration", fact);
    fact_cmd->add_option("--replicates", fact.replicates, "Replicates per treatment")->check(CLI::PositiveNumber);

    VerifyArgs ver;
    auto* ver_cmd = app.add_subcommand("verify-db", "Spot-check stored signatures against a fresh solve");
    add_common(ver_cmd, ver.f);
    add_model(ver_cmd, ver.f);
    ver_cmd->add_option("--db", ver.db, "Database file")->required();
    ver_cmd->add_option("--fraction", ver.fraction, "Fraction of entries to check")->check(CLI::Range(0.0, 1.0));
    ver_cmd->add_flag("--force", ver.force, "Proceed despite a model fingerprint mismatch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen_cmd->parsed())
            return cmd_gen_db(gen);
        if (modal_cmd->parsed())
            return cmd_modal(modal);
        if (det_cmd->parsed())
            return cmd_detect(det);
        if (ver_cmd->parsed())
            return cmd_verify(ver);
        if (mc_cmd->parsed())
            return cmd_mode_count(mc);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep, false);
        if (loc_cmd->parsed())
            return cmd_sweep(loc, true);
        if (fact_cmd->parsed())
            return cmd_factorial(fact);
    } catch (const trussfa::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const trussfa::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
