#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "format.hpp"
#include "modal.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "truss.hpp"

namespace trussfa {

inline constexpr int kMaxDamagePercent = 95;

struct BarDamage {
    int bar = 0;
    int percent = 0;

    friend bool operator==(const BarDamage&, const BarDamage&) = default;
};

/// A point of the damage grid: damaged bars sorted by id, no duplicates,
/// no zero entries. Empty = healthy.
///
/// Total order: fewer damaged bars first, then bar ids lexicographically,
/// then percents lexicographically. This is both the enumeration order of
/// the database and the tie-break order of the detectors.
struct Scenario {
    std::vector<BarDamage> damaged;

    bool healthy() const { return damaged.empty(); }
    std::size_t size() const { return damaged.size(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
    friend bool operator<(const Scenario& a, const Scenario& b)
    {
        if (a.size() != b.size())
            return a.size() < b.size();
        for (std::size_t k = 0; k < a.size(); ++k)
            if (a.damaged[k].bar != b.damaged[k].bar)
                return a.damaged[k].bar < b.damaged[k].bar;
        for (std::size_t k = 0; k < a.size(); ++k)
            if (a.damaged[k].percent != b.damaged[k].percent)
                return a.damaged[k].percent < b.damaged[k].percent;
        return false;
    }
};

/// Sort by bar, drop zero-percent slots, merge duplicate bars keeping the
/// larger damage. Idempotent and insensitive to input order.
inline Scenario canonicalize(std::vector<BarDamage> slots)
{
    std::erase_if(slots, [](const BarDamage& d) { return d.percent == 0; });
    std::sort(slots.begin(), slots.end(), [](const BarDamage& a, const BarDamage& b) {
        return a.bar != b.bar ? a.bar < b.bar : a.percent > b.percent;
    });
    slots.erase(std::unique(slots.begin(), slots.end(),
                            [](const BarDamage& a, const BarDamage& b) { return a.bar == b.bar; }),
                slots.end());
    return Scenario{std::move(slots)};
}

/// "3:30,8:85"; "healthy" for the empty scenario.
inline std::string to_string(const Scenario& s, char sep = ',')
{
    if (s.healthy())
        return "healthy";
    std::string out;
    for (const auto& d : s.damaged) {
        if (!out.empty())
            out += sep;
        out += std::to_string(d.bar) + ":" + std::to_string(d.percent);
    }
    return out;
}

/// Inverse of to_string; the result is canonicalized.
inline Scenario parse_scenario(const std::string& text)
{
    if (text == "healthy" || text.empty())
        return {};
    std::vector<BarDamage> slots;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        BarDamage d;
        const char* end = item.data() + item.size();
        if (colon == std::string::npos ||
            std::from_chars(item.data(), item.data() + colon, d.bar).ptr != item.data() + colon ||
            std::from_chars(item.data() + colon + 1, end, d.percent).ptr != end)
            throw ValidationError("malformed scenario item '" + item + "' (expected bar:percent)");
        slots.push_back(d);
    }
    return canonicalize(std::move(slots));
}

inline DamageState to_damage_state(const Scenario& s)
{
    DamageState state;
    for (const auto& d : s.damaged)
        state.damage[d.bar] = d.percent / 100.0;
    return state;
}

/// Damage levels are the multiples of `step` in [step, 95].
inline int grid_levels(int step)
{
    if (step < 5 || step > kMaxDamagePercent || step % 5 != 0)
        throw ValidationError("grid step must be a multiple of 5 in [5, 95], got " + std::to_string(step));
    return kMaxDamagePercent / step;
}

inline std::uint64_t binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

inline std::uint64_t scenario_count(int n_bars, int max_bars, int step)
{
    const auto levels = static_cast<std::uint64_t>(grid_levels(step));
    std::uint64_t total = 0, power = 1;
    for (int s = 0; s <= max_bars; ++s) {
        total += binomial(n_bars, s) * power;
        power *= levels;
    }
    return total;
}

/// All scenarios with at most `max_bars` damaged bars, in Scenario order.
inline std::vector<Scenario> enumerate_scenarios(int n_bars, int max_bars, int step)
{
    const int levels = grid_levels(step);
    if (max_bars < 1)
        throw ValidationError("max damaged bars must be at least 1");
    if (max_bars > n_bars)
        throw ValidationError("max damaged bars (" + std::to_string(max_bars) + ") exceeds bar count (" +
                              std::to_string(n_bars) + ")");
    std::vector<Scenario> out;
    out.reserve(static_cast<std::size_t>(scenario_count(n_bars, max_bars, step)));
    out.emplace_back();
    for (int size = 1; size <= max_bars; ++size) {
        std::vector<int> bars(static_cast<std::size_t>(size));
        std::iota(bars.begin(), bars.end(), 1);
        for (;;) {
            std::vector<int> lvl(static_cast<std::size_t>(size), 1);
            for (;;) {
                Scenario s;
                for (int k = 0; k < size; ++k)
                    s.damaged.push_back({bars[static_cast<std::size_t>(k)], lvl[static_cast<std::size_t>(k)] * step});
                out.push_back(std::move(s));
                int k = size - 1;
                while (k >= 0 && lvl[static_cast<std::size_t>(k)] == levels)
                    lvl[static_cast<std::size_t>(k--)] = 1;
                if (k < 0)
                    break;
                ++lvl[static_cast<std::size_t>(k)];
            }
            int k = size - 1;
            while (k >= 0 && bars[static_cast<std::size_t>(k)] == n_bars - (size - 1 - k))
                --k;
            if (k < 0)
                break;
            ++bars[static_cast<std::size_t>(k)];
            for (int m = k + 1; m < size; ++m)
                bars[static_cast<std::size_t>(m)] = bars[static_cast<std::size_t>(m - 1)] + 1;
        }
    }
    return out;
}

inline std::vector<Scenario> enumerate_scenarios(const TrussModel& model, int max_bars, int step)
{
    return enumerate_scenarios(model.bar_count(), max_bars, step);
}

struct ScenarioHash {
    std::size_t operator()(const Scenario& s) const noexcept
    {
        std::uint64_t h = 0x243f6a8885a308d3ULL;
        for (const auto& d : s.damaged)
            h = splitmix64(h ^ (static_cast<std::uint64_t>(d.bar) << 8 | static_cast<std::uint64_t>(d.percent)));
        return static_cast<std::size_t>(h);
    }
};

inline constexpr int kDatabaseVersion = 1;

struct DbMeta {
    int version = kDatabaseVersion;
    std::string model_fingerprint;
    int n_modes = 0;
    int grid_step = 5;
    int max_damaged_bars = 0;
    std::string generator; // provenance line, round-tripped verbatim
    // Derived, not serialized.
    int n_bars = 0;
    int dof_count = 0;

    friend bool operator==(const DbMeta&, const DbMeta&) = default;
};

/// Precomputed signatures for every grid scenario. Immutable after build or
/// load; safe to share across threads.
class ScenarioDatabase {
public:
    ScenarioDatabase() = default;
    ScenarioDatabase(DbMeta meta, std::vector<Scenario> scenarios, std::vector<ModalSignature> signatures)
        : meta_(std::move(meta)), scenarios_(std::move(scenarios)), signatures_(std::move(signatures))
    {
        index_.reserve(scenarios_.size());
        for (std::size_t k = 0; k < scenarios_.size(); ++k)
            if (!index_.emplace(scenarios_[k], k).second)
                throw ValidationError("duplicate scenario " + to_string(scenarios_[k]));
    }

    const DbMeta& meta() const { return meta_; }
    std::size_t size() const { return scenarios_.size(); }
    const Scenario& scenario(std::size_t k) const { return scenarios_[k]; }
    const ModalSignature& signature(std::size_t k) const { return signatures_[k]; }
    const std::vector<Scenario>& scenarios() const { return scenarios_; }

    std::optional<std::size_t> find(const Scenario& s) const
    {
        const auto it = index_.find(s);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    friend bool operator==(const ScenarioDatabase& a, const ScenarioDatabase& b)
    {
        return a.meta_ == b.meta_ && a.scenarios_ == b.scenarios_ && a.signatures_ == b.signatures_;
    }

private:
    DbMeta meta_;
    std::vector<Scenario> scenarios_;
    std::vector<ModalSignature> signatures_;
    std::unordered_map<Scenario, std::size_t, ScenarioHash> index_;
};

/// Exact lookup. Throws if the scenario is off-grid or absent.
inline const ModalSignature& get_signature(const ScenarioDatabase& db, const Scenario& s)
{
    const int step = db.meta().grid_step;
    for (const auto& d : s.damaged)
        if (d.percent < step || d.percent > kMaxDamagePercent || d.percent % step != 0)
            throw ValidationError("scenario " + to_string(s) + " is not on the " + std::to_string(step) +
                                  "% damage grid");
    if (const auto k = db.find(s))
        return db.signature(*k);
    throw ValidationError("scenario " + to_string(s) + " is not in the database");
}

/// Signature of the model under a scenario, computed from scratch.
inline ModalSignature scenario_signature(const TrussModel& model, const Scenario& s, int n_modes)
{
    return modal_signature(apply_damage(model, to_damage_state(s)), n_modes);
}

inline ScenarioDatabase build_database(const TrussModel& model, int max_bars, int step, int n_modes,
                                       unsigned threads = 1, std::string generator = {})
{
    validate(model);
    if (n_modes > model.free_dof_count())
        throw ValidationError("requested " + std::to_string(n_modes) + " modes but the model has only " +
                              std::to_string(model.free_dof_count()) + " free DOFs");
    std::vector<Scenario> scenarios = enumerate_scenarios(model, max_bars, step);
    std::vector<ModalSignature> sigs(scenarios.size());
    parallel_for(scenarios.size(), threads, [&](std::size_t k) {
        try {
            sigs[k] = scenario_signature(model, scenarios[k], n_modes);
        } catch (const NumericalError& e) {
            throw NumericalError("scenario " + to_string(scenarios[k]) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("scenario " + to_string(scenarios[k]) + ": " + e.what());
        }
    });
    DbMeta meta;
    meta.model_fingerprint = model_fingerprint(model);
    meta.n_modes = n_modes;
    meta.grid_step = step;
    meta.max_damaged_bars = max_bars;
    meta.generator = std::move(generator);
    meta.n_bars = model.bar_count();
    meta.dof_count = model.free_dof_count();
    return ScenarioDatabase(std::move(meta), std::move(scenarios), std::move(sigs));
}

/// Same database with every signature cut to its first n_modes modes.
inline ScenarioDatabase truncate_database(const ScenarioDatabase& db, int n_modes)
{
    std::vector<ModalSignature> sigs;
    sigs.reserve(db.size());
    for (std::size_t k = 0; k < db.size(); ++k)
        sigs.push_back(truncate_modes(db.signature(k), n_modes));
    DbMeta meta = db.meta();
    meta.n_modes = n_modes;
    return ScenarioDatabase(std::move(meta), db.scenarios(), std::move(sigs));
}

inline bool fingerprint_matches(const ScenarioDatabase& db, const TrussModel& model)
{
    return db.meta().model_fingerprint == model_fingerprint(model);
}

/// Throws FingerprintMismatch unless the fingerprints agree or `force`.
inline void require_fingerprint(const ScenarioDatabase& db, const TrussModel& model, bool force)
{
    if (!force && !fingerprint_matches(db, model))
        throw FingerprintMismatch("database was built from model " + db.meta().model_fingerprint +
                                  " but the supplied model is " + model_fingerprint(model) +
                                  " (use --force to override)");
}

// Persistence -----------------------------------------------------------------


/// One JSON document. `modes[j]` is the j-th mode shape over the free DOFs.
inline void write_database(std::ostream& os, const ScenarioDatabase& db)
{
    const DbMeta& m = db.meta();
    os << "{\"version\":" << m.version << ",\"model_fingerprint\":" << nlohmann::json(m.model_fingerprint).dump()
       << ",\"n_modes\":" << m.n_modes << ",\"grid_step\":" << m.grid_step
       << ",\"max_damaged_bars\":" << m.max_damaged_bars << ",\"generator\":" << nlohmann::json(m.generator).dump()
       << ",\"entries\":[\n";
    for (std::size_t k = 0; k < db.size(); ++k) {
        os << "{\"scenario\":[";
        const Scenario& s = db.scenario(k);
        for (std::size_t d = 0; d < s.size(); ++d)
            os << (d ? "," : "") << '[' << s.damaged[d].bar << ',' << s.damaged[d].percent << ']';
        os << "],\"signature\":{\"omegas\":[";
        const ModalSignature& sig = db.signature(k);
        for (int j = 0; j < sig.n_modes(); ++j) {
            if (j)
                os << ',';
            write_double(os, sig.omegas[static_cast<std::size_t>(j)]);
        }
        os << "],\"modes\":[";
        for (int j = 0; j < sig.n_modes(); ++j) {
            os << (j ? ",[" : "[");
            for (int i = 0; i < sig.dof_count(); ++i) {
                if (i)
                    os << ',';
                write_double(os, sig.modes(i, j));
            }
            os << ']';
        }
        os << "]}}" << (k + 1 < db.size() ? ",\n" : "\n");
    }
    os << "]}\n";
}

inline void save_database(const ScenarioDatabase& db, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write " + path);
    write_database(out, db);
    if (!out)
        throw ValidationError("write failed: " + path);
}

inline ModalSignature signature_from_json(const nlohmann::json& j)
{
    ModalSignature sig;
    sig.omegas = j.at("omegas").get<std::vector<double>>();
    const auto& modes = j.at("modes");
    if (modes.size() != sig.omegas.size())
        throw ValidationError("signature: modes and omegas differ in length");
    const Eigen::Index dofs = modes.empty() ? 0 : static_cast<Eigen::Index>(modes.at(0).size());
    sig.modes.resize(dofs, static_cast<Eigen::Index>(modes.size()));
    for (std::size_t c = 0; c < modes.size(); ++c) {
        const auto& col = modes[c];
        if (static_cast<Eigen::Index>(col.size()) != dofs)
            throw ValidationError("signature: ragged mode shape matrix");
        for (Eigen::Index r = 0; r < dofs; ++r)
            sig.modes(r, static_cast<Eigen::Index>(c)) = col[static_cast<std::size_t>(r)].get<double>();
    }
    return sig;
}

inline nlohmann::json signature_to_json(const ModalSignature& sig)
{
    nlohmann::json modes = nlohmann::json::array();
    for (int j = 0; j < sig.n_modes(); ++j) {
        std::vector<double> col(sig.modes.col(j).data(), sig.modes.col(j).data() + sig.dof_count());
        modes.push_back(col);
    }
    return {{"omegas", sig.omegas}, {"modes", modes}};
}

inline ScenarioDatabase database_from_text(std::string_view text, const std::string& what = "database")
{
    const nlohmann::json j = parse_json_text(text, what);
    try {
        DbMeta meta;
        meta.version = j.at("version").get<int>();
        if (meta.version != kDatabaseVersion)
            throw ValidationError(what + ": unsupported database version " + std::to_string(meta.version) +
                                  " (expected " + std::to_string(kDatabaseVersion) + ")");
        meta.model_fingerprint = j.at("model_fingerprint").get<std::string>();
        meta.n_modes = j.at("n_modes").get<int>();
        meta.grid_step = j.at("grid_step").get<int>();
        meta.max_damaged_bars = j.at("max_damaged_bars").get<int>();
        meta.generator = j.value("generator", std::string{});
        grid_levels(meta.grid_step); // throws on a bad step

        std::vector<Scenario> scenarios;
        std::vector<ModalSignature> sigs;
        const auto& entries = j.at("entries");
        scenarios.reserve(entries.size());
        sigs.reserve(entries.size());
        for (const auto& e : entries) {
            std::vector<BarDamage> slots;
            for (const auto& p : e.at("scenario"))
                slots.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
            Scenario s = canonicalize(slots);
            if (s.damaged != slots)
                throw ValidationError(what + ": scenario " + to_string(s) + " is not in canonical form");
            if (static_cast<int>(s.size()) > meta.max_damaged_bars)
                throw ValidationError(what + ": scenario " + to_string(s) + " exceeds max_damaged_bars");
            for (const auto& d : s.damaged) {
                if (d.bar < 1 || d.percent % meta.grid_step != 0 || d.percent > kMaxDamagePercent)
                    throw ValidationError(what + ": scenario " + to_string(s) + " is off-grid");
                meta.n_bars = std::max(meta.n_bars, d.bar);
            }
            ModalSignature sig = signature_from_json(e.at("signature"));
            if (sig.n_modes() != meta.n_modes)
                throw ValidationError(what + ": entry " + to_string(s) + " has the wrong mode count");
            if (sigs.empty())
                meta.dof_count = sig.dof_count();
            else if (sig.dof_count() != meta.dof_count)
                throw ValidationError(what + ": entry " + to_string(s) + " has the wrong DOF count");
            scenarios.push_back(std::move(s));
            sigs.push_back(std::move(sig));
        }
        if (meta.max_damaged_bars < 1 || meta.max_damaged_bars > meta.n_bars ||
            scenario_count(meta.n_bars, meta.max_damaged_bars, meta.grid_step) != scenarios.size())
            throw ValidationError(what + ": entry set is not the complete scenario grid");
        return ScenarioDatabase(std::move(meta), std::move(scenarios), std::move(sigs));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(what + ": " + e.what());
    }
}

inline ScenarioDatabase load_database(const std::string& path)
{
    return database_from_text(read_file(path), path);
}

// Verification ----------------------------------------------------------------

struct SignatureCheck {
    double max_residual = 0.0;      // max_j |K phi - w^2 M phi| / |K phi|
    double max_normalization = 0.0; // max_j |phi^T M phi - 1|
    double max_orthogonality = 0.0; // max_{i != j} |phi_i^T M phi_j|
};

inline SignatureCheck check_signature(const Matrix& k, const Matrix& m, const ModalSignature& sig)
{
    SignatureCheck out;
    const Matrix mphi = m * sig.modes;
    const Matrix kphi = k * sig.modes;
    const Matrix gram = sig.modes.transpose() * mphi;
    for (int j = 0; j < sig.n_modes(); ++j) {
        const double w2 = sig.omegas[static_cast<std::size_t>(j)] * sig.omegas[static_cast<std::size_t>(j)];
        const double res = (kphi.col(j) - w2 * mphi.col(j)).norm() / kphi.col(j).norm();
        out.max_residual = std::max(out.max_residual, res);
        out.max_normalization = std::max(out.max_normalization, std::abs(gram(j, j) - 1.0));
        for (int i = 0; i < sig.n_modes(); ++i)
            if (i != j)
                out.max_orthogonality = std::max(out.max_orthogonality, std::abs(gram(i, j)));
    }
    return out;
}

struct VerifyReport {
    std::size_t checked = 0;
    std::size_t failed = 0;
    SignatureCheck worst;
    std::vector<std::string> failures;
};

/// Recompute K and M for a seeded random sample of entries (at least one,
/// always including the healthy entry) and check the stored signature
/// satisfies the eigen residual and mass-normalization invariants.
inline VerifyReport verify_database(const ScenarioDatabase& db, const TrussModel& model, double fraction,
                                    std::uint64_t seed)
{
    constexpr double kTol = 1e-8;
    std::vector<std::size_t> sample{0};
    Rng rng(seed);
    for (std::size_t k = 1; k < db.size(); ++k)
        if (rng.uniform01() < fraction)
            sample.push_back(k);
    VerifyReport rep;
    for (std::size_t k : sample) {
        const Assembly a = assemble(apply_damage(model, to_damage_state(db.scenario(k))));
        if (a.dofs.free_count != db.signature(k).dof_count())
            throw ValidationError("model DOF count does not match the database");
        const SignatureCheck c = check_signature(a.stiffness, a.mass, db.signature(k));
        ++rep.checked;
        rep.worst.max_residual = std::max(rep.worst.max_residual, c.max_residual);
        rep.worst.max_normalization = std::max(rep.worst.max_normalization, c.max_normalization);
        rep.worst.max_orthogonality = std::max(rep.worst.max_orthogonality, c.max_orthogonality);
        if (!(c.max_residual <= kTol && c.max_normalization <= kTol)) {
            ++rep.failed;
            rep.failures.push_back(to_string(db.scenario(k)));
        }
    }
    return rep;
}

} // namespace trussfa
