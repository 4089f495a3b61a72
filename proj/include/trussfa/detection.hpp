#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "database.hpp"
#include "error.hpp"
#include "firefly.hpp"
#include "modal.hpp"

namespace trussfa {

/// Objective weights. `phi` is laid out like ModalSignature::modes
/// (component x mode). Zero entries mask out sensors.
struct Weights {
    std::vector<double> omega;
    Matrix phi;

    static Weights uniform(int n_modes, int dof_count)
    {
        return {std::vector<double>(static_cast<std::size_t>(n_modes), 1.0), Matrix::Ones(dof_count, n_modes)};
    }
};

inline void validate(const Weights& w)
{
    for (double v : w.omega)
        if (!(v >= 0.0))
            throw ValidationError("weights must be non-negative");
    if (w.phi.size() > 0 && !(w.phi.minCoeff() >= 0.0))
        throw ValidationError("weights must be non-negative");
}

/// Sum_j Wω_j (1 - ω_test,j / ω_cand,j)^2 + Sum_j Sum_i Wφ_ij (φ_test,ij - ±φ_cand,ij)^2,
/// where the candidate mode j is negated when its dot product with the test
/// mode is negative.
inline double objective(const ModalSignature& test, const ModalSignature& cand, const Weights& w)
{
    const int nm = test.n_modes();
    const int s = test.dof_count();
    if (cand.n_modes() != nm || cand.dof_count() != s)
        throw ValidationError("objective: signature dimensions differ (" + std::to_string(nm) + "x" +
                              std::to_string(s) + " vs " + std::to_string(cand.n_modes()) + "x" +
                              std::to_string(cand.dof_count()) + ")");
    if (static_cast<int>(w.omega.size()) != nm || w.phi.rows() != s || w.phi.cols() != nm)
        throw ValidationError("objective: weight dimensions do not match the signatures");
    double f = 0.0;
    for (int j = 0; j < nm; ++j) {
        const double wc = cand.omegas[static_cast<std::size_t>(j)];
        if (wc == 0.0)
            throw ValidationError("objective: candidate frequency " + std::to_string(j + 1) + " is zero");
        const double r = 1.0 - test.omegas[static_cast<std::size_t>(j)] / wc;
        f += w.omega[static_cast<std::size_t>(j)] * r * r;
    }
    for (int j = 0; j < nm; ++j) {
        const double* a = test.modes.col(j).data();
        const double* b = cand.modes.col(j).data();
        const double* wp = w.phi.col(j).data();
        double dot = 0.0;
        for (int i = 0; i < s; ++i)
            dot += a[i] * b[i];
        const double sign = dot < 0.0 ? -1.0 : 1.0;
        for (int i = 0; i < s; ++i) {
            const double d = a[i] - sign * b[i];
            f += wp[i] * d * d;
        }
    }
    return f;
}

/// Measurement noise as fractions (0.02 = 2%).
struct NoiseSpec {
    double n_omega = 0.0;
    double n_phi = 0.0;
};

/// Multiply every frequency by (1 + u Nω) and every mode component by
/// (1 + u Nφ), u ~ U(-1, 1) drawn independently: all frequencies first,
/// then components mode by mode. No re-normalization.
template <class Random>
ModalSignature add_noise(const ModalSignature& sig, const NoiseSpec& spec, Random& rng)
{
    if (!(spec.n_omega >= 0.0) || !(spec.n_phi >= 0.0))
        throw ValidationError("noise levels must be non-negative");
    ModalSignature out = sig;
    for (double& w : out.omegas)
        w *= 1.0 + rng.uniform(-1.0, 1.0) * spec.n_omega;
    for (Eigen::Index j = 0; j < out.modes.cols(); ++j)
        for (Eigen::Index i = 0; i < out.modes.rows(); ++i)
            out.modes(i, j) *= 1.0 + rng.uniform(-1.0, 1.0) * spec.n_phi;
    return out;
}

/// Maps firefly positions in [0,1]^(2K) to grid scenarios. Slot k occupies
/// coordinates (2k, 2k+1): a bar coordinate and a damage coordinate.
class ScenarioCodec {
public:
    ScenarioCodec(int n_bars, int slots, int step) : n_bars_(n_bars), slots_(slots), step_(step), levels_(grid_levels(step))
    {
        if (n_bars < 1 || slots < 1)
            throw ValidationError("codec needs at least one bar and one slot");
    }
    explicit ScenarioCodec(const DbMeta& m) : ScenarioCodec(m.n_bars, m.max_damaged_bars, m.grid_step) {}

    int dim() const { return 2 * slots_; }
    int slots() const { return slots_; }
    int n_bars() const { return n_bars_; }
    int levels() const { return levels_; }

    int bar_of(double b) const
    {
        b = std::clamp(b, 0.0, 1.0);
        return std::min(static_cast<int>(std::floor(b * n_bars_)) + 1, n_bars_);
    }
    /// 0 deactivates the slot.
    int level_of(double v) const
    {
        v = std::clamp(v, 0.0, 1.0);
        return static_cast<int>(std::lround(v * levels_));
    }

    Scenario decode(const std::vector<double>& x) const
    {
        check_dim(x);
        std::vector<BarDamage> slots;
        for (int k = 0; k < slots_; ++k) {
            const int level = level_of(x[static_cast<std::size_t>(2 * k + 1)]);
            if (level > 0)
                slots.push_back({bar_of(x[static_cast<std::size_t>(2 * k)]), level * step_});
        }
        return canonicalize(std::move(slots));
    }

    /// Slot centres; unused slots are (0, 0).
    std::vector<double> encode(const Scenario& s) const
    {
        if (static_cast<int>(s.size()) > slots_)
            throw ValidationError("scenario " + to_string(s) + " has more damaged bars than codec slots");
        std::vector<double> x(static_cast<std::size_t>(dim()), 0.0);
        for (std::size_t k = 0; k < s.size(); ++k) {
            const auto& d = s.damaged[k];
            if (d.bar < 1 || d.bar > n_bars_ || d.percent % step_ != 0 || d.percent < step_ ||
                d.percent > kMaxDamagePercent)
                throw ValidationError("scenario " + to_string(s) + " is not on the codec grid");
            x[2 * k] = (d.bar - 0.5) / n_bars_;
            x[2 * k + 1] = static_cast<double>(d.percent / step_) / levels_;
        }
        return x;
    }

    /// Mixed-radix code of the raw (bar, level) slot tuple; distinct
    /// positions decoding to the same tuple share a code.
    std::uint64_t cell(const std::vector<double>& x) const
    {
        std::uint64_t c = 0;
        for (int k = 0; k < slots_; ++k) {
            const int level = level_of(x[static_cast<std::size_t>(2 * k + 1)]);
            const int bar = level > 0 ? bar_of(x[static_cast<std::size_t>(2 * k)]) : 1;
            c = c * static_cast<std::uint64_t>(n_bars_ * (levels_ + 1)) +
                static_cast<std::uint64_t>((bar - 1) * (levels_ + 1) + level);
        }
        return c;
    }
    std::uint64_t cell_count() const
    {
        std::uint64_t c = 1;
        for (int k = 0; k < slots_; ++k)
            c *= static_cast<std::uint64_t>(n_bars_ * (levels_ + 1));
        return c;
    }

private:
    void check_dim(const std::vector<double>& x) const
    {
        if (static_cast<int>(x.size()) != dim())
            throw ValidationError("position has dimension " + std::to_string(x.size()) + ", expected " +
                                  std::to_string(dim()));
    }

    int n_bars_;
    int slots_;
    int step_;
    int levels_;
};

struct Prediction {
    Scenario scenario;
    double objective_value = std::numeric_limits<double>::infinity();
    double runner_up_gap = std::numeric_limits<double>::quiet_NaN(); // NaN: only one candidate seen
    std::uint64_t evaluations = 0;
    std::size_t distinct_candidates = 0;
};

namespace detail {

/// Best and second-best over entries with finite cached values; ties go to
/// the smaller Scenario.
inline Prediction pick_best(const ScenarioDatabase& db, const std::vector<double>& values)
{
    Prediction p;
    std::size_t best = db.size();
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double v = values[k];
        if (std::isnan(v))
            continue;
        ++p.distinct_candidates;
        if (best == db.size() || v < values[best] || (v == values[best] && db.scenario(k) < db.scenario(best))) {
            if (best != db.size())
                second = std::min(second, values[best]);
            best = k;
        } else {
            second = std::min(second, v);
        }
    }
    if (best == db.size())
        throw ValidationError("no candidate scenario was evaluated");
    p.scenario = db.scenario(best);
    p.objective_value = values[best];
    if (p.distinct_candidates > 1)
        p.runner_up_gap = second - values[best];
    return p;
}

inline void check_compatible(const ModalSignature& test, const ScenarioDatabase& db)
{
    if (test.n_modes() != db.meta().n_modes || test.dof_count() != db.meta().dof_count)
        throw ValidationError("test signature (" + std::to_string(test.n_modes()) + " modes, " +
                              std::to_string(test.dof_count()) + " DOFs) does not match the database (" +
                              std::to_string(db.meta().n_modes) + " modes, " +
                              std::to_string(db.meta().dof_count) + " DOFs)");
}

} // namespace detail

/// Firefly search over the database. `fa.dim` and `fa.bounds` are replaced
/// by the codec's [0,1]^(2K) box; every other field is used as given.
///
/// Objective values are memoized per database entry, so the cost of a run
/// is dominated by the firefly bookkeeping once the swarm has converged.
inline Prediction detect(const ModalSignature& test, const ScenarioDatabase& db, const Weights& weights,
                         FaParams fa)
{
    detail::check_compatible(test, db);
    validate(weights);
    const ScenarioCodec codec(db.meta());
    fa.dim = codec.dim();
    fa.bounds.assign(static_cast<std::size_t>(fa.dim), Bounds{0.0, 1.0});

    constexpr std::uint64_t kDenseCellLimit = std::uint64_t{1} << 24;
    const bool dense = codec.cell_count() <= kDenseCellLimit;
    std::vector<std::int64_t> cell_entry(dense ? codec.cell_count() : 0, -1);
    std::vector<double> values(db.size(), std::numeric_limits<double>::quiet_NaN());

    auto entry_of = [&](const std::vector<double>& x) -> std::size_t {
        std::int64_t* slot = nullptr;
        if (dense) {
            slot = &cell_entry[codec.cell(x)];
            if (*slot >= 0)
                return static_cast<std::size_t>(*slot);
        }
        const Scenario s = codec.decode(x);
        const auto k = db.find(s);
        if (!k)
            throw ValidationError("decoded scenario " + to_string(s) + " is not in the database");
        if (slot)
            *slot = static_cast<std::int64_t>(*k);
        return *k;
    };
    auto f = [&](const std::vector<double>& x) {
        const std::size_t k = entry_of(x);
        if (std::isnan(values[k]))
            values[k] = objective(test, db.signature(k), weights);
        return values[k];
    };
    const FaResult r = run(f, fa);
    Prediction p = detail::pick_best(db, values);
    p.evaluations = r.evaluations;
    return p;
}

/// Exhaustive argmin over every database entry, same tie-breaking as detect.
inline Prediction brute_force(const ModalSignature& test, const ScenarioDatabase& db, const Weights& weights)
{
    detail::check_compatible(test, db);
    validate(weights);
    std::vector<double> values(db.size());
    for (std::size_t k = 0; k < db.size(); ++k)
        values[k] = objective(test, db.signature(k), weights);
    Prediction p = detail::pick_best(db, values);
    p.evaluations = db.size();
    return p;
}

} // namespace trussfa
