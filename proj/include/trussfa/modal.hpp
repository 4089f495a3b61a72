#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "truss.hpp"

namespace trussfa {

using Matrix = Eigen::MatrixXd;
using Matrix4 = Eigen::Matrix4d;

/// Free-DOF numbering. Global DOF of node `id` in direction `dir` (0 = x,
/// 1 = y) is `2 * (id - 1) + dir`; constrained DOFs map to -1.
struct DofMap {
    std::vector<int> index;
    int free_count = 0;

    int operator()(int node_id, int dir) const { return index[static_cast<std::size_t>(2 * (node_id - 1) + dir)]; }
};

inline DofMap make_dof_map(const TrussModel& model)
{
    DofMap map;
    map.index.assign(static_cast<std::size_t>(2 * model.node_count()), 0);
    for (const auto& s : model.supports) {
        if (s.fix_x)
            map.index[static_cast<std::size_t>(2 * (s.node - 1))] = -1;
        if (s.fix_y)
            map.index[static_cast<std::size_t>(2 * (s.node - 1) + 1)] = -1;
    }
    for (int& k : map.index)
        if (k == 0)
            k = map.free_count++;
    return map;
}

namespace detail {

inline void bar_geometry(const TrussModel& model, int bar_id, double& length, double& c, double& s)
{
    const Bar& b = model.bar(bar_id);
    const Node& a = model.node(b.node_i);
    const Node& e = model.node(b.node_j);
    length = std::hypot(e.x - a.x, e.y - a.y);
    if (!(length > 0.0))
        throw ValidationError("bar " + std::to_string(bar_id) + " has zero length");
    c = (e.x - a.x) / length;
    s = (e.y - a.y) / length;
}

} // namespace detail

/// Axial bar stiffness in global coordinates, DOF order (ix, iy, jx, jy).
inline Matrix4 element_stiffness(const TrussModel& model, int bar_id, double effective_modulus)
{
    double length, c, s;
    detail::bar_geometry(model, bar_id, length, c, s);
    Eigen::Matrix2d t;
    t << c * c, c * s, c * s, s * s;
    const double k = effective_modulus * model.material.cross_area / length;
    Matrix4 ke;
    ke << t, -t, -t, t;
    return k * ke;
}

/// Consistent mass of a linear bar with translational inertia in both
/// directions. The template is rotation invariant, so no transform is needed.
inline Matrix4 element_mass(const TrussModel& model, int bar_id)
{
    double length, c, s;
    detail::bar_geometry(model, bar_id, length, c, s);
    const double m = model.material.density * model.material.cross_area * length / 6.0;
    Matrix4 me;
    me << 2, 0, 1, 0,
          0, 2, 0, 1,
          1, 0, 2, 0,
          0, 1, 0, 2;
    return m * me;
}

/// Lower Cholesky factor, or nullopt if a pivot falls below
/// `rel_tol * max(diag)`.
inline std::optional<Matrix> cholesky_lower(const Matrix& a, double rel_tol = 0.0)
{
    const Eigen::Index n = a.rows();
    const double dmax = n > 0 ? a.diagonal().cwiseAbs().maxCoeff() : 0.0;
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k)
            d -= l(j, k) * l(j, k);
        if (!(d > rel_tol * dmax))
            return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k)
                v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

struct Assembly {
    Matrix stiffness;
    Matrix mass;
    DofMap dofs;
};

/// Relative pivot threshold below which K is declared singular.
inline constexpr double kMechanismTolerance = 1e-10;

/// Global K and M over free DOFs (constrained rows/columns eliminated).
inline Assembly assemble(const TrussModel& model)
{
    validate(model);
    Assembly out;
    out.dofs = make_dof_map(model);
    const int n = out.dofs.free_count;
    out.stiffness = Matrix::Zero(n, n);
    out.mass = Matrix::Zero(n, n);

    for (const Bar& b : model.bars) {
        const Matrix4 ke = element_stiffness(model, b.id, model.effective_modulus(b.id));
        const Matrix4 me = element_mass(model, b.id);
        const int g[4] = {out.dofs(b.node_i, 0), out.dofs(b.node_i, 1), out.dofs(b.node_j, 0),
                          out.dofs(b.node_j, 1)};
        for (int r = 0; r < 4; ++r) {
            if (g[r] < 0)
                continue;
            for (int c = 0; c < 4; ++c) {
                if (g[c] < 0)
                    continue;
                out.stiffness(g[r], g[c]) += ke(r, c);
                out.mass(g[r], g[c]) += me(r, c);
            }
        }
    }
    if (!cholesky_lower(out.stiffness, kMechanismTolerance))
        throw MechanismError("structure is a mechanism: stiffness matrix is singular");
    return out;
}

/// First n_modes natural frequencies (rad/s, ascending) and mass-normalized
/// mode shapes, one column per mode. Each column is signed so that its
/// largest-magnitude entry is positive (first such entry on ties).
struct ModalSignature {
    std::vector<double> omegas;
    Matrix modes;

    int n_modes() const { return static_cast<int>(omegas.size()); }
    int dof_count() const { return static_cast<int>(modes.rows()); }

    friend bool operator==(const ModalSignature& a, const ModalSignature& b)
    {
        return a.omegas == b.omegas && a.modes.rows() == b.modes.rows() && a.modes.cols() == b.modes.cols() &&
               a.modes == b.modes;
    }
};

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiTolerance = 1e-12;

/// Cyclic Jacobi on a symmetric matrix. On return `a` is diagonal (to
/// tolerance) and `v` holds the eigenvectors as columns.
inline void jacobi_eigen(Matrix& a, Matrix& v)
{
    const Eigen::Index n = a.rows();
    v = Matrix::Identity(n, n);
    const double fro = a.norm();
    for (int sweep = 0; sweep <= kJacobiMaxSweeps; ++sweep) {
        double off2 = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off2 += 2.0 * a(p, q) * a(p, q);
        if (std::sqrt(off2) <= kJacobiTolerance * fro)
            return;
        if (sweep == kJacobiMaxSweeps)
            break;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    throw NumericalError("Jacobi eigen iteration did not converge within " + std::to_string(kJacobiMaxSweeps) +
                         " sweeps");
}

/// Generalized symmetric eigenproblem K phi = omega^2 M phi, reduced to
/// standard form through M = L L^T.
inline ModalSignature solve_modes(const Matrix& stiffness, const Matrix& mass, int n_modes)
{
    const Eigen::Index n = stiffness.rows();
    if (stiffness.cols() != n || mass.rows() != n || mass.cols() != n)
        throw ValidationError("K and M must be square and of equal size");
    if (n_modes < 1 || n_modes > n)
        throw ValidationError("requested " + std::to_string(n_modes) + " modes from a system with " +
                              std::to_string(n) + " free DOFs");
    const auto l = cholesky_lower(mass);
    if (!l)
        throw NumericalError("Cholesky factorization of the mass matrix failed");
    const auto lower = l->triangularView<Eigen::Lower>();

    Matrix x = lower.solve(stiffness);          // L^-1 K
    Matrix a = lower.solve(x.transpose());      // L^-1 K L^-T
    a = 0.5 * (a + a.transpose()).eval();

    Matrix v;
    jacobi_eigen(a, v);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    ModalSignature sig;
    sig.omegas.resize(static_cast<std::size_t>(n_modes));
    sig.modes.resize(n, n_modes);
    const auto upper = l->transpose().triangularView<Eigen::Upper>();
    for (int m = 0; m < n_modes; ++m) {
        const Eigen::Index k = order[static_cast<std::size_t>(m)];
        sig.omegas[static_cast<std::size_t>(m)] = std::sqrt(std::max(a(k, k), 0.0));
        Eigen::VectorXd phi = upper.solve(v.col(k));
        Eigen::Index imax = 0;
        for (Eigen::Index i = 1; i < n; ++i)
            if (std::abs(phi(i)) > std::abs(phi(imax)))
                imax = i;
        if (phi(imax) < 0.0)
            phi = -phi;
        sig.modes.col(m) = phi;
    }
    return sig;
}

/// assemble + solve_modes.
inline ModalSignature modal_signature(const TrussModel& model, int n_modes)
{
    const Assembly asmb = assemble(model);
    return solve_modes(asmb.stiffness, asmb.mass, n_modes);
}

/// Keep the first n modes.
inline ModalSignature truncate_modes(const ModalSignature& sig, int n_modes)
{
    if (n_modes < 1 || n_modes > sig.n_modes())
        throw ValidationError("cannot truncate a " + std::to_string(sig.n_modes()) + "-mode signature to " +
                              std::to_string(n_modes));
    ModalSignature out;
    out.omegas.assign(sig.omegas.begin(), sig.omegas.begin() + n_modes);
    out.modes = sig.modes.leftCols(n_modes);
    return out;
}

} // namespace trussfa
