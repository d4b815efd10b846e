#pragma once

// Q1 discretisation of F_ε on a square-cell grid and alternating minimisation under Dirichlet data.

#include "gammafrac/material.hpp"
#include "gammafrac/potentials.hpp"
#include "gammafrac/types.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace gammafrac {

class Grid {
public:
    Grid(const Rect& r, int nx, int ny) : rect_(r), nx_(nx), ny_(ny) {
        if (nx < 3 || ny < 3) throw Error(ErrorKind::Input, "grid needs at least 3 nodes per direction");
        h_ = r.width() / (nx - 1);
        if (std::abs(r.height() / (ny - 1) - h_) > 1e-12) throw Error(ErrorKind::Input, "grid cells must be square");
    }

    const Rect& rect() const { return rect_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nodes() const { return nx_ * ny_; }
    double h() const { return h_; }
    int id(int i, int j) const { return i + nx_ * j; }
    Point node(int i, int j) const { return {rect_.x0 + h_ * i, rect_.y0 + h_ * j}; }
    Point node(int n) const { return node(n % nx_, n / nx_); }
    bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1; }
    bool on_boundary(int n) const { return on_boundary(n % nx_, n / nx_); }
    /// Index distance to the nearest boundary node.
    int depth(int i, int j) const { return std::min({i, j, nx_ - 1 - i, ny_ - 1 - j}); }

private:
    Rect rect_;
    int nx_, ny_;
    double h_;
};

struct DiscreteState {
    Grid grid;
    Eigen::VectorXd u;  // 2 per node: (ux, uy)
    Eigen::VectorXd v;
    double eps = 0.0;
    double d = 0.0;     // |u_i| <= d componentwise
};

struct EnergyReport {
    double bulk = 0.0;
    double damage = 0.0;
    double potential = 0.0;
    double W() const { return bulk + damage; }
    double F() const { return bulk + damage + potential; }
};

/// Boundary datum; every boundary node is pinned to f at that node and to v = 1.
using BoundaryData = std::function<Vec2(const Point&)>;

namespace detail {

/// Q1 reference data at the 2x2 Gauss points: shape values and x/y derivatives (times h).
struct Q1 {
    std::array<std::array<double, 4>, 4> n{};   // n[g][a]
    std::array<std::array<double, 4>, 4> dx{};  // ∂N_a/∂x · h
    std::array<std::array<double, 4>, 4> dy{};
    std::array<std::array<double, 2>, 4> xi{};  // local position in [0, 1]^2
    Q1() {
        const double g = 1.0 / std::sqrt(3.0);
        const double pts[4][2] = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
        const double corner[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
        for (int q = 0; q < 4; ++q) {
            const double x = pts[q][0], y = pts[q][1];
            xi[q] = {0.5 * (1.0 + x), 0.5 * (1.0 + y)};
            for (int a = 0; a < 4; ++a) {
                const double cx = corner[a][0], cy = corner[a][1];
                n[q][a] = 0.25 * (1.0 + cx * x) * (1.0 + cy * y);
                dx[q][a] = 0.5 * cx * (1.0 + cy * y);
                dy[q][a] = 0.5 * cy * (1.0 + cx * x);
            }
        }
    }
};

inline const Q1& q1() {
    static const Q1 q;
    return q;
}

/// Node ids of cell (i, j), counter-clockwise from the lower-left corner.
inline std::array<int, 4> cell_nodes(const Grid& g, int i, int j) {
    return {g.id(i, j), g.id(i + 1, j), g.id(i + 1, j + 1), g.id(i, j + 1)};
}

/// Strain components c = (xx, yy, xy) at Gauss point q of a cell.
inline SymMat2 cell_strain(const Grid& g, const Eigen::VectorXd& u, const std::array<int, 4>& nd, int q) {
    const Q1& r = q1();
    double exx = 0.0, eyy = 0.0, exy = 0.0;
    for (int a = 0; a < 4; ++a) {
        const double ux = u[2 * nd[a]], uy = u[2 * nd[a] + 1];
        exx += r.dx[q][a] * ux;
        eyy += r.dy[q][a] * uy;
        exy += 0.5 * (r.dy[q][a] * ux + r.dx[q][a] * uy);
    }
    const double s = 1.0 / g.h();
    return {exx * s, eyy * s, exy * s};
}

/// 3x8 strain-displacement rows for Gauss point q: c_k = Σ_m B[k][m] u_local[m].
inline std::array<std::array<double, 8>, 3> strain_rows(const Grid& g, int q) {
    const Q1& r = q1();
    std::array<std::array<double, 8>, 3> b{};
    const double s = 1.0 / g.h();
    for (int a = 0; a < 4; ++a) {
        b[0][2 * a] = r.dx[q][a] * s;
        b[1][2 * a + 1] = r.dy[q][a] * s;
        b[2][2 * a] = 0.5 * r.dy[q][a] * s;
        b[2][2 * a + 1] = 0.5 * r.dx[q][a] * s;
    }
    return b;
}

/// D with 𝔸M·M = cᵀ D c for c = (xx, yy, xy), by polarisation.
inline Eigen::Matrix3d strain_form(const ElasticTensor& a) {
    const SymMat2 e[3] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    Eigen::Matrix3d d;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const SymMat2 s{e[i].xx + e[j].xx, e[i].yy + e[j].yy, e[i].xy + e[j].xy};
            d(i, j) = 0.5 * (a.density(s) - a.density(e[i]) - a.density(e[j]));
        }
    return d;
}

inline double cell_v(const Eigen::VectorXd& v, const std::array<int, 4>& nd, int q) {
    // Nested lerps return a constant field exactly.
    const auto& xi = q1().xi[q];
    return std::lerp(std::lerp(v[nd[0]], v[nd[1]], xi[0]), std::lerp(v[nd[3]], v[nd[2]], xi[0]), xi[1]);
}

inline Point gauss_point(const Grid& g, int i, int j, int q) {
    const Point p = g.node(i, j);
    return {p.x + g.h() * q1().xi[q][0], p.y + g.h() * q1().xi[q][1]};
}

}  // namespace detail

inline EnergyReport assemble_energy_unchecked(const DiscreteState& s, const ElasticTensor& a, const DamageLaw& law,
                                              const PotentialSpec& f) {
    const Grid& g = s.grid;
    const double w = 0.25 * g.h() * g.h();
    EnergyReport e;
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const auto nd = detail::cell_nodes(g, i, j);
            for (int q = 0; q < 4; ++q) {
                const SymMat2 m = detail::cell_strain(g, s.u, nd, q);
                const double v = detail::cell_v(s.v, nd, q);
                e.bulk += w * v * a.density(m);
                e.damage += w * law.psi(v) / s.eps;
                if (!f.zero) e.potential += w * f(detail::gauss_point(g, i, j, q), m, v);
            }
        }
    return e;
}

/// Throws InfeasibleState naming the first violated invariant and node.
inline void check_feasible(const DiscreteState& s, const DamageLaw& law, const BoundaryData& f) {
    const Grid& g = s.grid;
    const double lo = law.alpha() * s.eps;
    auto fail = [](const std::string& what, int n) {
        throw Error(ErrorKind::InfeasibleState, what + " violated at node " + std::to_string(n));
    };
    for (int n = 0; n < g.nodes(); ++n) {
        if (!(s.v[n] >= lo * (1.0 - 1e-12) && s.v[n] <= 1.0)) fail("alpha*eps <= v <= 1", n);
        if (!(std::abs(s.u[2 * n]) <= s.d && std::abs(s.u[2 * n + 1]) <= s.d)) fail("|u| <= d", n);
        if (g.on_boundary(n)) {
            const Vec2 fb = f(g.node(n));
            if (s.u[2 * n] != fb.x || s.u[2 * n + 1] != fb.y || s.v[n] != 1.0) fail("Dirichlet pin u = f, v = 1", n);
        }
    }
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const auto nd = detail::cell_nodes(g, i, j);
            const double gx = 0.5 * ((s.v[nd[1]] - s.v[nd[0]]) + (s.v[nd[2]] - s.v[nd[3]])) / g.h();
            const double gy = 0.5 * ((s.v[nd[3]] - s.v[nd[0]]) + (s.v[nd[2]] - s.v[nd[1]])) / g.h();
            if (std::hypot(gx, gy) * s.eps > 1.0 + 1e-9) fail("|grad v| <= 1/eps", nd[0]);
        }
}

inline EnergyReport assemble_energy(const DiscreteState& s, const ElasticTensor& a, const DamageLaw& law,
                                    const PotentialSpec& f, const BoundaryData& bc) {
    check_feasible(s, law, bc);
    return assemble_energy_unchecked(s, a, law, f);
}

/// Initial state: pins on the boundary, v ≡ 1, u = 0 inside.
inline DiscreteState initial_state(const Grid& g, double eps, const BoundaryData& f, double d = -1.0) {
    DiscreteState s{g, Eigen::VectorXd::Zero(2 * g.nodes()), Eigen::VectorXd::Ones(g.nodes()), eps, d};
    double finf = 0.0;
    for (int n = 0; n < g.nodes(); ++n)
        if (g.on_boundary(n)) {
            const Vec2 fb = f(g.node(n));
            s.u[2 * n] = fb.x;
            s.u[2 * n + 1] = fb.y;
            finf = std::max({finf, std::abs(fb.x), std::abs(fb.y)});
        }
    // 10 ‖f‖_∞, with a unit floor so that a zero datum does not freeze u.
    if (s.d < 0.0) s.d = 10.0 * std::max(finf, 0.1);
    if (finf > s.d) throw Error(ErrorKind::Input, "box bound d is smaller than the boundary datum");
    return s;
}

struct UStepResult {
    bool linear_path = false;  // CG solution accepted
    int iterations = 0;
    double energy_before = 0.0;
    double energy_after = 0.0;
};

namespace detail {

/// Free-DOF numbering (-1 for pinned DOFs).
inline std::vector<int> free_dofs(const Grid& g, int& count) {
    std::vector<int> map(2 * g.nodes(), -1);
    count = 0;
    for (int n = 0; n < g.nodes(); ++n)
        if (!g.on_boundary(n)) {
            map[2 * n] = count++;
            map[2 * n + 1] = count++;
        }
    return map;
}

/// v-weighted stiffness K on free DOFs (energy uᵀ K u) and the coupling K_fp u_p.
inline void assemble_stiffness(const DiscreteState& s, const Eigen::Matrix3d& D, const std::vector<int>& map, int nf,
                               Eigen::SparseMatrix<double>& K, Eigen::VectorXd& kp_up) {
    const Grid& g = s.grid;
    const double w = 0.25 * g.h() * g.h();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(64) * (g.nx() - 1) * (g.ny() - 1));
    kp_up = Eigen::VectorXd::Zero(nf);
    std::array<std::array<std::array<double, 8>, 3>, 4> B;
    for (int q = 0; q < 4; ++q) B[q] = strain_rows(g, q);
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const auto nd = cell_nodes(g, i, j);
            Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
            for (int q = 0; q < 4; ++q) {
                Eigen::Matrix<double, 3, 8> b;
                for (int k = 0; k < 3; ++k)
                    for (int m = 0; m < 8; ++m) b(k, m) = B[q][k][m];
                ke += (w * cell_v(s.v, nd, q)) * b.transpose() * D * b;
            }
            int dof[8];
            for (int a = 0; a < 4; ++a) {
                dof[2 * a] = 2 * nd[a];
                dof[2 * a + 1] = 2 * nd[a] + 1;
            }
            for (int r = 0; r < 8; ++r) {
                const int fr = map[dof[r]];
                if (fr < 0) continue;
                for (int c = 0; c < 8; ++c) {
                    const int fc = map[dof[c]];
                    if (fc >= 0) trip.emplace_back(fr, fc, ke(r, c));
                    else kp_up[fr] += ke(r, c) * s.u[dof[c]];
                }
            }
        }
    K.resize(nf, nf);
    K.setFromTriplets(trip.begin(), trip.end());
}

/// ∂/∂u of ∫F(x, e(u), v) on free DOFs; dF/dc by the supplied partials.
template <class Partials>
Eigen::VectorXd potential_gradient(const DiscreteState& s, const std::vector<int>& map, int nf, Partials&& dF) {
    const Grid& g = s.grid;
    const double w = 0.25 * g.h() * g.h();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nf);
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const auto nd = cell_nodes(g, i, j);
            for (int q = 0; q < 4; ++q) {
                const auto b = strain_rows(g, q);
                const std::array<double, 3> gr = dF(gauss_point(g, i, j, q), cell_strain(g, s.u, nd, q), cell_v(s.v, nd, q));
                for (int a = 0; a < 4; ++a)
                    for (int c = 0; c < 2; ++c) {
                        const int fr = map[2 * nd[a] + c];
                        if (fr < 0) continue;
                        const int m = 2 * a + c;
                        out[fr] += w * (b[0][m] * gr[0] + b[1][m] * gr[1] + b[2][m] * gr[2]);
                    }
            }
        }
    return out;
}

inline std::array<double, 3> affine_partials(const PotentialSpec& f, const Point& x, double v) {
    const double f0 = f(x, SymMat2{}, v);
    return {f(x, {1.0, 0.0, 0.0}, v) - f0, f(x, {0.0, 1.0, 0.0}, v) - f0, f(x, {0.0, 0.0, 1.0}, v) - f0};
}

inline std::array<double, 3> numeric_partials(const PotentialSpec& f, const Point& x, const SymMat2& m, double v) {
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
        SymMat2 p = m, q = m;
        double* cp = k == 0 ? &p.xx : (k == 1 ? &p.yy : &p.xy);
        double* cq = k == 0 ? &q.xx : (k == 1 ? &q.yy : &q.xy);
        const double h = 1e-6 * (1.0 + std::abs(*cp));
        *cp += h;
        *cq -= h;
        out[k] = (f(x, p, v) - f(x, q, v)) / (2.0 * h);
    }
    return out;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& u, const std::vector<int>& map, int nf) {
    Eigen::VectorXd x(nf);
    for (std::size_t k = 0; k < map.size(); ++k)
        if (map[k] >= 0) x[map[k]] = u[static_cast<Eigen::Index>(k)];
    return x;
}

inline void scatter(const Eigen::VectorXd& x, const std::vector<int>& map, Eigen::VectorXd& u) {
    for (std::size_t k = 0; k < map.size(); ++k)
        if (map[k] >= 0) u[static_cast<Eigen::Index>(k)] = x[map[k]];
}

}  // namespace detail

struct SolverTolerances {
    double cg = 1e-10;     // relative residual of the linear u-solve
    double u_step = 1e-12; // stop the projected-gradient loop when the decrease is below u_step (1 + |E|)
    int max_u_iterations = 200;
};

/// u-subproblem at fixed v. Affine-in-strain potentials: one PCG solve, box projection, accept if the
/// energy does not increase. Otherwise, or if that fails: projected descent along the direction
/// preconditioned by the stiffness, with Armijo backtracking.
inline UStepResult minimize_u(DiscreteState& s, const ElasticTensor& a, const DamageLaw& law, const PotentialSpec& f,
                              const SolverTolerances& tol = {}) {
    UStepResult res;
    const Eigen::Matrix3d D = detail::strain_form(a);
    int nf = 0;
    const auto map = detail::free_dofs(s.grid, nf);
    const double e0 = assemble_energy_unchecked(s, a, law, f).F();
    res.energy_before = res.energy_after = e0;
    if (nf == 0) return res;
    Eigen::SparseMatrix<double> K;
    Eigen::VectorXd kp;
    detail::assemble_stiffness(s, D, map, nf, K, kp);
    auto clamp_box = [&](Eigen::VectorXd& x) { x = x.cwiseMax(-s.d).cwiseMin(s.d); };

    if (f.affine_in_strain) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(nf);
        if (!f.zero)
            b = detail::potential_gradient(s, map, nf, [&](const Point& x, const SymMat2&, double v) {
                return detail::affine_partials(f, x, v);
            });
        // ∇_u (uᵀKu + bᵀu) = 2(K u_f + K_fp u_p) + b = 0.
        const Eigen::VectorXd rhs = -kp - 0.5 * b;
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg;
        cg.setTolerance(tol.cg);
        cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * static_cast<Eigen::Index>(nf)));
        cg.compute(K);
        Eigen::VectorXd x = cg.solveWithGuess(rhs, detail::gather(s.u, map, nf));
        if (cg.info() != Eigen::Success || !x.allFinite())
            throw Error(ErrorKind::Breakdown,
                        "conjugate gradients did not converge; check the potential with validate_bounds / sigma-bound");
        clamp_box(x);
        DiscreteState trial = s;
        detail::scatter(x, map, trial.u);
        const double e1 = assemble_energy_unchecked(trial, a, law, f).F();
        res.iterations = static_cast<int>(cg.iterations());
        if (e1 <= e0) {
            s.u = trial.u;
            res.linear_path = true;
            res.energy_after = e1;
            return res;
        }
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(K);
    if (chol.info() != Eigen::Success) throw Error(ErrorKind::Breakdown, "stiffness factorisation failed");
    double e = e0;
    for (int it = 0; it < tol.max_u_iterations; ++it) {
        Eigen::VectorXd grad = 2.0 * (K * detail::gather(s.u, map, nf) + kp);
        if (!f.zero)
            grad += detail::potential_gradient(s, map, nf, [&](const Point& x, const SymMat2& m, double v) {
                return detail::numeric_partials(f, x, m, v);
            });
        const Eigen::VectorXd dir = -0.5 * chol.solve(grad);
        const Eigen::VectorXd x0 = detail::gather(s.u, map, nf);
        bool moved = false;
        double t = 1.0;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            Eigen::VectorXd x = x0 + t * dir;
            clamp_box(x);
            DiscreteState trial = s;
            detail::scatter(x, map, trial.u);
            const double e1 = assemble_energy_unchecked(trial, a, law, f).F();
            if (e1 <= e + 1e-4 * grad.dot(x - x0)) {
                const double dec = e - e1;
                s.u = trial.u;
                e = e1;
                moved = true;
                res.iterations = it + 1;
                if (dec < tol.u_step * (1.0 + std::abs(e))) it = tol.max_u_iterations;
                break;
            }
        }
        if (!moved) break;
    }
    res.energy_after = e;
    return res;
}

struct VStepResult {
    bool accepted = false;  // false: energy would increase, previous v kept (stagnation)
    double energy_before = 0.0;
    double energy_after = 0.0;
};

namespace detail {

/// Exact inf-convolution v ← min_y v(y) + c |x - y|_1 on the grid (separable l¹ passes).
inline void manhattan_restore(Eigen::VectorXd& v, const Grid& g, double c) {
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 1; i < g.nx(); ++i) v[g.id(i, j)] = std::min(v[g.id(i, j)], v[g.id(i - 1, j)] + c);
        for (int i = g.nx() - 2; i >= 0; --i) v[g.id(i, j)] = std::min(v[g.id(i, j)], v[g.id(i + 1, j)] + c);
    }
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 1; j < g.ny(); ++j) v[g.id(i, j)] = std::min(v[g.id(i, j)], v[g.id(i, j - 1)] + c);
        for (int j = g.ny() - 2; j >= 0; --j) v[g.id(i, j)] = std::min(v[g.id(i, j)], v[g.id(i, j + 1)] + c);
    }
}

}  // namespace detail

/// Pointwise minimiser of v q + ψ(v)/ε + c0 + c1 v + c2 v² on [lo, 1] for ψ = (1 - v)².
inline double pointwise_v_quadratic(double q, double c1, double c2, double eps, double lo) {
    const double curv = 1.0 / eps + c2;
    auto obj = [&](double v) { return v * q + (1.0 - v) * (1.0 - v) / eps + c1 * v + c2 * v * v; };
    if (curv > 0.0) return std::clamp((2.0 / eps - q - c1) / (2.0 * curv), lo, 1.0);
    return obj(1.0) <= obj(lo) ? 1.0 : lo;
}

/// v-subproblem at fixed u: pointwise minimisation from nodal averages, then the Lipschitz restoration
/// kept below 1 - c·(index distance to ∂Ω) so boundary nodes stay at 1. Accepted only if F_ε does not increase.
inline VStepResult minimize_v(DiscreteState& s, const ElasticTensor& a, const DamageLaw& law, const PotentialSpec& f) {
    const Grid& g = s.grid;
    const double lo = law.alpha() * s.eps;
    const int N = g.nodes();
    const double w = 0.25 * g.h() * g.h();
    VStepResult res;
    res.energy_before = res.energy_after = assemble_energy_unchecked(s, a, law, f).F();

    // Lumped nodal averages of q = 𝔸e·e and of F(·, e, v) at v ∈ {0, 1/2, 1}.
    const bool poly = f.zero || (f.v_degree >= 0 && f.v_degree <= 2);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(N), qbar = Eigen::VectorXd::Zero(N);
    Eigen::MatrixXd fbar = Eigen::MatrixXd::Zero(N, 3);
    struct GaussSample {
        int node;
        double weight;
        Point x;
        SymMat2 e;
    };
    std::vector<std::vector<GaussSample>> adj;
    if (!poly) adj.resize(N);
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const auto nd = detail::cell_nodes(g, i, j);
            for (int q = 0; q < 4; ++q) {
                const SymMat2 e = detail::cell_strain(g, s.u, nd, q);
                const Point x = detail::gauss_point(g, i, j, q);
                const double qa = a.density(e);
                double fv[3] = {0.0, 0.0, 0.0};
                if (!f.zero && poly)
                    for (int k = 0; k < 3; ++k) fv[k] = f(x, e, 0.5 * k);
                for (int n = 0; n < 4; ++n) {
                    const double wn = w * detail::q1().n[q][n];
                    mass[nd[n]] += wn;
                    qbar[nd[n]] += wn * qa;
                    for (int k = 0; k < 3; ++k) fbar(nd[n], k) += wn * fv[k];
                    if (!poly) adj[nd[n]].push_back({nd[n], wn, x, e});
                }
            }
        }

    Eigen::VectorXd vp = s.v;
    for (int n = 0; n < N; ++n) {
        if (g.on_boundary(n)) continue;
        const double qn = qbar[n] / mass[n];
        if (poly && law.is_quadratic()) {
            const double f0 = fbar(n, 0) / mass[n], fh = fbar(n, 1) / mass[n], f1 = fbar(n, 2) / mass[n];
            const double c2 = 2.0 * (f1 - 2.0 * fh + f0);
            const double c1 = f1 - f0 - c2;
            vp[n] = pointwise_v_quadratic(qn, c1, c2, s.eps, lo);
            continue;
        }
        auto obj = [&](double v) {
            double fv = 0.0;
            if (poly) {
                const double f0 = fbar(n, 0) / mass[n], fh = fbar(n, 1) / mass[n], f1 = fbar(n, 2) / mass[n];
                const double c2 = 2.0 * (f1 - 2.0 * fh + f0);
                fv = f0 + (f1 - f0 - c2) * v + c2 * v * v;
            } else if (!f.zero) {
                for (const auto& gs : adj[n]) fv += gs.weight * f(gs.x, gs.e, v);
                fv /= mass[n];
            }
            return v * qn + law.psi(v) / s.eps + fv;
        };
        // Scan from v = 1 downward; only strict improvements move, so plateaus resolve to the larger v.
        constexpr int scan = 64;
        double best_v = 1.0, best = obj(1.0);
        int best_k = scan;
        for (int k = scan - 1; k >= 0; --k) {
            const double v = lo + (1.0 - lo) * k / scan;
            const double o = obj(v);
            if (o < best - 1e-14 * std::abs(best)) {
                best = o;
                best_v = v;
                best_k = k;
            }
        }
        double l = lo + (1.0 - lo) * std::max(best_k - 1, 0) / scan, r = lo + (1.0 - lo) * std::min(best_k + 1, scan) / scan;
        for (int it = 0; it < 40; ++it) {
            const double m1 = l + (r - l) * 0.381966, m2 = r - (r - l) * 0.381966;
            (obj(m1) < obj(m2) ? r : l) = obj(m1) < obj(m2) ? m2 : m1;
        }
        const double mid = 0.5 * (l + r);
        if (obj(mid) < best) best_v = mid;
        vp[n] = best_v;
    }

    const double c = g.h() / (s.eps * std::sqrt(2.0));
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const int n = g.id(i, j);
            vp[n] = std::max(vp[n], 1.0 - c * g.depth(i, j));
        }
    detail::manhattan_restore(vp, g, c);
    for (int n = 0; n < N; ++n) {
        if (g.on_boundary(n)) vp[n] = 1.0;
        vp[n] = std::clamp(vp[n], lo, 1.0);
    }

    DiscreteState trial = s;
    trial.v = vp;
    const double e1 = assemble_energy_unchecked(trial, a, law, f).F();
    if (e1 <= res.energy_before) {
        s.v = vp;
        res.accepted = true;
        res.energy_after = e1;
    }
    return res;
}

struct SolverConfig {
    int max_outer = 500;
    double stop_tol = 1e-8;  // relative decrease over the last 3 outer iterations
    SolverTolerances inner;
    double sigma_area = 0.0; // |Ω| for the energy bound constant; 0 uses the grid rectangle
    std::function<void(int, const DiscreteState&)> on_iterate;  // called after every recorded iterate
};

struct TraceRow {
    int iter = 0;
    EnergyReport energy;
    double c_bound = 0.0;
    bool bound_ok = true;
    bool v_accepted = true;
};

struct SolveResult {
    DiscreteState state;
    std::vector<TraceRow> trace;
    bool converged = false;
    bool monotone = true;
    bool bound_held = true;
    double c_bound = 0.0;
};

/// Alternating minimisation from v ≡ 1 and the elastic extension of f.
inline SolveResult alternate_minimize(DiscreteState s, const ElasticTensor& a, const DamageLaw& law,
                                      const PotentialSpec& f, const BoundaryData& bc, const SolverConfig& cfg = {}) {
    const double area = cfg.sigma_area > 0.0 ? cfg.sigma_area : s.grid.rect().area();
    SolveResult out{s, {}};
    out.c_bound = energy_bound_constant(std::max(f.sigma, 1e-300), law, a, area);
    check_feasible(s, law, bc);

    auto record = [&](int it, bool v_ok) {
        TraceRow r;
        r.iter = it;
        r.energy = assemble_energy(s, a, law, f, bc);
        r.c_bound = out.c_bound;
        r.bound_ok = r.energy.W() <= out.c_bound * (r.energy.F() + 1.0);
        r.v_accepted = v_ok;
        out.bound_held = out.bound_held && r.bound_ok;
        if (!out.trace.empty() && r.energy.F() > out.trace.back().energy.F()) out.monotone = false;
        out.trace.push_back(r);
        if (cfg.on_iterate) cfg.on_iterate(it, s);
    };

    minimize_u(s, a, law, f, cfg.inner);
    record(0, true);
    for (int it = 1; it <= cfg.max_outer; ++it) {
        minimize_u(s, a, law, f, cfg.inner);
        const VStepResult vr = minimize_v(s, a, law, f);
        record(it, vr.accepted);
        const std::size_t k = out.trace.size();
        if (k >= 4) {
            const double e_now = out.trace[k - 1].energy.F(), e_old = out.trace[k - 4].energy.F();
            if (e_old - e_now <= cfg.stop_tol * (1.0 + std::abs(e_now))) {
                out.converged = true;
                break;
            }
        }
    }
    out.state = std::move(s);
    return out;
}

struct SublevelRow {
    double lambda = 0.0;
    double area = 0.0;
    double perimeter = 0.0;  // anisotropic total variation of the indicator
};

/// Area and perimeter proxy of {v ≤ λ} for each λ.
inline std::vector<SublevelRow> sublevel_diagnostics(const DiscreteState& s, const std::vector<double>& lambdas) {
    const Grid& g = s.grid;
    std::vector<SublevelRow> out;
    for (double lam : lambdas) {
        if (!(lam > 0.0 && lam < 1.0)) throw Error(ErrorKind::Input, "lambda must lie in (0, 1)");
        SublevelRow r;
        r.lambda = lam;
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const bool in = s.v[g.id(i, j)] <= lam;
                const double wx = (i == 0 || i == g.nx() - 1) ? 0.5 : 1.0;
                const double wy = (j == 0 || j == g.ny() - 1) ? 0.5 : 1.0;
                if (in) r.area += wx * wy * g.h() * g.h();
                if (i + 1 < g.nx() && in != (s.v[g.id(i + 1, j)] <= lam)) r.perimeter += g.h();
                if (j + 1 < g.ny() && in != (s.v[g.id(i, j + 1)] <= lam)) r.perimeter += g.h();
            }
        out.push_back(r);
    }
    return out;
}

/// ∫(1 - v)² tr(e(u))⁻ and ∫(1 - v)² by 2x2 Gauss.
struct Indicators {
    double interpenetration = 0.0;
    double opening = 0.0;
};

inline Indicators indicators(const DiscreteState& s) {
    const Grid& g = s.grid;
    const double w = 0.25 * g.h() * g.h();
    Indicators r;
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const auto nd = detail::cell_nodes(g, i, j);
            for (int q = 0; q < 4; ++q) {
                const double v = detail::cell_v(s.v, nd, q);
                const double tr = detail::cell_strain(g, s.u, nd, q).trace();
                r.interpenetration += w * (1.0 - v) * (1.0 - v) * std::max(-tr, 0.0);
                r.opening += w * (1.0 - v) * (1.0 - v);
            }
        }
    return r;
}

}  // namespace gammafrac
