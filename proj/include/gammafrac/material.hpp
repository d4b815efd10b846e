#pragma once

// Elastic tensor, damage law and the closed-form constants built from them.

#include "gammafrac/types.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gammafrac {

/// Constant fourth-order tensor acting on symmetric 2x2 matrices.
///
/// Isotropic uses the half-tensor convention A M = mu M + (lam/2) tr(M) Id, ScaledIdentity is
/// A M = c M, and Voigt takes an arbitrary SPD 3x3 matrix in the orthonormal basis
/// {e1⊗e1, e2⊗e2, (e1⊗e2 + e2⊗e1)/√2}. kappa is always derived from the eigenvalues of that
/// 3x3 form so the Frobenius-norm ellipticity bounds hold exactly.
class ElasticTensor {
public:
    enum class Kind { Isotropic, ScaledIdentity, Voigt };

    static ElasticTensor isotropic(double mu, double lam) {
        if (!(mu > 0.0) || !(lam >= 0.0))
            throw Error(ErrorKind::Input, "isotropic tensor needs mu > 0 and lam >= 0");
        ElasticTensor t(Kind::Isotropic);
        t.mu_ = mu;
        t.lam_ = lam;
        t.voigt_ << mu + 0.5 * lam, 0.5 * lam, 0.0,
                    0.5 * lam, mu + 0.5 * lam, 0.0,
                    0.0, 0.0, mu;
        t.finish();
        return t;
    }

    static ElasticTensor scaled_identity(double c) {
        if (!(c > 0.0)) throw Error(ErrorKind::Input, "scaled identity needs c > 0");
        ElasticTensor t(Kind::ScaledIdentity);
        t.c_ = c;
        t.voigt_ = c * Eigen::Matrix3d::Identity();
        t.finish();
        return t;
    }

    static ElasticTensor voigt(const Eigen::Matrix3d& m) {
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error(ErrorKind::Input, "Voigt form must be symmetric");
        ElasticTensor t(Kind::Voigt);
        t.voigt_ = m;
        t.finish();
        return t;
    }

    Kind kind() const { return kind_; }
    double mu() const { return mu_; }
    double lam() const { return lam_; }
    double c() const { return c_; }
    double kappa() const { return kappa_; }
    double min_eigenvalue() const { return eig_min_; }
    double max_eigenvalue() const { return eig_max_; }
    const Eigen::Matrix3d& voigt_form() const { return voigt_; }

    SymMat2 apply(const SymMat2& m) const {
        switch (kind_) {
        case Kind::ScaledIdentity: return c_ * m;
        case Kind::Isotropic: return mu_ * m + SymMat2{0.5 * lam_ * m.trace(), 0.5 * lam_ * m.trace(), 0.0};
        case Kind::Voigt: {
            constexpr double r2 = 1.4142135623730951;
            const Eigen::Vector3d w = voigt_ * Eigen::Vector3d(m.xx, m.yy, r2 * m.xy);
            return {w(0), w(1), w(2) / r2};
        }
        }
        return {};
    }

    /// A applied to a full matrix; rejects matrices that are not symmetric to 1e-12.
    SymMat2 apply(const Mat2& m) const {
        if (std::abs(m(0, 1) - m(1, 0)) > 1e-12) throw Error(ErrorKind::Input, "matrix is not symmetric");
        return apply(sym(m));
    }

    /// A M · M.
    double density(const SymMat2& m) const { return inner(apply(m), m); }
    double density(const Mat2& m) const { return inner(apply(m), sym(m)); }

    /// Accepts a user-declared kappa only if it is a valid ellipticity constant.
    void check_declared_kappa(double k) const {
        if (k + 1e-12 < kappa_)
            throw Error(ErrorKind::Input, "declared kappa " + std::to_string(k) +
                                              " violates ellipticity (needs >= " + std::to_string(kappa_) + ")");
    }

private:
    explicit ElasticTensor(Kind k) : kind_(k) {}

    void finish() {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(voigt_);
        eig_min_ = es.eigenvalues().minCoeff();
        eig_max_ = es.eigenvalues().maxCoeff();
        if (!(eig_min_ > 0.0)) throw Error(ErrorKind::Input, "elastic tensor is not positive definite");
        kappa_ = std::max(eig_max_, 1.0 / eig_min_);
    }

    Kind kind_;
    double mu_ = 0.0, lam_ = 0.0, c_ = 0.0;
    double kappa_ = 1.0, eig_min_ = 1.0, eig_max_ = 1.0;
    Eigen::Matrix3d voigt_ = Eigen::Matrix3d::Identity();
};

inline SymMat2 apply_A(const ElasticTensor& a, const SymMat2& m) { return a.apply(m); }
inline SymMat2 apply_A(const ElasticTensor& a, const Mat2& m) { return a.apply(m); }
inline double elastic_density(const ElasticTensor& a, const SymMat2& m) { return a.density(m); }
inline double elastic_density(const ElasticTensor& a, const Mat2& m) {
    if (std::abs(m(0, 1) - m(1, 0)) > 1e-12) throw Error(ErrorKind::Input, "matrix is not symmetric");
    return a.density(m);
}

/// Damage law psi on [0, 1] with residual-stiffness parameter alpha.
class DamageLaw {
public:
    enum class Kind { Quadratic, Tabulated, Custom };

    /// psi(v) = (1 - v)^2.
    static DamageLaw quadratic(double alpha) {
        DamageLaw d(Kind::Quadratic, alpha);
        d.psi_ = [](double v) { return (1.0 - v) * (1.0 - v); };
        d.psi0_ = 1.0;
        d.int_psi_ = 1.0 / 3.0;
        d.validate();
        return d;
    }

    /// Piecewise-linear interpolation of (v, psi(v)) pairs; must cover [0, 1].
    static DamageLaw tabulated(double alpha, std::vector<std::pair<double, double>> table) {
        std::sort(table.begin(), table.end());
        if (table.size() < 2 || table.front().first != 0.0 || table.back().first != 1.0)
            throw Error(ErrorKind::Input, "psi table must start at v=0 and end at v=1");
        DamageLaw d(Kind::Tabulated, alpha);
        d.table_ = table;
        d.psi_ = [table](double v) {
            v = std::clamp(v, 0.0, 1.0);
            auto it = std::upper_bound(table.begin(), table.end(), v,
                                       [](double x, const auto& p) { return x < p.first; });
            if (it == table.end()) return table.back().second;
            if (it == table.begin()) return table.front().second;
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (v - lo.first) / (hi.first - lo.first);
            return (1.0 - w) * lo.second + w * hi.second;
        };
        d.psi0_ = table.front().second;
        d.int_psi_ = d.integrate(0.0, 1.0);
        d.validate();
        return d;
    }

    static DamageLaw custom(double alpha, std::function<double(double)> psi) {
        DamageLaw d(Kind::Custom, alpha);
        d.psi_ = std::move(psi);
        d.psi0_ = d.psi_(0.0);
        d.int_psi_ = d.integrate(0.0, 1.0);
        d.validate();
        return d;
    }

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double psi(double v) const { return psi_(v); }
    double psi0() const { return psi0_; }
    double int_psi() const { return int_psi_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }
    bool is_quadratic() const { return kind_ == Kind::Quadratic; }

    /// h(t) = ∫_0^t psi.
    double h(double t) const {
        t = std::clamp(t, 0.0, 1.0);
        if (kind_ == Kind::Quadratic) return (1.0 - std::pow(1.0 - t, 3)) / 3.0;
        return integrate(0.0, t);
    }

    DamageLaw with_alpha(double alpha) const {
        DamageLaw d = *this;
        if (!(alpha > 0.0)) throw Error(ErrorKind::Input, "alpha must be positive");
        d.alpha_ = alpha;
        return d;
    }

private:
    DamageLaw(Kind k, double alpha) : kind_(k), alpha_(alpha) {
        if (!(alpha > 0.0)) throw Error(ErrorKind::Input, "alpha must be positive");
    }

    double integrate(double lo, double hi) const {
        if (hi <= lo) return 0.0;
        // Kinks of a tabulated law sit on table nodes; integrating piece by piece keeps
        // the adaptive rule on smooth integrands.
        std::vector<double> breaks{lo};
        for (const auto& [v, p] : table_)
            if (v > lo && v < hi) breaks.push_back(v);
        breaks.push_back(hi);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            double err = 0.0;
            total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(psi_, breaks[i], breaks[i + 1], 15,
                                                                                 1e-12, &err);
        }
        return total;
    }

    void validate() const {
        constexpr int n = 1024;
        if (psi_(1.0) != 0.0) throw Error(ErrorKind::Input, "psi(1) must be exactly 0");
        double prev = psi_(0.0);
        const double scale = 1.0 + std::abs(psi0_);
        for (int i = 1; i <= n; ++i) {
            const double v = static_cast<double>(i) / n;
            const double p = psi_(v);
            if (p > prev + 1e-12 * scale) throw Error(ErrorKind::Input, "psi must be non-increasing");
            prev = p;
        }
        for (int i = 1; i < n; ++i) {
            const double v = static_cast<double>(i) / n, dv = 1.0 / n;
            if (psi_(v) > 0.5 * (psi_(v - dv) + psi_(v + dv)) + 1e-12 * scale)
                throw Error(ErrorKind::Input, "psi must be convex");
        }
    }

    Kind kind_;
    double alpha_;
    std::function<double(double)> psi_;
    double psi0_ = 0.0;
    double int_psi_ = 0.0;
    std::vector<std::pair<double, double>> table_;
};

struct Coefficients {
    double a = 0.0;  // surface weight of the sqrt(A[u]⊙ν·[u]⊙ν) term
    double b = 0.0;  // weight of H^1(J_u)
};

inline Coefficients coefficients(const DamageLaw& law) {
    return {2.0 * std::sqrt(law.alpha() * law.psi0()), 2.0 * law.int_psi()};
}

struct SigmaBound {
    double value = 0.0;   // max over lambda of the admissibility integrand
    double lambda = 0.0;  // maximiser
    double envelope = 0.0;  // 2 sqrt(alpha psi(0) / kappa)
    std::string warning;
};

namespace detail {

inline double sigma_integrand(const DamageLaw& law, double kappa, double area, double lambda) {
    const double p = law.psi(lambda);
    if (p <= 0.0) return 0.0;
    const double num = 2.0 * std::sqrt(law.alpha() * p);
    const double den = std::sqrt(kappa) * (1.0 + 2.0 * std::sqrt(law.alpha() * area * p / lambda));
    return num / den;
}

}  // namespace detail

/// Admissible sigma threshold: 1024-point scan on [1e-6, 1) followed by a bracketed Brent
/// refinement to |Δλ| <= 1e-8.
inline SigmaBound sigma_max_detail(const DamageLaw& law, const ElasticTensor& a, double domain_area) {
    if (!(domain_area > 0.0)) throw Error(ErrorKind::Input, "domain area must be positive");
    SigmaBound out;
    out.envelope = 2.0 * std::sqrt(law.alpha() * law.psi0() / a.kappa());
    const auto f = [&](double l) { return detail::sigma_integrand(law, a.kappa(), domain_area, l); };

    constexpr int n = 1024;
    constexpr double lo = 1e-6;
    const double step = (1.0 - lo) / n;
    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i < n; ++i) {
        const double v = f(lo + i * step);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    if (best_val <= 0.0) {
        out.warning = "potential must be negative-part free: psi vanishes on (0,1), sigma_max = 0";
        return out;
    }
    const double left = lo + std::max(0, best - 1) * step;
    const double right = std::min(1.0 - 1e-12, lo + (best + 1) * step);
    // 28 bits: relative tolerance 2^-27 < 1e-8 for λ in (0, 1).
    auto r = boost::math::tools::brent_find_minima([&](double l) { return -f(l); }, left, right, 28);
    out.lambda = r.first;
    out.value = -r.second;
    if (best_val > out.value) {
        out.value = best_val;
        out.lambda = lo + best * step;
    }
    return out;
}

inline double sigma_max(const DamageLaw& law, const ElasticTensor& a, double domain_area) {
    return sigma_max_detail(law, a, domain_area).value;
}

/// C in W_eps <= C (F_eps + 1); C = 1 / (1 - sigma / sigma_max).
inline double energy_bound_constant(double sigma, const DamageLaw& law, const ElasticTensor& a, double domain_area) {
    if (sigma < 0.0) throw Error(ErrorKind::Input, "sigma must be non-negative");
    const double smax = sigma_max(law, a, domain_area);
    if (sigma == 0.0) return 1.0;
    if (sigma >= smax)
        throw Error(ErrorKind::InfeasibleSigma, "sigma = " + std::to_string(sigma) + " >= sigma_max = " +
                                                    std::to_string(smax));
    return 1.0 / (1.0 - sigma / smax);
}

}  // namespace gammafrac
