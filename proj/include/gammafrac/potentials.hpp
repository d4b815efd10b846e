#pragma once

// Low-order potentials F(x, M, v), their recession functions and admissibility checks.

#include "gammafrac/material.hpp"
#include "gammafrac/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace gammafrac {

using PotentialFn = std::function<double(const Point&, const SymMat2&, double)>;
using RecessionFn = std::function<double(const Point&, const SymMat2&)>;
using ScalarField = std::function<double(const Point&)>;
using StrainFn = std::function<double(const SymMat2&)>;

constexpr double sqrt2 = 1.4142135623730951;

/// A low-order potential with its declared linear-growth bounds.
struct PotentialSpec {
    std::string name = "none";
    PotentialFn value = [](const Point&, const SymMat2&, double) { return 0.0; };
    RecessionFn recession = [](const Point&, const SymMat2&) { return 0.0; };  // closed form F_∞
    double sigma = 0.0;  // -sigma |M| <= F
    double ell = 0.0;    // F <= ell |M|
    double rho = 0.0;    // spatial Lipschitz modulus
    bool zero = true;
    bool affine_in_strain = true;  // F(x, ·, v) linear for every fixed v
    int v_degree = 0;              // polynomial degree in v, -1 when not polynomial

    double operator()(const Point& x, const SymMat2& m, double v) const { return value(x, m, v); }
};

inline PotentialSpec zero_potential() { return {}; }

/// p(x, M, v) = (m v + q) rho(x).
struct AffineInV {
    double m = 0.0;
    double q = 0.0;
    ScalarField rho = [](const Point&) { return 0.0; };
    double rho_sup = 0.0;  // ||rho||_∞
    double rho_lip = 0.0;

    static AffineInV constant(double m, double q, double rho) {
        return {m, q, [rho](const Point&) { return rho; }, std::abs(rho), 0.0};
    }
};

/// p(x, M, v) = rho(x, v) g(M) with g concave and bounded, gamma(M) = lim_{t→∞} g(tM).
struct StrainDependent {
    std::function<double(const Point&, double)> rho;
    StrainFn g;
    StrainFn gamma;
    double rho_sup = 0.0;
    double g_bound = 0.0;  // ||g||_∞ < g_bound
    double rho_lip = 0.0;
};

/// Two rocks separated by a polyline interface S, pressure blended to zero over a layer of width delta.
struct TwoRocks {
    std::function<double(double)> rho_v = [](double) { return 1.0; };
    StrainFn p1, p2;
    StrainFn p1_inf, p2_inf;
    std::vector<Point> interface;
    double delta = 0.1;
    double p_sup = 0.0;  // bound on |rho_v p_i|

    /// Euclidean distance to the polyline and the side (+1 for Q1, -1 for Q2).
    std::pair<double, int> locate(const Point& x) const {
        double best = std::numeric_limits<double>::infinity();
        int side = 1;
        for (std::size_t i = 0; i + 1 < interface.size(); ++i) {
            const Point a = interface[i], b = interface[i + 1];
            const Vec2 d = b - a;
            const double len2 = dot(d, d);
            const double s = len2 > 0.0 ? std::clamp(dot(x - a, d) / len2, 0.0, 1.0) : 0.0;
            const double dist = norm(x - (a + s * d));
            if (dist < best) {
                best = dist;
                side = cross(d, x - a) >= 0.0 ? 1 : -1;
            }
        }
        return {best, side};
    }

    double blend(double dist) const { return std::min(1.0, dist / delta); }
};

using PressureLaw = std::variant<AffineInV, StrainDependent, TwoRocks>;

/// F(x, M, v) = -p(x, M, v) tr(M).
inline PotentialSpec make_fracking(const PressureLaw& law) {
    PotentialSpec f;
    f.zero = false;
    if (const auto* a = std::get_if<AffineInV>(&law)) {
        const AffineInV p = *a;
        f.name = "fracking_affine";
        f.value = [p](const Point& x, const SymMat2& m, double v) { return -(p.m * v + p.q) * p.rho(x) * m.trace(); };
        f.recession = [p](const Point& x, const SymMat2& m) { return -p.q * p.rho(x) * m.trace(); };
        const double psup = std::max(std::abs(p.q), std::abs(p.m + p.q)) * p.rho_sup;
        f.sigma = f.ell = sqrt2 * psup;
        f.rho = sqrt2 * std::max(std::abs(p.q), std::abs(p.m + p.q)) * p.rho_lip;
        f.affine_in_strain = true;
        f.v_degree = p.m != 0.0 ? 1 : 0;
        f.zero = (p.m == 0.0 && p.q == 0.0) || p.rho_sup == 0.0;
    } else if (const auto* s = std::get_if<StrainDependent>(&law)) {
        const StrainDependent p = *s;
        f.name = "fracking_strain";
        f.value = [p](const Point& x, const SymMat2& m, double v) { return -p.rho(x, v) * p.g(m) * m.trace(); };
        f.recession = [p](const Point& x, const SymMat2& m) { return -p.rho(x, 0.0) * p.gamma(m) * m.trace(); };
        f.sigma = f.ell = sqrt2 * p.rho_sup * p.g_bound;
        f.rho = sqrt2 * p.rho_lip * p.g_bound;
        f.affine_in_strain = false;
        f.v_degree = -1;
    } else {
        const TwoRocks p = std::get<TwoRocks>(law);
        f.name = "two_rocks";
        f.value = [p](const Point& x, const SymMat2& m, double v) {
            const auto [d, side] = p.locate(x);
            const double pi = side > 0 ? p.p1(m) : p.p2(m);
            return -p.blend(d) * p.rho_v(v) * pi * m.trace();
        };
        f.recession = [p](const Point& x, const SymMat2& m) {
            const auto [d, side] = p.locate(x);
            const double pi = side > 0 ? p.p1_inf(m) : p.p2_inf(m);
            return -p.blend(d) * p.rho_v(0.0) * pi * m.trace();
        };
        f.sigma = f.ell = sqrt2 * p.p_sup;
        f.rho = sqrt2 * p.p_sup / p.delta;
        f.affine_in_strain = false;
        f.v_degree = -1;
    }
    return f;
}

namespace detail {

/// Rejects g that grows faster than linearly; g(t)/t must settle to g_inf.
inline void check_sublinear(const std::function<double(double)>& g, double g_inf) {
    if (std::abs(g(0.0)) > 1e-12) throw Error(ErrorKind::Input, "g(0) must vanish");
    double prev_gap = std::numeric_limits<double>::infinity();
    for (double t : {1e4, 1e6, 1e8}) {
        const double slope = g(t) / t;
        if (!std::isfinite(slope) || slope > g_inf * (1.0 + 1e-3) + 1e-3)
            throw Error(ErrorKind::Input, "g is superlinear or g_inf is too small (g(t)/t = " +
                                              std::to_string(slope) + " at t = " + std::to_string(t) + ")");
        const double gap = std::abs(slope - g_inf);
        if (gap > prev_gap * (1.0 + 1e-9) && gap > 1e-9)
            throw Error(ErrorKind::Input, "g(t)/t does not approach g_inf");
        prev_gap = gap;
    }
    if (prev_gap > 1e-3 * (1.0 + std::abs(g_inf)))
        throw Error(ErrorKind::Input, "g(t)/t does not approach g_inf");
}

inline double tresca_gap(const ElasticTensor& a, const SymMat2& m) {
    const auto [lo, hi] = eigenvalues(a.apply(m));
    return hi - lo;
}

}  // namespace detail

/// F(x, M, v) = p(x, v) g(|M|).
inline PotentialSpec make_plastic_slip(std::function<double(const Point&, double)> p, std::function<double(double)> g,
                                       double g_inf, double p_sup) {
    detail::check_sublinear(g, g_inf);
    PotentialSpec f;
    f.name = "plastic_slip";
    f.zero = false;
    f.value = [p, g](const Point& x, const SymMat2& m, double v) { return p(x, v) * g(frobenius(m)); };
    f.recession = [p, g_inf](const Point& x, const SymMat2& m) { return g_inf * p(x, 0.0) * frobenius(m); };
    // g(t)/t is non-decreasing for convex g with g(0) = 0.
    const double slope0 = g(1e-8) / 1e-8;
    f.ell = p_sup * std::max(g_inf, 0.0);
    f.sigma = p_sup * std::max(0.0, -slope0);
    f.affine_in_strain = false;
    f.v_degree = -1;
    return f;
}

/// F(x, M, v) = p(x, v) g(λ_max(A M) - λ_min(A M)).
inline PotentialSpec make_tresca(std::function<double(const Point&, double)> p, std::function<double(double)> g,
                                 double g_inf, const ElasticTensor& a, double p_sup) {
    detail::check_sublinear(g, g_inf);
    PotentialSpec f;
    f.name = "tresca";
    f.zero = false;
    f.value = [p, g, a](const Point& x, const SymMat2& m, double v) { return p(x, v) * g(detail::tresca_gap(a, m)); };
    f.recession = [p, g_inf, a](const Point& x, const SymMat2& m) {
        return g_inf * p(x, 0.0) * detail::tresca_gap(a, m);
    };
    // λ_max - λ_min of A M is at most √2 |A M| <= √2 λ_max(A) |M|.
    const double slope0 = g(1e-8) / 1e-8;
    f.ell = p_sup * std::max(g_inf, 0.0) * sqrt2 * a.max_eigenvalue();
    f.sigma = p_sup * std::max(0.0, -slope0) * sqrt2 * a.max_eigenvalue();
    f.affine_in_strain = false;
    f.v_degree = -1;
    return f;
}

/// F(x, M, v) = (1 - v)^2 p(x) tr(M)^-. The field is sampled on sample_domain to reject negative values.
inline PotentialSpec make_non_interpenetration(ScalarField p, double p_sup, const Rect& sample_domain = {}) {
    constexpr int n = 64;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const Point x{sample_domain.x0 + sample_domain.width() * i / n,
                          sample_domain.y0 + sample_domain.height() * j / n};
            if (p(x) < 0.0) throw Error(ErrorKind::Input, "non-interpenetration coefficient must be non-negative");
        }
    PotentialSpec f;
    f.name = "non_interpenetration";
    f.zero = p_sup == 0.0;
    f.value = [p](const Point& x, const SymMat2& m, double v) {
        return (1.0 - v) * (1.0 - v) * p(x) * std::max(-m.trace(), 0.0);
    };
    f.recession = [p](const Point& x, const SymMat2& m) { return p(x) * std::max(-m.trace(), 0.0); };
    f.sigma = 0.0;
    f.ell = sqrt2 * p_sup;
    f.affine_in_strain = false;
    f.v_degree = 2;
    return f;
}

struct RecessionEstimate {
    double value = 0.0;
    std::vector<double> quotients;     // raw difference quotients at t = 2^6, 2^8, ..., 2^20
    std::vector<double> extrapolated;  // Richardson values (4 Q(4t) - Q(t)) / 3
    bool monotone = true;              // quotients non-decreasing in t
};

/// Difference-quotient recession (F(x, L + tM, 0) - F(x, L, 0)) / t with Richardson stabilisation.
inline RecessionEstimate recession_numeric_detail(const PotentialSpec& f, const Point& x, const SymMat2& m,
                                                  const SymMat2& l = {}) {
    RecessionEstimate r;
    const double base = f(x, l, 0.0);
    for (int k = 6; k <= 20; k += 2) {
        const double t = std::ldexp(1.0, k);
        r.quotients.push_back((f(x, l + t * m, 0.0) - base) / t);
    }
    for (std::size_t i = 0; i + 1 < r.quotients.size(); ++i)
        r.extrapolated.push_back((4.0 * r.quotients[i + 1] - r.quotients[i]) / 3.0);
    const double scale = 1.0 + std::abs(r.quotients.back());
    for (std::size_t i = 0; i + 1 < r.quotients.size(); ++i)
        if (r.quotients[i + 1] < r.quotients[i] - 1e-12 * scale) r.monotone = false;
    const auto n = r.extrapolated.size();
    r.value = r.extrapolated.back();
    const auto [lo, hi] = std::minmax({r.extrapolated[n - 1], r.extrapolated[n - 2], r.extrapolated[n - 3]});
    if (hi - lo > 1e-5 * (1.0 + std::abs(r.value)))
        throw Error(ErrorKind::NumericRecession,
                    "recession quotients did not settle (spread " + std::to_string(hi - lo) + ")");
    return r;
}

inline double recession_numeric(const PotentialSpec& f, const Point& x, const SymMat2& m, const SymMat2& l = {}) {
    return recession_numeric_detail(f, x, m, l).value;
}

/// Uniform direction on the unit Frobenius sphere of symmetric 2x2 matrices.
template <class Rng>
SymMat2 random_unit_sym(Rng& rng) {
    std::normal_distribution<double> n01;
    for (;;) {
        const double a = n01(rng), b = n01(rng), c = n01(rng);
        const double r = std::sqrt(a * a + b * b + c * c);
        if (r > 1e-12) return {a / r, b / r, c / (sqrt2 * r)};
    }
}

struct ValidationReport {
    bool pass = true;
    double sigma_hat = 0.0;
    double ell_hat = 0.0;
    double sigma_max = 0.0;
    std::array<double, 3> omega_to_one{};   // ω_F(s; 1) at s = 0.9, 0.99, 0.999
    std::array<double, 3> omega_to_zero{};  // ω_F(s; 0) at s = 0.1, 0.01, 0.001
    bool convex_ok = true;
    bool zero_at_origin = true;
    std::vector<std::string> failures;
};

/// Samples the standing bounds: linear growth, convexity at v ∈ {0, 1}, F(x, 0, v) = 0 and
/// continuity moduli in v, then compares the estimated sigma with sigma_max.
inline ValidationReport validate_bounds(const PotentialSpec& f, const DamageLaw& law, const ElasticTensor& a,
                                        const Rect& domain, int samples = 10000, std::uint64_t seed = 1) {
    if (samples < 10000) throw Error(ErrorKind::Input, "validate_bounds needs at least 1e4 samples");
    ValidationReport rep;
    rep.sigma_max = sigma_max(law, a, domain.area());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto rand_point = [&] { return Point{domain.x0 + domain.width() * u01(rng), domain.y0 + domain.height() * u01(rng)}; };

    // Probe directions where trace-type and eigenvalue-gap potentials attain their extremes.
    const std::array<SymMat2, 6> probes{SymMat2{1.0 / sqrt2, 1.0 / sqrt2, 0.0}, SymMat2{-1.0 / sqrt2, -1.0 / sqrt2, 0.0},
                                        SymMat2{1.0, 0.0, 0.0}, SymMat2{0.0, -1.0, 0.0},
                                        SymMat2{1.0 / sqrt2, -1.0 / sqrt2, 0.0}, SymMat2{0.0, 0.0, 1.0 / sqrt2}};
    auto record = [&](const Point& x, const SymMat2& m, double v) {
        const double nm = frobenius(m);
        const double val = f(x, m, v);
        rep.sigma_hat = std::max(rep.sigma_hat, -val / nm);
        rep.ell_hat = std::max(rep.ell_hat, val / nm);
    };
    for (int i = 0; i < samples; ++i) {
        const Point x = rand_point();
        const double mag = std::pow(10.0, -3.0 + 6.0 * u01(rng));
        const double v = (i % 10 == 0) ? 0.0 : (i % 10 == 1) ? 1.0 : u01(rng);
        const SymMat2 dir = (i < 6 * 64) ? probes[static_cast<std::size_t>(i % 6)] : random_unit_sym(rng);
        record(x, mag * dir, v);
        if (i < 6 * 64) {
            record(x, mag * dir, 0.0);
            record(x, mag * dir, 1.0);
        }

        if (std::abs(f(x, SymMat2{}, v)) > 1e-14) rep.zero_at_origin = false;

        const SymMat2 m1 = mag * random_unit_sym(rng), m2 = mag * random_unit_sym(rng);
        for (double vv : {0.0, 1.0}) {
            const double mid = f(x, 0.5 * (m1 + m2), vv);
            const double avg = 0.5 * (f(x, m1, vv) + f(x, m2, vv));
            if (mid > avg + 1e-10 * (1.0 + std::abs(avg))) rep.convex_ok = false;
        }
    }
    rep.sigma_hat = std::max(rep.sigma_hat, 0.0);
    rep.ell_hat = std::max(rep.ell_hat, 0.0);

    // ω moduli: sup over 256 unit directions and a handful of points.
    std::vector<Point> xs;
    for (int i = 0; i < 16; ++i) xs.push_back(rand_point());
    std::vector<SymMat2> dirs(probes.begin(), probes.end());
    while (dirs.size() < 256) dirs.push_back(random_unit_sym(rng));
    auto omega = [&](double s, double t) {
        double w = 0.0;
        for (const auto& x : xs)
            for (const auto& d : dirs) w = std::max(w, std::abs(f(x, d, s) - f(x, d, t)));
        return w;
    };
    const std::array<double, 3> near_one{0.9, 0.99, 0.999}, near_zero{0.1, 0.01, 0.001};
    for (int k = 0; k < 3; ++k) {
        rep.omega_to_one[static_cast<std::size_t>(k)] = omega(near_one[static_cast<std::size_t>(k)], 1.0);
        rep.omega_to_zero[static_cast<std::size_t>(k)] = omega(near_zero[static_cast<std::size_t>(k)], 0.0);
    }
    auto decays = [](const std::array<double, 3>& w) {
        const double tol = 1e-12 * (1.0 + w[0]);
        return w[1] <= w[0] + tol && w[2] <= w[1] + tol && w[2] <= 0.05 * w[0] + 1e-9;
    };

    if (!(rep.sigma_hat < rep.sigma_max) && rep.sigma_hat > 0.0)
        rep.failures.push_back("sigma_hat = " + std::to_string(rep.sigma_hat) + " is not below sigma_max = " +
                               std::to_string(rep.sigma_max));
    if (!rep.convex_ok) rep.failures.push_back("F(x,.,0) or F(x,.,1) failed the midpoint convexity test");
    if (!rep.zero_at_origin) rep.failures.push_back("F(x,0,v) != 0");
    if (!decays(rep.omega_to_one)) rep.failures.push_back("omega_F(s;1) does not vanish as s -> 1");
    if (!decays(rep.omega_to_zero)) rep.failures.push_back("omega_F(s;0) does not vanish as s -> 0");
    rep.pass = rep.failures.empty();
    return rep;
}

}  // namespace gammafrac
