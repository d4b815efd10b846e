#pragma once

// Gauss rules on intervals, rectangles, triangles (Duffy collapse) and convex polygons.

#include "gammafrac/types.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <vector>

namespace gammafrac {

struct Rule1D {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

namespace detail {

template <unsigned N>
Rule1D expand_boost_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    Rule1D r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(w[i]);
        } else {
            r.x.push_back(-a[i]);
            r.w.push_back(w[i]);
            r.x.push_back(a[i]);
            r.w.push_back(w[i]);
        }
    }
    return r;
}

}  // namespace detail

/// Gauss-Legendre rule with n points; n ∈ {1, 2, 3, 4, 5, 8, 16, 32}.
inline const Rule1D& gauss_legendre(int n) {
    static const Rule1D g1{{0.0}, {2.0}};
    static const Rule1D g2 = detail::expand_boost_rule<2>();
    static const Rule1D g3 = detail::expand_boost_rule<3>();
    static const Rule1D g4 = detail::expand_boost_rule<4>();
    static const Rule1D g5 = detail::expand_boost_rule<5>();
    static const Rule1D g8 = detail::expand_boost_rule<8>();
    static const Rule1D g16 = detail::expand_boost_rule<16>();
    static const Rule1D g32 = detail::expand_boost_rule<32>();
    switch (n) {
    case 1: return g1;
    case 2: return g2;
    case 3: return g3;
    case 4: return g4;
    case 5: return g5;
    case 8: return g8;
    case 16: return g16;
    case 32: return g32;
    default: throw Error(ErrorKind::Input, "unsupported Gauss-Legendre order " + std::to_string(n));
    }
}

/// ∫_a^b f with an n-point Gauss rule.
template <class F>
double integrate_interval(F&& f, double a, double b, int n) {
    const Rule1D& g = gauss_legendre(n);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * f(mid + half * g.x[i]);
    return half * s;
}

/// Composite rule: [a, b] split into m equal pieces, n points each.
template <class F>
double integrate_composite(F&& f, double a, double b, int m, int n) {
    double s = 0.0;
    const double step = (b - a) / m;
    for (int k = 0; k < m; ++k) s += integrate_interval(f, a + k * step, a + (k + 1) * step, n);
    return s;
}

/// Adaptive 15-point Gauss-Kronrod on each of m pieces; resolves kinks that fall inside a piece.
template <class F>
double integrate_adaptive(F&& f, double a, double b, int m, double tol = 1e-13, unsigned depth = 20) {
    double s = 0.0;
    const double step = (b - a) / m;
    for (int k = 0; k < m; ++k)
        s += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a + k * step, a + (k + 1) * step,
                                                                           depth, tol);
    return s;
}

/// Tensor Gauss rule on an axis-aligned rectangle; f takes a Point.
template <class F>
double integrate_rect(F&& f, const Rect& r, int n) {
    const Rule1D& g = gauss_legendre(n);
    const double hx = 0.5 * r.width(), hy = 0.5 * r.height();
    const double cx = 0.5 * (r.x0 + r.x1), cy = 0.5 * (r.y0 + r.y1);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (std::size_t j = 0; j < g.x.size(); ++j) s += g.w[i] * g.w[j] * f(Point{cx + hx * g.x[i], cy + hy * g.x[j]});
    return hx * hy * s;
}

/// Triangle rule by collapsing the unit square onto (a, b, c).
template <class F>
double integrate_triangle(F&& f, const Point& a, const Point& b, const Point& c, int n) {
    const double area2 = std::abs(cross(b - a, c - a));
    if (area2 == 0.0) return 0.0;
    const Rule1D& g = gauss_legendre(n);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double xi = 0.5 * (g.x[i] + 1.0);
        for (std::size_t j = 0; j < g.x.size(); ++j) {
            const double eta = 0.5 * (g.x[j] + 1.0);
            // (xi, eta) -> barycentric (1 - xi, xi (1 - eta), xi eta), Jacobian xi.
            const Point p = (1.0 - xi) * a + xi * (1.0 - eta) * b + xi * eta * c;
            s += 0.25 * g.w[i] * g.w[j] * xi * f(p);
        }
    }
    return area2 * s;
}

using Polygon = std::vector<Point>;

/// Part of a convex polygon with dot(n, p - o) >= 0.
inline Polygon clip_halfplane(const Polygon& poly, const Point& o, const Vec2& n) {
    Polygon out;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % m];
        const double dp = dot(n, p - o), dq = dot(n, q - o);
        if (dp >= 0.0) out.push_back(p);
        if ((dp >= 0.0) != (dq >= 0.0)) {
            const double t = dp / (dp - dq);
            out.push_back(p + t * (q - p));
        }
    }
    return out;
}

inline double polygon_area(const Polygon& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) s += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * std::abs(s);
}

/// Fan triangulation of a convex polygon from its first vertex.
template <class F>
double integrate_convex_polygon(F&& f, const Polygon& poly, int n) {
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) s += integrate_triangle(f, poly[0], poly[i], poly[i + 1], n);
    return s;
}

inline Polygon rect_polygon(const Rect& r) { return {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}}; }

}  // namespace gammafrac
