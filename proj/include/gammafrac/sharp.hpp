#pragma once

// Explicitly cracked displacements and the sharp energies Φ(u), 𝓕(u,1) and 𝓡(u,f).

#include "gammafrac/domain.hpp"
#include "gammafrac/material.hpp"
#include "gammafrac/potentials.hpp"
#include "gammafrac/quadrature.hpp"
#include "gammafrac/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gammafrac {

/// [u] ⊙ ν = ([u] ⊗ ν + ν ⊗ [u]) / 2.
inline SymMat2 symmetric_tensor_jump(const Vec2& jump, const Vec2& nu) {
    if (std::abs(norm(nu) - 1.0) > 1e-12) throw Error(ErrorKind::Input, "normal must be a unit vector");
    return {jump.x * nu.x, jump.y * nu.y, 0.5 * (jump.x * nu.y + jump.y * nu.x)};
}

/// Closed straight segment with a fixed unit normal; arclength s runs from a to b.
struct CrackSegment {
    Point a, b;
    Vec2 nu;

    static CrackSegment make(const Point& a, const Point& b, const Vec2& nu) {
        const double len = norm(b - a);
        if (!(len > 0.0)) throw Error(ErrorKind::Input, "crack segment has zero length");
        if (std::abs(norm(nu) - 1.0) > 1e-12) throw Error(ErrorKind::Input, "segment normal must be a unit vector");
        if (std::abs(dot(nu, b - a)) > 1e-12 * len) throw Error(ErrorKind::Input, "segment normal is not orthogonal");
        return {a, b, nu};
    }

    /// Normal pointing to the left of a -> b.
    static CrackSegment make(const Point& a, const Point& b) {
        const Vec2 t = (b - a) / norm(b - a);
        return make(a, b, perp(t));
    }

    double length() const { return norm(b - a); }
    Vec2 tangent() const { return (b - a) / length(); }
    Point at(double s) const { return a + s * tangent(); }
    /// Unclamped tangential coordinate of x.
    double along(const Point& x) const { return dot(x - a, tangent()); }
    /// Signed normal coordinate of x.
    double across(const Point& x) const { return dot(x - a, nu); }
    double distance(const Point& x) const {
        const double s = std::clamp(along(x), 0.0, length());
        return norm(x - at(s));
    }
};

namespace detail {

inline double segment_segment_distance(const CrackSegment& p, const CrackSegment& q) {
    auto intersect = [](const CrackSegment& s1, const CrackSegment& s2) {
        const Vec2 d1 = s1.b - s1.a, d2 = s2.b - s2.a;
        const double den = cross(d1, d2);
        if (den == 0.0) return false;
        const double t = cross(s2.a - s1.a, d2) / den;
        const double u = cross(s2.a - s1.a, d1) / den;
        return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
    };
    if (intersect(p, q)) return 0.0;
    return std::min({p.distance(q.a), p.distance(q.b), q.distance(p.a), q.distance(p.b)});
}

/// True when the open stencil [x0, x1] crosses or touches segment s.
inline bool stencil_crosses(const Point& x0, const Point& x1, const CrackSegment& s) {
    const Vec2 d = x1 - x0, e = s.b - s.a;
    const double den = cross(d, e);
    if (den == 0.0) return std::abs(cross(s.a - x0, d)) <= 1e-300 && s.distance(x0) <= norm(d);
    const double t = cross(s.a - x0, e) / den;
    const double u = cross(s.a - x0, d) / den;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

}  // namespace detail

using VectorField = std::function<Vec2(const Point&)>;
using GradientField = std::function<Mat2(const Point&)>;

/// Piecewise-smooth displacement with an explicit jump set made of disjoint straight segments.
class CrackedDisplacement {
public:
    CrackedDisplacement() = default;

    CrackedDisplacement(Rect domain, std::vector<CrackSegment> segments, VectorField value, GradientField gradient = {})
        : domain_(domain), segments_(std::move(segments)), value_(std::move(value)), gradient_(std::move(gradient)) {
        for (std::size_t i = 0; i < segments_.size(); ++i)
            for (std::size_t j = i + 1; j < segments_.size(); ++j)
                if (!(detail::segment_segment_distance(segments_[i], segments_[j]) > 0.0))
                    throw Error(ErrorKind::Input, "crack segments must be pairwise disjoint");
        plus_.resize(segments_.size());
        minus_.resize(segments_.size());
    }

    const Rect& domain() const { return domain_; }
    const std::vector<CrackSegment>& segments() const { return segments_; }

    /// Overrides the one-sided traces of segment i (functions of arclength).
    void set_traces(std::size_t i, std::function<Vec2(double)> plus, std::function<Vec2(double)> minus) {
        plus_.at(i) = std::move(plus);
        minus_.at(i) = std::move(minus);
    }

    Vec2 operator()(const Point& x) const { return value_(x); }

    /// Analytic gradient if supplied, otherwise second-order differences whose stencil never crosses S.
    Mat2 gradient(const Point& x) const {
        if (gradient_) return gradient_(x);
        const double h = 1e-6 * (1.0 + std::max(std::abs(x.x), std::abs(x.y)));
        Mat2 g;
        const Vec2 dirs[2] = {{1.0, 0.0}, {0.0, 1.0}};
        for (int j = 0; j < 2; ++j) {
            const Vec2 e = dirs[j];
            Vec2 col;
            if (!blocked(x - h * e, x + h * e)) {
                col = (value_(x + h * e) - value_(x - h * e)) / (2.0 * h);
            } else if (!blocked(x, x + 2.0 * h * e)) {
                col = (-3.0 * value_(x) + 4.0 * value_(x + h * e) - value_(x + 2.0 * h * e)) / (2.0 * h);
            } else {
                col = (3.0 * value_(x) - 4.0 * value_(x - h * e) + value_(x - 2.0 * h * e)) / (2.0 * h);
            }
            g(0, j) = col.x;
            g(1, j) = col.y;
        }
        return g;
    }

    SymMat2 strain(const Point& x) const { return sym(gradient(x)); }

    /// u^± at arclength s of segment i (the + side is the side ν points to).
    Vec2 trace_plus(std::size_t i, double s) const {
        if (plus_[i]) return plus_[i](s);
        return one_sided(segments_[i].at(s), segments_[i].nu);
    }
    Vec2 trace_minus(std::size_t i, double s) const {
        if (minus_[i]) return minus_[i](s);
        return one_sided(segments_[i].at(s), -segments_[i].nu);
    }
    Vec2 jump(std::size_t i, double s) const { return trace_plus(i, s) - trace_minus(i, s); }

    /// Sup norm sampled on a 257 x 257 lattice plus both traces of every segment.
    double linf(int n = 256) const {
        double m = 0.0;
        auto upd = [&](const Vec2& u) { m = std::max({m, std::abs(u.x), std::abs(u.y)}); };
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j)
                upd(value_({domain_.x0 + domain_.width() * i / n, domain_.y0 + domain_.height() * j / n}));
        for (std::size_t k = 0; k < segments_.size(); ++k)
            for (int i = 0; i <= 64; ++i) {
                const double s = segments_[k].length() * i / 64.0;
                upd(trace_plus(k, s));
                upd(trace_minus(k, s));
            }
        return m;
    }

    /// Swap u^+ and u^- of segment i while flipping ν.
    CrackedDisplacement flipped(std::size_t i) const {
        CrackedDisplacement c = *this;
        CrackSegment& s = c.segments_.at(i);
        s.nu = -s.nu;
        std::swap(c.plus_[i], c.minus_[i]);
        return c;
    }

private:
    bool blocked(const Point& x0, const Point& x1) const {
        for (const auto& s : segments_)
            if (detail::stencil_crosses(x0, x1, s)) return true;
        return false;
    }

    /// Limit from direction n, extrapolated from two offsets.
    Vec2 one_sided(const Point& z, const Vec2& n) const {
        const double h = 1e-7 * (1.0 + std::max(std::abs(z.x), std::abs(z.y)));
        return 2.0 * value_(z + h * n) - value_(z + 2.0 * h * n);
    }

    Rect domain_;
    std::vector<CrackSegment> segments_;
    VectorField value_ = [](const Point&) { return Vec2{}; };
    GradientField gradient_;
    std::vector<std::function<Vec2(double)>> plus_, minus_;
};

struct BulkQuadratureOptions {
    double cell = 1.0 / 32.0;  // background cell size
    int order = 3;             // Gauss points per direction
    int max_levels = 12;
    double rel_tol = 1e-8;
};

/// ∫_Ω g(x, ∇u(x)) on a background grid; cells cut by S are split into convex pieces along the segment
/// lines, and cells holding a segment tip are refined until the total moves by less than rel_tol.
template <class G>
double integrate_bulk(const CrackedDisplacement& u, G&& g, const BulkQuadratureOptions& opt = {}) {
    const Rect& dom = u.domain();
    const int nx = std::max(1, static_cast<int>(std::ceil(dom.width() / opt.cell - 1e-9)));
    const int ny = std::max(1, static_cast<int>(std::ceil(dom.height() / opt.cell - 1e-9)));
    const double hx = dom.width() / nx, hy = dom.height() / ny;
    const auto& segs = u.segments();
    auto f = [&](const Point& x) { return g(x, u.gradient(x)); };

    auto cut_pieces = [&](const Rect& c) {
        std::vector<Polygon> pieces{rect_polygon(c)};
        const double tol = 1e-12 * std::max(c.width(), c.height());
        for (const auto& s : segs) {
            if (s.distance({0.5 * (c.x0 + c.x1), 0.5 * (c.y0 + c.y1)}) > 0.75 * std::hypot(c.width(), c.height()))
                continue;
            const Polygon cell = rect_polygon(c);
            // Only split if the segment enters the open cell.
            bool enters = false;
            const Polygon clipped = clip_halfplane(clip_halfplane(cell, s.a, s.tangent()), s.b, -s.tangent());
            for (const auto& p : clipped)
                if (std::abs(s.across(p)) > tol) {
                    enters = true;
                    break;
                }
            if (!enters) continue;
            double lo = 0.0, hi = 0.0;
            for (const auto& p : clipped) {
                lo = std::min(lo, s.across(p));
                hi = std::max(hi, s.across(p));
            }
            if (!(lo < -tol && hi > tol)) continue;
            std::vector<Polygon> next;
            for (const auto& poly : pieces) {
                Polygon pos = clip_halfplane(poly, s.a, s.nu);
                Polygon neg = clip_halfplane(poly, s.a, -s.nu);
                if (pos.size() >= 3 && polygon_area(pos) > 0.0) next.push_back(std::move(pos));
                if (neg.size() >= 3 && polygon_area(neg) > 0.0) next.push_back(std::move(neg));
            }
            pieces = std::move(next);
        }
        return pieces;
    };

    auto simple_cell = [&](const Rect& c) {
        const auto pieces = cut_pieces(c);
        if (pieces.size() == 1) return integrate_rect(f, c, opt.order);
        double s = 0.0;
        for (const auto& p : pieces) s += integrate_convex_polygon(f, p, opt.order);
        return s;
    };

    auto has_tip = [&](const Rect& c) {
        for (const auto& s : segs)
            for (const Point& e : {s.a, s.b}) {
                const bool on_outer = std::abs(e.x - dom.x0) < 1e-14 || std::abs(e.x - dom.x1) < 1e-14 ||
                                      std::abs(e.y - dom.y0) < 1e-14 || std::abs(e.y - dom.y1) < 1e-14;
                if (!on_outer && c.contains(e)) return true;
            }
        return false;
    };

    std::function<double(const Rect&, int)> tip_cell = [&](const Rect& c, int depth) -> double {
        if (depth == 0 || !has_tip(c)) return simple_cell(c);
        const double mx = 0.5 * (c.x0 + c.x1), my = 0.5 * (c.y0 + c.y1);
        return tip_cell({c.x0, c.y0, mx, my}, depth - 1) + tip_cell({mx, c.y0, c.x1, my}, depth - 1) +
               tip_cell({c.x0, my, mx, c.y1}, depth - 1) + tip_cell({mx, my, c.x1, c.y1}, depth - 1);
    };

    double regular = 0.0;
    std::vector<Rect> tips;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const Rect c{dom.x0 + i * hx, dom.y0 + j * hy, i == nx - 1 ? dom.x1 : dom.x0 + (i + 1) * hx,
                         j == ny - 1 ? dom.y1 : dom.y0 + (j + 1) * hy};
            if (has_tip(c))
                tips.push_back(c);
            else
                regular += simple_cell(c);
        }
    if (tips.empty()) return regular;

    double prev = 0.0;
    for (const auto& c : tips) prev += tip_cell(c, 0);
    for (int level = 1; level <= opt.max_levels; ++level) {
        double cur = 0.0;
        for (const auto& c : tips) cur += tip_cell(c, level);
        if (std::abs(cur - prev) <= opt.rel_tol * (1.0 + std::abs(regular + cur))) return regular + cur;
        if (level == opt.max_levels)
            throw Error(ErrorKind::Accuracy, "bulk quadrature near crack tips did not converge: last estimates " +
                                                 std::to_string(regular + prev) + ", " + std::to_string(regular + cur));
        prev = cur;
    }
    return regular + prev;
}

struct SharpEnergyBreakdown {
    double bulk_elastic = 0.0;
    double bulk_potential = 0.0;
    double surface_a = 0.0;
    double surface_b = 0.0;
    double surface_Finf = 0.0;
    double boundary_R = 0.0;
    double total = 0.0;

    void sum() { total = bulk_elastic + bulk_potential + surface_a + surface_b + surface_Finf + boundary_R; }
};

struct SharpOptions {
    BulkQuadratureOptions bulk;
    int surface_pieces = 4;  // 16-point Gauss on each of this many sub-intervals per segment
};

/// Surface density a √(𝔸 J⊙ν · J⊙ν).
inline double surface_a_density(const ElasticTensor& a, const SymMat2& jn) { return std::sqrt(a.density(jn)); }

/// Φ(u) split into its parts; the bulk part uses the potential at v = 1, i.e. this is 𝓕(u, 1).
inline SharpEnergyBreakdown evaluate_phi(const CrackedDisplacement& u, const ElasticTensor& a, const DamageLaw& law,
                                         const PotentialSpec& f, const SharpOptions& opt = {}) {
    SharpEnergyBreakdown out;
    const Coefficients c = coefficients(law);
    out.bulk_elastic = integrate_bulk(
        u, [&](const Point&, const Mat2& g) { return a.density(sym(g)); }, opt.bulk);
    if (!f.zero)
        out.bulk_potential = integrate_bulk(
            u, [&](const Point& x, const Mat2& g) { return f(x, sym(g), 1.0); }, opt.bulk);
    for (std::size_t i = 0; i < u.segments().size(); ++i) {
        const CrackSegment& s = u.segments()[i];
        out.surface_a += c.a * integrate_composite(
                                   [&](double t) {
                                       return surface_a_density(a, symmetric_tensor_jump(u.jump(i, t), s.nu));
                                   },
                                   0.0, s.length(), opt.surface_pieces, 16);
        out.surface_b += c.b * s.length();
        if (!f.zero)
            out.surface_Finf += integrate_composite(
                [&](double t) { return f.recession(s.at(t), symmetric_tensor_jump(u.jump(i, t), s.nu)); }, 0.0,
                s.length(), opt.surface_pieces, 16);
    }
    out.sum();
    return out;
}

struct BoundaryRelaxation {
    double surface_a = 0.0;
    double surface_b = 0.0;
    double surface_Finf = 0.0;
    double mismatch_length = 0.0;
    double total = 0.0;
};

struct BoundaryQuadratureOptions {
    int pieces = 16;          // sub-intervals per boundary piece
    double mismatch_tol = 1e-9;
};

/// 𝓡(u, f) over ∂Ω with outward normal ν. The jump is taken as the recovery sees it, with f on the
/// outer (+) side: (f - tr u) ⊙ ν. The set {tr u ≠ f} is resolved by bisection of the indicator.
inline BoundaryRelaxation evaluate_R(const CrackedDisplacement& u, const VectorField& f, const SmoothDomain& omega,
                                     const ElasticTensor& a, const DamageLaw& law, const PotentialSpec& pot,
                                     const BoundaryQuadratureOptions& opt = {}) {
    BoundaryRelaxation r;
    const Coefficients c = coefficients(law);
    for (const BoundaryPiece& piece : omega.boundary()) {
        auto jump_at = [&](double s) {
            const Point p = piece.point(s);
            return f(p) - u(p);
        };
        auto mismatched = [&](double s) { return norm(jump_at(s)) > opt.mismatch_tol; };
        const double len = piece.length();
        r.surface_a += c.a * integrate_adaptive(
                                 [&](double s) {
                                     return surface_a_density(a, symmetric_tensor_jump(jump_at(s), piece.normal(s)));
                                 },
                                 0.0, len, opt.pieces);
        if (!pot.zero)
            r.surface_Finf += integrate_adaptive(
                [&](double s) {
                    return pot.recession(piece.point(s), symmetric_tensor_jump(jump_at(s), piece.normal(s)));
                },
                0.0, len, opt.pieces);

        // Length of {tr u ≠ f}: sample, then bisect every indicator switch.
        constexpr int per = 16;
        const int n = opt.pieces * per;
        double measure = 0.0;
        double prev_s = 0.0;
        bool prev_in = mismatched(0.0);
        for (int k = 1; k <= n; ++k) {
            const double s = len * k / n;
            const bool in = mismatched(s);
            if (in == prev_in) {
                if (in) measure += s - prev_s;
            } else {
                double lo = prev_s, hi = s;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (mismatched(mid) == prev_in ? lo : hi) = mid;
                }
                const double cut = 0.5 * (lo + hi);
                measure += prev_in ? cut - prev_s : s - cut;
            }
            prev_s = s;
            prev_in = in;
        }
        r.mismatch_length += measure;
    }
    r.surface_b = c.b * r.mismatch_length;
    r.total = r.surface_a + r.surface_b + r.surface_Finf;
    return r;
}

inline BoundaryRelaxation evaluate_R(const CrackedDisplacement& u, const VectorField& f, const ElasticTensor& a,
                                     const DamageLaw& law, const PotentialSpec& pot) {
    return evaluate_R(u, f, SmoothDomain::rectangle(u.domain()), a, law, pot);
}

/// 𝓕(u, 1) + 𝓡(u, f); the boundary term is omitted when no datum is given.
inline SharpEnergyBreakdown sharp_total(const CrackedDisplacement& u, const std::optional<VectorField>& f,
                                        const SmoothDomain& omega, const ElasticTensor& a, const DamageLaw& law,
                                        const PotentialSpec& pot, const SharpOptions& opt = {}) {
    SharpEnergyBreakdown b = evaluate_phi(u, a, law, pot, opt);
    if (f) b.boundary_R = evaluate_R(u, *f, omega, a, law, pot).total;
    b.sum();
    return b;
}

inline SharpEnergyBreakdown sharp_total(const CrackedDisplacement& u, const std::optional<VectorField>& f,
                                        const ElasticTensor& a, const DamageLaw& law, const PotentialSpec& pot) {
    return sharp_total(u, f, SmoothDomain::rectangle(u.domain()), a, law, pot);
}

}  // namespace gammafrac
