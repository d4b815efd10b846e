#pragma once

// Planar domains with closed-form signed distance and boundary projection, and the boundary-layer
// diffeomorphism that pushes ∂Ω outward by εL.

#include "gammafrac/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace gammafrac {

/// One C^1 piece of ∂Ω: a straight edge or a circular arc, parametrised by arclength σ ∈ [0, length],
/// traversed counter-clockwise so the outward normal is the tangent rotated by -90°.
struct BoundaryPiece {
    bool arc = false;
    Point a, b;              // edge endpoints
    Point center;            // arc centre
    double radius = 0.0;
    double angle0 = 0.0;     // arc start angle

    double length() const { return arc ? radius * 0.5 * std::numbers::pi : norm(b - a); }
    Point point(double s) const {
        if (!arc) return a + (s / length()) * (b - a);
        const double t = angle0 + s / radius;
        return center + radius * Vec2{std::cos(t), std::sin(t)};
    }
    Vec2 tangent(double s) const {
        if (!arc) return (b - a) / length();
        const double t = angle0 + s / radius;
        return {-std::sin(t), std::cos(t)};
    }
    Vec2 normal(double s) const {
        const Vec2 t = tangent(s);
        return {t.y, -t.x};
    }
    double curvature() const { return arc ? 1.0 / radius : 0.0; }
};

class SmoothDomain {
public:
    enum class Kind { Rectangle, RoundedRect, Disk };

    static SmoothDomain rectangle(const Rect& r) { return SmoothDomain(Kind::Rectangle, r, 0.0); }

    static SmoothDomain rounded_rect(const Rect& r, double radius) {
        if (!(radius > 0.0) || 2.0 * radius > std::min(r.width(), r.height()))
            throw Error(ErrorKind::UnsupportedDomain, "corner radius must be in (0, min(width, height)/2]");
        return SmoothDomain(Kind::RoundedRect, r, radius);
    }

    static SmoothDomain disk(const Point& c, double radius) {
        if (!(radius > 0.0)) throw Error(ErrorKind::UnsupportedDomain, "disk radius must be positive");
        return SmoothDomain(Kind::Disk, Rect{c.x - radius, c.y - radius, c.x + radius, c.y + radius}, radius);
    }

    Kind kind() const { return kind_; }
    const Rect& box() const { return box_; }
    double radius() const { return r_; }
    bool is_c1() const { return kind_ != Kind::Rectangle; }
    Point center() const { return {0.5 * (box_.x0 + box_.x1), 0.5 * (box_.y0 + box_.y1)}; }

    double area() const {
        switch (kind_) {
        case Kind::Rectangle: return box_.area();
        case Kind::RoundedRect: return box_.area() - (4.0 - std::numbers::pi) * r_ * r_;
        case Kind::Disk: return std::numbers::pi * r_ * r_;
        }
        return 0.0;
    }

    /// Signed distance, negative inside.
    double signed_distance(const Point& x) const {
        const Vec2 p = x - center();
        if (kind_ == Kind::Disk) return norm(p) - r_;
        const double rr = kind_ == Kind::RoundedRect ? r_ : 0.0;
        const Vec2 q{std::abs(p.x) - (0.5 * box_.width() - rr), std::abs(p.y) - (0.5 * box_.height() - rr)};
        const Vec2 qp{std::max(q.x, 0.0), std::max(q.y, 0.0)};
        return norm(qp) + std::min(std::max(q.x, q.y), 0.0) - rr;
    }

    bool contains(const Point& x, double tol = 0.0) const { return signed_distance(x) <= tol; }

    /// Outward unit normal of the nearest boundary point (gradient of the signed distance).
    Vec2 normal_of(const Point& x) const {
        const Vec2 p = x - center();
        if (kind_ == Kind::Disk) {
            const double n = norm(p);
            return n > 0.0 ? p / n : Vec2{1.0, 0.0};
        }
        const double rr = kind_ == Kind::RoundedRect ? r_ : 0.0;
        const Vec2 q{std::abs(p.x) - (0.5 * box_.width() - rr), std::abs(p.y) - (0.5 * box_.height() - rr)};
        const double sx = p.x >= 0.0 ? 1.0 : -1.0, sy = p.y >= 0.0 ? 1.0 : -1.0;
        if (q.x > 0.0 && q.y > 0.0) {
            const double n = norm(q);
            return {sx * q.x / n, sy * q.y / n};
        }
        return q.x >= q.y ? Vec2{sx, 0.0} : Vec2{0.0, sy};
    }

    /// Nearest boundary point; a point already on ∂Ω (|dist| <= 1e-14) is returned unchanged.
    Point project(const Point& x) const {
        const double d = signed_distance(x);
        if (std::abs(d) <= 1e-14) return x;
        return x - d * normal_of(x);
    }

    /// Curvature of ∂Ω at the projection of x.
    double curvature_of(const Point& x) const {
        if (kind_ == Kind::Disk) return 1.0 / r_;
        if (kind_ == Kind::Rectangle) return 0.0;
        const Vec2 p = x - center();
        const Vec2 q{std::abs(p.x) - (0.5 * box_.width() - r_), std::abs(p.y) - (0.5 * box_.height() - r_)};
        return (q.x > 0.0 && q.y > 0.0) ? 1.0 / r_ : 0.0;
    }

    /// Counter-clockwise boundary pieces starting on the bottom edge.
    std::vector<BoundaryPiece> boundary() const {
        std::vector<BoundaryPiece> out;
        if (kind_ == Kind::Disk) {
            for (int k = 0; k < 4; ++k) {
                BoundaryPiece p;
                p.arc = true;
                p.center = center();
                p.radius = r_;
                p.angle0 = -0.5 * std::numbers::pi + 0.5 * std::numbers::pi * k;
                out.push_back(p);
            }
            return out;
        }
        const double rr = kind_ == Kind::RoundedRect ? r_ : 0.0;
        const Rect& b = box_;
        auto edge = [&](Point a, Point c) {
            BoundaryPiece p;
            p.a = a;
            p.b = c;
            out.push_back(p);
        };
        auto corner = [&](Point c, double angle0) {
            if (rr == 0.0) return;
            BoundaryPiece p;
            p.arc = true;
            p.center = c;
            p.radius = rr;
            p.angle0 = angle0;
            out.push_back(p);
        };
        const double h = 0.5 * std::numbers::pi;
        edge({b.x0 + rr, b.y0}, {b.x1 - rr, b.y0});
        corner({b.x1 - rr, b.y0 + rr}, -h);
        edge({b.x1, b.y0 + rr}, {b.x1, b.y1 - rr});
        corner({b.x1 - rr, b.y1 - rr}, 0.0);
        edge({b.x1 - rr, b.y1}, {b.x0 + rr, b.y1});
        corner({b.x0 + rr, b.y1 - rr}, h);
        edge({b.x0, b.y1 - rr}, {b.x0, b.y0 + rr});
        corner({b.x0 + rr, b.y0 + rr}, 2.0 * h);
        return out;
    }

    /// Largest δ for which the inner δ-strip has a unique nearest-point projection.
    double max_strip_width() const {
        if (kind_ == Kind::Disk) return r_;
        if (kind_ == Kind::RoundedRect) return r_;
        return 0.0;
    }

private:
    SmoothDomain(Kind k, const Rect& b, double r) : kind_(k), box_(b), r_(r) {}

    Kind kind_;
    Rect box_;
    double r_;
};

/// Φ_ε(x) = x + ν(P(x)) ((δ + dist(x)) / δ) εL on the inner δ-strip, identity deeper inside.
/// Points are handled in (P(x), dist) coordinates, so the normal line through x is preserved.
class BoundaryDiffeomorphism {
public:
    BoundaryDiffeomorphism(SmoothDomain omega, double eps, double ell, double delta)
        : omega_(std::move(omega)), eps_(eps), ell_(ell), delta_(delta) {
        if (!omega_.is_c1()) throw Error(ErrorKind::UnsupportedDomain, "boundary diffeomorphism needs a C^1 domain");
        if (!(eps > 0.0) || !(ell > 0.0) || !(delta > 0.0)) throw Error(ErrorKind::Input, "eps, L, delta must be positive");
        if (!(eps * ell < delta)) throw Error(ErrorKind::Input, "need eps*L < delta");
        if (!(delta < omega_.max_strip_width()))
            throw Error(ErrorKind::Input, "delta must be smaller than the corner radius");
    }

    const SmoothDomain& domain() const { return omega_; }
    double eps() const { return eps_; }
    double ell() const { return ell_; }
    double delta() const { return delta_; }
    double shift() const { return eps_ * ell_; }

    /// Image of the signed distance: d ↦ d + (δ + d) εL / δ on [-δ, 0].
    double forward_distance(double d) const { return d < -delta_ ? d : d + (delta_ + d) * shift() / delta_; }
    double inverse_distance(double d) const {
        return d < -delta_ ? d : (delta_ + d) * delta_ / (delta_ + shift()) - delta_;
    }

    Point forward(const Point& x) const {
        const double d = omega_.signed_distance(x);
        if (d < -delta_) return x;
        return x + ((delta_ + d) / delta_ * shift()) * omega_.normal_of(x);
    }

    Point inverse(const Point& y) const {
        const double d = omega_.signed_distance(y);
        if (d < -delta_) return y;
        return y - ((delta_ + d) * shift() / (delta_ + shift())) * omega_.normal_of(y);
    }

    /// ∇Φ_ε in closed form: normal stretch 1 + εL/δ and tangential stretch (1 + k d') / (1 + k d).
    Mat2 jacobian(const Point& x) const {
        const double d = omega_.signed_distance(x);
        if (d < -delta_) return Mat2::identity();
        const Vec2 n = omega_.normal_of(x);
        const Vec2 t = perp(n);
        const double k = omega_.curvature_of(x);
        const double dn = 1.0 + shift() / delta_;
        const double dt = (1.0 + k * forward_distance(d)) / (1.0 + k * d);
        return dn * outer(n, n) + dt * outer(t, t);
    }

    /// Central-difference Jacobian of Φ_ε (forward = true) or Φ_ε^{-1}.
    Mat2 numeric_jacobian(const Point& x, bool fwd, double h = 1e-7) const {
        auto map = [&](const Point& p) { return fwd ? forward(p) : inverse(p); };
        const Vec2 cx = (map(x + Vec2{h, 0.0}) - map(x - Vec2{h, 0.0})) / (2.0 * h);
        const Vec2 cy = (map(x + Vec2{0.0, h}) - map(x - Vec2{0.0, h})) / (2.0 * h);
        return {cx.x, cy.x, cx.y, cy.y};
    }

private:
    SmoothDomain omega_;
    double eps_, ell_, delta_;
};

inline BoundaryDiffeomorphism boundary_diffeomorphism(const SmoothDomain& omega, double eps, double ell, double delta) {
    return {omega, eps, ell, delta};
}

}  // namespace gammafrac
