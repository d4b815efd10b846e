#pragma once

// Recovery sequence (u_ε, v_ε) for an explicitly cracked displacement, its energy and ε-ladders.

#include "gammafrac/material.hpp"
#include "gammafrac/potentials.hpp"
#include "gammafrac/quadrature.hpp"
#include "gammafrac/sharp.hpp"
#include "gammafrac/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace gammafrac {

/// Tube half-width profile θ(s) per segment, as a function of arclength.
class ThetaProfile {
public:
    using Fn = std::function<double(double)>;

    ThetaProfile() = default;

    ThetaProfile(std::vector<Fn> fns, std::vector<double> lengths) : fns_(std::move(fns)), len_(std::move(lengths)) {
        if (fns_.size() != len_.size()) throw Error(ErrorKind::Input, "theta profile size mismatch");
        constexpr int n = 2048;
        for (std::size_t i = 0; i < fns_.size(); ++i) {
            double sup = 0.0, lip = 0.0;
            double prev = fns_[i](0.0);
            for (int k = 0; k <= n; ++k) {
                const double s = len_[i] * k / n;
                const double th = fns_[i](s);
                if (th < 0.0 || !std::isfinite(th)) throw Error(ErrorKind::Input, "theta must be finite and >= 0");
                sup = std::max(sup, th);
                if (k > 0) lip = std::max(lip, std::abs(th - prev) / (len_[i] / n));
                prev = th;
            }
            sup_.push_back(sup);
            lip_.push_back(lip);
        }
    }

    static ThetaProfile constant(const std::vector<CrackSegment>& segs, double value) {
        std::vector<Fn> f;
        std::vector<double> l;
        for (const auto& s : segs) {
            f.push_back([value](double) { return value; });
            l.push_back(s.length());
        }
        return {f, l};
    }

    std::size_t size() const { return fns_.size(); }
    double length(std::size_t i) const { return len_[i]; }
    double operator()(std::size_t i, double s) const { return fns_[i](std::clamp(s, 0.0, len_[i])); }

    /// Difference quotient, one-sided near the ends.
    double derivative(std::size_t i, double s) const {
        const double h = 1e-7 * len_[i];
        const double lo = std::max(0.0, s - h), hi = std::min(len_[i], s + h);
        return (fns_[i](hi) - fns_[i](lo)) / (hi - lo);
    }

    double sup(std::size_t i) const { return sup_[i]; }
    double lip(std::size_t i) const { return lip_[i]; }
    double sup_all() const { return sup_.empty() ? 0.0 : *std::max_element(sup_.begin(), sup_.end()); }
    double lip_all() const { return lip_.empty() ? 0.0 : *std::max_element(lip_.begin(), lip_.end()); }

    ThetaProfile scaled(double k) const {
        std::vector<Fn> f;
        for (const auto& g : fns_) f.push_back([g, k](double s) { return k * g(s); });
        return {f, len_};
    }

private:
    std::vector<Fn> fns_;
    std::vector<double> len_;
    std::vector<double> sup_, lip_;
};

/// θ̄(s) = √α / (2√ψ(0)) · √(𝔸([u]⊙ν)·([u]⊙ν)).
inline ThetaProfile optimal_theta(const CrackedDisplacement& u, const ElasticTensor& a, const DamageLaw& law) {
    if (!(law.psi0() > 0.0)) throw Error(ErrorKind::DegenerateDamage, "optimal theta needs psi(0) > 0");
    const double k = std::sqrt(law.alpha()) / (2.0 * std::sqrt(law.psi0()));
    std::vector<ThetaProfile::Fn> f;
    std::vector<double> l;
    for (std::size_t i = 0; i < u.segments().size(); ++i) {
        const Vec2 nu = u.segments()[i].nu;
        f.push_back([u, a, k, i, nu](double s) { return k * std::sqrt(a.density(symmetric_tensor_jump(u.jump(i, s), nu))); });
        l.push_back(u.segments()[i].length());
    }
    return {f, l};
}

/// C_ε = sup √(1 + ε² θ'²).
inline double slope_factor(const ThetaProfile& th, double eps) {
    const double l = th.lip_all();
    return std::sqrt(1.0 + eps * eps * l * l);
}

namespace detail {

/// Distance from p along unit direction d to the boundary of r (p inside).
inline double ray_to_rect(const Point& p, const Vec2& d, const Rect& r) {
    double t = std::numeric_limits<double>::infinity();
    if (d.x > 0.0) t = std::min(t, (r.x1 - p.x) / d.x);
    if (d.x < 0.0) t = std::min(t, (r.x0 - p.x) / d.x);
    if (d.y > 0.0) t = std::min(t, (r.y1 - p.y) / d.y);
    if (d.y < 0.0) t = std::min(t, (r.y0 - p.y) / d.y);
    return std::max(t, 0.0);
}

}  // namespace detail

/// Largest ε for which the stadiums {dist < (θ + C)ε} are pairwise disjoint and every normal segment
/// of the tube stays inside the domain rectangle.
inline double eps_max(const CrackedDisplacement& u, const ThetaProfile& th, double c_eps) {
    double e = std::numeric_limits<double>::infinity();
    const auto& segs = u.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        for (std::size_t j = i + 1; j < segs.size(); ++j)
            e = std::min(e, detail::segment_segment_distance(segs[i], segs[j]) / (th.sup(i) + th.sup(j) + 2.0 * c_eps));
        constexpr int n = 256;
        for (int k = 0; k <= n; ++k) {
            const double s = segs[i].length() * k / n;
            const Point p = segs[i].at(s);
            const double w = th(i, s) + c_eps;
            e = std::min({e, detail::ray_to_rect(p, segs[i].nu, u.domain()) / w,
                          detail::ray_to_rect(p, -segs[i].nu, u.domain()) / w});
        }
    }
    return e;
}

/// The fields of the recovery sequence. Outside the tubes u_ε = u; across the core of half-width θε
/// u_ε interpolates affinely between u(x̄ ± θε ν); v_ε rises from αε to 1 over a collar of width C_ε ε.
class Recovery {
public:
    struct Local {
        int seg = -1;
        double along = 0.0;  // unclamped tangential coordinate
        double across = 0.0;
        double dist = std::numeric_limits<double>::infinity();
        bool core = false;
    };

    Recovery(CrackedDisplacement u, ThetaProfile theta, double eps, const DamageLaw& law)
        : u_(std::move(u)), theta_(std::move(theta)), law_(law), eps_(eps) {
        if (!(eps > 0.0)) throw Error(ErrorKind::Input, "eps must be positive");
        if (!(law.alpha() * eps < 1.0)) throw Error(ErrorKind::Parameter, "alpha*eps must be < 1");
        if (theta_.size() != u_.segments().size()) throw Error(ErrorKind::Input, "theta profile does not match segments");
        c_ = slope_factor(theta_, eps);
        emax_ = gammafrac::eps_max(u_, theta_, c_);
        if (!(eps < emax_))
            throw Error(ErrorKind::TubeOverlap, "eps = " + std::to_string(eps) + " >= eps_max = " + std::to_string(emax_));
    }

    const CrackedDisplacement& base() const { return u_; }
    const ThetaProfile& theta() const { return theta_; }
    const DamageLaw& law() const { return law_; }
    double eps() const { return eps_; }
    double c_eps() const { return c_; }
    double eps_max() const { return emax_; }
    double v_min() const { return law_.alpha() * eps_; }

    Local locate(const Point& x) const {
        Local best;
        for (std::size_t i = 0; i < u_.segments().size(); ++i) {
            const CrackSegment& s = u_.segments()[i];
            const double d = s.distance(x);
            if (d < best.dist) {
                best.seg = static_cast<int>(i);
                best.dist = d;
                best.along = s.along(x);
                best.across = s.across(x);
            }
        }
        if (best.seg >= 0) {
            const auto i = static_cast<std::size_t>(best.seg);
            const double len = u_.segments()[i].length();
            best.core = best.along > 0.0 && best.along < len && std::abs(best.across) < theta_(i, best.along) * eps_;
        }
        return best;
    }

    double v(const Point& x) const {
        double out = 1.0;
        for (std::size_t i = 0; i < u_.segments().size(); ++i) out = std::min(out, v_segment(i, x));
        return out;
    }

    /// Exact gradient of v_ε (zero where the clamp is active).
    Vec2 grad_v(const Point& x) const {
        double best = 1.0;
        Vec2 g;
        for (std::size_t i = 0; i < u_.segments().size(); ++i) {
            const double vi = v_segment(i, x);
            if (vi >= best) continue;
            best = vi;
            const CrackSegment& s = u_.segments()[i];
            const double ae = v_min();
            const double raw = ae + (1.0 - ae) * (s.distance(x) - theta_(i, s.along(x)) * eps_) / (eps_ * c_);
            if (raw <= ae || raw >= 1.0) {
                g = {};
                continue;
            }
            const double along = s.along(x), len = s.length();
            Vec2 gd;
            Vec2 gth;
            if (along > 0.0 && along < len) {
                gd = s.across(x) >= 0.0 ? s.nu : -s.nu;
                gth = theta_.derivative(i, along) * s.tangent();
            } else {
                const Point e = along <= 0.0 ? s.a : s.b;
                gd = (x - e) / norm(x - e);
            }
            g = ((1.0 - ae) / (eps_ * c_)) * (gd - eps_ * gth);
        }
        return g;
    }

    Vec2 u(const Point& x) const {
        const Local l = locate(x);
        if (!l.core) return u_(x);
        const Core c = core(l);
        return (l.across / (2.0 * c.th * eps_)) * c.jump + c.mid;
    }

    Mat2 grad_u(const Point& x) const {
        const Local l = locate(x);
        if (!l.core) return u_.gradient(x);
        const auto i = static_cast<std::size_t>(l.seg);
        const CrackSegment& s = u_.segments()[i];
        const Core c = core(l);
        const double dth = theta_.derivative(i, l.along);
        const Vec2 tau = s.tangent(), nu = s.nu;
        const Vec2 dp = c.gp * (tau + (eps_ * dth) * nu);  // d/ds u(p+)
        const Vec2 dm = c.gm * (tau - (eps_ * dth) * nu);  // d/ds u(p-)
        const double w = 2.0 * c.th * eps_;
        const Vec2 ds = (l.across / w) * (dp - dm) - (l.across * dth / (2.0 * c.th * c.th * eps_)) * c.jump + 0.5 * (dp + dm);
        const Vec2 dt = c.jump / w;
        return outer(ds, tau) + outer(dt, nu);
    }

    /// Outer half-width (θ + C)ε of the stadium of segment i at arclength s.
    double stadium_halfwidth(std::size_t i, double s) const { return (theta_(i, s) + c_) * eps_; }

private:
    struct Core {
        double th;
        Vec2 jump, mid;
        Mat2 gp, gm;
    };

    Core core(const Local& l) const {
        const auto i = static_cast<std::size_t>(l.seg);
        const CrackSegment& s = u_.segments()[i];
        const double th = theta_(i, l.along);
        const Point xb = s.at(l.along);
        const Point pp = xb + (th * eps_) * s.nu, pm = xb - (th * eps_) * s.nu;
        const Vec2 up = u_(pp), um = u_(pm);
        return {th, up - um, 0.5 * (up + um), u_.gradient(pp), u_.gradient(pm)};
    }

    double v_segment(std::size_t i, const Point& x) const {
        const CrackSegment& s = u_.segments()[i];
        const double ae = v_min();
        const double raw = ae + (1.0 - ae) * (s.distance(x) - theta_(i, s.along(x)) * eps_) / (eps_ * c_);
        return std::clamp(raw, ae, 1.0);
    }

    CrackedDisplacement u_;
    ThetaProfile theta_;
    DamageLaw law_;
    double eps_;
    double c_ = 1.0;
    double emax_ = 0.0;
};

inline Recovery build_recovery(const CrackedDisplacement& u, const ThetaProfile& theta, double eps, const DamageLaw& law) {
    return {u, theta, eps, law};
}

struct EnergyParts {
    double bulk = 0.0;       // ∫ v 𝔸e(u)·e(u)
    double damage = 0.0;     // ∫ ψ(v)/ε
    double potential = 0.0;  // ∫ F(x, e(u), v)
    double W() const { return bulk + damage; }
    double total() const { return bulk + damage + potential; }
};

struct RecoveryQuadrature {
    BulkQuadratureOptions bulk;
    int t_points = 8;           // Gauss points per sub-interval across the tube (4 sub-intervals)
    double s_piece = 0.0;       // max length of a tube piece along the segment; 0 picks min(len/8, 2ε)
    int cap_points = 16;
};

namespace detail {

/// Energy density difference G_ε - G_1 at x, split into bulk / damage / potential.
struct DensityDiff {
    double bulk, damage, potential;
};

inline DensityDiff density_difference(const Recovery& r, const Point& x, const ElasticTensor& a, const PotentialSpec& f) {
    const double v = r.v(x);
    const SymMat2 e = sym(r.grad_u(x));
    const SymMat2 e0 = r.base().strain(x);
    DensityDiff d{v * a.density(e) - a.density(e0), r.law().psi(v) / r.eps(), 0.0};
    if (!f.zero) d.potential = f(x, e, v) - f(x, e0, 1.0);
    return d;
}

}  // namespace detail

/// Integral of g over the tubes and their end caps in tube coordinates (s, t); g returns any type
/// supporting += and scalar *. Points outside the domain rectangle are dropped.
template <class T, class G>
T tube_integral(const Recovery& r, G&& g, const RecoveryQuadrature& q = {}) {
    T out{};
    const Rect& dom = r.base().domain();
    const double eps = r.eps();
    const Rule1D& gt = gauss_legendre(q.t_points);
    const Rule1D& gs = gauss_legendre(16);
    for (std::size_t i = 0; i < r.base().segments().size(); ++i) {
        const CrackSegment& seg = r.base().segments()[i];
        const double len = seg.length();
        const double piece = q.s_piece > 0.0 ? q.s_piece : std::min(len / 8.0, 2.0 * eps);
        const int m = std::max(1, static_cast<int>(std::ceil(len / piece - 1e-9)));
        const Vec2 tau = seg.tangent(), nu = seg.nu;
        for (int k = 0; k < m; ++k) {
            const double s0 = len * k / m, s1 = len * (k + 1) / m;
            for (std::size_t is = 0; is < gs.x.size(); ++is) {
                const double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * gs.x[is];
                const double ws = 0.5 * (s1 - s0) * gs.w[is];
                const double tin = r.theta()(i, s) * eps, tout = r.stadium_halfwidth(i, s);
                const double cuts[5] = {-tout, -tin, 0.0, tin, tout};
                for (int c = 0; c < 4; ++c) {
                    const double t0 = cuts[c], t1 = cuts[c + 1];
                    if (!(t1 > t0)) continue;
                    for (std::size_t it = 0; it < gt.x.size(); ++it) {
                        const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * gt.x[it];
                        const Point x = seg.a + s * tau + t * nu;
                        if (!dom.contains(x)) continue;
                        out += (ws * 0.5 * (t1 - t0) * gt.w[it]) * g(x);
                    }
                }
            }
        }
        // Half-disk caps beyond both endpoints.
        const Rule1D& gc = gauss_legendre(q.cap_points);
        for (int end = 0; end < 2; ++end) {
            const Point e = end == 0 ? seg.a : seg.b;
            const Vec2 out_dir = end == 0 ? -tau : tau;
            const double th = r.theta()(i, end == 0 ? 0.0 : len) * eps;
            const double rad = th + r.c_eps() * eps;
            const double cuts[3] = {0.0, th, rad};
            for (std::size_t ip = 0; ip < gc.x.size(); ++ip) {
                const double phi = 0.5 * std::numbers::pi * gc.x[ip];
                const double wp = 0.5 * std::numbers::pi * gc.w[ip];
                const Vec2 dir = std::cos(phi) * out_dir + std::sin(phi) * nu;
                for (int c = 0; c < 2; ++c) {
                    const double r0 = cuts[c], r1 = cuts[c + 1];
                    if (!(r1 > r0)) continue;
                    for (std::size_t ir = 0; ir < gc.x.size(); ++ir) {
                        const double rr = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * gc.x[ir];
                        const Point x = e + rr * dir;
                        if (!dom.contains(x)) continue;
                        out += (wp * 0.5 * (r1 - r0) * gc.w[ir] * rr) * g(x);
                    }
                }
            }
        }
    }
    return out;
}

namespace detail {

struct Triple {
    double a = 0.0, b = 0.0, c = 0.0;
    Triple& operator+=(const Triple& o) {
        a += o.a;
        b += o.b;
        c += o.c;
        return *this;
    }
    friend Triple operator*(double w, const Triple& t) { return {w * t.a, w * t.b, w * t.c}; }
};

}  // namespace detail

/// Integral of the difference between the regularised and the sharp bulk densities over the tubes.
inline EnergyParts tube_corrections(const Recovery& r, const ElasticTensor& a, const PotentialSpec& f,
                                    const RecoveryQuadrature& q = {}) {
    const auto t = tube_integral<detail::Triple>(
        r,
        [&](const Point& x) {
            const detail::DensityDiff d = detail::density_difference(r, x, a, f);
            return detail::Triple{d.bulk, d.damage, d.potential};
        },
        q);
    return {t.a, t.b, t.c};
}

/// ∫|∇u_ε| and ∫v_ε|∇u_ε|², the quantities kept bounded along a ladder.
struct GradientBounds {
    double l1 = 0.0;
    double weighted_l2 = 0.0;
};

inline GradientBounds gradient_bounds(const Recovery& r, const RecoveryQuadrature& q = {}) {
    auto fro = [](const Mat2& m) { return m.norm(); };
    const auto t = tube_integral<detail::Triple>(
        r,
        [&](const Point& x) {
            const double g = fro(r.grad_u(x)), g0 = fro(r.base().gradient(x));
            return detail::Triple{g - g0, r.v(x) * g * g - g0 * g0, 0.0};
        },
        q);
    GradientBounds b;
    b.l1 = t.a + integrate_bulk(r.base(), [&](const Point&, const Mat2& g) { return fro(g); }, q.bulk);
    b.weighted_l2 = t.b + integrate_bulk(r.base(), [&](const Point&, const Mat2& g) { return fro(g) * fro(g); }, q.bulk);
    return b;
}

/// F_ε(u_ε, v_ε) = sharp bulk of u (v = 1) plus the tube corrections.
inline EnergyParts evaluate_F_eps(const Recovery& r, const ElasticTensor& a, const PotentialSpec& f,
                                  const RecoveryQuadrature& q = {}) {
    EnergyParts e = tube_corrections(r, a, f, q);
    e.bulk += integrate_bulk(
        r.base(), [&](const Point&, const Mat2& g) { return a.density(sym(g)); }, q.bulk);
    if (!f.zero)
        e.potential += integrate_bulk(
            r.base(), [&](const Point& x, const Mat2& g) { return f(x, sym(g), 1.0); }, q.bulk);
    return e;
}

/// ‖u_ε - u‖_{L²} over the tube cores (the fields agree elsewhere).
inline double l2_distance_to_base(const Recovery& r, int points = 16) {
    const Rule1D& g = gauss_legendre(points);
    const Rect& dom = r.base().domain();
    double acc = 0.0;
    for (std::size_t i = 0; i < r.base().segments().size(); ++i) {
        const CrackSegment& seg = r.base().segments()[i];
        const double len = seg.length();
        const int m = std::max(8, static_cast<int>(std::ceil(len / (2.0 * r.eps()))));
        for (int k = 0; k < m; ++k) {
            const double s0 = len * k / m, s1 = len * (k + 1) / m;
            for (std::size_t is = 0; is < g.x.size(); ++is) {
                const double s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * g.x[is];
                const double tin = r.theta()(i, s) * r.eps();
                for (double sign : {-1.0, 1.0})
                    for (std::size_t it = 0; it < g.x.size(); ++it) {
                        const double t = sign * tin * 0.5 * (1.0 + g.x[it]);
                        const Point x = seg.at(s) + t * seg.nu;
                        if (!dom.contains(x)) continue;
                        const Vec2 d = r.u(x) - r.base()(x);
                        acc += 0.5 * (s1 - s0) * g.w[is] * 0.5 * tin * g.w[it] * dot(d, d);
                    }
            }
        }
    }
    return std::sqrt(acc);
}

struct FeasibilityReport {
    double min_v = 1.0;
    double max_v = 0.0;
    double max_grad_v_times_eps = 0.0;
    double linf_u = 0.0;
};

/// Samples v_ε, |∇v_ε| (central differences) and |u_ε| on a shifted lattice plus tube-fitted points.
inline FeasibilityReport sample_feasibility(const Recovery& r, int lattice = 200) {
    FeasibilityReport rep;
    const Rect& dom = r.base().domain();
    const double h = 1e-7 * r.eps();
    auto probe = [&](const Point& x) {
        const double v = r.v(x);
        rep.min_v = std::min(rep.min_v, v);
        rep.max_v = std::max(rep.max_v, v);
        const Vec2 u = r.u(x);
        rep.linf_u = std::max({rep.linf_u, std::abs(u.x), std::abs(u.y)});
        const double gx = (r.v(x + Vec2{h, 0.0}) - r.v(x - Vec2{h, 0.0})) / (2.0 * h);
        const double gy = (r.v(x + Vec2{0.0, h}) - r.v(x - Vec2{0.0, h})) / (2.0 * h);
        rep.max_grad_v_times_eps = std::max(rep.max_grad_v_times_eps, std::hypot(gx, gy) * r.eps());
    };
    // Irrational shifts keep lattice points off the kink lines of v_ε.
    const double sx = 0.5 * (std::numbers::sqrt2 - 1.0), sy = 0.5 * (std::numbers::sqrt3 - 1.0);
    for (int i = 0; i < lattice; ++i)
        for (int j = 0; j < lattice; ++j)
            probe({dom.x0 + dom.width() * (i + sx) / lattice, dom.y0 + dom.height() * (j + sy) / lattice});
    for (std::size_t i = 0; i < r.base().segments().size(); ++i) {
        const CrackSegment& seg = r.base().segments()[i];
        for (int k = 0; k < 64; ++k) {
            const double s = seg.length() * (k + sx) / 64.0;
            const double w = r.stadium_halfwidth(i, s);
            for (int j = -40; j <= 40; ++j) {
                const Point x = seg.at(s) + (w * (j + sy) / 32.0) * seg.nu;
                if (dom.contains(x)) probe(x);
            }
            if (dom.contains(seg.at(s))) {
                rep.min_v = std::min(rep.min_v, r.v(seg.at(s)));
                const Vec2 u = r.u(seg.at(s));
                rep.linf_u = std::max({rep.linf_u, std::abs(u.x), std::abs(u.y)});
            }
        }
    }
    return rep;
}

/// Sharp value of the limit of each energy part along a ladder built with profile θ.
struct LimitParts {
    double bulk = 0.0;       // bulk elastic + α ∫ 𝔸(J⊙ν)·(J⊙ν) / (2θ)
    double damage = 0.0;     // b H¹(S) + 2ψ(0) ∫ θ
    double potential = 0.0;  // bulk potential + ∫ F_∞
    double total() const { return bulk + damage + potential; }
};

inline LimitParts limit_parts(const CrackedDisplacement& u, const ThetaProfile& th, const ElasticTensor& a,
                              const DamageLaw& law, const SharpEnergyBreakdown& sharp) {
    LimitParts l;
    l.bulk = sharp.bulk_elastic;
    l.damage = sharp.surface_b;
    l.potential = sharp.bulk_potential + sharp.surface_Finf;
    for (std::size_t i = 0; i < u.segments().size(); ++i) {
        const CrackSegment& s = u.segments()[i];
        l.bulk += law.alpha() * integrate_composite(
                                    [&](double t) {
                                        const double A = a.density(symmetric_tensor_jump(u.jump(i, t), s.nu));
                                        const double tt = th(i, t);
                                        return tt > 0.0 ? A / (2.0 * tt) : 0.0;
                                    },
                                    0.0, s.length(), 16, 16);
        l.damage += 2.0 * law.psi0() * integrate_composite([&](double t) { return th(i, t); }, 0.0, s.length(), 16, 16);
    }
    return l;
}

struct LadderRow {
    double eps = 0.0;
    EnergyParts parts;
    double total_Feps = 0.0;
    double total_sharp = 0.0;
    double gap = 0.0;
    double bulk_gap = 0.0;
    double damage_gap = 0.0;
    double potential_gap = 0.0;
    double linf_u = 0.0;
    double min_v = 0.0;
    double max_v = 0.0;
    double max_grad_v_times_eps = 0.0;
    double l2_error = 0.0;
};

struct Extrapolation {
    double value = 0.0;
    double order = 0.0;
    bool fitted = false;  // false when the last three values are not geometrically convergent
};

/// Richardson on the last three values of a sequence sampled at ε, ε/r, ε/r².
inline Extrapolation richardson(double e1, double e2, double e3, double ratio = 2.0) {
    Extrapolation x;
    const double d1 = e1 - e2, d2 = e2 - e3;
    if (d1 == 0.0 && d2 == 0.0) return {e3, 0.0, true};
    if (d2 == 0.0 || d1 / d2 <= 1.0) return {e3, 0.0, false};
    x.order = std::log(d1 / d2) / std::log(ratio);
    x.value = e3 - d2 / (std::pow(ratio, x.order) - 1.0);
    x.fitted = true;
    return x;
}

struct ConvergenceTable {
    std::vector<LadderRow> rows;
    SharpEnergyBreakdown sharp;
    LimitParts limit;
    Extrapolation extrapolated;
    double extrapolated_gap = 0.0;
    bool tail_monotone = true;
};

struct LadderOptions {
    RecoveryQuadrature quadrature;
    SharpOptions sharp;
    bool feasibility = true;
};

/// Recovery energies along a strictly decreasing ε ladder, compared with the sharp energy 𝓕(u, 1).
inline ConvergenceTable gamma_ladder(const CrackedDisplacement& u, const ElasticTensor& a, const DamageLaw& law,
                                     const PotentialSpec& f, const std::vector<double>& eps_list,
                                     const ThetaProfile& theta, const LadderOptions& opt = {}) {
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1])) throw Error(ErrorKind::Input, "eps ladder must be strictly decreasing");
    ConvergenceTable tab;
    tab.sharp = evaluate_phi(u, a, law, f, opt.sharp);
    tab.limit = limit_parts(u, theta, a, law, tab.sharp);
    for (double eps : eps_list) {
        const Recovery r(u, theta, eps, law);
        LadderRow row;
        row.eps = eps;
        row.parts = evaluate_F_eps(r, a, f, opt.quadrature);
        row.total_Feps = row.parts.total();
        row.total_sharp = tab.sharp.total;
        row.gap = std::abs(row.total_Feps - row.total_sharp);
        row.bulk_gap = std::abs(row.parts.bulk - tab.limit.bulk);
        row.damage_gap = std::abs(row.parts.damage - tab.limit.damage);
        row.potential_gap = std::abs(row.parts.potential - tab.limit.potential);
        if (opt.feasibility) {
            const FeasibilityReport fr = sample_feasibility(r);
            row.linf_u = fr.linf_u;
            row.min_v = fr.min_v;
            row.max_v = fr.max_v;
            row.max_grad_v_times_eps = fr.max_grad_v_times_eps;
            row.l2_error = l2_distance_to_base(r);
        }
        tab.rows.push_back(row);
    }
    const std::size_t n = tab.rows.size();
    if (n >= 3) {
        const double ratio = tab.rows[n - 3].eps / tab.rows[n - 2].eps;
        tab.extrapolated = richardson(tab.rows[n - 3].total_Feps, tab.rows[n - 2].total_Feps, tab.rows[n - 1].total_Feps, ratio);
        tab.tail_monotone = tab.rows[n - 2].gap < tab.rows[n - 3].gap && tab.rows[n - 1].gap < tab.rows[n - 2].gap;
    } else {
        tab.extrapolated = {n ? tab.rows.back().total_Feps : 0.0, 0.0, false};
    }
    tab.extrapolated_gap = std::abs(tab.extrapolated.value - tab.sharp.total);
    return tab;
}

inline ConvergenceTable gamma_ladder(const CrackedDisplacement& u, const ElasticTensor& a, const DamageLaw& law,
                                     const PotentialSpec& f, const std::vector<double>& eps_list,
                                     const LadderOptions& opt = {}) {
    return gamma_ladder(u, a, law, f, eps_list, optimal_theta(u, a, law), opt);
}

}  // namespace gammafrac
