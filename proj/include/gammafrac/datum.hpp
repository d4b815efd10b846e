#pragma once

// Recovery sequence with prescribed boundary values: the displacement is extended outside Ω by f∘P,
// the trace mismatch becomes a crack on ∂Ω, and the recovery of the extension is pulled back through
// the boundary-layer diffeomorphism so that u_ε = f and v_ε = 1 hold on ∂Ω.

#include "gammafrac/domain.hpp"
#include "gammafrac/recovery.hpp"
#include "gammafrac/sharp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>
#include <vector>

namespace gammafrac {

struct DatumOptions {
    double margin = 0.1;        // L = sup θ + C_ε + margin
    double mismatch_tol = 1e-9;
    int scan = 1024;            // samples per boundary piece when locating {tr u ≠ f}
};

/// Where a boundary crack sits: piece index and arclength interval on that piece.
struct BoundarySegment {
    std::size_t piece = 0;
    double s0 = 0.0, s1 = 0.0;
};

/// Û = u on Ω, f∘P outside, with the mismatch intervals on straight edges as extra crack segments
/// (normal pointing out of Ω, so the + trace is f). Interior cracks of u are kept.
struct Extension {
    CrackedDisplacement field;
    std::vector<BoundarySegment> boundary;  // entries for the trailing segments of field
    std::size_t interior = 0;               // number of leading interior segments
};

inline Extension extend_displacement(const CrackedDisplacement& u, const VectorField& f, const SmoothDomain& omega,
                                     double strip, const DatumOptions& opt = {}) {
    for (const auto& s : u.segments())
        if (!(omega.signed_distance(s.a) < -strip && omega.signed_distance(s.b) < -strip))
            throw Error(ErrorKind::UnsupportedDomain, "interior cracks must stay clear of the boundary strip");
    const auto pieces = omega.boundary();
    std::vector<CrackSegment> segs = u.segments();
    std::vector<BoundarySegment> where;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        const BoundaryPiece& bp = pieces[k];
        const double len = bp.length();
        auto in = [&](double s) { return norm(f(bp.point(s)) - u(bp.point(s))) > opt.mismatch_tol; };
        auto cut = [&](double lo, double hi, bool lo_in) {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (in(mid) == lo_in ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
        bool prev = in(0.0);
        double start = 0.0, prev_s = 0.0;
        std::vector<std::pair<double, double>> found;
        for (int i = 1; i <= opt.scan; ++i) {
            const double s = len * i / opt.scan;
            const bool now = in(s);
            if (now != prev) {
                const double c = cut(prev_s, s, prev);
                if (now) start = c;
                else found.emplace_back(start, c);
            }
            prev = now;
            prev_s = s;
        }
        if (prev) found.emplace_back(start, len);
        if (found.empty()) continue;
        if (bp.arc) throw Error(ErrorKind::UnsupportedDomain, "trace mismatch on a curved boundary arc");
        for (const auto& [s0, s1] : found) {
            segs.push_back(CrackSegment::make(bp.point(s0), bp.point(s1), bp.normal(0.0)));
            where.push_back({k, s0, s1});
        }
    }

    // Tangential derivative of f along ∂Ω, by differences of boundary points.
    auto df = [f, omega](const Point& p, const Vec2& tau) {
        const double h = 1e-6;
        return (f(omega.project(p + h * tau)) - f(omega.project(p - h * tau))) / (2.0 * h);
    };
    VectorField value = [u, f, omega](const Point& y) {
        return omega.signed_distance(y) <= 0.0 ? u(y) : f(omega.project(y));
    };
    GradientField gradient = [u, omega, df](const Point& y) {
        const double d = omega.signed_distance(y);
        if (d <= 0.0) return u.gradient(y);
        const Vec2 n = omega.normal_of(y);
        const Vec2 tau = perp(n);
        const Point p = y - d * n;
        return outer(df(p, tau), tau / (1.0 + omega.curvature_of(y) * d));
    };
    const Rect& b = omega.box();
    const double m = 1.0 + std::max(b.width(), b.height());
    Extension e{CrackedDisplacement(Rect{b.x0 - m, b.y0 - m, b.x1 + m, b.y1 + m}, segs, value, gradient), where,
                u.segments().size()};
    for (std::size_t i = 0; i < where.size(); ++i) {
        const BoundaryPiece bp = pieces[where[i].piece];
        const double s0 = where[i].s0;
        e.field.set_traces(
            e.interior + i, [f, bp, s0](double s) { return f(bp.point(s0 + s)); },
            [u, bp, s0](double s) { return u(bp.point(s0 + s)); });
    }
    return e;
}

/// u_ε(x) = û_ε(Φ_ε(x)), v_ε(x) = v̂_ε(Φ_ε(x)) where (û_ε, v̂_ε) is the recovery of the extension.
class DatumRecovery {
public:
    struct Sample {
        Vec2 u;
        Mat2 grad;
        double v;
    };

    DatumRecovery(const CrackedDisplacement& u, VectorField f, const SmoothDomain& omega, const ElasticTensor& a,
                  const DamageLaw& law, double eps, double delta, const DatumOptions& opt = {})
        : f_(std::move(f)),
          omega_(omega),
          ext_(extend_displacement(u, f_, omega, delta, opt)),
          theta_(optimal_theta(ext_.field, a, law)),
          ell_(theta_.sup_all() + slope_factor(theta_, eps) + opt.margin),
          phi_(omega, eps, ell_, delta),
          rec_(ext_.field, theta_, eps, law) {}

    const Extension& extension() const { return ext_; }
    const Recovery& extended() const { return rec_; }
    const BoundaryDiffeomorphism& diffeomorphism() const { return phi_; }
    const SmoothDomain& domain() const { return omega_; }
    const VectorField& datum() const { return f_; }
    double eps() const { return rec_.eps(); }
    double ell() const { return ell_; }

    /// Fields at the point p + d n, where p ∈ ∂Ω has outward normal n and curvature k, and -δ <= d <= 0.
    Sample at_strip(const Point& p, const Vec2& n, double k, double d) const {
        const double dy = phi_.forward_distance(d);
        const Point y = p + dy * n;
        const Vec2 tau = perp(n);
        const Mat2 jac = (1.0 + phi_.shift() / phi_.delta()) * outer(n, n) + ((1.0 + k * dy) / (1.0 + k * d)) * outer(tau, tau);
        const double v = rec_.v(y);
        if (dy > 0.0 && v == 1.0) {
            // Outside every stadium: û = f∘P, evaluated at p itself so boundary values are exact.
            return {f_(p), ext_.field.gradient(y) * jac, 1.0};
        }
        return {rec_.u(y), rec_.grad_u(y) * jac, v};
    }

    Sample at(const Point& x) const {
        const double d = omega_.signed_distance(x);
        if (d < -phi_.delta()) return {rec_.u(x), rec_.grad_u(x), rec_.v(x)};
        return at_strip(omega_.project(x), omega_.normal_of(x), omega_.curvature_of(x), std::min(d, 0.0));
    }

    Vec2 u(const Point& x) const { return at(x).u; }
    double v(const Point& x) const { return at(x).v; }
    Mat2 grad_u(const Point& x) const { return at(x).grad; }

private:
    VectorField f_;
    SmoothDomain omega_;
    Extension ext_;
    ThetaProfile theta_;
    double ell_;
    BoundaryDiffeomorphism phi_;
    Recovery rec_;
};

inline DatumRecovery build_recovery_with_datum(const CrackedDisplacement& u, const VectorField& f,
                                               const SmoothDomain& omega, const ElasticTensor& a, const DamageLaw& law,
                                               double eps, double delta, const DatumOptions& opt = {}) {
    return {u, f, omega, a, law, eps, delta, opt};
}

struct DatumQuadrature {
    int points = 8;        // Gauss points per sub-interval, both directions
    int scan = 512;        // samples along each normal line when locating kinks
    int interior_cells = 8;
};

namespace detail {

/// Composite tensor Gauss over a polar patch r ∈ [0, rad], φ ∈ [p0, p1] around c.
template <class G>
double integrate_polar(G&& g, const Point& c, double rad, double p0, double p1, int cells, int n) {
    const Rule1D& q = gauss_legendre(n);
    double s = 0.0;
    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells; ++j) {
            const double r0 = rad * i / cells, r1 = rad * (i + 1) / cells;
            const double a0 = p0 + (p1 - p0) * j / cells, a1 = p0 + (p1 - p0) * (j + 1) / cells;
            for (std::size_t a = 0; a < q.x.size(); ++a)
                for (std::size_t b = 0; b < q.x.size(); ++b) {
                    const double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * q.x[a];
                    const double t = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * q.x[b];
                    s += 0.25 * (r1 - r0) * (a1 - a0) * q.w[a] * q.w[b] * r * g(c + r * Vec2{std::cos(t), std::sin(t)});
                }
        }
    return s;
}

template <class G>
double integrate_cells(G&& g, const Rect& r, int cells, int n) {
    double s = 0.0;
    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells; ++j)
            s += integrate_rect(g,
                                Rect{r.x0 + r.width() * i / cells, r.y0 + r.height() * j / cells,
                                     r.x0 + r.width() * (i + 1) / cells, r.y0 + r.height() * (j + 1) / cells},
                                n);
    return s;
}

/// ∫ g over {dist(x, ∂Ω) > δ}, which is again a rounded rectangle or a disk.
template <class G>
double integrate_deep_interior(G&& g, const SmoothDomain& omega, double delta, int cells, int n) {
    constexpr double pi = std::numbers::pi;
    if (omega.kind() == SmoothDomain::Kind::Disk) return integrate_polar(g, omega.center(), omega.radius() - delta, 0.0, 2.0 * pi, cells, n);
    const Rect& b = omega.box();
    const double ri = omega.radius() - delta;
    const double X0 = b.x0 + delta, X1 = b.x1 - delta, Y0 = b.y0 + delta, Y1 = b.y1 - delta;
    double s = integrate_cells(g, Rect{X0 + ri, Y0, X1 - ri, Y1}, cells, n);
    if (ri > 0.0) {
        s += integrate_cells(g, Rect{X0, Y0 + ri, X0 + ri, Y1 - ri}, cells, n);
        s += integrate_cells(g, Rect{X1 - ri, Y0 + ri, X1, Y1 - ri}, cells, n);
        s += integrate_polar(g, Point{X1 - ri, Y0 + ri}, ri, -0.5 * pi, 0.0, cells / 2, n);
        s += integrate_polar(g, Point{X1 - ri, Y1 - ri}, ri, 0.0, 0.5 * pi, cells / 2, n);
        s += integrate_polar(g, Point{X0 + ri, Y1 - ri}, ri, 0.5 * pi, pi, cells / 2, n);
        s += integrate_polar(g, Point{X0 + ri, Y0 + ri}, ri, pi, 1.5 * pi, cells / 2, n);
    }
    return s;
}

}  // namespace detail

/// F_ε(u_ε, v_ε; Ω) for the pulled-back recovery. The deep interior carries the sharp bulk of u; the
/// boundary strip is integrated in (arclength, distance) coordinates with the s-axis cut at every kink
/// of the integrand, found in the image of each normal line.
inline EnergyParts evaluate_datum_energy(const DatumRecovery& r, const ElasticTensor& a, const PotentialSpec& f,
                                         const DatumQuadrature& q = {}) {
    if (r.extension().interior > 0)
        throw Error(ErrorKind::UnsupportedDomain, "datum energy supports boundary cracks only");
    const SmoothDomain& omega = r.domain();
    const BoundaryDiffeomorphism& phi = r.diffeomorphism();
    const Recovery& rec = r.extended();
    const CrackedDisplacement& base = rec.base();
    const double eps = r.eps(), delta = phi.delta();
    EnergyParts out;

    out.bulk = detail::integrate_deep_interior(
        [&](const Point& x) { return a.density(base.strain(x)); }, omega, delta, q.interior_cells, q.points);
    if (!f.zero)
        out.potential = detail::integrate_deep_interior(
            [&](const Point& x) { return f(x, base.strain(x), 1.0); }, omega, delta, q.interior_cells, q.points);

    const Rule1D& g = gauss_legendre(q.points);
    const auto pieces = omega.boundary();
    const auto& segs = base.segments();
    double reach = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) reach = std::max(reach, rec.theta().sup(i) + rec.c_eps());
    reach *= eps;
    const double s_cross = phi.inverse_distance(0.0);

    for (std::size_t k = 0; k < pieces.size(); ++k) {
        const BoundaryPiece& bp = pieces[k];
        const double len = bp.length(), kappa = bp.curvature();
        std::vector<double> cuts{0.0, len};
        const double piece = std::min(len / 16.0, 2.0 * eps);
        const int m = static_cast<int>(std::ceil(len / piece - 1e-9));
        for (int j = 1; j < m; ++j) cuts.push_back(len * j / m);
        for (std::size_t i = 0; i < r.extension().boundary.size(); ++i) {
            const BoundarySegment& w = r.extension().boundary[i];
            if (w.piece != k) continue;
            const std::size_t si = r.extension().interior + i;
            const double rin0 = rec.theta()(si, 0.0) * eps, rin1 = rec.theta()(si, w.s1 - w.s0) * eps;
            for (double c : {w.s0, w.s1, w.s0 - rin0, w.s0 - rin0 - rec.c_eps() * eps, w.s1 + rin1,
                             w.s1 + rin1 + rec.c_eps() * eps})
                if (c > 0.0 && c < len) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());

        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double a0 = cuts[c], a1 = cuts[c + 1];
            if (!(a1 - a0 > 1e-15)) continue;
            for (std::size_t ia = 0; ia < g.x.size(); ++ia) {
                const double sigma = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * g.x[ia];
                const double wa = 0.5 * (a1 - a0) * g.w[ia];
                const Point p = bp.point(sigma);
                const Vec2 n = bp.normal(sigma);

                std::vector<double> br{-delta, s_cross, 0.0};
                for (std::size_t si = 0; si < segs.size(); ++si) {
                    const CrackSegment& seg = segs[si];
                    if (seg.distance(p) > delta + phi.shift() + reach) continue;
                    const double len_s = seg.length();
                    auto kinks = [&](double sy) {
                        const Point y = p + sy * n;
                        const double al = seg.along(y), dist = seg.distance(y);
                        const double th = rec.theta()(si, std::clamp(al, 0.0, len_s)) * eps;
                        return std::array<double, 5>{al, al - len_s, seg.across(y), dist - th,
                                                     dist - th - rec.c_eps() * eps};
                    };
                    const double lo = -delta, hi = phi.shift();
                    auto prev = kinks(lo);
                    double prev_s = lo;
                    for (int it = 1; it <= q.scan; ++it) {
                        const double sy = lo + (hi - lo) * it / q.scan;
                        const auto now = kinks(sy);
                        for (int fi = 0; fi < 5; ++fi) {
                            if ((prev[fi] > 0.0) == (now[fi] > 0.0)) continue;
                            double l = prev_s, h = sy;
                            const bool lpos = prev[fi] > 0.0;
                            for (int b = 0; b < 60; ++b) {
                                const double mid = 0.5 * (l + h);
                                ((kinks(mid)[fi] > 0.0) == lpos ? l : h) = mid;
                            }
                            br.push_back(phi.inverse_distance(0.5 * (l + h)));
                        }
                        prev = now;
                        prev_s = sy;
                    }
                }
                std::sort(br.begin(), br.end());

                for (std::size_t b = 0; b + 1 < br.size(); ++b) {
                    const double t0 = br[b], t1 = br[b + 1];
                    if (!(t1 - t0 > 1e-15)) continue;
                    for (std::size_t it = 0; it < g.x.size(); ++it) {
                        const double d = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * g.x[it];
                        const double w = wa * 0.5 * (t1 - t0) * g.w[it] * (1.0 + kappa * d);
                        const auto smp = r.at_strip(p, n, kappa, d);
                        const SymMat2 e = sym(smp.grad);
                        out.bulk += w * smp.v * a.density(e);
                        out.damage += w * rec.law().psi(smp.v) / eps;
                        if (!f.zero) out.potential += w * f(p + d * n, e, smp.v);
                    }
                }
            }
        }
    }
    return out;
}

/// |∇Φ_ε - Id| and |∇Φ_ε^{-1} - Id| (Frobenius, central differences) sampled over the strips.
struct JacobianReport {
    double forward = 0.0;
    double inverse = 0.0;
    double closed_form_mismatch = 0.0;  // numeric vs closed-form ∇Φ_ε
    double roundtrip = 0.0;             // |Φ_ε^{-1}(Φ_ε(x)) - x|
    double sup_det = 0.0;               // sup det ∇Φ_ε
    double constant(double eps) const { return (forward + inverse) / eps; }
};

inline JacobianReport jacobian_check(const BoundaryDiffeomorphism& phi, int samples = 2000, std::uint64_t seed = 1) {
    JacobianReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const auto pieces = phi.domain().boundary();
    double total = 0.0;
    for (const auto& p : pieces) total += p.length();
    auto pick = [&](double lo, double hi) {
        double s = uni(rng) * total;
        std::size_t k = 0;
        while (k + 1 < pieces.size() && s > pieces[k].length()) s -= pieces[k++].length();
        const double d = lo + (hi - lo) * uni(rng);
        return pieces[k].point(s) + d * pieces[k].normal(s);
    };
    const Mat2 id = Mat2::identity();
    for (int i = 0; i < samples; ++i) {
        // Stay 1e-5 away from the kink of Φ_ε at depth δ so the differences do not straddle it.
        const Point x = pick(-phi.delta() + 1e-5, 0.0);
        const Mat2 jn = phi.numeric_jacobian(x, true);
        rep.forward = std::max(rep.forward, (jn - id).norm());
        rep.closed_form_mismatch = std::max(rep.closed_form_mismatch, (jn - phi.jacobian(x)).norm());
        rep.roundtrip = std::max(rep.roundtrip, norm(phi.inverse(phi.forward(x)) - x));
        rep.sup_det = std::max(rep.sup_det, phi.jacobian(x).det());
        const Point y = pick(phi.inverse_distance(-phi.delta()) + 1e-5, phi.shift());
        rep.inverse = std::max(rep.inverse, (phi.numeric_jacobian(y, false) - id).norm());
    }
    return rep;
}

struct DatumRow {
    double eps = 0.0;
    EnergyParts parts;
    double total = 0.0;
    double gap = 0.0;
    bool boundary_exact = true;  // u_ε == f and v_ε == 1 at every sampled boundary point
    double min_v = 1.0;
    double jacobian_constant = 0.0;
    double ell = 0.0;
    double linf_u = 0.0;
    double max_grad_v_times_eps = 0.0;
};

/// Lattice samples of ‖u_ε‖_∞ and of ε|∇v_ε| (central differences) inside Ω.
inline std::pair<double, double> datum_field_bounds(const DatumRecovery& r, int lattice = 200) {
    const Rect box = r.domain().box();
    const double h = 1e-3 * r.eps();
    double linf = 0.0, grad = 0.0;
    for (int i = 0; i <= lattice; ++i)
        for (int j = 0; j <= lattice; ++j) {
            const Point x{box.x0 + box.width() * i / lattice, box.y0 + box.height() * j / lattice};
            if (r.domain().signed_distance(x) > -2.0 * h) continue;
            const Vec2 u = r.u(x);
            linf = std::max({linf, std::abs(u.x), std::abs(u.y)});
            const double gx = (r.v(x + Vec2{h, 0.0}) - r.v(x - Vec2{h, 0.0})) / (2.0 * h);
            const double gy = (r.v(x + Vec2{0.0, h}) - r.v(x - Vec2{0.0, h})) / (2.0 * h);
            grad = std::max(grad, std::hypot(gx, gy) * r.eps());
        }
    return {linf, grad};
}

struct DatumTable {
    std::vector<DatumRow> rows;
    SharpEnergyBreakdown sharp;  // Φ(u) on Ω's bounding box
    BoundaryRelaxation relaxation;
    double target = 0.0;         // Φ(u) + R(u, f)
    Extrapolation extrapolated;
    double extrapolated_gap = 0.0;
};

inline bool boundary_values_exact(const DatumRecovery& r, int per_piece = 1000) {
    for (const auto& bp : r.domain().boundary())
        for (int i = 0; i <= per_piece; ++i) {
            const Point p = bp.point(bp.length() * i / per_piece);
            const auto s = r.at(p);
            const Vec2 fv = r.datum()(p);
            if (!(s.u.x == fv.x && s.u.y == fv.y && s.v == 1.0)) return false;
        }
    return true;
}

inline DatumTable datum_ladder(const CrackedDisplacement& u, const VectorField& f, const SmoothDomain& omega,
                               const ElasticTensor& a, const DamageLaw& law, const PotentialSpec& pot,
                               const std::vector<double>& eps_list, double delta, const DatumOptions& opt = {},
                               const DatumQuadrature& q = {}) {
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1])) throw Error(ErrorKind::Input, "eps ladder must be strictly decreasing");
    if (!u.segments().empty()) throw Error(ErrorKind::UnsupportedDomain, "datum ladder supports boundary cracks only");
    DatumTable t;
    // Φ(u) over Ω: u has no interior cracks here, so only bulk terms remain.
    const double bulk_u = detail::integrate_deep_interior(
        [&](const Point& x) { return a.density(u.strain(x)) + (pot.zero ? 0.0 : pot(x, u.strain(x), 1.0)); }, omega, 0.0,
        4 * q.interior_cells, q.points);
    t.sharp.bulk_elastic = bulk_u;
    t.sharp.total = bulk_u;
    t.relaxation = evaluate_R(u, f, omega, a, law, pot);
    t.target = bulk_u + t.relaxation.total;
    for (double eps : eps_list) {
        const DatumRecovery r(u, f, omega, a, law, eps, delta, opt);
        DatumRow row;
        row.eps = eps;
        row.parts = evaluate_datum_energy(r, a, pot, q);
        row.total = row.parts.total();
        row.gap = std::abs(row.total - t.target);
        row.boundary_exact = boundary_values_exact(r);
        row.min_v = r.extended().v_min();
        row.jacobian_constant = jacobian_check(r.diffeomorphism()).constant(eps);
        row.ell = r.ell();
        std::tie(row.linf_u, row.max_grad_v_times_eps) = datum_field_bounds(r);
        t.rows.push_back(row);
    }
    const std::size_t n = t.rows.size();
    if (n >= 3) {
        t.extrapolated = richardson(t.rows[n - 3].total, t.rows[n - 2].total, t.rows[n - 1].total,
                                    t.rows[n - 3].eps / t.rows[n - 2].eps);
    } else {
        t.extrapolated = {n ? t.rows.back().total : 0.0, 0.0, false};
    }
    t.extrapolated_gap = std::abs(t.extrapolated.value - t.target);
    return t;
}

}  // namespace gammafrac
