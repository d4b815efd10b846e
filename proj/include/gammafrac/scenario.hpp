#pragma once

// JSON scenario files: material, potential, geometry, boundary and run blocks.

#include "gammafrac/datum.hpp"
#include "gammafrac/expression.hpp"
#include "gammafrac/potentials.hpp"
#include "gammafrac/recovery.hpp"
#include "gammafrac/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace gammafrac {

using json = nlohmann::json;

struct RunBlock {
    std::string mode;
    std::vector<double> eps;        // gamma-converge ladder, strictly decreasing
    std::vector<int> grids;         // solve: node counts per direction
    int eps_factor = 4;             // ε = eps_factor · h, one of 2, 4, 8
    std::vector<double> lambdas{0.1, 0.5, 0.9};
    int dump_stride = 0;            // field dump every k outer iterations; 0 dumps the final state only
    std::vector<double> ramp;       // demo-fracking pressure values
    int max_outer = 500;
    double stop_tol = 1e-8;
    int samples = 1000;             // recession-check
    std::string out = "out";
};

struct BoundaryBlock {
    Expression fx, fy;
    double delta = 0.15;
    double margin = 0.1;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    ElasticTensor tensor = ElasticTensor::scaled_identity(1.0);
    DamageLaw law = DamageLaw::quadratic(1.0);
    json potential_block;
    Rect rect;
    std::optional<SmoothDomain> domain;
    std::optional<CrackedDisplacement> displacement;
    double theta_scale = 1.0;
    std::optional<BoundaryBlock> boundary;
    RunBlock run;

    PotentialSpec potential() const;
    PotentialSpec potential_with_pressure(double q) const;
    VectorField datum() const {
        const BoundaryBlock b = *boundary;
        return [b](const Point& x) { return Vec2{b.fx(x), b.fy(x)}; };
    }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_error(std::string("field '") + key + "': " + e.what());
    }
}

inline const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) config_error(where + " needs '" + key + "'");
    return j.at(key);
}

inline Expression expr(const json& j, const std::string& where) {
    if (j.is_number()) return Expression::constant(j.get<double>());
    if (!j.is_string()) config_error(where + " must be a number or an expression string");
    try {
        return Expression::parse(j.get<std::string>());
    } catch (const Error& e) {
        config_error(where + ": " + e.what());
    }
}

inline Point point(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) config_error(where + " must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline ElasticTensor parse_tensor(const json& j) {
    const std::string kind = get_or<std::string>(j, "kind", "scaled_identity");
    if (kind == "scaled_identity") return ElasticTensor::scaled_identity(get_or(j, "c", 1.0));
    if (kind == "isotropic") return ElasticTensor::isotropic(require(j, "mu", "tensor").get<double>(), get_or(j, "lambda", 0.0));
    if (kind == "voigt") {
        const json& m = require(j, "matrix", "tensor");
        if (!m.is_array() || m.size() != 3) config_error("voigt matrix must be 3x3");
        Eigen::Matrix3d a;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a(r, c) = m.at(r).at(c).get<double>();
        return ElasticTensor::voigt(a);
    }
    config_error("unknown tensor kind '" + kind + "'");
}

inline DamageLaw parse_law(const json& j) {
    const std::string kind = get_or<std::string>(j, "kind", "quadratic");
    const double alpha = get_or(j, "alpha", 1.0);
    if (kind == "quadratic") return DamageLaw::quadratic(alpha);
    if (kind == "tabulated") {
        std::vector<std::pair<double, double>> table;
        for (const auto& row : require(j, "table", "damage")) table.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        return DamageLaw::tabulated(alpha, std::move(table));
    }
    config_error("unknown damage kind '" + kind + "'");
}

/// Hardening profile g with its slope at infinity.
inline std::pair<std::function<double(double)>, double> parse_g(const json& j) {
    const std::string g = get_or<std::string>(j, "g", "soft");
    if (g == "soft") return {[](double t) { return std::sqrt(1.0 + t * t) - 1.0; }, 1.0};
    if (g == "linear") return {[](double t) { return t; }, 1.0};
    config_error("unknown g '" + g + "' (soft, linear)");
}

inline PotentialSpec build_potential(const json& j, const ElasticTensor& a, const Rect& rect, std::optional<double> q_override) {
    if (j.is_null()) return zero_potential();
    const std::string kind = get_or<std::string>(j, "kind", "none");
    if (kind == "none") return zero_potential();
    if (kind == "fracking_affine") {
        AffineInV p;
        p.m = get_or(j, "m", 0.0);
        p.q = q_override ? *q_override : get_or(j, "q", 1.0);
        const Expression rho = expr(require(j, "rho", "potential"), "potential.rho");
        p.rho = [rho](const Point& x) { return rho(x); };
        p.rho_sup = require(j, "rho_sup", "potential").get<double>();
        p.rho_lip = get_or(j, "rho_lip", 0.0);
        return make_fracking(p);
    }
    if (kind == "fracking_strain") {
        const Expression rho = expr(require(j, "rho", "potential"), "potential.rho");
        const double rv = get_or(j, "rho_v", 0.0), g0 = get_or(j, "g0", 1.0), g1 = get_or(j, "g1", 0.0);
        StrainDependent s;
        s.rho = [rho, rv](const Point& x, double v) { return rho(x) * (1.0 + rv * v); };
        s.g = [g0, g1](const SymMat2& m) { const double n = frobenius(m); return g0 + g1 * n / (1.0 + n); };
        s.gamma = [g0, g1](const SymMat2& m) { return frobenius(m) > 0.0 ? g0 + g1 : g0; };
        s.rho_sup = require(j, "rho_sup", "potential").get<double>() * (1.0 + std::abs(rv));
        s.g_bound = std::abs(g0) + std::abs(g1);
        s.rho_lip = get_or(j, "rho_lip", 0.0) * (1.0 + std::abs(rv));
        return make_fracking(s);
    }
    if (kind == "plastic_slip" || kind == "tresca") {
        const Expression p = expr(require(j, "p", "potential"), "potential.p");
        const double c0 = get_or(j, "v0", 1.0), c1 = get_or(j, "v1", 0.0);
        const double p_sup = require(j, "p_sup", "potential").get<double>() * (std::abs(c0) + std::abs(c1));
        auto pv = [p, c0, c1](const Point& x, double v) { return p(x) * (c0 + c1 * v); };
        const auto [g, g_inf] = parse_g(j);
        if (kind == "plastic_slip") return make_plastic_slip(pv, g, g_inf, p_sup);
        return make_tresca(pv, g, g_inf, a, p_sup);
    }
    if (kind == "non_interpenetration") {
        const Expression p = expr(require(j, "p", "potential"), "potential.p");
        const double scale = q_override ? *q_override : 1.0;
        return make_non_interpenetration([p, scale](const Point& x) { return scale * p(x); },
                                         scale * require(j, "p_sup", "potential").get<double>(), rect);
    }
    config_error("unknown potential kind '" + kind + "'");
}

inline CrackedDisplacement parse_displacement(const json& g, const Rect& rect) {
    const json& d = require(g, "displacement", "geometry");
    if (!d.is_array() || d.size() != 2) config_error("geometry.displacement must be [ux, uy]");
    const Expression ux = expr(d[0], "geometry.displacement[0]"), uy = expr(d[1], "geometry.displacement[1]");
    std::vector<CrackSegment> segs;
    std::vector<json> traces;
    if (g.contains("cracks"))
        for (const auto& c : g.at("cracks")) {
            const Point a = point(require(c, "a", "crack"), "crack.a"), b = point(require(c, "b", "crack"), "crack.b");
            segs.push_back(c.contains("nu") ? CrackSegment::make(a, b, point(c.at("nu"), "crack.nu")) : CrackSegment::make(a, b));
            traces.push_back(c.value("traces", json()));
        }
    CrackedDisplacement u(rect, segs, [ux, uy](const Point& x) { return Vec2{ux(x), uy(x)}; });
    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (traces[i].is_null()) continue;
        // Traces are expressions in the arclength t, written as x.
        const json& pl = require(traces[i], "plus", "crack.traces");
        const json& mi = require(traces[i], "minus", "crack.traces");
        const Expression px = expr(pl.at(0), "plus"), py = expr(pl.at(1), "plus");
        const Expression mx = expr(mi.at(0), "minus"), my = expr(mi.at(1), "minus");
        u.set_traces(i, [px, py](double t) { return Vec2{px(t, 0.0), py(t, 0.0)}; },
                     [mx, my](double t) { return Vec2{mx(t, 0.0), my(t, 0.0)}; });
    }
    return u;
}

}  // namespace detail

inline PotentialSpec Scenario::potential() const {
    return detail::build_potential(potential_block, tensor, rect, std::nullopt);
}

/// The configured potential with its pressure (fracking q) or coefficient scale (non-interpenetration) replaced.
inline PotentialSpec Scenario::potential_with_pressure(double q) const {
    return detail::build_potential(potential_block, tensor, rect, q);
}

inline const std::vector<std::string>& scenario_modes() {
    static const std::vector<std::string> m{"gamma-converge", "solve", "recession-check", "sigma-bound", "demo-fracking"};
    return m;
}

inline Scenario parse_scenario(const json& j) {
    using detail::config_error;
    using detail::get_or;
    if (!j.is_object()) config_error("scenario must be a JSON object");
    Scenario s;
    s.name = get_or<std::string>(j, "name", "scenario");
    if (!j.contains("seed")) config_error("scenario needs a 'seed'");
    s.seed = j.at("seed").get<std::uint64_t>();
    try {
        if (j.contains("material")) {
            const json& m = j.at("material");
            if (m.contains("tensor")) s.tensor = detail::parse_tensor(m.at("tensor"));
            if (m.contains("damage")) s.law = detail::parse_law(m.at("damage"));
        }
        s.potential_block = j.value("potential", json());
        const json g = j.value("geometry", json::object());
        if (g.contains("rect")) {
            const json& r = g.at("rect");
            if (!r.is_array() || r.size() != 4) config_error("geometry.rect must be [x0, y0, x1, y1]");
            s.rect = Rect{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
        }
        if (g.contains("domain")) {
            const json& d = g.at("domain");
            const std::string kind = get_or<std::string>(d, "kind", "rectangle");
            if (kind == "rectangle") s.domain = SmoothDomain::rectangle(s.rect);
            else if (kind == "rounded_rect") s.domain = SmoothDomain::rounded_rect(s.rect, detail::require(d, "radius", "domain").get<double>());
            else if (kind == "disk") s.domain = SmoothDomain::disk(detail::point(detail::require(d, "center", "domain"), "domain.center"),
                                                                  detail::require(d, "radius", "domain").get<double>());
            else config_error("unknown domain kind '" + kind + "'");
        }
        if (g.contains("displacement")) s.displacement = detail::parse_displacement(g, s.rect);
        s.theta_scale = get_or(g, "theta_scale", 1.0);
        if (j.contains("boundary")) {
            const json& b = j.at("boundary");
            const json& f = detail::require(b, "f", "boundary");
            if (!f.is_array() || f.size() != 2) config_error("boundary.f must be [fx, fy]");
            s.boundary = BoundaryBlock{detail::expr(f[0], "boundary.f[0]"), detail::expr(f[1], "boundary.f[1]"),
                                       get_or(b, "delta", 0.15), get_or(b, "margin", 0.1)};
        }
        const json& r = detail::require(j, "run", "scenario");
        s.run.mode = detail::require(r, "mode", "run").get<std::string>();
        if (std::find(scenario_modes().begin(), scenario_modes().end(), s.run.mode) == scenario_modes().end())
            config_error("unknown run mode '" + s.run.mode + "'");
        s.run.eps = get_or(r, "eps", std::vector<double>{});
        s.run.grids = get_or(r, "grids", std::vector<int>{});
        s.run.eps_factor = get_or(r, "eps_factor", 4);
        s.run.lambdas = get_or(r, "lambdas", s.run.lambdas);
        s.run.dump_stride = get_or(r, "dump_stride", 0);
        s.run.ramp = get_or(r, "ramp", std::vector<double>{});
        s.run.max_outer = get_or(r, "max_outer", 500);
        s.run.stop_tol = get_or(r, "stop_tol", 1e-8);
        s.run.samples = get_or(r, "samples", 1000);
        s.run.out = get_or<std::string>(r, "out", "out/" + s.name);
    } catch (const json::exception& e) {
        config_error(e.what());
    }

    const RunBlock& run = s.run;
    for (std::size_t k = 1; k < run.eps.size(); ++k)
        if (!(run.eps[k] < run.eps[k - 1])) config_error("run.eps must be strictly decreasing");
    if (run.mode == "gamma-converge") {
        if (!s.displacement) config_error("gamma-converge needs geometry.displacement");
        if (run.eps.size() < 3) config_error("gamma-converge needs at least three eps values");
        if (s.boundary && !s.domain) config_error("a boundary datum needs geometry.domain");
    }
    if (run.mode == "solve" || run.mode == "demo-fracking") {
        if (!s.boundary) config_error(run.mode + " needs a boundary block");
        if (run.grids.empty()) config_error(run.mode + " needs run.grids");
        if (run.eps_factor != 2 && run.eps_factor != 4 && run.eps_factor != 8) config_error("run.eps_factor must be 2, 4 or 8");
    }
    if (run.mode == "demo-fracking" && run.ramp.empty()) config_error("demo-fracking needs run.ramp");
    if (run.mode == "recession-check" && s.potential_block.is_null()) config_error("recession-check needs a potential block");
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path + ": " + e.what());
    }
    return parse_scenario(j);
}

}  // namespace gammafrac
