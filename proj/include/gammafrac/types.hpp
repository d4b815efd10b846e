#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace gammafrac {

/// Error categories; each maps onto a CLI exit code and a JSON error code.
enum class ErrorKind {
    Input,              // malformed argument (non-symmetric matrix, bad range)
    Config,             // scenario file problems
    InfeasibleSigma,    // sigma >= sigma_max
    DegenerateDamage,   // psi(0) == 0 where a positive value is needed
    NumericRecession,   // difference quotients did not settle
    Accuracy,           // quadrature refinement did not converge
    TubeOverlap,        // eps >= eps_max
    UnsupportedDomain,  // domain descriptor not C^1 or mismatch on a curved arc
    InfeasibleState,    // discrete state violates a V_eps / box / pin invariant
    Breakdown,          // CG breakdown (operator not SPD)
    Parameter           // alpha*eps >= 1 and similar
};

inline const char* error_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Config: return "config";
    case ErrorKind::InfeasibleSigma: return "infeasible_sigma";
    case ErrorKind::DegenerateDamage: return "degenerate_damage_law";
    case ErrorKind::NumericRecession: return "numeric_recession";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::TubeOverlap: return "tube_overlap";
    case ErrorKind::UnsupportedDomain: return "unsupported_domain";
    case ErrorKind::InfeasibleState: return "infeasible_state";
    case ErrorKind::Breakdown: return "cg_breakdown";
    case ErrorKind::Parameter: return "parameter";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

using Point = Vec2;

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]]. Inner product is tr(M L^T).
struct SymMat2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    constexpr SymMat2() = default;
    constexpr SymMat2(double xx_, double yy_, double xy_) : xx(xx_), yy(yy_), xy(xy_) {}

    static constexpr SymMat2 identity() { return {1.0, 1.0, 0.0}; }

    SymMat2& operator+=(const SymMat2& o) { xx += o.xx; yy += o.yy; xy += o.xy; return *this; }
    SymMat2& operator-=(const SymMat2& o) { xx -= o.xx; yy -= o.yy; xy -= o.xy; return *this; }
    SymMat2& operator*=(double s) { xx *= s; yy *= s; xy *= s; return *this; }
    friend SymMat2 operator+(SymMat2 a, const SymMat2& b) { return a += b; }
    friend SymMat2 operator-(SymMat2 a, const SymMat2& b) { return a -= b; }
    friend SymMat2 operator-(const SymMat2& a) { return {-a.xx, -a.yy, -a.xy}; }
    friend SymMat2 operator*(double s, SymMat2 a) { return a *= s; }
    friend SymMat2 operator*(SymMat2 a, double s) { return a *= s; }
    friend bool operator==(const SymMat2&, const SymMat2&) = default;

    double trace() const { return xx + yy; }
};

inline double inner(const SymMat2& a, const SymMat2& b) { return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy; }
inline double frobenius(const SymMat2& a) { return std::sqrt(inner(a, a)); }

/// Eigenvalues (min, max) of a symmetric 2x2 matrix.
inline std::pair<double, double> eigenvalues(const SymMat2& m) {
    const double mean = 0.5 * (m.xx + m.yy);
    const double rad = std::hypot(0.5 * (m.xx - m.yy), m.xy);
    return {mean - rad, mean + rad};
}

/// General 2x2 matrix, row-major: a(i, j) = d[2*i + j]. Used for full displacement gradients.
struct Mat2 {
    std::array<double, 4> d{0.0, 0.0, 0.0, 0.0};

    constexpr Mat2() = default;
    constexpr Mat2(double a00, double a01, double a10, double a11) : d{a00, a01, a10, a11} {}

    double& operator()(int i, int j) { return d[2 * i + j]; }
    double operator()(int i, int j) const { return d[2 * i + j]; }

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Mat2& operator+=(const Mat2& o) { for (int k = 0; k < 4; ++k) d[k] += o.d[k]; return *this; }
    Mat2& operator-=(const Mat2& o) { for (int k = 0; k < 4; ++k) d[k] -= o.d[k]; return *this; }
    Mat2& operator*=(double s) { for (auto& e : d) e *= s; return *this; }
    friend Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
    friend Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
    friend Mat2 operator*(double s, Mat2 a) { return a *= s; }
    friend Mat2 operator*(Mat2 a, double s) { return a *= s; }
    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0), a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1),
                a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0), a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1)};
    }
    friend Vec2 operator*(const Mat2& a, const Vec2& v) {
        return {a(0, 0) * v.x + a(0, 1) * v.y, a(1, 0) * v.x + a(1, 1) * v.y};
    }

    double det() const { return d[0] * d[3] - d[1] * d[2]; }
    double norm() const { return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]); }
};

/// a ⊗ b, i.e. (a b^T).
inline Mat2 outer(const Vec2& a, const Vec2& b) { return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}; }

/// Symmetric part (G + G^T)/2.
inline SymMat2 sym(const Mat2& g) { return {g(0, 0), g(1, 1), 0.5 * (g(0, 1) + g(1, 0))}; }

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool contains(const Point& p, double tol = 0.0) const {
        return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
    }
};

}  // namespace gammafrac
