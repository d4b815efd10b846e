#include "gammafrac/recovery.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gammafrac;

namespace {

const auto A1 = ElasticTensor::scaled_identity(1.0);
const auto Q1 = DamageLaw::quadratic(1.0);

// Closed form for the full vertical crack with unit jump, A = I, alpha = 1:
// bulk 1, core damage (1-eps)^2, collar damage (2/3)(1-eps)^2.
double vertical_hand(double eps) { return 1.0 + 5.0 / 3.0 * (1.0 - eps) * (1.0 - eps); }

}  // namespace

TEST(OptimalTheta, VerticalCrack) {
    const auto th = optimal_theta(fixtures::vertical_crack(), A1, Q1);
    EXPECT_NEAR(th(0, 0.3), 0.5, 1e-14);
    EXPECT_NEAR(th.lip(0), 0.0, 1e-14);
    const auto th2 = optimal_theta(fixtures::vertical_crack(2.0), A1, DamageLaw::quadratic(4.0));
    EXPECT_NEAR(th2(0, 0.7), 2.0, 1e-14);
    EXPECT_THROW(optimal_theta(fixtures::vertical_crack(), A1, DamageLaw::custom(1.0, [](double) { return 0.0; })), Error);
}

TEST(Recovery, VerticalCrackMatchesHandFormula) {
    const auto u = fixtures::vertical_crack();
    for (double eps : {0.1, 0.05, 0.02, 0.01}) {
        const Recovery r(u, optimal_theta(u, A1, Q1), eps, Q1);
        const auto e = evaluate_F_eps(r, A1, zero_potential());
        EXPECT_NEAR(e.bulk, 1.0, 1e-10) << eps;
        EXPECT_NEAR(e.damage, 5.0 / 3.0 * (1.0 - eps) * (1.0 - eps), 1e-10) << eps;
        EXPECT_NEAR(e.total(), vertical_hand(eps), 1e-10) << eps;
    }
}

TEST(Recovery, FrackingAddsConstantWork) {
    const auto u = fixtures::vertical_crack();
    const auto f = make_fracking(AffineInV::constant(0.0, 1.0, 0.1));
    for (double eps : {0.1, 0.02}) {
        const Recovery r(u, optimal_theta(u, A1, Q1), eps, Q1);
        EXPECT_NEAR(evaluate_F_eps(r, A1, f).potential, -0.1, 1e-10);
    }
}

TEST(Recovery, FieldsInsideAndOutsideTheCore) {
    const auto u = fixtures::vertical_crack();
    const Recovery r(u, optimal_theta(u, A1, Q1), 0.1, Q1);
    EXPECT_NEAR(r.v({0.5, 0.5}), 0.1, 1e-15);
    EXPECT_NEAR(r.v({0.53, 0.5}), 0.1, 1e-15);
    EXPECT_NEAR(r.v({0.6, 0.5}), 0.1 + 0.9 * 0.5, 1e-12);
    EXPECT_EQ(r.v({0.7, 0.5}), 1.0);
    EXPECT_NEAR(r.u({0.5, 0.5}).x, 0.5, 1e-15);
    EXPECT_NEAR(r.u({0.525, 0.2}).x, 0.75, 1e-12);
    EXPECT_EQ(r.u({0.6, 0.2}).x, 1.0);
    EXPECT_EQ(r.u({0.4, 0.2}).x, 0.0);
    EXPECT_NEAR(r.grad_u({0.51, 0.3})(0, 0), 10.0, 1e-12);
}

TEST(Recovery, ThetaScalingCostsEnergy) {
    const auto u = fixtures::vertical_crack();
    const auto opt = optimal_theta(u, A1, Q1);
    const double eps = 0.005;
    const double e_opt = evaluate_F_eps(Recovery(u, opt, eps, Q1), A1, zero_potential()).total();
    const double e_half = evaluate_F_eps(Recovery(u, opt.scaled(0.5), eps, Q1), A1, zero_potential()).total();
    const double e_twice = evaluate_F_eps(Recovery(u, opt.scaled(2.0), eps, Q1), A1, zero_potential()).total();
    // Limits: 8/3 for the optimum, 2.5 + 2/3 for both scalings.
    EXPECT_GT(e_half, e_opt + 0.4);
    EXPECT_GT(e_twice, e_opt + 0.4);
    const auto sharp = evaluate_phi(u, A1, Q1, zero_potential());
    EXPECT_NEAR(limit_parts(u, opt.scaled(0.5), A1, Q1, sharp).total(), 2.5 + 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(limit_parts(u, opt.scaled(2.0), A1, Q1, sharp).total(), 2.5 + 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(limit_parts(u, opt, A1, Q1, sharp).total(), sharp.total, 1e-12);
}

TEST(Recovery, FeasibilityProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> eps_d(0.005, 0.05);
    const auto u = fixtures::varying_crack();
    const auto th = optimal_theta(u, A1, Q1);
    for (int trial = 0; trial < 8; ++trial) {
        const double eps = eps_d(rng);
        const Recovery r(u, th, eps, Q1);
        const auto rep = sample_feasibility(r, 80);
        EXPECT_GE(rep.min_v, eps * (1.0 - 1e-12));
        EXPECT_LE(rep.max_v, 1.0);
        EXPECT_LE(rep.max_grad_v_times_eps, 1.0 + 1e-6);
        EXPECT_LE(rep.linf_u, u.linf() * (1.0 + 1e-12));
    }
}

TEST(Recovery, L2DistanceDecreases) {
    const auto u = fixtures::varying_crack();
    const auto th = optimal_theta(u, A1, Q1);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.04, 0.02, 0.01, 0.005}) {
        const double d = l2_distance_to_base(Recovery(u, th, eps, Q1));
        EXPECT_LT(d, prev);
        prev = d;
    }
    EXPECT_LT(prev, 0.05);
}

TEST(Recovery, AnalyticGradientsMatchDifferences) {
    const auto u = fixtures::varying_crack();
    const Recovery r(u, optimal_theta(u, A1, Q1), 0.02, Q1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> s(0.05, 0.95), t(-0.04, 0.04);
    const double h = 1e-6;
    for (int k = 0; k < 200; ++k) {
        const Point x{0.5 + t(rng), s(rng)};
        const Mat2 g = r.grad_u(x);
        const Vec2 dx = (r.u(x + Vec2{h, 0.0}) - r.u(x - Vec2{h, 0.0})) / (2.0 * h);
        const Vec2 dy = (r.u(x + Vec2{0.0, h}) - r.u(x - Vec2{0.0, h})) / (2.0 * h);
        const bool near_kink = std::abs(std::abs(x.x - 0.5) - r.theta()(0, x.y) * r.eps()) < 10 * h;
        if (near_kink) continue;
        EXPECT_NEAR(g(0, 0), dx.x, 1e-5 * (1.0 + std::abs(dx.x)));
        EXPECT_NEAR(g(1, 0), dx.y, 1e-5 * (1.0 + std::abs(dx.y)));
        EXPECT_NEAR(g(0, 1), dy.x, 1e-5 * (1.0 + std::abs(dy.x)));
        EXPECT_NEAR(g(1, 1), dy.y, 1e-5 * (1.0 + std::abs(dy.y)));
        const Vec2 gv = r.grad_v(x);
        const double vx = (r.v(x + Vec2{h, 0.0}) - r.v(x - Vec2{h, 0.0})) / (2.0 * h);
        const double vy = (r.v(x + Vec2{0.0, h}) - r.v(x - Vec2{0.0, h})) / (2.0 * h);
        EXPECT_NEAR(gv.x, vx, 1e-4 * (1.0 + std::abs(vx)));
        EXPECT_NEAR(gv.y, vy, 1e-4 * (1.0 + std::abs(vy)));
    }
}

TEST(Recovery, Errors) {
    const auto u = fixtures::vertical_crack();
    const auto th = optimal_theta(u, A1, Q1);
    EXPECT_THROW(Recovery(u, th, 0.0, Q1), Error);
    try {
        Recovery(u, th, 0.5, Q1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TubeOverlap);
    }
    try {
        Recovery(u, th.scaled(0.0), 1.0, DamageLaw::quadratic(2.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parameter);
    }
    // The normal rays reach x = 0 and x = 1 at distance 0.5.
    EXPECT_NEAR(Recovery(u, th, 0.1, Q1).eps_max(), 0.5 / 1.5, 1e-12);
}

TEST(Recovery, TwoCracksRespectPairwiseBound) {
    const auto s1 = CrackSegment::make({0.3, 0.0}, {0.3, 1.0}, {1.0, 0.0});
    const auto s2 = CrackSegment::make({0.7, 0.0}, {0.7, 1.0}, {1.0, 0.0});
    const CrackedDisplacement u(Rect{}, {s1, s2}, [](const Point& x) {
        return Vec2{(x.x > 0.3 ? 1.0 : 0.0) + (x.x > 0.7 ? 1.0 : 0.0), 0.0};
    });
    const auto th = optimal_theta(u, A1, Q1);
    // 0.4 / (0.5 + 0.5 + 2).
    EXPECT_NEAR(Recovery(u, th, 0.01, Q1).eps_max(), 0.4 / 3.0, 1e-12);
    const auto e = evaluate_F_eps(Recovery(u, th, 0.01, Q1), A1, zero_potential());
    EXPECT_NEAR(e.total(), 2.0 * vertical_hand(0.01) - 0.0, 1e-9);
}

TEST(GammaLadder, VerticalCrackConverges) {
    const auto t = gamma_ladder(fixtures::vertical_crack(), A1, Q1, zero_potential(), {0.04, 0.02, 0.01, 0.005});
    ASSERT_EQ(t.rows.size(), 4u);
    for (const auto& row : t.rows) EXPECT_NEAR(row.total_Feps, vertical_hand(row.eps), 1e-10);
    EXPECT_TRUE(t.tail_monotone);
    EXPECT_TRUE(t.extrapolated.fitted);
    EXPECT_NEAR(t.extrapolated.order, 1.0, 0.05);
    EXPECT_LT(t.extrapolated_gap, 1e-3);
    EXPECT_LT(t.rows.back().gap / t.sharp.total, 0.01);
}

TEST(GammaLadder, VaryingCrackWithin1Percent) {
    const auto f = make_fracking(AffineInV::constant(0.2, 1.0, 0.1));
    const auto t = gamma_ladder(fixtures::varying_crack(), A1, Q1, f, {0.02, 0.01, 0.005, 0.0025});
    EXPECT_TRUE(t.tail_monotone);
    EXPECT_LT(t.rows.back().gap / std::abs(t.sharp.total), 0.01);
    EXPECT_LT(t.extrapolated_gap / std::abs(t.sharp.total), 0.01);
    for (const auto& row : t.rows) {
        EXPECT_GE(row.min_v, row.eps * (1.0 - 1e-12));
        EXPECT_LE(row.max_grad_v_times_eps, 1.0 + 1e-6);
    }
}

TEST(Recovery, GradientBoundsStayBounded) {
    const auto u = fixtures::varying_crack();
    const auto th = optimal_theta(u, A1, Q1);
    std::vector<GradientBounds> b;
    for (double eps : {0.04, 0.02, 0.01, 0.005, 0.0025}) b.push_back(gradient_bounds(Recovery(u, th, eps, Q1)));
    for (const auto& x : b) {
        EXPECT_LT(x.l1, 1.5 * b.front().l1);
        EXPECT_LT(x.weighted_l2, 1.5 * b.front().weighted_l2);
    }
    // Vertical crack: ∫|∇u_ε| = |J| H¹ = 1 exactly; ∫v|∇u_ε|² = bulk = 1.
    const auto v = fixtures::vertical_crack();
    const auto g = gradient_bounds(Recovery(v, optimal_theta(v, A1, Q1), 0.01, Q1));
    EXPECT_NEAR(g.l1, 1.0, 1e-10);
    EXPECT_NEAR(g.weighted_l2, 1.0, 1e-10);
}

TEST(GammaLadder, NoCrackHasZeroGap) {
    const CrackedDisplacement u(Rect{}, {}, [](const Point& x) { return Vec2{0.1 * x.x * x.y, -0.2 * x.y}; });
    const auto t = gamma_ladder(u, A1, Q1, zero_potential(), {0.1, 0.05, 0.025});
    for (const auto& row : t.rows) EXPECT_NEAR(row.gap, 0.0, 1e-12);
}

TEST(GammaLadder, RejectsUnsortedLadder) {
    EXPECT_THROW(gamma_ladder(fixtures::vertical_crack(), A1, Q1, zero_potential(), {0.01, 0.02}), Error);
}

TEST(Richardson, Examples) {
    // Sequence 1 + 2^-k: exact extrapolation to 1 with order 1.
    const auto x = richardson(1.5, 1.25, 1.125);
    EXPECT_TRUE(x.fitted);
    EXPECT_NEAR(x.value, 1.0, 1e-14);
    EXPECT_NEAR(x.order, 1.0, 1e-14);
    EXPECT_FALSE(richardson(1.0, 1.1, 1.0).fitted);
}
