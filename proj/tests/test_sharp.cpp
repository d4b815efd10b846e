#include "gammafrac/sharp.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace gammafrac;

namespace {

const auto A1 = ElasticTensor::scaled_identity(1.0);
const auto Q1 = DamageLaw::quadratic(1.0);

}  // namespace

TEST(SymmetricTensorJump, Examples) {
    EXPECT_EQ(symmetric_tensor_jump({2.0, 0.0}, {1.0, 0.0}), (SymMat2{2.0, 0.0, 0.0}));
    EXPECT_EQ(symmetric_tensor_jump({0.0, 3.0}, {1.0, 0.0}), (SymMat2{0.0, 0.0, 1.5}));
    EXPECT_EQ(symmetric_tensor_jump({1.0, 1.0}, {1.0, 0.0}), (SymMat2{1.0, 0.0, 0.5}));
    const Vec2 j{0.3, -1.7}, n{0.6, 0.8};
    EXPECT_NEAR(symmetric_tensor_jump(j, n).trace(), dot(j, n), 1e-15);
    EXPECT_THROW(symmetric_tensor_jump(j, {1.0, 1.0}), Error);
}

TEST(CrackSegment, Validation) {
    EXPECT_THROW(CrackSegment::make({0.0, 0.0}, {1.0, 0.0}, {0.6, 0.8}), Error);
    EXPECT_THROW(CrackSegment::make({0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}), Error);
    const auto s = CrackSegment::make({0.0, 0.0}, {1.0, 0.0});
    EXPECT_EQ(s.nu, (Vec2{0.0, 1.0}));
    const auto t = CrackSegment::make({0.0, 0.5}, {1.0, 0.5});
    EXPECT_THROW(CrackedDisplacement(Rect{}, {s, CrackSegment::make({0.5, -0.5}, {0.5, 0.5})}, {}), Error);
    EXPECT_NO_THROW(CrackedDisplacement(Rect{}, {s, t}, [](const Point&) { return Vec2{}; }));
}

TEST(EvaluatePhi, ZeroField) {
    const CrackedDisplacement u(Rect{}, {}, [](const Point&) { return Vec2{}; });
    const auto b = evaluate_phi(u, A1, Q1, zero_potential());
    EXPECT_EQ(b.total, 0.0);
    EXPECT_EQ(b.bulk_elastic, 0.0);
}

TEST(EvaluatePhi, VerticalCrack) {
    const auto b = evaluate_phi(fixtures::vertical_crack(), A1, Q1, zero_potential());
    EXPECT_NEAR(b.bulk_elastic, 0.0, 1e-14);
    EXPECT_NEAR(b.surface_a, 2.0, 1e-12);
    EXPECT_NEAR(b.surface_b, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(b.total, 2.0 + 2.0 / 3.0, 1e-12);
}

TEST(EvaluatePhi, VerticalCrackWithFracking) {
    const auto f = make_fracking(AffineInV::constant(0.0, 1.0, 0.1));
    const auto b = evaluate_phi(fixtures::vertical_crack(), A1, Q1, f);
    EXPECT_NEAR(b.surface_Finf, -0.1, 1e-12);
    EXPECT_NEAR(b.bulk_potential, 0.0, 1e-14);
    EXPECT_NEAR(b.total, 2.0 + 2.0 / 3.0 - 0.1, 1e-12);
}

TEST(EvaluatePhi, PolynomialPiecesMatchClosedForm) {
    const auto seg = CrackSegment::make({0.5, 0.0}, {0.5, 1.0}, {1.0, 0.0});
    const CrackedDisplacement u(Rect{}, {seg}, [](const Point& p) {
        return p.x < 0.5 ? Vec2{p.x * p.x, p.x * p.y} : Vec2{p.y * p.y, p.x + p.y};
    });
    const auto b = evaluate_phi(u, A1, Q1, zero_potential());
    // ∫ 5x² + y²/2 over the left half plus ∫ 1 + (2y+1)²/2 over the right half.
    EXPECT_NEAR(b.bulk_elastic, 15.0 / 8.0, 1e-10);
    // a ∫ √((y² - 1/4)² + (1/2 + y/2)² / 2) dy, adaptive reference.
    EXPECT_NEAR(b.surface_a, 1.2030097991196986, 1e-10);
}

TEST(EvaluatePhi, CutCellsOffGrid) {
    // Crack line x = 0.37 is not aligned with the background grid.
    const auto seg = CrackSegment::make({0.37, 0.0}, {0.37, 1.0}, {1.0, 0.0});
    const CrackedDisplacement u(Rect{}, {seg}, [](const Point& p) {
        return p.x < 0.37 ? Vec2{p.x * p.y, 0.0} : Vec2{0.0, p.x * p.x};
    });
    const auto b = evaluate_phi(u, A1, Q1, zero_potential());
    // Left: exx = y, exy = x/2 -> y² + x²/2. Right: exy = x -> 2x².
    const double l = 0.37;
    const double left = l / 3.0 + 0.5 * l * l * l / 3.0;
    const double right = 2.0 * (1.0 - l * l * l) / 3.0;
    EXPECT_NEAR(b.bulk_elastic, left + right, 1e-10);
}

TEST(EvaluatePhi, InteriorTipRefinement) {
    // Crack from the bottom edge to (0.5, 0.625); the opening closes linearly at the tip.
    const auto seg = CrackSegment::make({0.5, 0.0}, {0.5, 0.625}, {1.0, 0.0});
    const CrackedDisplacement u(Rect{}, {seg}, [](const Point& p) {
        return (p.x > 0.5 && p.y < 0.625) ? Vec2{0.625 - p.y, 0.0} : Vec2{};
    });
    const auto b = evaluate_phi(u, A1, Q1, zero_potential());
    EXPECT_NEAR(b.bulk_elastic, 0.5 * 0.5 * 0.625, 1e-9);
    EXPECT_NEAR(b.surface_a, 0.625 * 0.625, 1e-12);
    EXPECT_NEAR(b.surface_b, 2.0 / 3.0 * 0.625, 1e-12);
}

TEST(EvaluateR, Examples) {
    const CrackedDisplacement zero(Rect{}, {}, [](const Point&) { return Vec2{}; });
    EXPECT_EQ(evaluate_R(zero, [](const Point&) { return Vec2{}; }, A1, Q1, zero_potential()).total, 0.0);

    const double delta = 0.8;
    const VectorField f = [delta](const Point& p) { return p.x >= 1.0 - 1e-12 ? Vec2{delta, 0.0} : Vec2{}; };
    const auto r = evaluate_R(zero, f, A1, Q1, zero_potential());
    EXPECT_NEAR(r.surface_a, 2.0 * delta, 1e-12);
    // The indicator switch is located to the mismatch tolerance, not to machine precision.
    EXPECT_NEAR(r.surface_b, 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(r.mismatch_length, 1.0, 1e-9);

    // Opening f - u along the outward normal makes the fracking recession negative.
    const auto frack = make_fracking(AffineInV::constant(0.0, 1.0, 0.1));
    EXPECT_NEAR(evaluate_R(zero, f, A1, Q1, frack).surface_Finf, -0.1 * delta, 1e-12);
}

TEST(EvaluateR, HomogeneityInMismatch) {
    const CrackedDisplacement zero(Rect{}, {}, [](const Point&) { return Vec2{}; });
    const auto frack = make_fracking(AffineInV::constant(0.0, 1.0, 0.1));
    auto f_r = [](double r) {
        return VectorField([r](const Point& p) {
            return p.y <= 1e-12 ? Vec2{r * std::sin(3.0 * p.x), r * p.x * (1.0 - p.x)} : Vec2{};
        });
    };
    const auto r1 = evaluate_R(zero, f_r(1.0), A1, Q1, frack);
    const auto r3 = evaluate_R(zero, f_r(3.0), A1, Q1, frack);
    EXPECT_NEAR(r3.surface_a, 3.0 * r1.surface_a, 1e-12);
    EXPECT_NEAR(r3.surface_Finf, 3.0 * r1.surface_Finf, 1e-12);
    EXPECT_NEAR(r3.surface_b, r1.surface_b, 1e-8);
}

TEST(EvaluateR, PartialMismatchLengthOnRoundedRectangle) {
    const auto omega = SmoothDomain::rounded_rect(Rect{}, 0.2);
    const CrackedDisplacement zero(Rect{}, {}, [](const Point&) { return Vec2{}; });
    const double w = 0.1;
    const VectorField f = [w](const Point& p) {
        if (p.x < 1.0 - 1e-12) return Vec2{};
        return Vec2{std::max(0.0, std::min({1.0, (p.y - 0.2) / w, (0.8 - p.y) / w})), 0.0};
    };
    const auto r = evaluate_R(zero, f, omega, A1, Q1, zero_potential());
    EXPECT_NEAR(r.mismatch_length, 0.6, 1e-9);
    EXPECT_NEAR(r.surface_a, 2.0 * (0.6 - w), 1e-10);
    EXPECT_NEAR(r.total, 1.4, 1e-9);
}

TEST(SharpTotal, Examples) {
    const auto u = fixtures::vertical_crack();
    EXPECT_EQ(sharp_total(u, std::nullopt, A1, Q1, zero_potential()).total,
              evaluate_phi(u, A1, Q1, zero_potential()).total);
    const VectorField matching = [](const Point& p) { return p.x > 0.5 ? Vec2{1.0, 0.0} : Vec2{}; };
    EXPECT_NEAR(sharp_total(u, matching, A1, Q1, zero_potential()).total, 2.0 + 2.0 / 3.0, 1e-12);

    const CrackedDisplacement affine(Rect{}, {}, [](const Point& p) { return Vec2{0.1 * p.x + 0.2 * p.y, -0.05 * p.y}; });
    const VectorField f = [&](const Point& p) { return affine(p); };
    // |e|² = 0.01 + 0.0025 + 2 * 0.01.
    EXPECT_NEAR(sharp_total(affine, f, A1, Q1, zero_potential()).total, 0.0325, 1e-12);
}

TEST(SharpProperties, JumpHomogeneityAndFrameInvariance) {
    const auto frack = make_fracking(AffineInV::constant(0.0, 1.0, 0.1));
    const auto b1 = evaluate_phi(fixtures::varying_crack(), A1, Q1, frack);
    const auto seg = CrackSegment::make({0.5, 0.0}, {0.5, 1.0}, {1.0, 0.0});
    const CrackedDisplacement doubled(Rect{}, {seg}, [](const Point& x) {
        Vec2 u{0.1 * x.x * x.y, 0.2 * x.x * x.x};
        if (x.x > 0.5) u += 2.0 * Vec2{1.0 + 0.5 * x.y * x.y, 0.3 * std::sin(x.y)};
        return u;
    });
    const auto b2 = evaluate_phi(doubled, A1, Q1, frack);
    EXPECT_NEAR(b2.surface_a, 2.0 * b1.surface_a, 1e-10);
    EXPECT_NEAR(b2.surface_Finf, 2.0 * b1.surface_Finf, 1e-10);
    EXPECT_NEAR(b2.surface_b, b1.surface_b, 1e-14);

    const auto flipped = evaluate_phi(fixtures::varying_crack().flipped(0), A1, Q1, frack);
    EXPECT_NEAR(flipped.surface_a, b1.surface_a, 1e-12);
    EXPECT_NEAR(flipped.surface_Finf, b1.surface_Finf, 1e-12);
    EXPECT_NEAR(flipped.total, b1.total, 1e-12);
}

TEST(SharpProperties, AdditiveOverSubdomains) {
    auto field = [](const Point& x) {
        Vec2 u{0.3 * x.y * x.y, 0.1 * x.x};
        if (x.x > 0.25) u += Vec2{0.5, 0.0};
        if (x.x > 0.75) u += Vec2{0.0, 0.2 * x.y};
        return u;
    };
    const auto s1 = CrackSegment::make({0.25, 0.0}, {0.25, 1.0}, {1.0, 0.0});
    const auto s2 = CrackSegment::make({0.75, 0.0}, {0.75, 1.0}, {1.0, 0.0});
    const auto whole = evaluate_phi(CrackedDisplacement(Rect{}, {s1, s2}, field), A1, Q1, zero_potential());
    const auto left = evaluate_phi(CrackedDisplacement(Rect{0.0, 0.0, 0.5, 1.0}, {s1}, field), A1, Q1, zero_potential());
    const auto right = evaluate_phi(CrackedDisplacement(Rect{0.5, 0.0, 1.0, 1.0}, {s2}, field), A1, Q1, zero_potential());
    EXPECT_NEAR(whole.total, left.total + right.total, 1e-10);
}

TEST(SharpProperties, PartsSumToTotal) {
    const auto frack = make_fracking(AffineInV::constant(0.5, 1.0, 0.1));
    const auto b = evaluate_phi(fixtures::varying_crack(), A1, Q1, frack);
    const double parts = b.bulk_elastic + b.bulk_potential + b.surface_a + b.surface_b + b.surface_Finf + b.boundary_R;
    EXPECT_NEAR(b.total, parts, 1e-12 * std::abs(parts));
}
