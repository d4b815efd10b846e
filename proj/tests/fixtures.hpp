#pragma once

// Shared cracked displacements for the test suites.

#include "gammafrac/sharp.hpp"

#include <cmath>

namespace fixtures {

using namespace gammafrac;

/// Full vertical crack at x = 0.5 in the unit square; u = 0 on the left, (delta, 0) on the right.
inline CrackedDisplacement vertical_crack(double delta = 1.0) {
    const auto seg = CrackSegment::make({0.5, 0.0}, {0.5, 1.0}, {1.0, 0.0});
    return CrackedDisplacement(
        Rect{}, {seg}, [delta](const Point& x) { return x.x > 0.5 ? Vec2{delta, 0.0} : Vec2{}; },
        [](const Point&) { return Mat2{}; });
}

/// Full vertical crack with a jump that varies along the segment and a smooth background field.
inline CrackedDisplacement varying_crack() {
    const auto seg = CrackSegment::make({0.5, 0.0}, {0.5, 1.0}, {1.0, 0.0});
    return CrackedDisplacement(Rect{}, {seg}, [](const Point& x) {
        Vec2 u{0.1 * x.x * x.y, 0.2 * x.x * x.x};
        if (x.x > 0.5) u += Vec2{1.0 + 0.5 * x.y * x.y, 0.3 * std::sin(x.y)};
        return u;
    });
}

}  // namespace fixtures
