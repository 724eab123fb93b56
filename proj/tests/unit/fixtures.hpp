#pragma once

#include "fraccap/geometry.hpp"

#include <cmath>
#include <numbers>

namespace fixtures {

using fraccap::Point;

inline Point p2(double x, double y) { return Point(x, y, 0.0); }

inline fraccap::ConvexBody disk(double r = 1.0, Point c = Point::Zero(), int dirs = 256)
{
    return fraccap::make_ball(c, r, fraccap::DirectionGrid::circle(dirs));
}

inline fraccap::ConvexBody square(double a = 1.0, int dirs = 256)
{
    return fraccap::make_polytope({p2(a, a), p2(-a, a), p2(-a, -a), p2(a, -a)}, fraccap::DirectionGrid::circle(dirs));
}

inline fraccap::ConvexBody rotated_square(double angle, int dirs = 256)
{
    std::vector<Point> v;
    for (int i = 0; i < 4; ++i) {
        const double t = angle + std::numbers::pi / 4 + i * std::numbers::pi / 2;
        v.push_back(p2(std::sqrt(2.0) * std::cos(t), std::sqrt(2.0) * std::sin(t)));
    }
    return fraccap::make_polytope(v, fraccap::DirectionGrid::circle(dirs));
}

// index of the grid direction closest to angle t
inline int dir_index(const fraccap::DirectionGrid& g, double t)
{
    int best = 0;
    for (int i = 0; i < g.size(); ++i)
        if ((g[i] - p2(std::cos(t), std::sin(t))).norm() < (g[best] - p2(std::cos(t), std::sin(t))).norm()) best = i;
    return best;
}

}  // namespace fixtures
