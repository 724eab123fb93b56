#include "fixtures.hpp"

#include "fraccap/extension.hpp"

#include <doctest.h>

#include <set>
#include <tuple>

using namespace fraccap;
using namespace fixtures;

namespace {

const ExtensionSolution& disk_solution()
{
    static const ExtensionSolution sol = solve_extension(disk(), ExtensionGrid::for_body(disk(), 0.1));
    return sol;
}

}  // namespace

TEST_CASE("shell fit of a synthetic field")
{
    const auto u = [](const Point& x) { return 0.5 / x.norm(); };
    CHECK(std::abs(shell_fit(u, Point::Zero(), 2.0, 6.0).value - 0.5) < 1e-10);
    const auto v = [](const Point& x) { return 0.5 / x.norm() + 0.2 / x.squaredNorm(); };
    CHECK(std::abs(shell_fit(v, Point::Zero(), 2.0, 6.0).value - 0.5) < 1e-10);
    CHECK_THROWS(shell_fit(u, Point::Zero(), 2.0, 1.0));

    // the same field sampled on a grid goes through trilinear interpolation
    ExtensionSolution s;
    s.grid = ExtensionGrid::for_body(disk(), 0.1);
    const int n = s.grid.count_xy(), m = s.grid.half_count();
    s.field.assign(static_cast<std::size_t>(n) * n * (m + 1), 0.0);
    s.mask.assign(static_cast<std::size_t>(n) * n, 0);
    for (int k = 0; k <= m; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double r = (s.node(i, j, k) - s.grid.center).norm();
                s.field[s.index(i, j, k)] = r > 0 ? std::min(1.0, 0.5 / r) : 1.0;
                if (k == 0 && r <= 1.0) s.mask[static_cast<std::size_t>(j) * n + i] = 1;
            }
    s.far_coefficient = 0.5;
    CHECK(std::abs(extension_capacity(s) - 0.5) < 2e-3);
}

TEST_CASE("grid validation")
{
    const ExtensionGrid g = ExtensionGrid::for_body(disk(), 0.1);
    CHECK(g.half_width >= 4.0 * disk().bounding_radius(g.center) - 1e-12);
    CHECK_NOTHROW(g.validate(disk()));
    ExtensionGrid small = g;
    small.half_width = 2.0;
    CHECK_THROWS(small.validate(disk()));
    CHECK_THROWS(ExtensionGrid::for_body(disk(), 0.2).validate(disk()));
    CHECK_THROWS(ExtensionGrid::for_body(make_ball(Point::Zero(), 1.0, DirectionGrid::sphere(512)), 0.1));
}

TEST_CASE("disk extension solution")
{
    const ExtensionSolution& s = disk_solution();
    CHECK(s.residual <= 1e-8);
    double lo = 1e300, hi = -1e300;
    for (double v : s.field) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0 + 1e-12);

    const int n = s.grid.count_xy(), m = s.grid.half_count();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (s.mask[static_cast<std::size_t>(j) * n + i]) CHECK(s.at(i, j, 0) == 1.0);

    // monotone along the axis
    for (int k = 1; k <= m; ++k) CHECK(s.at(m, m, k) < s.at(m, m, k - 1));

    // discrete mean value property at interior nodes
    double worst = 0.0;
    for (int k = 1; k < m; ++k)
        for (int j = 1; j < n - 1; ++j)
            for (int i = 1; i < n - 1; ++i) {
                const double avg = (s.at(i + 1, j, k) + s.at(i - 1, j, k) + s.at(i, j + 1, k) + s.at(i, j - 1, k) +
                                    s.at(i, j, k + 1) + s.at(i, j, k - 1)) / 6.0;
                worst = std::max(worst, std::abs(avg - s.at(i, j, k)));
            }
    CHECK(worst <= 1e-8);

    CHECK(s.capacity_estimate == doctest::Approx(2.0 / std::numbers::pi).epsilon(0.03));
    CHECK(s.gauss_charge == doctest::Approx(s.capacity_estimate).epsilon(0.05));
}

TEST_CASE("doubling the box barely moves the capacity")
{
    const ExtensionSolution& a = disk_solution();
    const ExtensionSolution b = solve_extension(disk(), ExtensionGrid::for_body(disk(), 0.1, 8.0));
    CHECK(std::abs(b.capacity_estimate - a.capacity_estimate) / a.capacity_estimate < 0.01);
}

TEST_CASE("level bodies")
{
    const ExtensionSolution& s = disk_solution();
    double prev = 1e300;
    std::vector<Quadrature> qs;
    for (double r : {0.3, 0.5, 0.7, 0.9}) {
        const Quadrature q = extension_level_body(s, r);
        CHECK(q.dim == 3);
        CHECK(q.total_weight() < prev);
        prev = q.total_weight();
        qs.push_back(q);
    }
    // nesting cell-wise: solid bodies at coarsen 1 keep one node per cell
    for (std::size_t a = 0; a + 1 < qs.size(); ++a) {
        std::vector<Point> lo = qs[a].nodes;
        auto key = [](const Point& p) { return std::tuple(std::lround(p.x() * 1e6), std::lround(p.y() * 1e6), std::lround(p.z() * 1e6)); };
        std::set<std::tuple<long, long, long>> set;
        for (const auto& p : lo) set.insert(key(p));
        for (const auto& p : qs[a + 1].nodes) CHECK(set.count(key(p)) == 1);
    }

    // rotational symmetry of {U >= 0.5} about the body's axis: boundary radius along rays
    for (double z : {0.0, 0.4}) {
        std::vector<double> reach;
        for (int a = 0; a < 16; ++a) {
            const double t = 2 * std::numbers::pi * (a + 0.3) / 16;
            const Point d(std::cos(t), std::sin(t), 0.0);
            double lo = 0.0, hi = 3.5;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (s.value(Point(0, 0, z) + mid * d) >= 0.5 ? lo : hi) = mid;
            }
            reach.push_back(lo);
        }
        const auto [rmin, rmax] = std::minmax_element(reach.begin(), reach.end());
        CHECK((*rmax - *rmin) / *rmax <= 0.02);
    }

    CHECK_THROWS(extension_level_body(s, 1.0));
    CHECK_THROWS(extension_level_body(s, 0.01));
}
