#include "fixtures.hpp"

#include "fraccap/analysis.hpp"

#include <doctest.h>

using namespace fraccap;
using namespace fixtures;

TEST_CASE("concavity index on closed forms")
{
    SamplingRegion outside{2, Point::Zero(), 1.2, 6.0};
    ConcavityOptions o;
    o.beta_lo = -4.0;
    const ConcavityReport inv = concavity_index([](const Point& x) { return 1.0 / x.norm(); }, outside, o);
    CHECK(inv.alpha == doctest::Approx(-1.0).epsilon(0.05));
    CHECK(inv.beta_lo <= inv.alpha);
    CHECK(inv.alpha <= inv.beta_hi);
    CHECK(inv.beta_hi - inv.beta_lo <= o.bracket_tol);

    // on a disk of radius R the Gaussian is 1/(2R^2)-concave, so R = 6 keeps alpha within 0.014 of 0
    SamplingRegion ball{2, Point::Zero(), 0.0, 6.0};
    const ConcavityReport gauss = concavity_index([](const Point& x) { return std::exp(-x.squaredNorm()); }, ball);
    CHECK(std::abs(gauss.alpha) <= 0.05);

    const ConcavityReport one = concavity_index([](const Point&) { return 1.0; }, ball);
    CHECK(one.alpha == 1.0);

    // accepted betas form a down-set
    for (const auto& a : inv.tests)
        for (const auto& b : inv.tests)
            if (a.passed && b.beta <= a.beta) CHECK(b.passed);

    // deterministic for a fixed seed, and the seed is recorded
    const ConcavityReport again = concavity_index([](const Point& x) { return 1.0 / x.norm(); }, outside, o);
    CHECK(again.alpha == inv.alpha);
    CHECK(again.seed == o.seed);

    CHECK_THROWS(concavity_index([](const Point&) { return -1.0; }, ball));
    CHECK_THROWS(concavity_index([](const Point&) { return 1.0; }, SamplingRegion{2, Point::Zero(), 2.0, 1.0}));
}

TEST_CASE("concavity experiment rejects shells over the body")
{
    CHECK_THROWS(body_concavity_experiment(disk(), 0.1, 0.5, 6.0));
}

TEST_CASE("three level t")
{
    CHECK(three_levels_t(0.5, 0.25, 0.5, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    for (double r : {0.1, 0.3, 0.6})
        for (double l : {0.1, 0.5, 0.9}) {
            CHECK(three_levels_t(r, r, l, 2) == doctest::Approx(r).epsilon(1e-14));
            CHECK(three_levels_t(r, r, l, 3) == doctest::Approx(r).epsilon(1e-14));
        }
}

TEST_CASE("experiment preconditions")
{
    CHECK_THROWS(bm_sweep(disk(), square(), {0.0, 0.5}, 0.1));
    CHECK_THROWS(bm_sweep(disk(), square(), {0.5, 0.3}, 0.1));
    CHECK_THROWS(homothetic_levels_experiment(disk(), 0.5, 0.25, 0.1));
    CHECK_THROWS(three_levels_experiment(disk(), 0.5, 0.25, 1.0, 0.1));
    CHECK_THROWS(level_scaling_experiment(disk(), {1.0}, 0.1));
}

TEST_CASE("equality probe flags a coarse resolution")
{
    const EqualityProbe p = bm_equality_probe(disk(), disk(1.0, p2(0.5, 0)), 0.2);
    CHECK(p.homothetic);
    CHECK_FALSE(p.resolution_adequate);
    CHECK(p.classification == ProbeClass::Tension);
    CHECK(p.advice.find("refine") != std::string::npos);
}

TEST_CASE("equality probe on homothetic balls")
{
    BMOptions o;
    o.ladder = {2.0, 1.0, 0.5};
    const EqualityProbe p = bm_equality_probe(disk(), disk(3.0, p2(2, 0)), 0.035, o);
    CHECK(p.homothetic);
    CHECK(p.classification == ProbeClass::Consistent);
}

TEST_CASE("radiality")
{
    const RadialityStats point = radiality_test([](const Point& x) { return 1.0 / x.norm(); }, 2, Point::Zero(), 0.1,
                                                {1.0, 2.0, 5.0});
    CHECK(point.max_spread < 1e-12);

    const CapacityRun d = capacity_run(disk(), 0.05, KernelSpec::fractional(2));
    CHECK(radiality_test(d.solution, Point::Zero(), {5.0}).max_spread < 0.01);

    const CapacityRun s = capacity_run(square(), 0.05, KernelSpec::fractional(2));
    const RadialityStats sq = radiality_test(s.solution, Point::Zero(), {2.0, 4.0, 8.0, 16.0});
    for (std::size_t i = 1; i < sq.spreads.size(); ++i) CHECK(sq.spreads[i] < sq.spreads[i - 1]);
    CHECK_THROWS(radiality_test(s.solution, Point::Zero(), {0.5}));
}

TEST_CASE("level sets of the disk")
{
    const CapacityRun run = capacity_run(disk(), 0.05, KernelSpec::fractional(2));
    const LevelSet a = level_set_extract(run.solution, 0.3, 0.05, DirectionGrid::circle(256));
    const LevelSet b = level_set_extract(run.solution, 0.5, 0.05, DirectionGrid::circle(256));
    CHECK(is_subset(b.body, a.body));
    CHECK(a.convexity_score >= 0.99);
    const HomothetyFit f = detect_homothety(a.body, disk());
    CHECK(f.residual / a.body.mean_half_width() < 1e-2);
    CHECK_THROWS(level_set_extract(run.solution, 1.0, 0.05));
}
