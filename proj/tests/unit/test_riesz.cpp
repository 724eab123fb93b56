#include "fixtures.hpp"

#include "fraccap/riesz.hpp"

#include <doctest.h>

#include <random>

using namespace fraccap;
using namespace fixtures;

namespace {

Quadrature points_quadrature(const std::vector<Point>& pts, const std::vector<double>& w, int dim = 2)
{
    Quadrature q;
    q.dim = dim;
    q.nodes = pts;
    q.weights = w;
    q.cell_size = 0.1;
    return q;
}

// Midpoint rule on a fine lattice over the disk of area w, skipping nothing:
// lattice offset keeps the singular point between samples.
double disk_kernel_integral(double w, double s)
{
    const double r = std::sqrt(w / std::numbers::pi);
    const int n = 2000;
    const double h = 2 * r / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = -r + (i + 0.5) * h, y = -r + (j + 0.5) * h;
            const double d = std::hypot(x, y);
            if (d <= r) sum += std::pow(d, -s) * h * h;
        }
    return sum;
}

}  // namespace

TEST_CASE("assemble_kernel examples")
{
    const Quadrature two = points_quadrature({p2(0, 0), p2(2, 0)}, {0.01, 0.01});
    const Eigen::MatrixXd g = assemble_kernel(two, KernelSpec::fractional(2));
    CHECK(g(0, 1) == doctest::Approx(0.5));
    CHECK(g(0, 1) == g(1, 0));

    const Quadrature one = points_quadrature({p2(0, 0)}, {std::numbers::pi});
    CHECK(assemble_kernel(one, KernelSpec::fractional(2))(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

    const Quadrature q = rasterize(square(), 0.2);
    const Eigen::MatrixXd a = assemble_kernel(q, KernelSpec::fractional(2));
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS(assemble_kernel(q, KernelSpec::fractional(2), 10));
    CHECK_THROWS(assemble_kernel(points_quadrature({p2(0, 0), p2(0, 0)}, {1, 1}), KernelSpec::fractional(2)));
}

TEST_CASE("self term matches numerical integration")
{
    for (double w : {0.01, 0.5, std::numbers::pi}) {
        const double numeric = disk_kernel_integral(w, 1.0) / w;
        CHECK(self_term(w, 2, 1.0) == doctest::Approx(numeric).epsilon(2e-3));
        CHECK(self_term(w, 2, 1.0) == doctest::Approx(2.0 * std::sqrt(std::numbers::pi * w) / w).epsilon(1e-14));
    }
    const double v = 0.3;
    const double r = std::cbrt(3 * v / (4 * std::numbers::pi));
    CHECK(self_term(v, 3, 1.0) == doctest::Approx(2 * std::numbers::pi * r * r / v));
    CHECK(self_term(v, 3, 2.0) == doctest::Approx(4 * std::numbers::pi * r / v));
}

TEST_CASE("kernel spec validation")
{
    CHECK_NOTHROW(KernelSpec::fractional(2).validate(2));
    CHECK_NOTHROW(KernelSpec::newtonian(3).validate(3));
    CHECK_THROWS(KernelSpec({2.0, 2}).validate(2));
    CHECK_THROWS(KernelSpec({1.0, 2}).validate(3));
}

TEST_CASE("conjugate gradient equals dense elimination on small systems")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 1; n <= 5; ++n)
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::MatrixXd m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(i, j) = u(rng);
            const Eigen::MatrixXd a = m * m.transpose() + n * Eigen::MatrixXd::Identity(n, n);
            Eigen::VectorXd b(n);
            for (int i = 0; i < n; ++i) b(i) = u(rng);
            const CgResult cg = conjugate_gradient(a, b, 1e-14, 100);
            const Eigen::VectorXd x = a.ldlt().solve(b);
            CHECK((cg.x - x).norm() <= 1e-10 * x.norm());
        }
    for (int n = 1; n <= 5; ++n) {
        std::vector<Point> pts;
        std::vector<double> w;
        for (int i = 0; i < n; ++i) {
            pts.push_back(p2(0.3 * i, 0.1 * i * i));
            w.push_back(0.01 * (1 + i));
        }
        const Quadrature q = points_quadrature(pts, w);
        const EquilibriumSolution sol = solve_equilibrium(q, KernelSpec::fractional(2));
        const Eigen::VectorXd x = assemble_kernel(q, KernelSpec::fractional(2)).ldlt().solve(Eigen::VectorXd::Ones(n));
        for (int i = 0; i < n; ++i) CHECK(std::abs(sol.charges[static_cast<std::size_t>(i)] - x(i)) <= 1e-10 * x.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("point-mass fields")
{
    ChargeField one{{Point::Zero()}, {1.0}, 1.0, 2};
    CHECK(one(p2(2, 0)) == doctest::Approx(0.5));
    const AsymptoticFit f = capacity_asymptotic(one, Point::Zero(), 0.1, {1, 2, 4, 8}, 64);
    CHECK(std::abs(f.value - 1.0) < 1e-12);

    ChargeField two{{p2(-0.5, 0), p2(0.5, 0)}, {0.3, 0.7}, 1.0, 2};
    const AsymptoticFit g = capacity_asymptotic(two, Point::Zero(), 0.5, {50, 75, 100, 150, 200}, 64);
    CHECK(std::abs(g.value - 1.0) < 1e-6);
    CHECK_THROWS(capacity_asymptotic(two, Point::Zero(), 0.5, {50, 75}, 64));
    CHECK_THROWS(capacity_asymptotic(two, Point::Zero(), 0.5, {1, 75, 100}, 64));
}

TEST_CASE("disk equilibrium solution")
{
    const CapacityRun run = capacity_run(disk(), 0.04, KernelSpec::fractional(2));
    const auto& sol = run.solution;
    CHECK(sol.capacity_mass > 0.0);
    CHECK(sol.residual_stats.max < 1e-8);
    CHECK(run.estimate.discrepancy < 0.01);
    CHECK(run.estimate.mass_estimate == doctest::Approx(2.0 / std::numbers::pi).epsilon(0.01));

    std::vector<double> ring;
    for (int i = 0; i < 64; ++i) {
        const double t = 2 * std::numbers::pi * i / 64;
        ring.push_back(eval_potential(sol, p2(10 * std::cos(t), 10 * std::sin(t))));
    }
    const auto [lo, hi] = std::minmax_element(ring.begin(), ring.end());
    CHECK((*hi - *lo) / *lo < 0.01);

    const auto at_nodes = eval_potential(sol, sol.quadrature.nodes);
    for (double v : at_nodes) CHECK(std::abs(v - 1.0) <= sol.residual_stats.max + 1e-15);

    double umax = 0.0, umin = 1e300;
    for (int i = -40; i <= 40; ++i)
        for (int j = -40; j <= 40; ++j) {
            const Point x = p2(0.1 * i + 0.013, 0.1 * j + 0.007);
            if (x.norm() <= 1.05) continue;
            const double v = eval_potential(sol, x);
            umax = std::max(umax, v);
            umin = std::min(umin, v);
        }
    CHECK(umin > 0.0);
    CHECK(umax <= 1.0 + 2e-10);
}

TEST_CASE("refine_study")
{
    const ConvergenceTable t = refine_study(disk(), {0.1, 0.05, 0.025}, KernelSpec::fractional(2));
    CHECK(t.empirical_order >= 0.9);
    CHECK(t.error_bar > 0.0);
    CHECK(std::abs(t.extrapolated - 2.0 / std::numbers::pi) <= 3.0 * t.error_bar);
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].discrepancy <= t.rows[0].discrepancy * 1.5);
    CHECK_THROWS(refine_study(disk(), {0.1, 0.1, 0.05}, KernelSpec::fractional(2)));
    CHECK_THROWS(refine_study(disk(), {0.1, 0.05}, KernelSpec::fractional(2)));

    const ConvergenceTable s = refine_study(square(), {0.08, 0.04, 0.02}, KernelSpec::fractional(2));
    CHECK(std::abs(s.extrapolated - s.finest()) / s.finest() <= 0.003);
}

TEST_CASE("richardson and empirical order")
{
    auto f = [](double h) { return 2.0 + 0.3 * h; };
    CHECK(richardson(0.2, f(0.2), 0.1, f(0.1), 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    auto g = [](double h) { return 1.0 - 0.5 * h * h; };
    CHECK(empirical_order({0.4, 0.2, 0.1}, {g(0.4), g(0.2), g(0.1)}) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("slab problem in three dimensions")
{
    // planar body with the Newtonian kernel of R^3 is the fractional problem in R^2
    const Quadrature q = rasterize(disk(), 0.1);
    const EquilibriumSolution a = solve_equilibrium(q, KernelSpec::fractional(2));
    const EquilibriumSolution b = solve_equilibrium(q, KernelSpec::newtonian(3));
    CHECK(a.capacity_mass == doctest::Approx(b.capacity_mass).epsilon(1e-13));
}
