#include "fraccap/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fraccap {

namespace {

constexpr double kPi = std::numbers::pi;

inline double kernel(double r, double s)
{
    if (s == 1.0) return 1.0 / r;
    if (s == 2.0) return 1.0 / (r * r);
    return std::pow(r, -s);
}

std::vector<Point> shell_directions(int dim, int count)
{
    std::vector<Point> dirs;
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double t = 2.0 * kPi * (i + 0.5) / count;
            dirs.emplace_back(std::cos(t), std::sin(t), 0.0);
        }
        return dirs;
    }
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        dirs.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k), z);
    }
    return dirs;
}

}  // namespace

void KernelSpec::validate(int quadrature_dim) const
{
    if (ambient_dim < 2 || ambient_dim > 3)
        throw std::invalid_argument("kernel ambient dimension must be 2 or 3, got " + std::to_string(ambient_dim));
    if (!(exponent > 0.0 && exponent < ambient_dim))
        throw std::invalid_argument("kernel exponent must satisfy 0 < s < m, got s = " + std::to_string(exponent));
    if (quadrature_dim > ambient_dim)
        throw std::invalid_argument("quadrature dimension exceeds the kernel's ambient dimension");
    if (!(exponent < quadrature_dim))
        throw std::invalid_argument("kernel exponent must be below the quadrature dimension for a finite self-term");
}

double self_term(double weight, int measure_dim, double exponent)
{
    // integral of |y|^{-s} over the d-ball of radius a: |S^{d-1}| a^{d-s} / (d - s)
    if (measure_dim == 2) {
        const double a = std::sqrt(weight / kPi);
        return 2.0 * kPi * std::pow(a, 2.0 - exponent) / (2.0 - exponent) / weight;
    }
    const double a = std::cbrt(3.0 * weight / (4.0 * kPi));
    return 4.0 * kPi * std::pow(a, 3.0 - exponent) / (3.0 - exponent) / weight;
}

CgResult conjugate_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double rel_tol, int max_iter)
{
    const Eigen::Index n = b.size();
    const Eigen::VectorXd inv_diag = a.diagonal().cwiseInverse();
    CgResult out;
    out.x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    Eigen::VectorXd ap(n);
    const double b_norm = b.norm();
    if (b_norm == 0.0) return out;
    double rz = r.dot(z);
    for (int it = 1; it <= max_iter; ++it) {
        ap.noalias() = a * p;
        const double pap = p.dot(ap);
        if (!(pap > 0.0))
            throw SolverError("conjugate gradient met a non-positive curvature p^T A p = " + std::to_string(pap) +
                                  "; the kernel matrix is not positive definite",
                              it, r.norm() / b_norm, a.diagonal().maxCoeff() / a.diagonal().minCoeff());
        const double alpha = rz / pap;
        out.x += alpha * p;
        r -= alpha * ap;
        const double rel = r.norm() / b_norm;
        out.iterations = it;
        out.relative_residual = rel;
        if (rel <= rel_tol) return out;
        z = inv_diag.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw SolverError("conjugate gradient did not reach relative residual " + std::to_string(rel_tol) + " in " +
                          std::to_string(max_iter) + " iterations (residual " + std::to_string(out.relative_residual) +
                          ")",
                      out.iterations, out.relative_residual, a.diagonal().maxCoeff() / a.diagonal().minCoeff());
}

Eigen::MatrixXd assemble_kernel(const Quadrature& q, const KernelSpec& spec, std::size_t max_nodes)
{
    spec.validate(q.dim);
    const std::size_t n = q.size();
    if (n == 0) throw std::invalid_argument("empty quadrature");
    if (n > max_nodes)
        throw std::invalid_argument("quadrature has " + std::to_string(n) + " nodes, above the dense cap of " +
                                    std::to_string(max_nodes));
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd g(m, m);
    const double s = spec.exponent;
    for (Eigen::Index j = 0; j < m; ++j) {
        const Point& xj = q.nodes[static_cast<std::size_t>(j)];
        g(j, j) = self_term(q.weights[static_cast<std::size_t>(j)], q.dim, s);
        for (Eigen::Index i = j + 1; i < m; ++i) {
            const double r = (q.nodes[static_cast<std::size_t>(i)] - xj).norm();
            if (!(r > 0.0)) throw std::invalid_argument("quadrature has coincident nodes");
            const double v = kernel(r, s);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    if (!g.allFinite()) throw std::invalid_argument("kernel matrix has non-finite entries");
    return g;
}

namespace {

void fill_stats(EquilibriumSolution& sol, const Eigen::MatrixXd& g, const Eigen::VectorXd& qv)
{
    const Eigen::VectorXd u = g * qv;
    double mx = 0.0, ss = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double d = std::abs(u(i) - 1.0);
        mx = std::max(mx, d);
        ss += d * d;
    }
    sol.residual_stats = {mx, std::sqrt(ss / static_cast<double>(u.size()))};
    sol.negativity_stats = {};
    double mass = 0.0;
    for (Eigen::Index i = 0; i < qv.size(); ++i) {
        mass += qv(i);
        if (qv(i) < 0.0) {
            ++sol.negativity_stats.count;
            sol.negativity_stats.magnitude += -qv(i);
            sol.negativity_stats.most_negative = std::min(sol.negativity_stats.most_negative,
                                                          qv(i) / sol.quadrature.weights[static_cast<std::size_t>(i)]);
        }
    }
    sol.capacity_mass = mass;
    sol.charges.assign(qv.data(), qv.data() + qv.size());
    sol.density.resize(sol.charges.size());
    for (std::size_t i = 0; i < sol.charges.size(); ++i) sol.density[i] = sol.charges[i] / sol.quadrature.weights[i];
}

}  // namespace

EquilibriumSolution solve_equilibrium(const Quadrature& q, const KernelSpec& spec, const SolverOptions& opts)
{
    const Eigen::MatrixXd g = assemble_kernel(q, spec, opts.max_nodes);
    const auto n = g.rows();
    const int cap = std::max(10, static_cast<int>(std::ceil(opts.max_iter_factor * std::sqrt(static_cast<double>(n)))));
    CgResult cg = conjugate_gradient(g, Eigen::VectorXd::Ones(n), opts.rel_tol, cap);

    EquilibriumSolution sol;
    sol.quadrature = q;
    sol.spec = spec;
    sol.iterations = cg.iterations;
    sol.relative_residual = cg.relative_residual;
    sol.self_terms.resize(q.size());
    for (Eigen::Index i = 0; i < n; ++i) sol.self_terms[static_cast<std::size_t>(i)] = g(i, i);

    if (opts.project_nonnegative) {
        // Active-set iteration: drop negative charges and re-solve on the rest.
        std::vector<char> active(static_cast<std::size_t>(n), 1);
        Eigen::VectorXd full = cg.x;
        for (int round = 0; round < 50; ++round) {
            bool changed = false;
            for (Eigen::Index i = 0; i < n; ++i)
                if (active[static_cast<std::size_t>(i)] && full(i) < 0.0) {
                    active[static_cast<std::size_t>(i)] = 0;
                    changed = true;
                }
            if (!changed) break;
            std::vector<Eigen::Index> idx;
            for (Eigen::Index i = 0; i < n; ++i)
                if (active[static_cast<std::size_t>(i)]) idx.push_back(i);
            const auto k = static_cast<Eigen::Index>(idx.size());
            Eigen::MatrixXd sub(k, k);
            for (Eigen::Index a = 0; a < k; ++a)
                for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = g(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
            const int subcap = std::max(10, static_cast<int>(std::ceil(opts.max_iter_factor * std::sqrt(static_cast<double>(k)))));
            CgResult r = conjugate_gradient(sub, Eigen::VectorXd::Ones(k), opts.rel_tol, subcap);
            full.setZero();
            for (Eigen::Index a = 0; a < k; ++a) full(idx[static_cast<std::size_t>(a)]) = r.x(a);
            sol.iterations += r.iterations;
        }
        fill_stats(sol, g, full);
        return sol;
    }
    fill_stats(sol, g, cg.x);
    return sol;
}

double ChargeField::operator()(const Point& x) const
{
    double u = 0.0;
    for (std::size_t j = 0; j < positions.size(); ++j) u += charges[j] * kernel((x - positions[j]).norm(), exponent);
    return u;
}

double eval_potential(const EquilibriumSolution& sol, const Point& x)
{
    const auto& q = sol.quadrature;
    const double s = sol.spec.exponent;
    const double coincide = 1e-12 * q.cell_size;
    double u = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        const double r = (x - q.nodes[j]).norm();
        u += (r <= coincide) ? sol.charges[j] * sol.self_terms[j] : sol.charges[j] * kernel(r, s);
    }
    return u;
}

std::vector<double> eval_potential(const EquilibriumSolution& sol, const std::vector<Point>& points)
{
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite()) throw std::invalid_argument("evaluation point is not finite");
        out[i] = eval_potential(sol, points[i]);
    }
    return out;
}

AsymptoticFit capacity_asymptotic(const ChargeField& field, const Point& center, double body_radius,
                                  const std::vector<double>& radii, int n_dirs)
{
    if (radii.size() < 3) throw std::invalid_argument("asymptotic fit needs at least 3 radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] >= 3.0 * body_radius))
            throw std::invalid_argument("asymptotic radius " + std::to_string(radii[i]) +
                                        " is inside 3x the body radius " + std::to_string(body_radius));
        if (i > 0 && !(radii[i] > radii[i - 1])) throw std::invalid_argument("asymptotic radii must increase");
    }
    if (n_dirs < 4) throw std::invalid_argument("asymptotic fit needs at least 4 directions");
    const auto dirs = shell_directions(field.dim, n_dirs);
    AsymptoticFit fit;
    fit.center = center;
    fit.radii = radii;
    for (double r : radii) {
        double acc = 0.0;
        for (const auto& d : dirs) acc += field(center + r * d);
        fit.shell_values.push_back(acc / n_dirs * std::pow(r, field.exponent));
    }
    // Least squares for value + slope / R + curvature / R^2. Direction averages
    // cancel the dipole term, so the 1/R^2 term carries the leading correction.
    const auto m = static_cast<Eigen::Index>(radii.size());
    Eigen::MatrixXd a(m, 3);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double inv = 1.0 / radii[static_cast<std::size_t>(i)];
        a(i, 0) = 1.0;
        a(i, 1) = inv;
        a(i, 2) = inv * inv;
        b(i) = fit.shell_values[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d x = a.colPivHouseholderQr().solve(b);
    fit.value = x(0);
    fit.slope = x(1);
    return fit;
}

namespace {

ChargeField field_of(const EquilibriumSolution& sol)
{
    return {sol.quadrature.nodes, sol.charges, sol.spec.exponent, sol.quadrature.dim == 3 || sol.spec.ambient_dim == 3 ? 3 : 2};
}

double cloud_radius(const Quadrature& q, const Point& c)
{
    double r = 0.0;
    for (const auto& x : q.nodes) r = std::max(r, (x - c).norm());
    return r + 0.5 * q.cell_size * std::sqrt(static_cast<double>(q.dim));
}

}  // namespace

std::vector<double> default_asymptotic_radii(const EquilibriumSolution& sol)
{
    const double r = cloud_radius(sol.quadrature, sol.quadrature.centroid());
    return {4.0 * r, 6.0 * r, 8.0 * r, 12.0 * r, 16.0 * r};
}

AsymptoticFit capacity_asymptotic(const EquilibriumSolution& sol, const std::vector<double>& radii, int n_dirs)
{
    const Point c = sol.quadrature.centroid();
    // Planar bodies in R^3 (slab problems) are still sampled on in-plane circles.
    ChargeField f = field_of(sol);
    if (sol.quadrature.dim == 2) f.dim = 2;
    return capacity_asymptotic(f, c, cloud_radius(sol.quadrature, c), radii, n_dirs);
}

CapacityRun capacity_run(const ConvexBody& k, double cell_size, const KernelSpec& spec, const CapacityOptions& opts)
{
    if (spec.ambient_dim < k.dim()) throw std::invalid_argument("kernel dimension is below the body dimension");
    CapacityRun run;
    const Quadrature q = rasterize(k, cell_size, opts.raster);
    run.solution = solve_equilibrium(q, spec, opts.solver);
    run.asymptotic = capacity_asymptotic(run.solution, default_asymptotic_radii(run.solution), opts.asymptotic_dirs);
    auto& e = run.estimate;
    e.mass_estimate = run.solution.capacity_mass;
    e.asymptotic_estimate = run.asymptotic.value;
    e.discrepancy = std::abs(e.mass_estimate - e.asymptotic_estimate) / e.mass_estimate;
    e.resolution = cell_size;
    e.nodes = q.size();
    if (!(e.mass_estimate > 0.0) || !(e.asymptotic_estimate > 0.0))
        throw std::runtime_error("non-positive capacity estimate; the discretization is inadequate");
    return run;
}

CapacityEstimate capacity(const ConvexBody& k, double cell_size, const KernelSpec& spec, const CapacityOptions& opts)
{
    return capacity_run(k, cell_size, spec, opts).estimate;
}

double richardson(double h_coarse, double v_coarse, double h_fine, double v_fine, double order)
{
    const double ratio = std::pow(h_fine / h_coarse, order);
    return (v_fine - ratio * v_coarse) / (1.0 - ratio);
}

double empirical_order(const std::vector<double>& sizes, const std::vector<double>& values)
{
    if (sizes.size() != 3 || values.size() != 3) throw std::invalid_argument("empirical order needs three levels");
    const double d1 = values[1] - values[0];
    const double d2 = values[2] - values[1];
    if (d2 == 0.0 || d1 == 0.0 || (d1 > 0) != (d2 > 0)) return 0.0;  // non-monotone ladder
    const double target = d1 / d2;
    auto ratio = [&](double p) {
        return (std::pow(sizes[0], p) - std::pow(sizes[1], p)) / (std::pow(sizes[1], p) - std::pow(sizes[2], p));
    };
    double lo = 1e-3, hi = 8.0;
    if (target <= ratio(lo)) return lo;
    if (target >= ratio(hi)) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ratio(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ConvergenceTable convergence_table(std::vector<ConvergenceRow> rows)
{
    if (rows.size() < 3) throw std::invalid_argument("refine_study needs at least 3 cell sizes");
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].cell_size < rows[i - 1].cell_size))
            throw std::invalid_argument("refine_study cell sizes must be strictly decreasing");
    ConvergenceTable t;
    t.rows = std::move(rows);
    const std::size_t n = t.rows.size();
    const auto& a = t.rows[n - 3];
    const auto& b = t.rows[n - 2];
    const auto& c = t.rows[n - 1];
    t.empirical_order = empirical_order({a.cell_size, b.cell_size, c.cell_size}, {a.mass, b.mass, c.mass});
    t.extrapolated = richardson(b.cell_size, b.mass, c.cell_size, c.mass, t.richardson_order);
    t.extrapolated_coarse = richardson(a.cell_size, a.mass, b.cell_size, b.mass, t.richardson_order);
    t.error_bar = std::max(std::abs(t.extrapolated - c.mass), std::abs(t.extrapolated - t.extrapolated_coarse));
    return t;
}

ConvergenceRow convergence_row(const CapacityRun& run)
{
    return {run.estimate.resolution, run.estimate.nodes, run.estimate.mass_estimate, run.estimate.asymptotic_estimate,
            run.estimate.discrepancy, run.solution.iterations};
}

ConvergenceTable refine_study(const ConvexBody& k, const std::vector<double>& cell_sizes, const KernelSpec& spec,
                              const CapacityOptions& opts)
{
    if (cell_sizes.size() < 3) throw std::invalid_argument("refine_study needs at least 3 cell sizes");
    for (std::size_t i = 1; i < cell_sizes.size(); ++i)
        if (!(cell_sizes[i] < cell_sizes[i - 1]))
            throw std::invalid_argument("refine_study cell sizes must be strictly decreasing");
    std::vector<ConvergenceRow> rows;
    for (double h : cell_sizes) rows.push_back(convergence_row(capacity_run(k, h, spec, opts)));
    return convergence_table(std::move(rows));
}

}  // namespace fraccap
