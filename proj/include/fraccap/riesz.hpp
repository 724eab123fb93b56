#pragma once

#include "fraccap/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraccap {

/// Riesz kernel k(x, y) = |x - y|^{-exponent} acting in R^{ambient_dim}.
struct KernelSpec {
    double exponent = 1.0;
    int ambient_dim = 2;

    /// Kernel of the 1/2-fractional capacity in R^n: |x - y|^{1 - n}.
    static KernelSpec fractional(int n) { return {static_cast<double>(n - 1), n}; }
    /// Newtonian kernel in R^m: |x - y|^{2 - m}.
    static KernelSpec newtonian(int m) { return {static_cast<double>(m - 2), m}; }

    void validate(int quadrature_dim) const;
};

/// Self-interaction of a cell of measure w: the kernel integral over the
/// measure-equivalent disk (d = 2) or ball (d = 3) centred at the node,
/// divided by w.
double self_term(double weight, int measure_dim, double exponent);

struct SolverOptions {
    double rel_tol = 1e-10;
    double max_iter_factor = 20.0;  // iteration cap = factor * sqrt(N)
    std::size_t max_nodes = 20000;
    bool project_nonnegative = false;  // sensitivity study: clip negative charges and re-solve on the support
};

/// Thrown when CG fails; carries condition diagnostics.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, int iterations, double residual, double diag_ratio)
        : std::runtime_error(what), iterations(iterations), residual(residual), diag_ratio(diag_ratio)
    {
    }
    int iterations;
    double residual;
    double diag_ratio;  // max/min diagonal entry
};

struct CgResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradient for a symmetric positive definite
/// dense matrix. Throws SolverError when the iteration cap is reached.
CgResult conjugate_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double rel_tol, int max_iter);

Eigen::MatrixXd assemble_kernel(const Quadrature& q, const KernelSpec& spec,
                                std::size_t max_nodes = SolverOptions{}.max_nodes);

struct ResidualStats {
    double max = 0.0;
    double rms = 0.0;
};

struct NegativityStats {
    std::size_t count = 0;
    double magnitude = 0.0;   // sum of |q_j| over negative charges
    double most_negative = 0.0;
};

/// Equilibrium measure on the quadrature nodes.
struct EquilibriumSolution {
    Quadrature quadrature;
    KernelSpec spec;
    std::vector<double> density;  // mu_j, measure per unit cell measure
    std::vector<double> charges;  // w_j mu_j
    std::vector<double> self_terms;
    double capacity_mass = 0.0;
    ResidualStats residual_stats;
    NegativityStats negativity_stats;
    int iterations = 0;
    double relative_residual = 0.0;
};

EquilibriumSolution solve_equilibrium(const Quadrature& q, const KernelSpec& spec, const SolverOptions& opts = {});

/// u(x) = sum_j w_j mu_j |x - x_j|^{-s}; nodes use the self-term rule.
std::vector<double> eval_potential(const EquilibriumSolution& sol, const std::vector<Point>& points);
double eval_potential(const EquilibriumSolution& sol, const Point& x);

struct AsymptoticFit {
    double value = 0.0;  // limit of u(x) |x|^s
    double slope = 0.0;  // coefficient of 1/R (a 1/R^2 term is fitted too)
    Point center = Point::Zero();
    std::vector<double> radii;
    std::vector<double> shell_values;  // mean of u(c + R theta) R^s per radius
};

/// Point charges viewed as a field; used for synthetic checks and as the
/// potential of an equilibrium solution.
struct ChargeField {
    std::vector<Point> positions;
    std::vector<double> charges;
    double exponent = 1.0;
    int dim = 2;
    double operator()(const Point& x) const;
};

AsymptoticFit capacity_asymptotic(const ChargeField& field, const Point& center, double body_radius,
                                  const std::vector<double>& radii, int n_dirs);
AsymptoticFit capacity_asymptotic(const EquilibriumSolution& sol, const std::vector<double>& radii, int n_dirs);

/// Default radii ladder {4, 6, 8, 12, 16} times the node-cloud radius.
std::vector<double> default_asymptotic_radii(const EquilibriumSolution& sol);

struct CapacityEstimate {
    double mass_estimate = 0.0;
    double asymptotic_estimate = 0.0;
    double discrepancy = 0.0;  // |mass - asymptotic| / mass
    double resolution = 0.0;
    std::size_t nodes = 0;
    std::optional<double> extrapolated;
};

struct CapacityOptions {
    RasterOptions raster;
    SolverOptions solver;
    int asymptotic_dirs = 64;
};

struct CapacityRun {
    CapacityEstimate estimate;
    EquilibriumSolution solution;
    AsymptoticFit asymptotic;
};

CapacityRun capacity_run(const ConvexBody& k, double cell_size, const KernelSpec& spec, const CapacityOptions& opts = {});
CapacityEstimate capacity(const ConvexBody& k, double cell_size, const KernelSpec& spec, const CapacityOptions& opts = {});

struct ConvergenceRow {
    double cell_size = 0.0;
    std::size_t nodes = 0;
    double mass = 0.0;
    double asymptotic = 0.0;
    double discrepancy = 0.0;
    int iterations = 0;
};

/// Refinement ladder summary. The extrapolated value uses first order
/// Richardson on the two finest levels; the error bar is the larger of its
/// distance to the finest level and to the extrapolation from the two
/// coarsest levels.
struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double empirical_order = 0.0;
    double richardson_order = 1.0;
    double extrapolated = 0.0;
    double extrapolated_coarse = 0.0;
    double error_bar = 0.0;

    double finest() const { return rows.back().mass; }
};

ConvergenceTable refine_study(const ConvexBody& k, const std::vector<double>& cell_sizes, const KernelSpec& spec,
                              const CapacityOptions& opts = {});

/// Table from rows already computed (strictly decreasing cell sizes).
ConvergenceTable convergence_table(std::vector<ConvergenceRow> rows);
ConvergenceRow convergence_row(const CapacityRun& run);

/// Empirical order p from three values at sizes h1 > h2 > h3, solving
/// (c2 - c1) / (c3 - c2) = (h1^p - h2^p) / (h2^p - h3^p).
double empirical_order(const std::vector<double>& sizes, const std::vector<double>& values);

/// Richardson extrapolation of (coarse, fine) values with order p.
double richardson(double h_coarse, double v_coarse, double h_fine, double v_fine, double order);

}  // namespace fraccap
