#pragma once

#include "fraccap/geometry.hpp"
#include "fraccap/riesz.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace fraccap {

/// Half-space box [-L, L]^2 x [0, L] around `center`, nodes at spacing h.
/// Node (i, j, k) sits at center + ((i - m) h, (j - m) h, k h) with m = L / h.
struct ExtensionGrid {
    Point center = Point::Zero();
    double half_width = 4.0;
    double spacing = 0.05;

    int half_count() const;  // m
    int count_xy() const { return 2 * half_count() + 1; }
    int count_z() const { return half_count() + 1; }

    /// Box of half-width box_factor times the body's circumradius about its
    /// interior point, snapped to a whole number of cells.
    static ExtensionGrid for_body(const ConvexBody& k, double spacing, double box_factor = 4.0);

    /// Throws unless L >= 4 circumradius and h <= inradius / 10.
    void validate(const ConvexBody& k) const;
};

struct ExtensionOptions {
    double tolerance = 1e-8;  // max |discrete Laplacian| / 6 over free nodes
    int max_sweeps = 40000;
    int outer_passes = 2;     // re-solves with the far-field coefficient re-matched
    double omega = 0.0;       // SOR factor; 0 picks the model-problem optimum
    bool check_geometry = true;
};

struct ShellFit {
    double value = 0.0;  // limit of |X| U(X)
    std::vector<double> radii;
    std::vector<double> shell_values;  // hemisphere mean of |X| U
};

class ExtensionSolution {
public:
    ExtensionGrid grid;
    std::vector<double> field;     // U, x fastest then y then z
    std::vector<unsigned char> mask;  // body nodes on z = 0 (size count_xy^2)
    double residual = 0.0;
    int sweeps = 0;
    int outer_passes = 0;
    double far_coefficient = 0.0;  // c in the outer condition U = c / |X - center|
    ShellFit fit;
    double capacity_estimate = 0.0;
    double gauss_charge = 0.0;  // flux of U through a box surface / (4 pi), mirrored half included

    std::size_t index(int i, int j, int k) const;
    double at(int i, int j, int k) const { return field[index(i, j, k)]; }
    Point node(int i, int j, int k) const;
    /// Trilinear interpolation; z is reflected, points outside the box use
    /// the far-field law.
    double value(const Point& x) const;
};

ExtensionSolution solve_extension(const ConvexBody& k, const ExtensionGrid& grid, const ExtensionOptions& opts = {});

/// Fit of a + b/R + c/R^2 to hemisphere means of |X| U; no doubling, since U
/// itself behaves like cap / |X|.
ShellFit extension_shell_fit(const ExtensionSolution& sol, int n_radii = 5, int n_dirs = 256);
double extension_capacity(const ExtensionSolution& sol);

/// The same fit for any field u: hemisphere means of |X - center| u on
/// n_radii shells evenly spaced in [r_lo, r_hi].
ShellFit shell_fit(const std::function<double(const Point&)>& u, const Point& center, double r_lo, double r_hi,
                   int n_radii = 5, int n_dirs = 256);

/// Super-level set {U >= r}, mirrored across z = 0, as a 3D quadrature. With
/// coarsen = f the grid cells are grouped in f^3 blocks; each block keeps the
/// centroid and total volume of its occupied cells. Blocks further than
/// `shell_blocks` from the exterior are dropped (a Newtonian conductor's
/// charge lives on its surface), pass 0 to keep the solid body.
Quadrature extension_level_body(const ExtensionSolution& sol, double r, int coarsen = 1, int shell_blocks = 0);

struct LevelBodyCapacity {
    double level = 0.0;
    std::vector<int> coarsen;
    std::vector<double> cell_sizes;
    std::vector<std::size_t> nodes;
    std::vector<double> capacities;  // Newtonian kernel solve on each coarsening
    double extrapolated = 0.0;       // first-order Richardson on the two finest
    double predicted = 0.0;          // reference capacity / r
    double ratio = 0.0;              // extrapolated / predicted
};

/// Capacity of {U >= r} with the Newtonian kernel, compared against
/// reference / r.
LevelBodyCapacity level_body_capacity(const ExtensionSolution& sol, double r, double reference,
                                      const std::vector<int>& coarsen = {2, 1}, int shell_blocks = 1,
                                      const SolverOptions& solver = {});

}  // namespace fraccap
