#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

namespace fraccap {

// Points and directions live in R^3; planar objects keep z == 0.
using Point = Eigen::Vector3d;

class DirectionGrid;
using GridPtr = std::shared_ptr<const DirectionGrid>;

/// Sampled unit directions used to store support functions.
///
/// The planar grid is the uniform angular grid theta_i = 2*pi*i/count. The
/// spatial grid is a golden-angle spiral on the upper hemisphere together with
/// its antipodes, so every direction has its opposite in the grid.
class DirectionGrid {
public:
    static GridPtr circle(int count = 256);
    static GridPtr sphere(int count = 512);

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(dirs_.size()); }
    const Point& operator[](int i) const { return dirs_[static_cast<std::size_t>(i)]; }
    const std::vector<Point>& directions() const { return dirs_; }

    /// Index of -theta_i.
    int opposite(int i) const { return opposite_[static_cast<std::size_t>(i)]; }

    /// Largest angle between any unit vector and its nearest grid direction.
    double covering_angle() const { return covering_angle_; }

private:
    DirectionGrid() = default;

    int dim_ = 2;
    std::vector<Point> dirs_;
    std::vector<int> opposite_;
    double covering_angle_ = 0.0;
};

bool same_grid(const DirectionGrid& a, const DirectionGrid& b);

struct Ball {
    Point center = Point::Zero();
    double radius = 0.0;
};

struct HalfSpace {
    Point normal = Point::Zero();  // unit length
    double offset = 0.0;           // {x : <normal, x> <= offset}
};

struct Polytope {
    std::vector<Point> vertices;  // hull vertices only
    std::vector<HalfSpace> facets;
};

using Descriptor = std::variant<std::monostate, Ball, Polytope>;

/// Convex body stored as sampled support values h(theta_i) plus an optional
/// exact description. Without a descriptor the body is the outer approximation
/// {x : <x, theta_i> <= h(theta_i) for all i}.
class ConvexBody {
public:
    ConvexBody(GridPtr grid, std::vector<double> support, Descriptor descriptor = {});

    int dim() const { return grid_->dim(); }
    const DirectionGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const std::vector<double>& support() const { return support_; }
    const Descriptor& descriptor() const { return descriptor_; }

    const Ball* ball() const { return std::get_if<Ball>(&descriptor_); }
    const Polytope* polytope() const { return std::get_if<Polytope>(&descriptor_); }

    /// A point guaranteed to be interior: ball center, vertex mean, or the
    /// discrete Steiner point of the support samples.
    Point interior_point() const;

    /// Radius of a ball about `center` containing the body.
    double bounding_radius(const Point& center) const;

    /// Minimal width over grid directions, min_i h(theta_i) + h(-theta_i).
    double min_width() const;

    /// Mean of (h(theta) + h(-theta)) / 2; translation invariant length scale.
    double mean_half_width() const;

    /// Radius of the largest inscribed ball (pattern search on the concave
    /// slack function).
    double inradius() const;

    /// Largest constraint violation max_i(<x, n_i> - c_i); <= 0 inside.
    double slack(const Point& x) const;

private:
    GridPtr grid_;
    std::vector<double> support_;
    Descriptor descriptor_;
};

struct HomothetyFit {
    double rho = 1.0;
    Point xi = Point::Zero();
    double residual = 0.0;  // RMS support misfit, length units
    bool clamped = false;   // unconstrained least squares gave rho <= 0
};

ConvexBody make_ball(const Point& center, double radius, GridPtr grid);
ConvexBody make_polytope(const std::vector<Point>& vertices, GridPtr grid);
ConvexBody make_support_body(GridPtr grid, std::vector<double> values);

ConvexBody minkowski_combine(double lambda, const ConvexBody& k1, const ConvexBody& k2);
ConvexBody scale_translate(const ConvexBody& k, double rho, const Point& xi);

bool contains_point(const ConvexBody& k, const Point& x);
bool is_subset(const ConvexBody& k1, const ConvexBody& k2);

/// Least-squares (rho, xi) with h1 ~ rho * h2 + <xi, theta>, i.e. K1 ~ rho K2 + xi.
HomothetyFit detect_homothety(const ConvexBody& k1, const ConvexBody& k2);

/// residual / mean_half_width(k1) < threshold.
bool is_homothetic(const HomothetyFit& fit, const ConvexBody& k1, double threshold = 1e-3);

/// Planar convex hull (counter-clockwise, no collinear points).
std::vector<Point> convex_hull_2d(std::vector<Point> pts);

// ---------------------------------------------------------------------------
// Quadrature

struct Quadrature {
    int dim = 2;
    std::vector<Point> nodes;
    std::vector<double> weights;  // cell area (n = 2) or volume (n = 3)
    double cell_size = 0.0;

    std::size_t size() const { return nodes.size(); }
    double total_weight() const;
    Point centroid() const;
};

enum class BoundaryRule {
    CenterIn,   // cell kept iff its center is inside, full weight
    Occupancy,  // cell kept iff its center is inside, weight scaled by occupancy
    Conforming  // every cell meeting the body, node at the occupied centroid,
                // slivers merged into a neighbouring cell
};

struct RasterOptions {
    BoundaryRule rule = BoundaryRule::Conforming;
    int subsamples = 4;             // per axis for 3D boundary cells; planar cells are clipped exactly
    double merge_below = 0.5;       // Conforming: occupancy below which a cell is merged
    std::size_t min_nodes = 50;
    Point offset = Point::Zero();   // lattice shift in cell units, each component in [-1/2, 1/2]
};

Quadrature rasterize(const ConvexBody& k, double cell_size, const RasterOptions& opts = {});

/// Documented bound 2 * perimeter * h / measure on the relative quadrature mass error.
double raster_mass_bound(const ConvexBody& k, double cell_size);

/// Perimeter (n = 2) or surface area (n = 3) and measure of the body.
double body_measure(const ConvexBody& k);
double body_boundary_measure(const ConvexBody& k);

}  // namespace fraccap
