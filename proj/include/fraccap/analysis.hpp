#pragma once

#include "fraccap/geometry.hpp"
#include "fraccap/riesz.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fraccap {

// ---------------------------------------------------------------------------
// Brunn-Minkowski

enum class BMClass { Satisfied, NearEquality, Violated };
std::string to_string(BMClass c);

struct BMOptions {
    std::vector<double> ladder = {2.0, 1.0, 0.5};  // multiples of the base cell size
    bool scale_resolution = true;  // cell size follows each body's mean half-width relative to K1,
                                   // rounded to a power of two
    CapacityOptions capacity;
};

struct BMBody {
    double lambda = 0.0;  // 1 for K1, 0 for K2
    ConvergenceTable table;
    double capacity = 0.0;  // extrapolated
    double bar = 0.0;
};

struct BMRow {
    double lambda = 0.0;
    BMBody body;
    double deficit = 0.0;
    double bar = 0.0;
    BMClass classification = BMClass::Satisfied;
};

struct BMReport {
    int dim = 2;
    double cell_size = 0.0;
    BMBody k1, k2;
    std::vector<BMRow> rows;
    HomothetyFit fit;
    double fit_relative_residual = 0.0;

    std::size_t count(BMClass c) const;
    std::size_t count_above_bar() const;  // deficit > +bar
};

/// cap of a body as the Richardson value of a ladder at `cell_size` times the
/// option ladder.
BMBody bm_capacity(const ConvexBody& k, double lambda, double cell_size, const BMOptions& opts);

/// deficit = c_l^p - l c_1^p - (1 - l) c_2^p with p = 1/(n-1); the bar adds
/// the linearised bars of the three terms.
BMReport bm_sweep(const ConvexBody& k1, const ConvexBody& k2, const std::vector<double>& lambdas, double cell_size,
                  const BMOptions& opts = {});

enum class ProbeClass { Consistent, Tension };
std::string to_string(ProbeClass c);

struct EqualityProbe {
    HomothetyFit fit;
    double relative_residual = 0.0;
    bool homothetic = false;
    bool resolution_adequate = true;
    double deficit = 0.0;
    double bar = 0.0;
    ProbeClass classification = ProbeClass::Consistent;
    std::string advice;
};

/// Resolution counts as adequate when the cell size is at most a tenth of
/// each body's inradius.
EqualityProbe bm_equality_probe(const ConvexBody& k1, const ConvexBody& k2, double cell_size,
                                const BMOptions& opts = {}, double homothety_threshold = 1e-3);
/// Same probe reusing the lambda = 1/2 row of a sweep run with the same options.
EqualityProbe bm_equality_probe(const BMReport& rep, const ConvexBody& k1, const ConvexBody& k2,
                                const BMOptions& opts = {}, double homothety_threshold = 1e-3);

// ---------------------------------------------------------------------------
// Concavity index

/// Annulus r_in <= |x - center| <= r_out (r_in may be 0).
struct SamplingRegion {
    int dim = 2;
    Point center = Point::Zero();
    double r_in = 0.0;
    double r_out = 1.0;
    bool contains(const Point& x) const;
};

struct ConcavityOptions {
    double beta_lo = -8.0;
    double beta_hi = 1.0;
    double bracket_tol = 1e-3;
    int n_segments = 2000;
    std::uint64_t seed = 0;
    double rel_tol = 1e-9;  // slack in log v(m) >= log M_beta
};

struct BetaTest {
    double beta = 0.0;
    bool passed = false;
    double worst_violation = 0.0;  // max over segments of log M_beta - log v(m)
    Point worst_location = Point::Zero();
};

struct ConcavityReport {
    double alpha = 0.0;
    double beta_lo = 0.0;  // largest accepted
    double beta_hi = 0.0;  // smallest rejected (or the bracket top)
    bool below_bracket = false;  // the bracket bottom already failed
    std::vector<BetaTest> tests;  // in evaluation order
    int n_segments = 0;
    std::uint64_t seed = 0;
    SamplingRegion region;
    std::optional<double> ceiling;  // 1/(1-n) for body experiments
    std::optional<double> gap;      // alpha - ceiling
};

using ScalarField = std::function<double(const Point&)>;

/// Midpoint test of beta-concavity through power means:
/// v(m) >= M_beta(v(x), v(y)) for every sampled segment, done in log form.
/// Acceptance is monotone in beta, so bisection brackets the index.
ConcavityReport concavity_index(const ScalarField& field, const SamplingRegion& region, const ConcavityOptions& opts = {});

ConcavityReport body_concavity_experiment(const ConvexBody& k, double cell_size, double shell_lo = 1.2,
                                          double shell_hi = 6.0, const ConcavityOptions& opts = {},
                                          const CapacityOptions& cap = {});

// ---------------------------------------------------------------------------
// Level sets (planar)

struct LevelSet {
    double t = 0.0;
    ConvexBody body;
    double convexity_score = 1.0;  // probes with u >= t among probes inside the hull
    std::size_t probes_inside = 0;
    std::size_t probes_in_hull = 0;
    double probe_spacing = 0.0;
    double lattice_half_width = 0.0;
};

/// Super-level set {u >= t} from a probe lattice about the quadrature
/// centroid. Crossings on lattice edges are placed by linear interpolation
/// and the hull of inside probes plus crossings becomes a polytope body.
LevelSet level_set_extract(const EquilibriumSolution& sol, double t, double probe_spacing,
                           GridPtr grid = DirectionGrid::circle(256));

struct LevelEntry {
    LevelSet level;
    std::optional<ConvergenceTable> capacity;
    double ratio = 0.0;      // t cap(Omega(t)) / cap(Omega)
    double ratio_bar = 0.0;
};

struct LevelFit {
    double r = 0.0, s = 0.0;
    HomothetyFit fit;
    double relative_residual = 0.0;
};

struct LevelSetReport {
    double base_cell_size = 0.0;
    std::optional<ConvergenceTable> base_capacity;
    std::vector<LevelEntry> levels;
    std::vector<LevelFit> fits;
    bool nested = true;  // every extracted body contains the next higher level
};

struct LevelOptions {
    double probe_factor = 1.0;  // probe spacing = factor * cell size
    std::vector<double> ladder = {2.0, 1.0, 0.5};
    CapacityOptions capacity;
};

/// Levels {u >= t} for each t (ascending order reported), their capacities
/// on a ladder scaled by circumradius, and the ratio t cap(Omega(t)) / cap(Omega).
LevelSetReport level_scaling_experiment(const ConvexBody& k, const std::vector<double>& t_list, double cell_size,
                                        const LevelOptions& opts = {}, bool with_capacities = true);

struct HomotheticLevels {
    double r = 0.0, s = 0.0;
    LevelFit fit;
    bool homothetic = false;
    double threshold = 1e-2;
    std::optional<double> relation;  // (r/s) rho^(n-1) when homothetic
    std::optional<double> ball_residual;  // Omega(s) against a ball about xi/(1-rho), relative
    std::vector<LevelSet> levels;
};

HomotheticLevels homothetic_levels_experiment(const ConvexBody& k, double r, double s, double cell_size,
                                              const LevelOptions& opts = {}, double threshold = 1e-2);

/// t with t^(1/(1-n)) = (1-lambda) r^(1/(1-n)) + lambda s^(1/(1-n)).
double three_levels_t(double r, double s, double lambda, int n);

struct ThreeLevels {
    double r = 0.0, s = 0.0, lambda = 0.0, t = 0.0;
    double margin = 0.0;           // min over directions of h_t - h_combination
    double relative_margin = 0.0;  // margin / mean half-width of Omega(t)
    double tolerance = 0.0;        // probe spacing
    bool included = false;         // margin >= -tolerance
    std::vector<LevelSet> levels;  // r, s, t
};

ThreeLevels three_levels_experiment(const ConvexBody& k, double r, double s, double lambda, double cell_size,
                                    const LevelOptions& opts = {});

// ---------------------------------------------------------------------------
// Radiality and the ball power law

struct RadialityStats {
    std::vector<double> radii;
    std::vector<double> spreads;  // (max - min) / mean over directions
    double max_spread = 0.0;
};

RadialityStats radiality_test(const ScalarField& field, int dim, const Point& center, double body_radius,
                              const std::vector<double>& radii, int n_dirs = 64);
RadialityStats radiality_test(const EquilibriumSolution& sol, const Point& center, const std::vector<double>& radii,
                              int n_dirs = 64);

struct PowerLawRow {
    double radius = 0.0;
    double potential = 0.0;  // direction mean
    double scaled = 0.0;     // potential * radius^(n-1)
    double law = 0.0;        // R^(n-1) radius^(1-n)
    double deviation = 0.0;  // potential / law - 1
};

/// Measured potential against R^(n-1) |x - x0|^(1-n) on circles/spheres.
std::vector<PowerLawRow> power_law_profile(const EquilibriumSolution& sol, const Point& center, double ball_radius,
                                           const std::vector<double>& radii, int n_dirs = 64);

}  // namespace fraccap
