#include "fraccap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <tuple>

namespace fraccap {

namespace {

constexpr double kPi = std::numbers::pi;

double capacity_power(int n) { return 1.0 / (n - 1); }

std::vector<Point> circle_dirs(int dim, int count)
{
    std::vector<Point> dirs;
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double t = 2.0 * kPi * i / count;
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

double node_cloud_radius(const Quadrature& q, const Point& c)
{
    double r = 0.0;
    for (const auto& x : q.nodes) r = std::max(r, (x - c).norm());
    return r;
}

}  // namespace

std::string to_string(BMClass c)
{
    switch (c) {
    case BMClass::Satisfied: return "SATISFIED";
    case BMClass::NearEquality: return "NEAR-EQUALITY";
    case BMClass::Violated: return "VIOLATED";
    }
    return "?";
}

std::string to_string(ProbeClass c)
{
    return c == ProbeClass::Consistent ? "CONSISTENT" : "TENSION";
}

std::size_t BMReport::count(BMClass c) const
{
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const BMRow& r) { return r.classification == c; }));
}

std::size_t BMReport::count_above_bar() const
{
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const BMRow& r) { return r.deficit > r.bar; }));
}

BMBody bm_capacity(const ConvexBody& k, double lambda, double cell_size, const BMOptions& opts)
{
    if (opts.ladder.size() < 3) throw std::invalid_argument("BM ladder needs at least 3 levels");
    std::vector<double> sizes;
    for (double f : opts.ladder) sizes.push_back(f * cell_size);
    BMBody b;
    b.lambda = lambda;
    b.table = refine_study(k, sizes, KernelSpec::fractional(k.dim()), opts.capacity);
    b.capacity = b.table.extrapolated;
    b.bar = std::max(b.table.error_bar, 1e-12 * std::abs(b.capacity));
    return b;
}

namespace {

// Cell size follows the body's size relative to the reference, rounded to a
// power of two so that the lattices stay nested.
double body_cell(const ConvexBody& k, const ConvexBody& ref, double cell_size, bool scale)
{
    if (!scale) return cell_size;
    const double ratio = k.mean_half_width() / ref.mean_half_width();
    return cell_size * std::exp2(std::round(std::log2(ratio)));
}

// deficit and its bar from three capacities
std::pair<double, double> deficit_of(const BMBody& bl, const BMBody& b1, const BMBody& b2, double lambda, int n)
{
    const double p = capacity_power(n);
    auto pw = [&](const BMBody& b) { return std::pow(b.capacity, p); };
    auto dpw = [&](const BMBody& b) { return p * std::pow(b.capacity, p - 1.0) * b.bar; };
    const double d = pw(bl) - lambda * pw(b1) - (1.0 - lambda) * pw(b2);
    const double bar = dpw(bl) + lambda * dpw(b1) + (1.0 - lambda) * dpw(b2);
    return {d, bar};
}

BMClass classify(double d, double bar)
{
    if (std::abs(d) <= bar) return BMClass::NearEquality;
    return d < -bar ? BMClass::Violated : BMClass::Satisfied;
}

}  // namespace

BMReport bm_sweep(const ConvexBody& k1, const ConvexBody& k2, const std::vector<double>& lambdas, double cell_size,
                  const BMOptions& opts)
{
    if (!same_grid(k1.grid(), k2.grid())) throw std::invalid_argument("BM bodies must share a direction grid");
    if (lambdas.empty()) throw std::invalid_argument("BM sweep needs at least one lambda");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0 && lambdas[i] < 1.0))
            throw std::invalid_argument("BM lambda " + std::to_string(lambdas[i]) + " is outside (0, 1)");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw std::invalid_argument("BM lambdas must increase strictly");
    }
    if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
    BMReport rep;
    rep.dim = k1.dim();
    rep.cell_size = cell_size;
    rep.fit = detect_homothety(k1, k2);
    rep.fit_relative_residual = rep.fit.residual / k1.mean_half_width();
    rep.k1 = bm_capacity(k1, 1.0, body_cell(k1, k1, cell_size, opts.scale_resolution), opts);
    rep.k2 = bm_capacity(k2, 0.0, body_cell(k2, k1, cell_size, opts.scale_resolution), opts);
    for (double l : lambdas) {
        const ConvexBody kl = minkowski_combine(l, k1, k2);
        BMRow row;
        row.lambda = l;
        row.body = bm_capacity(kl, l, body_cell(kl, k1, cell_size, opts.scale_resolution), opts);
        std::tie(row.deficit, row.bar) = deficit_of(row.body, rep.k1, rep.k2, l, rep.dim);
        row.classification = classify(row.deficit, row.bar);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

namespace {

EqualityProbe probe_geometry(const ConvexBody& k1, const ConvexBody& k2, double cell_size, const BMOptions& opts,
                             double homothety_threshold)
{
    if (!same_grid(k1.grid(), k2.grid())) throw std::invalid_argument("BM bodies must share a direction grid");
    if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
    EqualityProbe p;
    p.fit = detect_homothety(k1, k2);
    p.relative_residual = p.fit.residual / k1.mean_half_width();
    p.homothetic = !p.fit.clamped && p.relative_residual < homothety_threshold;

    const ConvexBody kh = minkowski_combine(0.5, k1, k2);
    // The coarsest ladder level must resolve every body.
    const double top = *std::max_element(opts.ladder.begin(), opts.ladder.end());
    for (const ConvexBody* k : {&k1, &k2, &kh}) {
        const double h = body_cell(*k, k1, cell_size, opts.scale_resolution);
        const double limit = k->inradius() / 10.0;
        if (top * h > limit * (1.0 + 1e-9)) {
            p.resolution_adequate = false;
            p.classification = ProbeClass::Tension;
            p.advice = "refine: coarsest cell size " + std::to_string(top * h) + " exceeds inradius/10 = " +
                       std::to_string(limit) + "; lower the cell size below " + std::to_string(limit / top);
        }
    }
    return p;
}

void probe_classify(EqualityProbe& p)
{
    const bool zero = std::abs(p.deficit) <= p.bar;
    const bool positive = p.deficit > p.bar;
    if ((p.homothetic && zero) || (!p.homothetic && positive)) {
        p.classification = ProbeClass::Consistent;
    } else {
        p.classification = ProbeClass::Tension;
        p.advice = p.homothetic ? "homothetic bodies with a deficit outside the bar; refine the ladder"
                                : "non-homothetic bodies with a deficit inside the bar; refine the ladder";
    }
}

}  // namespace

EqualityProbe bm_equality_probe(const ConvexBody& k1, const ConvexBody& k2, double cell_size, const BMOptions& opts,
                                double homothety_threshold)
{
    EqualityProbe p = probe_geometry(k1, k2, cell_size, opts, homothety_threshold);
    if (!p.resolution_adequate) return p;
    const ConvexBody kh = minkowski_combine(0.5, k1, k2);
    const BMBody b1 = bm_capacity(k1, 1.0, body_cell(k1, k1, cell_size, opts.scale_resolution), opts);
    const BMBody b2 = bm_capacity(k2, 0.0, body_cell(k2, k1, cell_size, opts.scale_resolution), opts);
    const BMBody bh = bm_capacity(kh, 0.5, body_cell(kh, k1, cell_size, opts.scale_resolution), opts);
    std::tie(p.deficit, p.bar) = deficit_of(bh, b1, b2, 0.5, k1.dim());
    probe_classify(p);
    return p;
}

EqualityProbe bm_equality_probe(const BMReport& rep, const ConvexBody& k1, const ConvexBody& k2, const BMOptions& opts,
                                double homothety_threshold)
{
    auto it = std::find_if(rep.rows.begin(), rep.rows.end(), [](const BMRow& r) { return std::abs(r.lambda - 0.5) < 1e-12; });
    if (it == rep.rows.end()) throw std::invalid_argument("the sweep has no lambda = 0.5 row");
    EqualityProbe p = probe_geometry(k1, k2, rep.cell_size, opts, homothety_threshold);
    if (!p.resolution_adequate) return p;
    p.deficit = it->deficit;
    p.bar = it->bar;
    probe_classify(p);
    return p;
}

// ---------------------------------------------------------------------------

bool SamplingRegion::contains(const Point& x) const
{
    const double r = (x - center).norm();
    return r >= r_in && r <= r_out;
}

namespace {

struct Segment {
    Point x, y, m;
    double lx, ly, lm;  // log of the field
};

double log_power_mean(double la, double lb, double beta)
{
    if (beta == 0.0) return 0.5 * (la + lb);
    // log(((a^b + b^b) / 2)^(1/b)) via log-sum-exp
    const double ea = beta * la, eb = beta * lb;
    const double mx = std::max(ea, eb);
    return (mx + std::log(0.5 * (std::exp(ea - mx) + std::exp(eb - mx)))) / beta;
}

BetaTest test_beta(const std::vector<Segment>& segs, double beta, double tol)
{
    BetaTest t;
    t.beta = beta;
    t.worst_violation = -std::numeric_limits<double>::infinity();
    for (const auto& s : segs) {
        const double v = log_power_mean(s.lx, s.ly, beta) - s.lm;
        if (v > t.worst_violation) {
            t.worst_violation = v;
            t.worst_location = s.m;
        }
    }
    t.passed = t.worst_violation <= tol;
    return t;
}

Point sample_in(const SamplingRegion& r, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    Point d;
    if (r.dim == 2) {
        const double a = 2.0 * kPi * u(rng);
        d = Point(std::cos(a), std::sin(a), 0.0);
    } else {
        do d = Point(g(rng), g(rng), g(rng));
        while (d.norm() < 1e-12);
        d.normalize();
    }
    const double p = r.dim;
    const double lo = std::pow(r.r_in, p), hi = std::pow(r.r_out, p);
    const double rad = std::pow(lo + (hi - lo) * u(rng), 1.0 / p);
    return r.center + rad * d;
}

}  // namespace

ConcavityReport concavity_index(const ScalarField& field, const SamplingRegion& region, const ConcavityOptions& opts)
{
    if (region.dim != 2 && region.dim != 3) throw std::invalid_argument("sampling region dimension must be 2 or 3");
    if (!(region.r_out > region.r_in) || region.r_in < 0.0) throw std::invalid_argument("sampling region is empty");
    if (!(opts.beta_lo < opts.beta_hi) || opts.beta_hi > 1.0)
        throw std::invalid_argument("beta bracket must satisfy lo < hi <= 1");
    if (opts.n_segments < 1) throw std::invalid_argument("need at least one segment");
    if (!(opts.bracket_tol > 0.0)) throw std::invalid_argument("bracket tolerance must be positive");

    std::mt19937_64 rng(opts.seed);
    std::vector<Segment> segs;
    segs.reserve(static_cast<std::size_t>(opts.n_segments));
    const long long max_draws = 1000LL * opts.n_segments;
    long long draws = 0;
    while (static_cast<int>(segs.size()) < opts.n_segments) {
        if (++draws > max_draws) throw std::invalid_argument("could not sample segments with midpoints in the region");
        Segment s;
        s.x = sample_in(region, rng);
        s.y = sample_in(region, rng);
        s.m = 0.5 * (s.x + s.y);
        if (!region.contains(s.m)) continue;
        const double vx = field(s.x), vy = field(s.y), vm = field(s.m);
        for (double v : {vx, vy, vm})
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("field is not strictly positive on the region");
        s.lx = std::log(vx);
        s.ly = std::log(vy);
        s.lm = std::log(vm);
        segs.push_back(s);
    }

    ConcavityReport rep;
    rep.n_segments = opts.n_segments;
    rep.seed = opts.seed;
    rep.region = region;
    auto run = [&](double beta) {
        rep.tests.push_back(test_beta(segs, beta, opts.rel_tol));
        return rep.tests.back().passed;
    };
    if (run(opts.beta_hi)) {
        rep.alpha = rep.beta_lo = rep.beta_hi = opts.beta_hi;
        return rep;
    }
    if (!run(opts.beta_lo)) {
        rep.below_bracket = true;
        rep.alpha = rep.beta_lo = rep.beta_hi = opts.beta_lo;
        return rep;
    }
    double lo = opts.beta_lo, hi = opts.beta_hi;
    while (hi - lo > opts.bracket_tol) {
        const double mid = 0.5 * (lo + hi);
        (run(mid) ? lo : hi) = mid;
    }
    // Acceptance must be monotone in beta.
    for (const auto& a : rep.tests)
        for (const auto& b : rep.tests)
            if (a.beta < b.beta && b.passed && !a.passed)
                throw std::logic_error("concavity acceptance is not monotone in beta");
    rep.beta_lo = lo;
    rep.beta_hi = hi;
    rep.alpha = lo;
    return rep;
}

ConcavityReport body_concavity_experiment(const ConvexBody& k, double cell_size, double shell_lo, double shell_hi,
                                          const ConcavityOptions& opts, const CapacityOptions& cap)
{
    const int n = k.dim();
    const Point c = k.interior_point();
    const double rad = k.bounding_radius(c);
    if (!(shell_hi > shell_lo)) throw std::invalid_argument("concavity shell must have hi > lo");
    if (shell_lo * rad < rad + 2.0 * cell_size)
        throw std::invalid_argument("concavity shell overlaps the body plus a margin of two cell sizes");
    const CapacityRun run = capacity_run(k, cell_size, KernelSpec::fractional(n), cap);
    SamplingRegion region{n, c, shell_lo * rad, shell_hi * rad};
    const EquilibriumSolution& sol = run.solution;
    ConcavityReport rep =
        concavity_index([&](const Point& x) { return eval_potential(sol, x); }, region, opts);
    rep.ceiling = 1.0 / (1.0 - n);
    rep.gap = rep.alpha - *rep.ceiling;
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

bool in_convex_polygon(const std::vector<Point>& hull, const Point& p)
{
    const std::size_t n = hull.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = hull[i];
        const Point& b = hull[(i + 1) % n];
        const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        if (cross < -1e-12) return false;
    }
    return true;
}

}  // namespace

LevelSet level_set_extract(const EquilibriumSolution& sol, double t, double probe_spacing, GridPtr grid)
{
    if (sol.quadrature.dim != 2) throw std::invalid_argument("level set extraction is planar only");
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
    if (!(probe_spacing > 0.0)) throw std::invalid_argument("probe spacing must be positive");
    Point c = sol.quadrature.centroid();
    c.z() = 0.0;
    const double rb = node_cloud_radius(sol.quadrature, c);
    double min_node = std::numeric_limits<double>::infinity();
    for (const auto& x : sol.quadrature.nodes) min_node = std::min(min_node, eval_potential(sol, x));
    if (!(t < min_node)) throw std::invalid_argument("level is not below the potential on the body");

    // Lattice c + p (i, j); the same points at every extent, so levels nest exactly.
    double w = 1.3 * std::max(rb, sol.capacity_mass / t) + 2.0 * probe_spacing;
    for (int attempt = 0; attempt < 4; ++attempt, w *= 1.5) {
        const int m = static_cast<int>(std::ceil(w / probe_spacing));
        const int side = 2 * m + 1;
        std::vector<Point> probes;
        probes.reserve(static_cast<std::size_t>(side) * side);
        for (int j = -m; j <= m; ++j)
            for (int i = -m; i <= m; ++i) probes.push_back(c + probe_spacing * Point(i, j, 0.0));
        const std::vector<double> u = eval_potential(sol, probes);
        auto at = [&](int i, int j) { return u[static_cast<std::size_t>(j + m) * side + static_cast<std::size_t>(i + m)]; };
        bool touches = false;
        for (int k = -m; k <= m && !touches; ++k)
            touches = at(k, -m) >= t || at(k, m) >= t || at(-m, k) >= t || at(m, k) >= t;
        if (touches) continue;

        std::vector<Point> pts;
        std::size_t inside = 0;
        auto pt = [&](int i, int j) { return probes[static_cast<std::size_t>(j + m) * side + static_cast<std::size_t>(i + m)]; };
        auto crossing = [&](int i0, int j0, int i1, int j1) {
            const double a = at(i0, j0), b = at(i1, j1);
            if ((a >= t) == (b >= t)) return;
            const double f = (a - t) / (a - b);
            pts.push_back(pt(i0, j0) + f * (pt(i1, j1) - pt(i0, j0)));
        };
        for (int j = -m; j <= m; ++j)
            for (int i = -m; i <= m; ++i) {
                if (at(i, j) >= t) {
                    ++inside;
                    pts.push_back(pt(i, j));
                }
                if (i < m) crossing(i, j, i + 1, j);
                if (j < m) crossing(i, j, i, j + 1);
            }
        if (inside == 0) throw std::invalid_argument("no probe reaches the level; refine the probe lattice");
        const std::vector<Point> hull = convex_hull_2d(pts);
        if (hull.size() < 3) throw std::invalid_argument("level set hull is degenerate; refine the probe lattice");
        std::size_t in_hull = 0;
        for (std::size_t q = 0; q < probes.size(); ++q)
            if (in_convex_polygon(hull, probes[q])) ++in_hull;
        LevelSet ls{t, make_polytope(hull, std::move(grid))};
        ls.probes_inside = inside;
        ls.probes_in_hull = std::max(in_hull, inside);
        ls.convexity_score = static_cast<double>(inside) / static_cast<double>(ls.probes_in_hull);
        ls.probe_spacing = probe_spacing;
        ls.lattice_half_width = m * probe_spacing;
        return ls;
    }
    throw std::invalid_argument("level set {u >= " + std::to_string(t) + "} reaches the probe-lattice boundary");
}

namespace {

ConvergenceTable level_capacity(const ConvexBody& body, double rel_cell, const LevelOptions& opts)
{
    std::vector<double> sizes;
    for (double f : opts.ladder) sizes.push_back(f * rel_cell);
    return refine_study(body, sizes, KernelSpec::fractional(body.dim()), opts.capacity);
}

}  // namespace

LevelSetReport level_scaling_experiment(const ConvexBody& k, const std::vector<double>& t_list, double cell_size,
                                        const LevelOptions& opts, bool with_capacities)
{
    if (k.dim() != 2) throw std::invalid_argument("level set experiments are planar only");
    if (t_list.empty()) throw std::invalid_argument("need at least one level");
    for (double t : t_list)
        if (!(t > 0.0 && t <= 0.6))
            throw std::invalid_argument("level " + std::to_string(t) + " is outside (0, 0.6]");
    std::vector<double> ts = t_list;
    std::sort(ts.begin(), ts.end());
    LevelSetReport rep;
    rep.base_cell_size = cell_size;
    const CapacityRun run = capacity_run(k, cell_size, KernelSpec::fractional(2), opts.capacity);
    const Point c = k.interior_point();
    const double rad = k.bounding_radius(c);
    if (with_capacities) rep.base_capacity = level_capacity(k, cell_size, opts);
    for (double t : ts) {
        LevelEntry e{level_set_extract(run.solution, t, opts.probe_factor * cell_size, k.grid_ptr()), std::nullopt, 0.0, 0.0};
        if (with_capacities) {
            const Point ct = e.level.body.interior_point();
            const double scale = e.level.body.bounding_radius(ct) / rad;
            e.capacity = level_capacity(e.level.body, cell_size * scale, opts);
            const double cb = rep.base_capacity->extrapolated;
            e.ratio = t * e.capacity->extrapolated / cb;
            e.ratio_bar = e.ratio * (e.capacity->error_bar / e.capacity->extrapolated + rep.base_capacity->error_bar / cb);
        }
        rep.levels.push_back(std::move(e));
    }
    for (std::size_t i = 0; i + 1 < rep.levels.size(); ++i) {
        const auto& lo = rep.levels[i].level;
        const auto& hi = rep.levels[i + 1].level;
        if (!is_subset(hi.body, lo.body)) rep.nested = false;
        LevelFit f{lo.t, hi.t, detect_homothety(lo.body, hi.body)};
        f.relative_residual = f.fit.residual / lo.body.mean_half_width();
        rep.fits.push_back(f);
    }
    return rep;
}

HomotheticLevels homothetic_levels_experiment(const ConvexBody& k, double r, double s, double cell_size,
                                              const LevelOptions& opts, double threshold)
{
    if (k.dim() != 2) throw std::invalid_argument("level set experiments are planar only");
    if (!(r > 0.0 && r < s && s <= 0.6)) throw std::invalid_argument("need 0 < r < s <= 0.6");
    const CapacityRun run = capacity_run(k, cell_size, KernelSpec::fractional(2), opts.capacity);
    HomotheticLevels out;
    out.r = r;
    out.s = s;
    out.threshold = threshold;
    out.levels.push_back(level_set_extract(run.solution, r, opts.probe_factor * cell_size, k.grid_ptr()));
    out.levels.push_back(level_set_extract(run.solution, s, opts.probe_factor * cell_size, k.grid_ptr()));
    const ConvexBody& br = out.levels[0].body;
    const ConvexBody& bs = out.levels[1].body;
    out.fit = {r, s, detect_homothety(br, bs)};
    out.fit.relative_residual = out.fit.fit.residual / br.mean_half_width();
    out.homothetic = !out.fit.fit.clamped && out.fit.relative_residual < threshold;
    if (out.homothetic) {
        const double rho = out.fit.fit.rho;
        out.relation = (r / s) * std::pow(rho, k.dim() - 1);
        if (std::abs(1.0 - rho) > 1e-9) {
            const Point centre = out.fit.fit.xi / (1.0 - rho);
            const auto& g = bs.grid();
            std::vector<double> radii(static_cast<std::size_t>(g.size()));
            double mean = 0.0;
            for (int i = 0; i < g.size(); ++i) {
                radii[static_cast<std::size_t>(i)] = bs.support()[static_cast<std::size_t>(i)] - centre.dot(g[i]);
                mean += radii[static_cast<std::size_t>(i)];
            }
            mean /= g.size();
            double ss = 0.0;
            for (double v : radii) ss += (v - mean) * (v - mean);
            out.ball_residual = std::sqrt(ss / g.size()) / mean;
        }
    }
    return out;
}

double three_levels_t(double r, double s, double lambda, int n)
{
    const double e = 1.0 / (1.0 - n);
    return std::pow((1.0 - lambda) * std::pow(r, e) + lambda * std::pow(s, e), 1.0 / e);
}

ThreeLevels three_levels_experiment(const ConvexBody& k, double r, double s, double lambda, double cell_size,
                                    const LevelOptions& opts)
{
    if (k.dim() != 2) throw std::invalid_argument("level set experiments are planar only");
    if (!(s > 0.0 && s < r && r <= 0.6)) throw std::invalid_argument("need 0 < s < r <= 0.6");
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
    ThreeLevels out;
    out.r = r;
    out.s = s;
    out.lambda = lambda;
    out.t = three_levels_t(r, s, lambda, 2);
    const CapacityRun run = capacity_run(k, cell_size, KernelSpec::fractional(2), opts.capacity);
    const double p = opts.probe_factor * cell_size;
    for (double lv : {r, s, out.t}) out.levels.push_back(level_set_extract(run.solution, lv, p, k.grid_ptr()));
    const ConvexBody comb = minkowski_combine(1.0 - lambda, out.levels[0].body, out.levels[1].body);
    const ConvexBody& bt = out.levels[2].body;
    out.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bt.support().size(); ++i)
        out.margin = std::min(out.margin, bt.support()[i] - comb.support()[i]);
    out.relative_margin = out.margin / bt.mean_half_width();
    out.tolerance = p;
    out.included = out.margin >= -out.tolerance;
    return out;
}

// ---------------------------------------------------------------------------

RadialityStats radiality_test(const ScalarField& field, int dim, const Point& center, double body_radius,
                              const std::vector<double>& radii, int n_dirs)
{
    if (radii.empty()) throw std::invalid_argument("need at least one radius");
    if (n_dirs < 4) throw std::invalid_argument("need at least 4 directions");
    const auto dirs = circle_dirs(dim, n_dirs);
    RadialityStats st;
    for (double r : radii) {
        if (!(r > body_radius))
            throw std::invalid_argument("radius " + std::to_string(r) + " is inside the body (radius " +
                                        std::to_string(body_radius) + ")");
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
        for (const auto& d : dirs) {
            const double v = field(center + r * d);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        const double spread = (hi - lo) / (sum / n_dirs);
        st.radii.push_back(r);
        st.spreads.push_back(spread);
        st.max_spread = std::max(st.max_spread, spread);
    }
    return st;
}

RadialityStats radiality_test(const EquilibriumSolution& sol, const Point& center, const std::vector<double>& radii,
                              int n_dirs)
{
    return radiality_test([&](const Point& x) { return eval_potential(sol, x); }, sol.quadrature.dim, center,
                          node_cloud_radius(sol.quadrature, center), radii, n_dirs);
}

std::vector<PowerLawRow> power_law_profile(const EquilibriumSolution& sol, const Point& center, double ball_radius,
                                           const std::vector<double>& radii, int n_dirs)
{
    const int n = sol.quadrature.dim;
    const auto dirs = circle_dirs(n, n_dirs);
    std::vector<PowerLawRow> rows;
    for (double r : radii) {
        if (!(r > 0.0)) throw std::invalid_argument("profile radii must be positive");
        double sum = 0.0;
        for (const auto& d : dirs) sum += eval_potential(sol, center + r * d);
        PowerLawRow row;
        row.radius = r;
        row.potential = sum / n_dirs;
        row.scaled = row.potential * std::pow(r, n - 1);
        row.law = std::pow(ball_radius, n - 1) * std::pow(r, 1 - n);
        row.deviation = row.potential / row.law - 1.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fraccap
