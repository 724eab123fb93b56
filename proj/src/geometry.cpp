#include "fraccap/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fraccap {

namespace {

constexpr double kPi = std::numbers::pi;

double dot(const Point& a, const Point& b) { return a.dot(b); }

// Scale used for relative tolerances on support values.
double length_scale(const std::vector<double>& h)
{
    double s = 0.0;
    for (double v : h) s = std::max(s, std::abs(v));
    return std::max(s, 1.0);
}

double estimate_covering_angle(const std::vector<Point>& dirs, int dim)
{
    if (dim == 2) return kPi / static_cast<double>(dirs.size());
    // Probe with a dense golden spiral over the whole sphere.
    const int probes = 20000;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / probes;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Point p(r * std::cos(golden * k), r * std::sin(golden * k), z);
        double best = -1.0;
        for (const auto& d : dirs) best = std::max(best, dot(p, d));
        worst = std::max(worst, std::acos(std::clamp(best, -1.0, 1.0)));
    }
    return worst;
}

void require_grid(const GridPtr& grid)
{
    if (!grid) throw std::invalid_argument("direction grid is null");
}

void require_same_grid(const ConvexBody& a, const ConvexBody& b)
{
    if (!same_grid(a.grid(), b.grid()))
        throw std::invalid_argument("bodies are sampled on different direction grids");
}

std::vector<HalfSpace> hull_facets_2d(const std::vector<Point>& hull)
{
    std::vector<HalfSpace> out;
    const std::size_t m = hull.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point& a = hull[i];
        const Point& b = hull[(i + 1) % m];
        Point n(b.y() - a.y(), a.x() - b.x(), 0.0);  // outward for CCW order
        n.normalize();
        out.push_back({n, dot(n, a)});
    }
    return out;
}

// Brute-force facet enumeration; polytope test bodies are small.
std::vector<HalfSpace> hull_facets_3d(const std::vector<Point>& v, std::vector<Point>& hull_vertices)
{
    const std::size_t m = v.size();
    double scale = 0.0;
    for (const auto& p : v) scale = std::max(scale, p.norm());
    const double eps = 1e-10 * std::max(scale, 1.0);
    std::vector<HalfSpace> facets;
    std::vector<char> used(m, 0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k) {
                Point n = (v[j] - v[i]).cross(v[k] - v[i]);
                const double len = n.norm();
                if (len <= eps * scale) continue;
                n /= len;
                double c = dot(n, v[i]);
                bool pos = false, neg = false;
                for (const auto& p : v) {
                    const double s = dot(n, p) - c;
                    if (s > eps) pos = true;
                    if (s < -eps) neg = true;
                }
                if (pos && neg) continue;
                if (pos) {
                    n = -n;
                    c = -c;
                }
                bool dup = false;
                for (const auto& f : facets)
                    if ((f.normal - n).norm() < 1e-9 && std::abs(f.offset - c) < eps) dup = true;
                if (dup) continue;
                facets.push_back({n, c});
                for (std::size_t q = 0; q < m; ++q)
                    if (std::abs(dot(n, v[q]) - c) <= eps) used[q] = 1;
            }
    hull_vertices.clear();
    for (std::size_t q = 0; q < m; ++q)
        if (used[q]) hull_vertices.push_back(v[q]);
    return facets;
}

int affine_rank(const std::vector<Point>& v, int dim)
{
    if (v.empty()) return -1;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(v.size()), dim);
    for (std::size_t i = 0; i < v.size(); ++i)
        for (int d = 0; d < dim; ++d) a(static_cast<Eigen::Index>(i), d) = v[i][d] - v[0][d];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    double scale = 0.0;
    for (const auto& p : v) scale = std::max(scale, (p - v[0]).norm());
    lu.setThreshold(1e-12);
    if (scale == 0.0) return 0;
    return static_cast<int>(lu.rank());
}

// Outer polygon of a planar support-sampled body: consecutive line intersections.
std::vector<Point> outer_polygon(const ConvexBody& k)
{
    const auto& g = k.grid();
    const auto& h = k.support();
    const int m = g.size();
    std::vector<Point> poly;
    poly.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const int j = (i + 1) % m;
        const Point& a = g[i];
        const Point& b = g[j];
        const double det = a.x() * b.y() - a.y() * b.x();
        const double hi = h[static_cast<std::size_t>(i)];
        const double hj = h[static_cast<std::size_t>(j)];
        poly.emplace_back((hi * b.y() - hj * a.y()) / det, (a.x() * hj - b.x() * hi) / det, 0.0);
    }
    return poly;
}

double polygon_area(const std::vector<Point>& p)
{
    double a = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point& u = p[i];
        const Point& w = p[(i + 1) % p.size()];
        a += u.x() * w.y() - u.y() * w.x();
    }
    return 0.5 * std::abs(a);
}

double polygon_perimeter(const std::vector<Point>& p)
{
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[(i + 1) % p.size()] - p[i]).norm();
    return s;
}

// Sutherland-Hodgman: keep the part of a convex polygon with <n, x> <= c.
std::vector<Point> clip_halfplane(const std::vector<Point>& poly, const Point& n, double c)
{
    std::vector<Point> out;
    out.reserve(poly.size() + 1);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % poly.size()];
        const double da = n.dot(a) - c, db = n.dot(b) - c;
        if (da <= 0.0) out.push_back(a);
        if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) out.push_back(a + da / (da - db) * (b - a));
    }
    return out;
}

// Area and area-weighted centroid of a simple polygon.
std::pair<double, Point> polygon_moments(const std::vector<Point>& p)
{
    double a = 0.0;
    Point m = Point::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point& u = p[i];
        const Point& w = p[(i + 1) % p.size()];
        const double cr = u.x() * w.y() - u.y() * w.x();
        a += cr;
        m += cr * (u + w);
    }
    if (a == 0.0) return {0.0, Point::Zero()};
    return {0.5 * std::abs(a), m / (3.0 * a)};
}

// Polygon used for exact planar cell occupancy.
std::vector<Point> occupancy_polygon(const ConvexBody& k)
{
    if (const Ball* b = k.ball()) {
        constexpr int m = 1024;
        const double r = b->radius / std::cos(std::numbers::pi / m);
        std::vector<Point> poly;
        for (int i = 0; i < m; ++i) {
            const double t = 2.0 * std::numbers::pi * (i + 0.5) / m;
            poly.push_back(b->center + r * Point(std::cos(t), std::sin(t), 0.0));
        }
        return poly;
    }
    if (const Polytope* p = k.polytope()) return convex_hull_2d(p->vertices);
    return outer_polygon(k);
}

// Vertices of one facet of a 3D polytope, sorted around their mean.
std::vector<Point> facet_polygon(const Polytope& poly, const HalfSpace& f)
{
    std::vector<Point> pts;
    double scale = 1.0;
    for (const auto& v : poly.vertices) scale = std::max(scale, v.norm());
    for (const auto& v : poly.vertices)
        if (std::abs(dot(f.normal, v) - f.offset) <= 1e-9 * scale) pts.push_back(v);
    Point c = Point::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    const Point u = (pts.front() - c).normalized();
    const Point w = f.normal.cross(u);
    std::sort(pts.begin(), pts.end(), [&](const Point& a, const Point& b) {
        return std::atan2(dot(a - c, w), dot(a - c, u)) < std::atan2(dot(b - c, w), dot(b - c, u));
    });
    return pts;
}

double facet_area(const std::vector<Point>& pts, const Point& normal)
{
    Point s = Point::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) s += pts[i].cross(pts[(i + 1) % pts.size()]);
    return 0.5 * std::abs(dot(s, normal));
}

}  // namespace

// ---------------------------------------------------------------------------
// DirectionGrid

GridPtr DirectionGrid::circle(int count)
{
    if (count < 64 || count % 4 != 0)
        throw std::invalid_argument("circle grid needs a multiple of 4 with at least 64 directions, got " +
                                    std::to_string(count));
    auto g = std::shared_ptr<DirectionGrid>(new DirectionGrid());
    g->dim_ = 2;
    g->dirs_.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = 2.0 * kPi * i / count;
        // Exact axis directions keep lattice-aligned polytopes exact.
        double c = std::cos(t), s = std::sin(t);
        if (i % (count / 4) == 0) {
            const int q = i / (count / 4);
            c = (q == 0) ? 1.0 : (q == 2 ? -1.0 : 0.0);
            s = (q == 1) ? 1.0 : (q == 3 ? -1.0 : 0.0);
        }
        g->dirs_.emplace_back(c, s, 0.0);
        g->opposite_.push_back((i + count / 2) % count);
    }
    g->covering_angle_ = estimate_covering_angle(g->dirs_, 2);
    return g;
}

GridPtr DirectionGrid::sphere(int count)
{
    if (count < 64 || count % 2 != 0)
        throw std::invalid_argument("sphere grid needs an even count of at least 64 directions, got " +
                                    std::to_string(count));
    auto g = std::shared_ptr<DirectionGrid>(new DirectionGrid());
    g->dim_ = 3;
    const int half = count / 2;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Point> upper;
    for (int k = 0; k < half; ++k) {
        const double z = 1.0 - (k + 0.5) / half;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        upper.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k), z);
    }
    for (const auto& p : upper) g->dirs_.push_back(p);
    for (const auto& p : upper) g->dirs_.push_back(-p);
    for (int i = 0; i < count; ++i) g->opposite_.push_back(i < half ? i + half : i - half);
    g->covering_angle_ = estimate_covering_angle(g->dirs_, 3);
    return g;
}

bool same_grid(const DirectionGrid& a, const DirectionGrid& b)
{
    if (&a == &b) return true;
    if (a.dim() != b.dim() || a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i)
        if ((a[i] - b[i]).norm() > 1e-14) return false;
    return true;
}

// ---------------------------------------------------------------------------
// ConvexBody

ConvexBody::ConvexBody(GridPtr grid, std::vector<double> support, Descriptor descriptor)
    : grid_(std::move(grid)), support_(std::move(support)), descriptor_(std::move(descriptor))
{
    require_grid(grid_);
    if (support_.size() != static_cast<std::size_t>(grid_->size()))
        throw std::invalid_argument("support value count " + std::to_string(support_.size()) +
                                    " does not match grid size " + std::to_string(grid_->size()));
    for (double v : support_)
        if (!std::isfinite(v)) throw std::invalid_argument("support values must be finite");
    if (!(min_width() > 0.0)) throw std::invalid_argument("body has empty interior (minimal width <= 0)");
}

Point ConvexBody::interior_point() const
{
    if (const auto* b = ball()) return b->center;
    if (const auto* p = polytope()) {
        Point c = Point::Zero();
        for (const auto& v : p->vertices) c += v;
        return c / static_cast<double>(p->vertices.size());
    }
    // Discrete Steiner point: n * mean(h(theta) theta).
    Point s = Point::Zero();
    for (int i = 0; i < grid_->size(); ++i) s += support_[static_cast<std::size_t>(i)] * (*grid_)[i];
    return s * (static_cast<double>(dim()) / grid_->size());
}

double ConvexBody::bounding_radius(const Point& center) const
{
    if (const auto* b = ball()) return b->radius + (b->center - center).norm();
    if (const auto* p = polytope()) {
        double r = 0.0;
        for (const auto& v : p->vertices) r = std::max(r, (v - center).norm());
        return r;
    }
    if (dim() == 2) {
        double r = 0.0;
        for (const auto& v : outer_polygon(*this)) r = std::max(r, (v - center).norm());
        return r;
    }
    double r = 0.0;
    for (int i = 0; i < grid_->size(); ++i)
        r = std::max(r, support_[static_cast<std::size_t>(i)] - dot(center, (*grid_)[i]));
    return r / std::cos(grid_->covering_angle());
}

double ConvexBody::min_width() const
{
    double w = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_->size(); ++i)
        w = std::min(w, support_[static_cast<std::size_t>(i)] +
                            support_[static_cast<std::size_t>(grid_->opposite(i))]);
    return w;
}

double ConvexBody::mean_half_width() const
{
    double s = 0.0;
    for (int i = 0; i < grid_->size(); ++i)
        s += support_[static_cast<std::size_t>(i)] + support_[static_cast<std::size_t>(grid_->opposite(i))];
    return 0.5 * s / grid_->size();
}

double ConvexBody::slack(const Point& x) const
{
    if (const auto* b = ball()) return (x - b->center).norm() - b->radius;
    double s = -std::numeric_limits<double>::infinity();
    if (const auto* p = polytope()) {
        for (const auto& f : p->facets) s = std::max(s, dot(f.normal, x) - f.offset);
        return s;
    }
    for (int i = 0; i < grid_->size(); ++i)
        s = std::max(s, dot(x, (*grid_)[i]) - support_[static_cast<std::size_t>(i)]);
    return s;
}

double ConvexBody::inradius() const
{
    if (const auto* b = ball()) return b->radius;
    Point x = interior_point();
    double best = -slack(x);
    double step = 0.25 * min_width();
    const int d = dim();
    while (step > 1e-7 * min_width()) {
        bool moved = false;
        for (int axis = 0; axis < d; ++axis)
            for (double sign : {-1.0, 1.0}) {
                Point y = x;
                y[axis] += sign * step;
                const double v = -slack(y);
                if (v > best) {
                    best = v;
                    x = y;
                    moved = true;
                }
            }
        if (!moved) step *= 0.5;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Constructors and operations

ConvexBody make_ball(const Point& center, double radius, GridPtr grid)
{
    require_grid(grid);
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("ball radius must be positive, got " + std::to_string(radius));
    Point c = center;
    if (grid->dim() == 2) c.z() = 0.0;
    std::vector<double> h(static_cast<std::size_t>(grid->size()));
    for (int i = 0; i < grid->size(); ++i) h[static_cast<std::size_t>(i)] = dot(c, (*grid)[i]) + radius;
    return ConvexBody(std::move(grid), std::move(h), Ball{c, radius});
}

ConvexBody make_polytope(const std::vector<Point>& vertices, GridPtr grid)
{
    require_grid(grid);
    const int n = grid->dim();
    std::vector<Point> v = vertices;
    if (n == 2)
        for (auto& p : v) p.z() = 0.0;
    if (static_cast<int>(v.size()) < n + 1)
        throw std::invalid_argument("polytope needs at least " + std::to_string(n + 1) + " vertices, got " +
                                    std::to_string(v.size()));
    if (affine_rank(v, n) < n) throw std::invalid_argument("polytope vertices span a lower-dimensional set (empty interior)");

    Polytope poly;
    if (n == 2) {
        poly.vertices = convex_hull_2d(v);
        poly.facets = hull_facets_2d(poly.vertices);
    } else {
        if (v.size() > 200) throw std::invalid_argument("3D polytopes are limited to 200 vertices");
        poly.facets = hull_facets_3d(v, poly.vertices);
    }
    std::vector<double> h(static_cast<std::size_t>(grid->size()));
    for (int i = 0; i < grid->size(); ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& p : poly.vertices) m = std::max(m, dot(p, (*grid)[i]));
        h[static_cast<std::size_t>(i)] = m;
    }
    return ConvexBody(std::move(grid), std::move(h), std::move(poly));
}

ConvexBody make_support_body(GridPtr grid, std::vector<double> values)
{
    return ConvexBody(std::move(grid), std::move(values));
}

ConvexBody minkowski_combine(double lambda, const ConvexBody& k1, const ConvexBody& k2)
{
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("lambda must lie in [0, 1], got " + std::to_string(lambda));
    require_same_grid(k1, k2);
    if (lambda == 1.0) return k1;
    if (lambda == 0.0) return k2;
    std::vector<double> h(k1.support().size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = lambda * k1.support()[i] + (1.0 - lambda) * k2.support()[i];
    Descriptor d;
    if (k1.ball() && k2.ball())
        d = Ball{lambda * k1.ball()->center + (1.0 - lambda) * k2.ball()->center,
                 lambda * k1.ball()->radius + (1.0 - lambda) * k2.ball()->radius};
    return ConvexBody(k1.grid_ptr(), std::move(h), std::move(d));
}

ConvexBody scale_translate(const ConvexBody& k, double rho, const Point& xi)
{
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw std::invalid_argument("scale factor must be positive, got " + std::to_string(rho));
    Point shift = xi;
    if (k.dim() == 2) shift.z() = 0.0;
    if (rho == 1.0 && shift.isZero(0.0)) return k;
    const auto& g = k.grid();
    std::vector<double> h(k.support().size());
    for (int i = 0; i < g.size(); ++i)
        h[static_cast<std::size_t>(i)] = rho * k.support()[static_cast<std::size_t>(i)] + dot(shift, g[i]);
    Descriptor d;
    if (const auto* b = k.ball()) d = Ball{rho * b->center + shift, rho * b->radius};
    if (const auto* p = k.polytope()) {
        Polytope q;
        for (const auto& v : p->vertices) q.vertices.push_back(rho * v + shift);
        for (const auto& f : p->facets) q.facets.push_back({f.normal, rho * f.offset + dot(f.normal, shift)});
        d = std::move(q);
    }
    return ConvexBody(k.grid_ptr(), std::move(h), std::move(d));
}

bool contains_point(const ConvexBody& k, const Point& x)
{
    Point y = x;
    if (k.dim() == 2) y.z() = 0.0;
    return k.slack(y) <= 1e-12 * length_scale(k.support());
}

bool is_subset(const ConvexBody& k1, const ConvexBody& k2)
{
    require_same_grid(k1, k2);
    const double tol = 1e-12 * std::max(length_scale(k1.support()), length_scale(k2.support()));
    for (std::size_t i = 0; i < k1.support().size(); ++i)
        if (k1.support()[i] > k2.support()[i] + tol) return false;
    return true;
}

HomothetyFit detect_homothety(const ConvexBody& k1, const ConvexBody& k2)
{
    require_same_grid(k1, k2);
    const auto& g = k1.grid();
    const int n = g.dim();
    const int m = g.size();
    Eigen::MatrixXd a(m, n + 1);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        a(i, 0) = k2.support()[static_cast<std::size_t>(i)];
        for (int d = 0; d < n; ++d) a(i, d + 1) = g[i][d];
        b(i) = k1.support()[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < n + 1) throw std::logic_error("homothety normal equations are singular");
    Eigen::VectorXd x = qr.solve(b);

    HomothetyFit fit;
    if (x(0) <= 0.0) {
        // Boundary of rho > 0: drop the scale column and fit the translation alone.
        fit.clamped = true;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr2(a.rightCols(n));
        Eigen::VectorXd y = qr2.solve(b);
        x(0) = std::numeric_limits<double>::min();
        x.tail(n) = y;
    }
    fit.rho = x(0);
    for (int d = 0; d < n; ++d) fit.xi[d] = x(d + 1);
    const Eigen::VectorXd r = a * x - b;
    fit.residual = std::sqrt(r.squaredNorm() / m);
    return fit;
}

bool is_homothetic(const HomothetyFit& fit, const ConvexBody& k1, double threshold)
{
    return !fit.clamped && fit.residual / k1.mean_half_width() < threshold;
}

std::vector<Point> convex_hull_2d(std::vector<Point> pts)
{
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
                  return a.x() == b.x() && a.y() == b.y();
              }),
              pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const Point& o, const Point& a, const Point& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

// ---------------------------------------------------------------------------
// Measures

double body_measure(const ConvexBody& k)
{
    if (k.dim() == 2) {
        if (const auto* b = k.ball()) return kPi * b->radius * b->radius;
        if (const auto* p = k.polytope()) return polygon_area(p->vertices);
        return polygon_area(outer_polygon(k));
    }
    if (const auto* b = k.ball()) return 4.0 / 3.0 * kPi * std::pow(b->radius, 3);
    if (const auto* p = k.polytope()) {
        double v = 0.0;
        for (const auto& f : p->facets) v += f.offset * facet_area(facet_polygon(*p, f), f.normal) / 3.0;
        // offsets measured from the origin; the sum is origin independent for closed surfaces
        return v;
    }
    const double h = 2.0 * k.bounding_radius(k.interior_point()) / 64.0;
    RasterOptions opts;
    opts.min_nodes = 1;
    return rasterize(k, h, opts).total_weight();
}

double body_boundary_measure(const ConvexBody& k)
{
    if (k.dim() == 2) {
        if (const auto* b = k.ball()) return 2.0 * kPi * b->radius;
        if (const auto* p = k.polytope()) return polygon_perimeter(p->vertices);
        return polygon_perimeter(outer_polygon(k));
    }
    if (const auto* b = k.ball()) return 4.0 * kPi * b->radius * b->radius;
    if (const auto* p = k.polytope()) {
        double s = 0.0;
        for (const auto& f : p->facets) s += facet_area(facet_polygon(*p, f), f.normal);
        return s;
    }
    // V = (1/3) * integral of the support about an inner center >= r S / 3.
    return 3.0 * body_measure(k) / k.inradius();
}

double raster_mass_bound(const ConvexBody& k, double cell_size)
{
    return 2.0 * body_boundary_measure(k) * cell_size / body_measure(k);
}

// ---------------------------------------------------------------------------
// Quadrature

double Quadrature::total_weight() const
{
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

Point Quadrature::centroid() const
{
    Point c = Point::Zero();
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        c += weights[i] * nodes[i];
        s += weights[i];
    }
    return c / s;
}

namespace {

struct Cell {
    std::array<long, 3> index{0, 0, 0};
    Point center = Point::Zero();
    double occupancy = 0.0;
    Point centroid = Point::Zero();
};

}  // namespace

Quadrature rasterize(const ConvexBody& k, double cell_size, const RasterOptions& opts)
{
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw std::invalid_argument("cell_size must be positive, got " + std::to_string(cell_size));
    if (opts.subsamples < 1) throw std::invalid_argument("subsamples must be >= 1");
    if (!(opts.offset.cwiseAbs().maxCoeff() <= 0.5)) throw std::invalid_argument("lattice offset must lie in [-1/2, 1/2]");
    const int n = k.dim();
    const double h = cell_size;
    const Point c = k.interior_point();
    const double radius = k.bounding_radius(c);

    std::array<long, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int d = 0; d < n; ++d) {
        lo[static_cast<std::size_t>(d)] = static_cast<long>(std::floor((c[d] - radius) / h)) - 1;
        hi[static_cast<std::size_t>(d)] = static_cast<long>(std::ceil((c[d] + radius) / h)) + 1;
    }
    const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(n));
    const double tol = 1e-12 * length_scale(k.support());

    // Subsample offsets within a cell.
    std::vector<Point> offsets;
    {
        const int s = opts.subsamples;
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j)
                for (int l = 0; l < (n == 3 ? s : 1); ++l) {
                    Point o((i + 0.5) / s - 0.5, (j + 0.5) / s - 0.5, n == 3 ? (l + 0.5) / s - 0.5 : 0.0);
                    offsets.push_back(o * h);
                }
    }

    std::vector<Point> clip_polygon;
    if (n == 2 && opts.rule != BoundaryRule::CenterIn) clip_polygon = occupancy_polygon(k);

    std::vector<Cell> cells;
    const long zlo = (n == 3) ? lo[2] : 0;
    const long zhi = (n == 3) ? hi[2] : 0;
    for (long i = lo[0]; i <= hi[0]; ++i)
        for (long j = lo[1]; j <= hi[1]; ++j)
            for (long l = zlo; l <= zhi; ++l) {
                Cell cell;
                cell.index = {i, j, l};
                cell.center = Point((i + 0.5 + opts.offset.x()) * h, (j + 0.5 + opts.offset.y()) * h,
                                    n == 3 ? (l + 0.5 + opts.offset.z()) * h : 0.0);
                const double s = k.slack(cell.center);
                if (s > half_diag) continue;
                const bool center_in = s <= tol;
                if (s <= -half_diag) {
                    cell.occupancy = 1.0;
                    cell.centroid = cell.center;
                } else {
                    if (opts.rule == BoundaryRule::CenterIn) {
                        if (!center_in) continue;
                        cell.occupancy = 1.0;
                        cell.centroid = cell.center;
                    } else if (n == 2) {
                        std::vector<Point> piece = clip_polygon;
                        const double x0 = cell.center.x() - 0.5 * h, x1 = cell.center.x() + 0.5 * h;
                        const double y0 = cell.center.y() - 0.5 * h, y1 = cell.center.y() + 0.5 * h;
                        piece = clip_halfplane(piece, Point(1, 0, 0), x1);
                        piece = clip_halfplane(piece, Point(-1, 0, 0), -x0);
                        piece = clip_halfplane(piece, Point(0, 1, 0), y1);
                        piece = clip_halfplane(piece, Point(0, -1, 0), -y0);
                        if (piece.size() < 3) continue;
                        const auto [area, centroid] = polygon_moments(piece);
                        if (!(area > 1e-14 * h * h)) continue;
                        if (opts.rule == BoundaryRule::Occupancy && !center_in) continue;
                        cell.occupancy = std::min(1.0, area / (h * h));
                        cell.centroid = (opts.rule == BoundaryRule::Occupancy) ? cell.center : centroid;
                    } else {
                        int inside = 0;
                        Point acc = Point::Zero();
                        for (const auto& o : offsets) {
                            const Point p = cell.center + o;
                            if (k.slack(p) <= tol) {
                                ++inside;
                                acc += p;
                            }
                        }
                        if (inside == 0) continue;
                        if (opts.rule == BoundaryRule::Occupancy && !center_in) continue;
                        cell.occupancy = static_cast<double>(inside) / static_cast<double>(offsets.size());
                        cell.centroid = (opts.rule == BoundaryRule::Occupancy) ? cell.center : Point(acc / inside);
                    }
                }
                cells.push_back(cell);
            }

    if (opts.rule == BoundaryRule::Conforming && opts.merge_below > 0.0) {
        // Merge slivers into the fullest neighbouring cell; face neighbours win ties.
        auto key = [&](const std::array<long, 3>& ix) {
            return ((ix[0] - lo[0]) * (hi[1] - lo[1] + 1) + (ix[1] - lo[1])) * (zhi - zlo + 1) + (ix[2] - zlo);
        };
        std::vector<long> lookup(static_cast<std::size_t>((hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) * (zhi - zlo + 1)),
                                 -1);
        for (std::size_t q = 0; q < cells.size(); ++q) lookup[static_cast<std::size_t>(key(cells[q].index))] = static_cast<long>(q);
        std::vector<double> mass(cells.size());
        std::vector<Point> moment(cells.size());
        for (std::size_t q = 0; q < cells.size(); ++q) {
            mass[q] = cells[q].occupancy;
            moment[q] = cells[q].occupancy * cells[q].centroid;
        }
        std::vector<char> dropped(cells.size(), 0);
        for (std::size_t q = 0; q < cells.size(); ++q) {
            if (cells[q].occupancy >= opts.merge_below) continue;
            long target = -1;
            double best = -1.0;
            int best_faces = 0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    for (int dl = (n == 3 ? -1 : 0); dl <= (n == 3 ? 1 : 0); ++dl) {
                        if (di == 0 && dj == 0 && dl == 0) continue;
                        std::array<long, 3> ix{cells[q].index[0] + di, cells[q].index[1] + dj, cells[q].index[2] + dl};
                        if (ix[0] < lo[0] || ix[0] > hi[0] || ix[1] < lo[1] || ix[1] > hi[1] || ix[2] < zlo || ix[2] > zhi)
                            continue;
                        const long t = lookup[static_cast<std::size_t>(key(ix))];
                        if (t < 0 || cells[static_cast<std::size_t>(t)].occupancy < opts.merge_below) continue;
                        const int faces = (di == 0) + (dj == 0) + (dl == 0);
                        const double occ = cells[static_cast<std::size_t>(t)].occupancy;
                        if (faces > best_faces || (faces == best_faces && occ > best)) {
                            best_faces = faces;
                            best = occ;
                            target = t;
                        }
                    }
            if (target < 0) continue;  // isolated sliver keeps its own node
            mass[static_cast<std::size_t>(target)] += mass[q];
            moment[static_cast<std::size_t>(target)] += moment[q];
            dropped[q] = 1;
        }
        std::vector<Cell> merged;
        for (std::size_t q = 0; q < cells.size(); ++q) {
            if (dropped[q]) continue;
            Cell cell = cells[q];
            cell.occupancy = mass[q];
            cell.centroid = moment[q] / mass[q];
            merged.push_back(cell);
        }
        cells = std::move(merged);
    }

    Quadrature quad;
    quad.dim = n;
    quad.cell_size = h;
    const double cell_measure = std::pow(h, n);
    for (const auto& cell : cells) {
        quad.nodes.push_back(cell.centroid);
        quad.weights.push_back(cell.occupancy * cell_measure);
    }
    if (quad.size() < opts.min_nodes)
        throw std::invalid_argument("cell_size " + std::to_string(h) + " is too coarse: " + std::to_string(quad.size()) +
                                    " nodes (< " + std::to_string(opts.min_nodes) + ")");
    return quad;
}

}  // namespace fraccap
