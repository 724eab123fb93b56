#include "fraccap/extension.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fraccap {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Point> hemisphere_directions(int count)
{
    // golden-angle spiral restricted to z > 0
    std::vector<Point> dirs;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - (k + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        dirs.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k), z);
    }
    return dirs;
}

double body_circumradius(const ConvexBody& k, const Point& c)
{
    return k.bounding_radius(c);
}

}  // namespace

int ExtensionGrid::half_count() const
{
    return static_cast<int>(std::lround(half_width / spacing));
}

ExtensionGrid ExtensionGrid::for_body(const ConvexBody& k, double spacing, double box_factor)
{
    if (k.dim() != 2) throw std::invalid_argument("the extension solver handles planar bodies only");
    if (!(spacing > 0.0)) throw std::invalid_argument("extension grid spacing must be positive");
    ExtensionGrid g;
    // Nodes on the absolute lattice (k + 1/2) h, the same cell-centre
    // convention as rasterize, so each mask node stands for one cell.
    const Point c = k.interior_point();
    g.center = Point((std::floor(c.x() / spacing) + 0.5) * spacing, (std::floor(c.y() / spacing) + 0.5) * spacing, 0.0);
    const double r = body_circumradius(k, g.center);
    g.spacing = spacing;
    g.half_width = std::ceil(box_factor * r / spacing - 1e-9) * spacing;
    return g;
}

void ExtensionGrid::validate(const ConvexBody& k) const
{
    if (k.dim() != 2) throw std::invalid_argument("the extension solver handles planar bodies only");
    const double r = body_circumradius(k, center);
    if (half_width < 4.0 * r * (1.0 - 1e-9))
        throw std::invalid_argument("extension box half-width " + std::to_string(half_width) +
                                    " is below 4x the body circumradius " + std::to_string(r));
    const double inr = k.inradius();
    if (spacing > inr / 10.0 * (1.0 + 1e-9))
        throw std::invalid_argument("extension spacing " + std::to_string(spacing) +
                                    " exceeds a tenth of the inradius " + std::to_string(inr));
}

std::size_t ExtensionSolution::index(int i, int j, int k) const
{
    const auto n = static_cast<std::size_t>(grid.count_xy());
    return (static_cast<std::size_t>(k) * n + static_cast<std::size_t>(j)) * n + static_cast<std::size_t>(i);
}

Point ExtensionSolution::node(int i, int j, int k) const
{
    const int m = grid.half_count();
    return grid.center + grid.spacing * Point(i - m, j - m, k);
}

double ExtensionSolution::value(const Point& x) const
{
    const int m = grid.half_count();
    const double h = grid.spacing;
    const Point d = x - grid.center;
    const double fi = d.x() / h + m;
    const double fj = d.y() / h + m;
    const double fk = std::abs(d.z()) / h;
    const int n = grid.count_xy();
    if (fi < 0.0 || fj < 0.0 || fi > n - 1 || fj > n - 1 || fk > m) return far_coefficient / d.norm();
    const int i0 = std::min(static_cast<int>(fi), n - 2);
    const int j0 = std::min(static_cast<int>(fj), n - 2);
    const int k0 = std::min(static_cast<int>(fk), m - 1);
    const double a = fi - i0, b = fj - j0, c = fk - k0;
    double u = 0.0;
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                const double w = (di ? a : 1.0 - a) * (dj ? b : 1.0 - b) * (dk ? c : 1.0 - c);
                u += w * at(i0 + di, j0 + dj, k0 + dk);
            }
    return u;
}

namespace {

void set_outer(ExtensionSolution& s)
{
    const int n = s.grid.count_xy();
    const int m = s.grid.half_count();
    for (int k = 0; k <= m; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (!(i == 0 || j == 0 || i == n - 1 || j == n - 1 || k == m)) continue;
                s.field[s.index(i, j, k)] = s.far_coefficient / (s.node(i, j, k) - s.grid.center).norm();
            }
}

// Max |mean of neighbours - U| over free nodes.
double max_residual(const ExtensionSolution& s)
{
    const int n = s.grid.count_xy();
    const int m = s.grid.half_count();
    const std::size_t sx = 1, sy = static_cast<std::size_t>(n), sz = sy * sy;
    const auto& u = s.field;
    double r = 0.0;
    for (int k = 0; k < m; ++k)
        for (int j = 1; j < n - 1; ++j)
            for (int i = 1; i < n - 1; ++i) {
                if (k == 0 && s.mask[static_cast<std::size_t>(j) * sy + static_cast<std::size_t>(i)]) continue;
                const std::size_t p = s.index(i, j, k);
                const double below = k == 0 ? u[p + sz] : u[p - sz];
                const double avg = (u[p - sx] + u[p + sx] + u[p - sy] + u[p + sy] + u[p + sz] + below) / 6.0;
                r = std::max(r, std::abs(avg - u[p]));
            }
    return r;
}

int relax(ExtensionSolution& s, double omega, double tol, int max_sweeps)
{
    const int n = s.grid.count_xy();
    const int m = s.grid.half_count();
    const std::size_t sx = 1, sy = static_cast<std::size_t>(n), sz = sy * sy;
    auto& u = s.field;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (int colour = 0; colour < 2; ++colour) {
            for (int k = 0; k < m; ++k)
                for (int j = 1; j < n - 1; ++j) {
                    const int i0 = 1 + ((1 + j + k + colour) & 1);
                    for (int i = i0; i < n - 1; i += 2) {
                        if (k == 0 && s.mask[static_cast<std::size_t>(j) * sy + static_cast<std::size_t>(i)]) continue;
                        const std::size_t p = s.index(i, j, k);
                        const double below = k == 0 ? u[p + sz] : u[p - sz];
                        const double avg = (u[p - sx] + u[p + sx] + u[p - sy] + u[p + sy] + u[p + sz] + below) / 6.0;
                        u[p] += omega * (avg - u[p]);
                    }
                }
        }
        if (sweep % 10 == 0 || sweep == max_sweeps) {
            s.residual = max_residual(s);
            if (s.residual <= tol) return sweep;
        }
    }
    throw std::runtime_error("extension relaxation did not reach residual " + std::to_string(tol) + " in " +
                             std::to_string(max_sweeps) + " sweeps (residual " + std::to_string(s.residual) + ")");
}

double gauss_charge(const ExtensionSolution& s)
{
    // Outward flux of grad U through the box of half-width b + 1/2 cells,
    // doubled for the mirrored half; U ~ Q / |X| gives flux -4 pi Q.
    const int m = s.grid.half_count();
    const int b = m - 2;
    const int lo = m - b, hi = m + b;
    const double h = s.grid.spacing;
    double flux = 0.0;
    for (int k = 0; k <= b; ++k) {
        const double area = (k == 0 ? 0.5 : 1.0) * h * h;
        for (int t = lo; t <= hi; ++t) {
            flux += area * (s.at(hi + 1, t, k) - s.at(hi, t, k)) / h;
            flux += area * (s.at(lo - 1, t, k) - s.at(lo, t, k)) / h;
            flux += area * (s.at(t, hi + 1, k) - s.at(t, hi, k)) / h;
            flux += area * (s.at(t, lo - 1, k) - s.at(t, lo, k)) / h;
        }
    }
    for (int j = lo; j <= hi; ++j)
        for (int i = lo; i <= hi; ++i) flux += h * h * (s.at(i, j, b + 1) - s.at(i, j, b)) / h;
    return -2.0 * flux / (4.0 * kPi);
}

}  // namespace

ExtensionSolution solve_extension(const ConvexBody& k, const ExtensionGrid& grid, const ExtensionOptions& opts)
{
    if (k.dim() != 2) throw std::invalid_argument("the extension solver handles planar bodies only");
    if (opts.check_geometry) grid.validate(k);
    const int m = grid.half_count();
    if (m < 4) throw std::invalid_argument("extension grid has fewer than 4 cells per half-width");
    if (opts.outer_passes < 1) throw std::invalid_argument("extension solver needs at least one outer pass");
    ExtensionSolution s;
    s.grid = grid;
    const int n = grid.count_xy();
    s.mask.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    std::size_t masked = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (contains_point(k, s.node(i, j, 0))) {
                if (i == 0 || j == 0 || i == n - 1 || j == n - 1)
                    throw std::invalid_argument("body reaches the extension box boundary");
                s.mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = 1;
                ++masked;
            }
    if (masked == 0) throw std::invalid_argument("extension mask is empty; refine the grid");

    // Disk-like first guess for the far-field coefficient.
    s.far_coefficient = 2.0 / kPi * k.mean_half_width();
    s.field.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * static_cast<std::size_t>(m + 1), 0.0);
    for (int kk = 0; kk <= m; ++kk)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double d = (s.node(i, j, kk) - grid.center).norm();
                s.field[s.index(i, j, kk)] = d > 0.0 ? std::min(1.0, s.far_coefficient / d) : 1.0;
            }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (s.mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)])
                s.field[s.index(i, j, 0)] = 1.0;

    double omega = opts.omega;
    if (omega <= 0.0) {
        const double rho = (2.0 * std::cos(kPi / (n - 1)) + std::cos(kPi / (2 * m))) / 3.0;
        omega = 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
    }
    // U depends affinely on c, and so does the fitted coefficient E(c). Each
    // pass after the first solves E(c) = c by a secant step through the last
    // two passes and blends the two fields accordingly.
    double prev_c = 0.0, prev_e = 0.0;
    std::vector<double> prev_field;
    for (int pass = 0; pass < opts.outer_passes; ++pass) {
        set_outer(s);
        s.sweeps += relax(s, omega, opts.tolerance, opts.max_sweeps);
        s.fit = extension_shell_fit(s);
        s.outer_passes = pass + 1;
        const double c = s.far_coefficient, e = s.fit.value;
        if (pass > 0 && std::abs(c - prev_c) > 1e-14 * std::abs(c)) {
            const double slope = (e - prev_e) / (c - prev_c);
            if (!(std::abs(1.0 - slope) > 1e-6)) throw std::runtime_error("far-field matching is degenerate");
            const double star = c + (e - c) / (1.0 - slope);
            const double w = (star - prev_c) / (c - prev_c);
            for (std::size_t p = 0; p < s.field.size(); ++p) s.field[p] = prev_field[p] + w * (s.field[p] - prev_field[p]);
            s.far_coefficient = star;
            s.fit = extension_shell_fit(s);
            s.residual = max_residual(s);
        }
        prev_c = s.far_coefficient;
        prev_e = s.fit.value;
        prev_field = s.field;
        if (pass + 1 < opts.outer_passes) s.far_coefficient = pass == 0 ? s.fit.value : s.far_coefficient;
    }
    if (s.residual > opts.tolerance) {
        // the blended field can sit slightly above tolerance; polish it
        set_outer(s);
        s.sweeps += relax(s, omega, opts.tolerance, opts.max_sweeps);
        s.fit = extension_shell_fit(s);
    }
    s.capacity_estimate = s.fit.value;
    s.gauss_charge = gauss_charge(s);
    return s;
}

ShellFit extension_shell_fit(const ExtensionSolution& sol, int n_radii, int n_dirs)
{
    if (n_radii < 3) throw std::invalid_argument("shell fit needs at least 3 radii");
    // Body extent from the mask.
    const int n = sol.grid.count_xy();
    double body_r = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (sol.mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)])
                body_r = std::max(body_r, (sol.node(i, j, 0) - sol.grid.center).norm());
    const double l = sol.grid.half_width;
    const double r_lo = std::max(1.5 * body_r, 0.35 * l);
    const double r_hi = l - 2.0 * sol.grid.spacing;
    if (!(r_hi > r_lo)) throw std::invalid_argument("fit shells do not fit between the body and the box boundary");
    return shell_fit([&](const Point& x) { return sol.value(x); }, sol.grid.center, r_lo, r_hi, n_radii, n_dirs);
}

ShellFit shell_fit(const std::function<double(const Point&)>& u, const Point& center, double r_lo, double r_hi,
                   int n_radii, int n_dirs)
{
    if (n_radii < 3) throw std::invalid_argument("shell fit needs at least 3 radii");
    if (!(r_hi > r_lo && r_lo > 0.0)) throw std::invalid_argument("shell radii must satisfy 0 < r_lo < r_hi");
    const auto dirs = hemisphere_directions(n_dirs);
    ShellFit fit;
    for (int t = 0; t < n_radii; ++t) {
        const double r = r_lo + (r_hi - r_lo) * t / (n_radii - 1);
        double acc = 0.0;
        for (const auto& d : dirs) acc += u(center + r * d);
        fit.radii.push_back(r);
        fit.shell_values.push_back(r * acc / static_cast<double>(dirs.size()));
    }
    Eigen::MatrixXd a(n_radii, 3);
    Eigen::VectorXd b(n_radii);
    for (int t = 0; t < n_radii; ++t) {
        const double inv = 1.0 / fit.radii[static_cast<std::size_t>(t)];
        a(t, 0) = 1.0;
        a(t, 1) = inv;
        a(t, 2) = inv * inv;
        b(t) = fit.shell_values[static_cast<std::size_t>(t)];
    }
    fit.value = a.colPivHouseholderQr().solve(b)(0);
    return fit;
}

double extension_capacity(const ExtensionSolution& sol)
{
    return extension_shell_fit(sol).value;
}

Quadrature extension_level_body(const ExtensionSolution& sol, double r, int coarsen, int shell_blocks)
{
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
    if (coarsen < 1) throw std::invalid_argument("coarsening factor must be at least 1");
    if (shell_blocks < 0) throw std::invalid_argument("shell thickness must be non-negative");
    const int n = sol.grid.count_xy();
    const int m = sol.grid.half_count();
    const double h = sol.grid.spacing;
    for (int k = 0; k <= m; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (!(i == 0 || j == 0 || i == n - 1 || j == n - 1 || k == m)) continue;
                if (sol.at(i, j, k) >= r)
                    throw std::invalid_argument("level set {U >= " + std::to_string(r) +
                                                "} touches the extension box boundary");
            }
    // Mirrored grid: z index kk in [-m, m], block coordinates offset to be non-negative.
    const int f = coarsen;
    const int nb_xy = (n + f - 1) / f;
    const int nb_z = (2 * m + 1 + f - 1) / f;
    const std::size_t nblocks = static_cast<std::size_t>(nb_xy) * nb_xy * nb_z;
    std::vector<int> count(nblocks, 0);
    std::vector<Point> sum(nblocks, Point::Zero());
    auto bidx = [&](int bi, int bj, int bk) {
        return (static_cast<std::size_t>(bk) * nb_xy + static_cast<std::size_t>(bj)) * nb_xy + static_cast<std::size_t>(bi);
    };
    for (int kk = -m; kk <= m; ++kk)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (sol.at(i, j, std::abs(kk)) < r) continue;
                const std::size_t b = bidx(i / f, j / f, (kk + m) / f);
                ++count[b];
                Point p = sol.node(i, j, 0);
                p.z() = kk * h;
                sum[b] += p;
            }
    const int full = f * f * f;
    auto is_full = [&](int bi, int bj, int bk) {
        if (bi < 0 || bj < 0 || bk < 0 || bi >= nb_xy || bj >= nb_xy || bk >= nb_z) return false;
        return count[bidx(bi, bj, bk)] == full;
    };
    Quadrature q;
    q.dim = 3;
    q.cell_size = f * h;
    for (int bk = 0; bk < nb_z; ++bk)
        for (int bj = 0; bj < nb_xy; ++bj)
            for (int bi = 0; bi < nb_xy; ++bi) {
                const int c = count[bidx(bi, bj, bk)];
                if (c == 0) continue;
                if (shell_blocks > 0 && c == full) {
                    bool deep = true;
                    for (int dk = -shell_blocks; dk <= shell_blocks && deep; ++dk)
                        for (int dj = -shell_blocks; dj <= shell_blocks && deep; ++dj)
                            for (int di = -shell_blocks; di <= shell_blocks && deep; ++di)
                                if (!is_full(bi + di, bj + dj, bk + dk)) deep = false;
                    if (deep) continue;
                }
                q.nodes.push_back(sum[bidx(bi, bj, bk)] / c);
                q.weights.push_back(c * h * h * h);
            }
    if (q.nodes.empty()) throw std::invalid_argument("level set is empty at this grid resolution");
    return q;
}

LevelBodyCapacity level_body_capacity(const ExtensionSolution& sol, double r, double reference,
                                      const std::vector<int>& coarsen, int shell_blocks, const SolverOptions& solver)
{
    if (coarsen.size() < 2) throw std::invalid_argument("level body capacity needs at least two coarsening factors");
    for (std::size_t i = 1; i < coarsen.size(); ++i)
        if (!(coarsen[i] < coarsen[i - 1]))
            throw std::invalid_argument("coarsening factors must be strictly decreasing");
    if (!(reference > 0.0)) throw std::invalid_argument("reference capacity must be positive");
    LevelBodyCapacity out;
    out.level = r;
    out.coarsen = coarsen;
    for (int f : coarsen) {
        const Quadrature q = extension_level_body(sol, r, f, shell_blocks);
        const EquilibriumSolution e = solve_equilibrium(q, KernelSpec::newtonian(3), solver);
        out.cell_sizes.push_back(q.cell_size);
        out.nodes.push_back(q.size());
        out.capacities.push_back(e.capacity_mass);
    }
    const std::size_t n = out.capacities.size();
    out.extrapolated =
        richardson(out.cell_sizes[n - 2], out.capacities[n - 2], out.cell_sizes[n - 1], out.capacities[n - 1], 1.0);
    out.predicted = reference / r;
    out.ratio = out.extrapolated / out.predicted;
    return out;
}

}  // namespace fraccap
