#include "fraccap/analysis.hpp"
#include "fraccap/body_io.hpp"
#include "fraccap/config.hpp"
#include "fraccap/extension.hpp"
#include "fraccap/riesz.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fraccap {

namespace {

using Json = nlohmann::ordered_json;

// A table written once at the end of the job.
struct Csv {
    std::string name;
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    template <class... T>
    void add(const T&... v)
    {
        rows.push_back({cell(v)...});
    }
    static std::string cell(double v)
    {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
};

struct Dat {
    std::string name;
    std::string comment;
    std::vector<std::vector<double>> rows;
};

struct Output {
    Json results = Json::object();
    std::vector<Csv> tables;
    std::vector<Dat> data;
    int exit_code = 0;
};

Json point_json(const Point& p, int dim)
{
    Json a = Json::array({p.x(), p.y()});
    if (dim == 3) a.push_back(p.z());
    return a;
}

Json table_json(const ConvergenceTable& t)
{
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"cell_size", r.cell_size}, {"nodes", r.nodes}, {"mass", r.mass}, {"asymptotic", r.asymptotic},
                        {"discrepancy", r.discrepancy}, {"iterations", r.iterations}});
    return {{"rows", rows},
            {"empirical_order", t.empirical_order},
            {"richardson_order", t.richardson_order},
            {"extrapolated", t.extrapolated},
            {"extrapolated_coarse", t.extrapolated_coarse},
            {"error_bar", t.error_bar}};
}

Json fit_json(const HomothetyFit& f, int dim)
{
    return {{"rho", f.rho}, {"xi", point_json(f.xi, dim)}, {"residual", f.residual}, {"clamped", f.clamped}};
}

Json body_json(const ConvexBody& k)
{
    std::string type = k.ball() ? "ball" : (k.polytope() ? "polytope" : "support");
    Json j = {{"type", type},
              {"dim", k.dim()},
              {"directions", k.grid().size()},
              {"mean_half_width", k.mean_half_width()},
              {"inradius", k.inradius()},
              {"measure", body_measure(k)}};
    if (const Ball* b = k.ball()) {
        j["center"] = point_json(b->center, k.dim());
        j["radius"] = b->radius;
    }
    if (const Polytope* p = k.polytope()) {
        Json v = Json::array();
        for (const auto& x : p->vertices) v.push_back(point_json(x, k.dim()));
        j["vertices"] = v;
    }
    return j;
}

CapacityOptions capacity_options(const RunConfig& c)
{
    CapacityOptions o;
    if (c.boundary == "center") o.raster.rule = BoundaryRule::CenterIn;
    else if (c.boundary == "occupancy") o.raster.rule = BoundaryRule::Occupancy;
    else o.raster.rule = BoundaryRule::Conforming;
    return o;
}

std::vector<double> ladder_of(const RunConfig& c)
{
    if (!c.ladder.empty()) return c.ladder;
    std::vector<double> out;
    for (double f : c.ladder_factors) out.push_back(f * c.cell_size);
    return out;
}

void run_capacity(const RunConfig& c, Output& out, bool force_ladder)
{
    const ConvexBody k = load_body(c.body);
    const KernelSpec spec = KernelSpec::fractional(k.dim());
    const CapacityOptions opts = capacity_options(c);
    const std::vector<double> sizes = (force_ladder || !c.ladder.empty()) ? ladder_of(c) : std::vector<double>{c.cell_size};

    Csv conv{"convergence.csv", "fraccap." + c.command + ".v1",
             {"cell_size", "nodes", "mass", "asymptotic", "discrepancy", "iterations"}, {}};
    std::vector<ConvergenceRow> rows;
    std::optional<CapacityRun> finest;
    for (double h : sizes) {
        CapacityRun run = capacity_run(k, h, spec, opts);
        rows.push_back(convergence_row(run));
        const auto& r = rows.back();
        conv.add(r.cell_size, r.nodes, r.mass, r.asymptotic, r.discrepancy, r.iterations);
        finest = std::move(run);
    }
    out.tables.push_back(conv);

    const auto& sol = finest->solution;
    Json res = {{"body", body_json(k)}, {"kernel_exponent", spec.exponent}};
    if (rows.size() >= 3) {
        const ConvergenceTable t = convergence_table(rows);
        res["convergence"] = table_json(t);
        res["capacity"] = t.extrapolated;
        res["error_bar"] = t.error_bar;
    } else {
        const auto& e = finest->estimate;
        res["capacity"] = e.mass_estimate;
        res["mass_estimate"] = e.mass_estimate;
        res["asymptotic_estimate"] = e.asymptotic_estimate;
        res["discrepancy"] = e.discrepancy;
        res["error_bar"] = nullptr;
    }
    res["finest"] = {{"cell_size", sol.quadrature.cell_size},
                     {"nodes", sol.quadrature.size()},
                     {"iterations", sol.iterations},
                     {"relative_residual", sol.relative_residual},
                     {"residual_max", sol.residual_stats.max},
                     {"residual_rms", sol.residual_stats.rms},
                     {"negative_count", sol.negativity_stats.count},
                     {"negative_magnitude", sol.negativity_stats.magnitude},
                     {"asymptotic_radii", finest->asymptotic.radii},
                     {"asymptotic_shell_values", finest->asymptotic.shell_values}};

    const Point center = k.interior_point();
    const double rad = k.bounding_radius(center);
    std::vector<double> rel = c.radii.empty() ? std::vector<double>{1.2, 1.5, 2, 3, 4, 6, 8, 12, 16} : c.radii;
    std::vector<double> radii;
    for (double r : rel) radii.push_back(r * rad);
    const auto profile = power_law_profile(sol, center, k.ball() ? k.ball()->radius : k.mean_half_width(), radii);
    const RadialityStats rs = radiality_test(sol, center, radii);
    Csv prof{"profile.csv", "fraccap." + c.command + ".profile.v1",
             {"radius", "mean_u", "scaled", "law_deviation", "spread"}, {}};
    Dat dat{"profile.dat", "radius  u*|x|^(n-1)", {}};
    Json pj = Json::array();
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const auto& p = profile[i];
        prof.add(p.radius, p.potential, p.scaled, p.deviation, rs.spreads[i]);
        dat.rows.push_back({p.radius, p.scaled});
        pj.push_back({{"radius", p.radius}, {"mean_u", p.potential}, {"scaled", p.scaled},
                      {"law_deviation", p.deviation}, {"spread", rs.spreads[i]}});
    }
    res["profile"] = pj;
    res["max_spread"] = rs.max_spread;
    out.tables.push_back(prof);
    out.data.push_back(dat);
    out.results = res;
}

void run_bm(const RunConfig& c, Output& out)
{
    const ConvexBody k1 = load_body(c.body1);
    const ConvexBody k2 = load_body(c.body2);
    BMOptions opts;
    opts.ladder = c.ladder_factors;
    opts.capacity = capacity_options(c);
    const BMReport rep = bm_sweep(k1, k2, c.lambdas, c.cell_size, opts);

    Csv t{"bm.csv", "fraccap.bm.v1", {"lambda", "capacity", "capacity_bar", "deficit", "deficit_bar", "class"}, {}};
    Dat d{"deficit.dat", "lambda  deficit  deficit_bar", {}};
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        t.add(r.lambda, r.body.capacity, r.body.bar, r.deficit, r.bar, to_string(r.classification));
        d.rows.push_back({r.lambda, r.deficit, r.bar});
        rows.push_back({{"lambda", r.lambda},
                        {"capacity", r.body.capacity},
                        {"capacity_bar", r.body.bar},
                        {"deficit", r.deficit},
                        {"deficit_bar", r.bar},
                        {"class", to_string(r.classification)},
                        {"convergence", table_json(r.body.table)}});
    }
    Json res = {{"body1", body_json(k1)},
                {"body2", body_json(k2)},
                {"cell_size", rep.cell_size},
                {"ladder_factors", opts.ladder},
                {"k1", {{"capacity", rep.k1.capacity}, {"bar", rep.k1.bar}, {"convergence", table_json(rep.k1.table)}}},
                {"k2", {{"capacity", rep.k2.capacity}, {"bar", rep.k2.bar}, {"convergence", table_json(rep.k2.table)}}},
                {"homothety", fit_json(rep.fit, rep.dim)},
                {"homothety_relative_residual", rep.fit_relative_residual},
                {"rows", rows},
                {"satisfied", rep.count(BMClass::Satisfied)},
                {"near_equality", rep.count(BMClass::NearEquality)},
                {"violated", rep.count(BMClass::Violated)}};
    if (rep.count(BMClass::Violated) > 0) out.exit_code = 2;

    const bool has_half = std::any_of(rep.rows.begin(), rep.rows.end(), [](const BMRow& r) { return std::abs(r.lambda - 0.5) < 1e-12; });
    const EqualityProbe p = has_half ? bm_equality_probe(rep, k1, k2, opts) : bm_equality_probe(k1, k2, c.cell_size, opts);
    res["equality_probe"] = {{"homothetic", p.homothetic},
                             {"relative_residual", p.relative_residual},
                             {"resolution_adequate", p.resolution_adequate},
                             {"deficit", p.deficit},
                             {"bar", p.bar},
                             {"class", to_string(p.classification)},
                             {"advice", p.advice}};
    if (p.classification == ProbeClass::Tension) out.exit_code = 2;
    out.tables.push_back(t);
    out.data.push_back(d);
    out.results = res;
}

void run_concavity(const RunConfig& c, Output& out)
{
    const ConvexBody k = load_body(c.body);
    ConcavityOptions o;
    o.beta_lo = c.beta_lo;
    o.beta_hi = c.beta_hi;
    o.bracket_tol = c.bracket_tol;
    o.n_segments = c.segments;
    o.seed = c.seed;
    const ConcavityReport rep = body_concavity_experiment(k, c.cell_size, c.shell_lo, c.shell_hi, o, capacity_options(c));
    Csv t{"concavity.csv", "fraccap.concavity.v1", {"beta", "passed", "worst_violation", "x", "y", "z"}, {}};
    Dat d{"concavity.dat", "beta  worst_violation", {}};
    Json tests = Json::array();
    for (const auto& b : rep.tests) {
        t.add(b.beta, b.passed, b.worst_violation, b.worst_location.x(), b.worst_location.y(), b.worst_location.z());
        d.rows.push_back({b.beta, b.worst_violation});
        tests.push_back({{"beta", b.beta}, {"passed", b.passed}, {"worst_violation", b.worst_violation},
                         {"worst_location", point_json(b.worst_location, k.dim())}});
    }
    out.results = {{"body", body_json(k)},
                   {"cell_size", c.cell_size},
                   {"alpha", rep.alpha},
                   {"beta_lo", rep.beta_lo},
                   {"beta_hi", rep.beta_hi},
                   {"below_bracket", rep.below_bracket},
                   {"ceiling", rep.ceiling ? Json(*rep.ceiling) : Json(nullptr)},
                   {"gap", rep.gap ? Json(*rep.gap) : Json(nullptr)},
                   {"segments", rep.n_segments},
                   {"seed", rep.seed},
                   {"region", {{"center", point_json(rep.region.center, k.dim())}, {"r_in", rep.region.r_in}, {"r_out", rep.region.r_out}}},
                   {"tests", tests}};
    out.tables.push_back(t);
    out.data.push_back(d);
}

Json level_json(const LevelSet& l)
{
    return {{"t", l.t},
            {"mean_half_width", l.body.mean_half_width()},
            {"convexity_score", l.convexity_score},
            {"probes_inside", l.probes_inside},
            {"probes_in_hull", l.probes_in_hull},
            {"probe_spacing", l.probe_spacing}};
}

void run_levelsets(const RunConfig& c, Output& out)
{
    const ConvexBody k = load_body(c.body);
    LevelOptions o;
    o.ladder = c.ladder_factors;
    o.capacity = capacity_options(c);
    const LevelSetReport rep = level_scaling_experiment(k, c.levels, c.cell_size, o, true);

    Csv t{"levels.csv", "fraccap.levelsets.v1",
          {"t", "capacity", "capacity_bar", "ratio", "ratio_bar", "convexity_score", "mean_half_width"}, {}};
    Dat d{"ratio.dat", "t  ratio  ratio_bar", {}};
    Json levels = Json::array();
    for (const auto& e : rep.levels) {
        t.add(e.level.t, e.capacity->extrapolated, e.capacity->error_bar, e.ratio, e.ratio_bar, e.level.convexity_score,
              e.level.body.mean_half_width());
        d.rows.push_back({e.level.t, e.ratio, e.ratio_bar});
        Json j = level_json(e.level);
        j["ratio"] = e.ratio;
        j["ratio_bar"] = e.ratio_bar;
        j["convergence"] = table_json(*e.capacity);
        levels.push_back(j);
    }
    Csv h{"homothety.csv", "fraccap.levelsets.homothety.v1",
          {"r", "s", "rho", "xi_x", "xi_y", "residual", "relative_residual", "relation"}, {}};
    Json fits = Json::array();
    for (const auto& f : rep.fits) {
        h.add(f.r, f.s, f.fit.rho, f.fit.xi.x(), f.fit.xi.y(), f.fit.residual, f.relative_residual, std::string());
        fits.push_back({{"r", f.r}, {"s", f.s}, {"fit", fit_json(f.fit, 2)}, {"relative_residual", f.relative_residual}});
    }

    const double lo = std::min(c.r, c.s), hi = std::max(c.r, c.s);
    const HomotheticLevels hom = homothetic_levels_experiment(k, lo, hi, c.cell_size, o);
    h.add(hom.r, hom.s, hom.fit.fit.rho, hom.fit.fit.xi.x(), hom.fit.fit.xi.y(), hom.fit.fit.residual,
          hom.fit.relative_residual, hom.relation ? Csv::cell(*hom.relation) : std::string());
    const ThreeLevels three = three_levels_experiment(k, hi, lo, c.lambda, c.cell_size, o);

    out.results = {{"body", body_json(k)},
                   {"cell_size", c.cell_size},
                   {"ladder_factors", o.ladder},
                   {"base_capacity", table_json(*rep.base_capacity)},
                   {"levels", levels},
                   {"nested", rep.nested},
                   {"fits", fits},
                   {"homothetic_levels",
                    {{"r", hom.r},
                     {"s", hom.s},
                     {"fit", fit_json(hom.fit.fit, 2)},
                     {"relative_residual", hom.fit.relative_residual},
                     {"threshold", hom.threshold},
                     {"homothetic", hom.homothetic},
                     {"relation", hom.relation ? Json(*hom.relation) : Json(nullptr)},
                     {"ball_residual", hom.ball_residual ? Json(*hom.ball_residual) : Json(nullptr)}}},
                   {"three_levels",
                    {{"r", three.r},
                     {"s", three.s},
                     {"lambda", three.lambda},
                     {"t", three.t},
                     {"margin", three.margin},
                     {"relative_margin", three.relative_margin},
                     {"tolerance", three.tolerance},
                     {"included", three.included}}}};
    if (!rep.nested || !three.included) out.exit_code = 2;
    out.tables.push_back(t);
    out.tables.push_back(h);
    out.data.push_back(d);
}

void run_extension(const RunConfig& c, Output& out)
{
    const ConvexBody k = load_body(c.body);
    const ExtensionGrid grid = ExtensionGrid::for_body(k, c.ext_spacing, c.box_factor);
    const ExtensionSolution sol = solve_extension(k, grid);

    Csv shell{"shell.csv", "fraccap.extension.shell.v1", {"radius", "mean_scaled_u"}, {}};
    for (std::size_t i = 0; i < sol.fit.radii.size(); ++i) shell.add(sol.fit.radii[i], sol.fit.shell_values[i]);

    Csv lv{"levels.csv", "fraccap.extension.v1", {"r", "coarsen", "cell_size", "nodes", "capacity"}, {}};
    Dat ratio{"ratio.dat", "r  extrapolated  predicted  ratio", {}};
    Json levels = Json::array();
    for (double r : c.ext_levels) {
        const LevelBodyCapacity l = level_body_capacity(sol, r, sol.capacity_estimate);
        for (std::size_t i = 0; i < l.capacities.size(); ++i)
            lv.add(r, l.coarsen[i], l.cell_sizes[i], l.nodes[i], l.capacities[i]);
        ratio.rows.push_back({r, l.extrapolated, l.predicted, l.ratio});
        levels.push_back({{"r", r},
                          {"coarsen", l.coarsen},
                          {"cell_sizes", l.cell_sizes},
                          {"nodes", l.nodes},
                          {"capacities", l.capacities},
                          {"extrapolated", l.extrapolated},
                          {"predicted", l.predicted},
                          {"ratio", l.ratio}});
    }
    Dat axis{"axis.dat", "z  U(center + z e3)", {}};
    for (int z = 0; z < grid.count_z(); ++z) {
        const double h = z * grid.spacing;
        axis.rows.push_back({h, sol.value(grid.center + Point(0.0, 0.0, h))});
    }
    out.results = {{"body", body_json(k)},
                   {"grid", {{"center", point_json(grid.center, 2)}, {"half_width", grid.half_width}, {"spacing", grid.spacing},
                             {"count_xy", grid.count_xy()}, {"count_z", grid.count_z()}}},
                   {"residual", sol.residual},
                   {"sweeps", sol.sweeps},
                   {"outer_passes", sol.outer_passes},
                   {"far_coefficient", sol.far_coefficient},
                   {"capacity", sol.capacity_estimate},
                   {"gauss_charge", sol.gauss_charge},
                   {"shell_radii", sol.fit.radii},
                   {"shell_values", sol.fit.shell_values},
                   {"level_bodies", levels}};
    out.tables.push_back(shell);
    out.tables.push_back(lv);
    out.data.push_back(ratio);
    out.data.push_back(axis);
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

void write_outputs(const RunConfig& c, const Output& out)
{
    namespace fs = std::filesystem;
    fs::create_directories(c.output);
    Json report;
    report["tool"] = "fraccap";
    report["version"] = FRACCAP_VERSION;
    report["command"] = c.command;
    if (c.timestamp) report["timestamp"] = utc_now();
    Json cfg = Json::object();
    for (const auto& [k, v] : c.to_map()) cfg[k] = v;
    report["config"] = cfg;
    report["seed"] = c.seed;
    report["exit_code"] = out.exit_code;
    report["results"] = out.results;
    std::vector<std::string> files = {"report.json"};
    for (const auto& t : out.tables) files.push_back(t.name);
    for (const auto& d : out.data) files.push_back(d.name);
    report["files"] = files;

    auto open = [&](const std::string& name) {
        std::ofstream f(fs::path(c.output) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (fs::path(c.output) / name).string());
        return f;
    };
    {
        auto f = open("report.json");
        f << report.dump(2) << "\n";
    }
    for (const auto& t : out.tables) {
        auto f = open(t.name);
        f << "# schema: " << t.schema << "\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i) f << (i ? "," : "") << t.columns[i];
        f << "\n";
        for (const auto& r : t.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << r[i];
            f << "\n";
        }
    }
    for (const auto& d : out.data) {
        auto f = open(d.name);
        f << "# " << d.comment << "\n";
        f.precision(17);
        for (const auto& r : d.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) f << (i ? " " : "") << r[i];
            f << "\n";
        }
    }
}

}  // namespace

int run(const RunConfig& c, std::ostream& log)
{
    if (c.print_config) {
        log << c.to_text();
        return 0;
    }
    Output out;
    if (c.command == "capacity") run_capacity(c, out, false);
    else if (c.command == "convergence") run_capacity(c, out, true);
    else if (c.command == "bm") run_bm(c, out);
    else if (c.command == "concavity") run_concavity(c, out);
    else if (c.command == "levelsets") run_levelsets(c, out);
    else if (c.command == "extension") run_extension(c, out);
    else throw ConfigError("command", "unknown command '" + c.command + "'");
    write_outputs(c, out);
    log << c.command << ": wrote " << (std::filesystem::path(c.output) / "report.json").string()
        << " (exit " << out.exit_code << ")\n";
    return out.exit_code;
}

int cli_main(int argc, const char* const* argv, std::ostream& log, std::ostream& err)
{
    try {
        return run(parse_config(argc, argv), log);
    } catch (const HelpRequested& h) {
        log << h.what() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "fraccap: error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fraccap
