#include "fraccap/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fraccap {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string canonical_key(std::string k)
{
    std::replace(k.begin(), k.end(), '_', '-');
    return k;
}

double to_number(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        throw ConfigError(key, "'" + t + "' is not a finite number");
    return v;
}

// Shortest text that reads back to the same double.
std::string fmt(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out;
}

void check_range(const std::string& key, double v, double lo, double hi, bool lo_open, bool hi_open,
                 const std::string& range)
{
    const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    if (!ok) throw ConfigError(key, fmt(v) + " is out of range; accepted " + range);
}

bool to_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(key, "'" + t + "' is not a boolean; accepted true/false");
}

}  // namespace

const std::vector<std::string>& config_commands()
{
    static const std::vector<std::string> c = {"capacity", "bm", "concavity", "levelsets", "extension", "convergence"};
    return c;
}

const std::vector<KeyInfo>& config_keys()
{
    static const std::vector<KeyInfo> keys = {
        {"body", "path", "body file (capacity, concavity, levelsets, extension, convergence)"},
        {"body1", "path", "first body file (bm)"},
        {"body2", "path", "second body file (bm)"},
        {"cell-size", "real in (0, 1]", "base cell size"},
        {"ladder", "list of reals in (0, 1]", "absolute cell sizes, strictly decreasing, at least 3 (capacity, convergence)"},
        {"ladder-factors", "list of reals in (0, 16]", "multiples of cell-size, strictly decreasing, at least 3"},
        {"boundary", "conforming|center|occupancy", "boundary-cell rule of the rasterizer"},
        {"lambdas", "list or range of reals in (0, 1)", "Minkowski weights, strictly increasing (bm)"},
        {"levels", "list of reals in (0, 0.6]", "levels t (levelsets)"},
        {"r", "real in (0, 0.6]", "level r (levelsets: homothety pair uses r < s, inclusion uses s < r)"},
        {"s", "real in (0, 0.6]", "level s"},
        {"lambda", "real in (0, 1)", "inclusion weight (levelsets)"},
        {"beta-lo", "real >= -64", "bracket bottom (concavity)"},
        {"beta-hi", "real <= 1", "bracket top (concavity)"},
        {"bracket-tol", "real in (0, 1]", "bisection tolerance (concavity)"},
        {"segments", "integer in [10, 10^7]", "random segments (concavity)"},
        {"shell-lo", "real > 0", "inner shell radius over circumradius (concavity)"},
        {"shell-hi", "real > shell-lo", "outer shell radius over circumradius (concavity)"},
        {"radii", "list of reals > 0", "profile radii over circumradius (capacity, convergence)"},
        {"ext-spacing", "real in (0, 1]", "extension grid spacing (extension)"},
        {"box-factor", "real in [4, 16]", "extension box half-width over circumradius (extension)"},
        {"ext-levels", "list of reals in (0, 1)", "levels r of {U >= r} (extension)"},
        {"seed", "integer >= 0", "random seed"},
        {"output", "directory", "output directory, created if missing"},
        {"timestamp", "true|false", "embed a timestamp in report.json"},
    };
    return keys;
}

std::string command_outputs(const std::string& command)
{
    const std::string common = "Outputs in --output: report.json (schema docs/report_schema.json) and\n";
    if (command == "capacity" || command == "convergence")
        return common +
               "  convergence.csv  cell_size,nodes,mass,asymptotic,discrepancy,iterations\n"
               "  profile.csv      radius,mean_u,scaled,law_deviation,spread\n"
               "  profile.dat      radius  u*|x|^(n-1)\n"
               "With a single cell size (capacity without --ladder) convergence.csv has one row.";
    if (command == "bm")
        return common +
               "  bm.csv           lambda,capacity,capacity_bar,deficit,deficit_bar,class\n"
               "  deficit.dat      lambda  deficit  deficit_bar\n"
               "Exit code 2 when a deficit is VIOLATED or the equality probe reports TENSION.";
    if (command == "concavity")
        return common +
               "  concavity.csv    beta,passed,worst_violation,x,y,z\n"
               "  concavity.dat    beta  worst_violation";
    if (command == "levelsets")
        return common +
               "  levels.csv       t,capacity,capacity_bar,ratio,ratio_bar,convexity_score,mean_half_width\n"
               "  homothety.csv    r,s,rho,xi_x,xi_y,residual,relative_residual,relation\n"
               "  ratio.dat        t  ratio  ratio_bar\n"
               "Exit code 2 when levels are not nested or the three-level inclusion fails.";
    if (command == "extension")
        return common +
               "  shell.csv        radius,mean_scaled_u\n"
               "  levels.csv       r,coarsen,cell_size,nodes,capacity\n"
               "  ratio.dat        r  extrapolated  predicted  ratio\n"
               "  axis.dat         z  U(center + z e3)";
    return common;
}

std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t.empty()) throw ConfigError(key, "empty list");
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::istringstream in(t);
        std::string p;
        while (std::getline(in, p, ':')) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError(key, "range must be start:stop:step");
        const double a = to_number(key, parts[0]), b = to_number(key, parts[1]), step = to_number(key, parts[2]);
        if (!(step > 0.0) || b < a) throw ConfigError(key, "range needs step > 0 and stop >= start");
        const double count = std::floor((b - a) / step + 0.5);
        if (count > 1e6) throw ConfigError(key, "range has too many entries");
        std::vector<double> out;
        for (int i = 0; i <= static_cast<int>(count); ++i) out.push_back(std::round((a + i * step) * 1e12) / 1e12);
        return out;
    }
    std::vector<double> out;
    std::istringstream in(t);
    std::string p;
    while (std::getline(in, p, ',')) out.push_back(to_number(key, p));
    if (!t.empty() && t.back() == ',') throw ConfigError(key, "trailing comma");
    return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source)
{
    std::set<std::string> known;
    for (const auto& k : config_keys()) known.insert(k.name);
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("", where + ": expected 'key = value'");
        const std::string key = canonical_key(trim(line.substr(0, eq)));
        if (!known.count(key)) throw ConfigError(key, where + ": unknown key");
        if (out.count(key)) throw ConfigError(key, where + ": duplicate key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

RunConfig resolve_config(const std::string& command, const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& overrides)
{
    const auto& cmds = config_commands();
    if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
        throw ConfigError("command", "'" + command + "' is not one of capacity, bm, concavity, levelsets, extension, convergence");

    std::set<std::string> known;
    for (const auto& k : config_keys()) known.insert(k.name);
    std::map<std::string, std::string> v = file_values;
    for (const auto& [k, val] : overrides) {
        if (!known.count(k)) throw ConfigError(k, "unknown key");
        v[k] = val;
    }

    RunConfig c;
    c.command = command;
    auto number = [&](const std::string& key, double& dst) {
        if (v.count(key)) dst = to_number(key, v.at(key));
    };
    auto list = [&](const std::string& key, std::vector<double>& dst) {
        if (v.count(key)) dst = parse_list(key, v.at(key));
    };
    auto path = [&](const std::string& key, std::string& dst) {
        if (!v.count(key)) return;
        dst = trim(v.at(key));
        if (!std::filesystem::is_regular_file(dst)) throw ConfigError(key, "file '" + dst + "' does not exist");
    };

    path("body", c.body);
    path("body1", c.body1);
    path("body2", c.body2);
    number("cell-size", c.cell_size);
    list("ladder", c.ladder);
    list("ladder-factors", c.ladder_factors);
    if (v.count("boundary")) c.boundary = trim(v.at("boundary"));
    list("lambdas", c.lambdas);
    list("levels", c.levels);
    number("r", c.r);
    number("s", c.s);
    number("lambda", c.lambda);
    number("beta-lo", c.beta_lo);
    number("beta-hi", c.beta_hi);
    number("bracket-tol", c.bracket_tol);
    if (v.count("segments")) {
        const double n = to_number("segments", v.at("segments"));
        if (n != std::floor(n)) throw ConfigError("segments", "expected an integer");
        check_range("segments", n, 10, 1e7, false, false, "[10, 10^7]");
        c.segments = static_cast<int>(n);
    }
    number("shell-lo", c.shell_lo);
    number("shell-hi", c.shell_hi);
    list("radii", c.radii);
    number("ext-spacing", c.ext_spacing);
    number("box-factor", c.box_factor);
    list("ext-levels", c.ext_levels);
    if (v.count("seed")) {
        const std::string t = trim(v.at("seed"));
        if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("seed", "'" + t + "' is not a non-negative integer");
        errno = 0;
        c.seed = std::strtoull(t.c_str(), nullptr, 10);
        if (errno == ERANGE) throw ConfigError("seed", "value exceeds 64 bits");
    }
    if (v.count("output")) c.output = trim(v.at("output"));
    if (v.count("timestamp")) c.timestamp = to_bool("timestamp", v.at("timestamp"));

    check_range("cell-size", c.cell_size, 0.0, 1.0, true, false, "(0, 1]");
    auto decreasing = [](const std::string& key, const std::vector<double>& l, double hi, const std::string& range) {
        if (l.size() < 3) throw ConfigError(key, "needs at least 3 entries");
        for (std::size_t i = 0; i < l.size(); ++i) {
            check_range(key, l[i], 0.0, hi, true, false, range);
            if (i > 0 && !(l[i] < l[i - 1])) throw ConfigError(key, "entries must decrease strictly");
        }
    };
    if (!c.ladder.empty()) decreasing("ladder", c.ladder, 1.0, "(0, 1]");
    decreasing("ladder-factors", c.ladder_factors, 16.0, "(0, 16]");
    if (c.boundary != "conforming" && c.boundary != "center" && c.boundary != "occupancy")
        throw ConfigError("boundary", "'" + c.boundary + "' is not one of conforming, center, occupancy");
    for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
        check_range("lambdas", c.lambdas[i], 0.0, 1.0, true, true, "(0, 1)");
        if (i > 0 && !(c.lambdas[i] > c.lambdas[i - 1])) throw ConfigError("lambdas", "entries must increase strictly");
    }
    if (c.lambdas.empty()) throw ConfigError("lambdas", "empty list");
    for (double t : c.levels) check_range("levels", t, 0.0, 0.6, true, false, "(0, 0.6]");
    check_range("r", c.r, 0.0, 0.6, true, false, "(0, 0.6]");
    check_range("s", c.s, 0.0, 0.6, true, false, "(0, 0.6]");
    if (c.r == c.s) throw ConfigError("s", "levels r and s must differ");
    check_range("lambda", c.lambda, 0.0, 1.0, true, true, "(0, 1)");
    check_range("beta-lo", c.beta_lo, -64.0, 1.0, false, true, "[-64, 1)");
    check_range("beta-hi", c.beta_hi, c.beta_lo, 1.0, true, false, "(beta-lo, 1]");
    check_range("bracket-tol", c.bracket_tol, 0.0, 1.0, true, false, "(0, 1]");
    check_range("shell-lo", c.shell_lo, 0.0, 1e6, true, false, "(0, 10^6]");
    check_range("shell-hi", c.shell_hi, c.shell_lo, 1e6, true, false, "(shell-lo, 10^6]");
    for (double r : c.radii) check_range("radii", r, 0.0, 1e6, true, false, "(0, 10^6]");
    check_range("ext-spacing", c.ext_spacing, 0.0, 1.0, true, false, "(0, 1]");
    check_range("box-factor", c.box_factor, 4.0, 16.0, false, false, "[4, 16]");
    for (double r : c.ext_levels) check_range("ext-levels", r, 0.0, 1.0, true, true, "(0, 1)");

    auto require = [&](const std::string& key, const std::string& value) {
        if (value.empty()) throw ConfigError(key, "required by '" + command + "'");
    };
    if (command == "bm") {
        require("body1", c.body1);
        require("body2", c.body2);
    } else {
        require("body", c.body);
    }
    return c;
}

std::map<std::string, std::string> RunConfig::to_map() const
{
    std::map<std::string, std::string> m;
    m["body"] = body;
    m["body1"] = body1;
    m["body2"] = body2;
    m["cell-size"] = fmt(cell_size);
    m["ladder"] = fmt_list(ladder);
    m["ladder-factors"] = fmt_list(ladder_factors);
    m["boundary"] = boundary;
    m["lambdas"] = fmt_list(lambdas);
    m["levels"] = fmt_list(levels);
    m["r"] = fmt(r);
    m["s"] = fmt(s);
    m["lambda"] = fmt(lambda);
    m["beta-lo"] = fmt(beta_lo);
    m["beta-hi"] = fmt(beta_hi);
    m["bracket-tol"] = fmt(bracket_tol);
    m["segments"] = std::to_string(segments);
    m["shell-lo"] = fmt(shell_lo);
    m["shell-hi"] = fmt(shell_hi);
    m["radii"] = fmt_list(radii);
    m["ext-spacing"] = fmt(ext_spacing);
    m["box-factor"] = fmt(box_factor);
    m["ext-levels"] = fmt_list(ext_levels);
    m["seed"] = std::to_string(seed);
    m["output"] = output;
    m["timestamp"] = timestamp ? "true" : "false";
    return m;
}

std::string RunConfig::to_text() const
{
    std::ostringstream out;
    out << "# command = " << command << "\n";
    const auto m = to_map();
    for (const auto& k : config_keys()) {
        const std::string& val = m.at(k.name);
        if (val.empty()) out << "# " << k.name << " (unset)\n";
        else out << k.name << " = " << val << "\n";
    }
    return out.str();
}

RunConfig parse_config(int argc, const char* const* argv)
{
    CLI::App app{"Fractional capacity laboratory"};
    app.require_subcommand(1, 1);
    app.allow_windows_style_options(false);

    std::string config_file;
    bool print_config = false, no_timestamp = false;
    std::map<std::string, std::string> flags;

    static const std::map<std::string, std::string> about = {
        {"capacity", "capacity of one body, one cell size or a ladder"},
        {"bm", "Brunn-Minkowski deficit sweep between two bodies"},
        {"concavity", "concavity index of the computed potential"},
        {"levelsets", "super-level sets: scaling, homothety, three-level inclusion"},
        {"extension", "harmonic extension solve and its level bodies"},
        {"convergence", "refinement ladder with Richardson extrapolation"},
    };
    for (const auto& name : config_commands()) {
        CLI::App* sub = app.add_subcommand(name, about.at(name));
        sub->footer(command_outputs(name));
        sub->add_option("--config", config_file, "config file of key = value lines")->check(CLI::ExistingFile);
        sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
        sub->add_flag("--no-timestamp", no_timestamp, "omit the timestamp from report.json");
        for (const auto& k : config_keys()) {
            sub->add_option_function<std::string>(
                "--" + k.name, [&flags, name = k.name](const std::string& val) { flags[name] = val; },
                k.help + "; " + k.syntax);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        for (const CLI::App* sub : app.get_subcommands()) throw HelpRequested(sub->help());
        throw HelpRequested(app.help());
    } catch (const CLI::ParseError& e) {
        throw ConfigError("", e.what());
    }

    const std::string command = app.get_subcommands().front()->get_name();

    std::map<std::string, std::string> file_values;
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw ConfigError("config", "cannot open '" + config_file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        file_values = parse_config_text(ss.str(), config_file);
    }
    if (no_timestamp) flags["timestamp"] = "false";
    RunConfig c = resolve_config(command, file_values, flags);
    c.config_file = config_file;
    c.print_config = print_config;
    return c;
}

}  // namespace fraccap
