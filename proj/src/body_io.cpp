#include "fraccap/body_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
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

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
};

class Fields {
public:
    Fields(std::string source) : source_(std::move(source)) {}

    void add(const std::string& key, const std::string& value, int line)
    {
        if (entries_.count(key)) throw ParseError(source_, line, key, "duplicate key");
        entries_[key] = {value, line};
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const Entry& get(const std::string& key) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ParseError(source_, 0, key, "missing required key");
        used_.insert(key);
        return it->second;
    }

    double number(const std::string& key, const std::string& text, int line) const
    {
        const std::string t = trim(text);
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
            throw ParseError(source_, line, key, "'" + t + "' is not a finite number");
        return v;
    }

    std::vector<double> numbers(const std::string& key) const
    {
        const Entry& e = get(key);
        std::vector<double> out;
        for (const auto& part : split(e.value, ',')) out.push_back(number(key, part, e.line));
        return out;
    }

    Point point(const std::string& key, const std::string& text, int line, int dim) const
    {
        std::vector<double> c;
        for (const auto& part : split(text, ',')) c.push_back(number(key, part, line));
        if (static_cast<int>(c.size()) != dim)
            throw ParseError(source_, line, key,
                             "expected " + std::to_string(dim) + " coordinates, got " + std::to_string(c.size()));
        return Point(c[0], c[1], dim == 3 ? c[2] : 0.0);
    }

    int integer(const std::string& key) const
    {
        const Entry& e = get(key);
        const double v = number(key, e.value, e.line);
        if (v != std::floor(v) || std::abs(v) > 1e9) throw ParseError(source_, e.line, key, "expected an integer");
        return static_cast<int>(v);
    }

    void reject_unused(const std::set<std::string>& allowed) const
    {
        for (const auto& [k, e] : entries_)
            if (!allowed.count(k)) throw ParseError(source_, e.line, k, "key not allowed here");
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

int coordinate_count(const std::string& text)
{
    return static_cast<int>(split(text, ',').size());
}

}  // namespace

ParseError::ParseError(const std::string& source, int line, const std::string& key, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         (key.empty() ? std::string() : ": '" + key + "'") + ": " + message),
      source(source),
      line(line),
      key(key)
{
}

ConvexBody parse_body(const std::string& text, const std::string& source)
{
    Fields f(source);
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    static const std::set<std::string> known = {"type", "dim", "center", "radius", "vertices", "directions", "values"};
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "", "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known.count(key))
            throw ParseError(source, line_no, key,
                             "unknown key (accepted: type, dim, center, radius, vertices, directions, values)");
        if (value.empty()) throw ParseError(source, line_no, key, "empty value");
        f.add(key, value, line_no);
    }

    const Entry& type_entry = f.get("type");
    const std::string type = type_entry.value;
    if (type != "ball" && type != "polytope" && type != "support")
        throw ParseError(source, type_entry.line, "type", "'" + type + "' is not one of ball, polytope, support");

    int dim = 0;
    if (f.has("dim")) {
        dim = f.integer("dim");
        if (dim != 2 && dim != 3) throw ParseError(source, f.get("dim").line, "dim", "must be 2 or 3");
    }
    auto infer_dim = [&](const std::string& key, const std::string& coords, int line) {
        const int c = coordinate_count(coords);
        if (dim == 0) dim = c;
        if (dim != 2 && dim != 3) throw ParseError(source, line, key, "points must have 2 or 3 coordinates");
    };

    if (type == "ball") {
        f.reject_unused({"type", "dim", "center", "radius", "directions"});
        const Entry& ce = f.get("center");
        infer_dim("center", ce.value, ce.line);
        const Point c = f.point("center", ce.value, ce.line, dim);
        const Entry& re = f.get("radius");
        const double r = f.number("radius", re.value, re.line);
        if (!(r > 0.0)) throw ParseError(source, re.line, "radius", "must be positive");
        const int n = f.has("directions") ? f.integer("directions") : (dim == 2 ? 256 : 512);
        try {
            return make_ball(c, r, dim == 2 ? DirectionGrid::circle(n) : DirectionGrid::sphere(n));
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, f.has("directions") ? f.get("directions").line : 0, "directions", e.what());
        }
    }
    if (type == "polytope") {
        f.reject_unused({"type", "dim", "vertices", "directions"});
        const Entry& ve = f.get("vertices");
        const auto parts = split(ve.value, ';');
        std::vector<Point> pts;
        for (const auto& p : parts) {
            if (p.empty()) throw ParseError(source, ve.line, "vertices", "empty vertex entry");
            infer_dim("vertices", p, ve.line);
            pts.push_back(f.point("vertices", p, ve.line, dim));
        }
        const int n = f.has("directions") ? f.integer("directions") : (dim == 2 ? 256 : 512);
        try {
            return make_polytope(pts, dim == 2 ? DirectionGrid::circle(n) : DirectionGrid::sphere(n));
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, ve.line, "vertices", e.what());
        }
    }
    f.reject_unused({"type", "dim", "directions", "values"});
    if (dim == 0) dim = 2;
    const int n = f.integer("directions");
    std::vector<double> vals = f.numbers("values");
    if (static_cast<int>(vals.size()) != n)
        throw ParseError(source, f.get("values").line, "values",
                         "expected " + std::to_string(n) + " support values, got " + std::to_string(vals.size()));
    try {
        return make_support_body(dim == 2 ? DirectionGrid::circle(n) : DirectionGrid::sphere(n), std::move(vals));
    } catch (const std::invalid_argument& e) {
        throw ParseError(source, f.get("values").line, "values", e.what());
    }
}

ConvexBody load_body(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "", "cannot open body file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_body(ss.str(), path);
}

std::string format_body(const ConvexBody& k)
{
    std::ostringstream out;
    out.precision(17);
    const int dim = k.dim();
    auto coords = [&](const Point& p) {
        std::ostringstream s;
        s.precision(17);
        s << p.x() << ", " << p.y();
        if (dim == 3) s << ", " << p.z();
        return s.str();
    };
    if (const Ball* b = k.ball()) {
        out << "type = ball\ndim = " << dim << "\ncenter = " << coords(b->center) << "\nradius = " << b->radius
            << "\ndirections = " << k.grid().size() << "\n";
    } else if (const Polytope* p = k.polytope()) {
        out << "type = polytope\ndim = " << dim << "\nvertices = ";
        for (std::size_t i = 0; i < p->vertices.size(); ++i) out << (i ? "; " : "") << coords(p->vertices[i]);
        out << "\ndirections = " << k.grid().size() << "\n";
    } else {
        out << "type = support\ndim = " << dim << "\ndirections = " << k.grid().size() << "\nvalues = ";
        for (std::size_t i = 0; i < k.support().size(); ++i) out << (i ? ", " : "") << k.support()[i];
        out << "\n";
    }
    return out.str();
}

}  // namespace fraccap
