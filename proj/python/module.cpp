#include "fraccap/analysis.hpp"
#include "fraccap/body_io.hpp"
#include "fraccap/extension.hpp"
#include "fraccap/geometry.hpp"
#include "fraccap/riesz.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fraccap;

namespace {

Point to_point(const std::vector<double>& v)
{
    if (v.size() != 2 && v.size() != 3) throw py::value_error("points need 2 or 3 coordinates");
    return Point(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
}

std::vector<double> from_point(const Point& p, int dim)
{
    if (dim == 2) return {p.x(), p.y()};
    return {p.x(), p.y(), p.z()};
}

GridPtr grid_for(int dim, int count)
{
    if (dim == 2) return DirectionGrid::circle(count > 0 ? count : 256);
    if (dim == 3) return DirectionGrid::sphere(count > 0 ? count : 512);
    throw py::value_error("dim must be 2 or 3");
}

py::dict table_dict(const ConvergenceTable& t)
{
    py::list rows;
    for (const auto& r : t.rows) {
        py::dict d;
        d["cell_size"] = r.cell_size;
        d["nodes"] = r.nodes;
        d["mass"] = r.mass;
        d["asymptotic"] = r.asymptotic;
        d["discrepancy"] = r.discrepancy;
        rows.append(d);
    }
    py::dict out;
    out["rows"] = rows;
    out["empirical_order"] = t.empirical_order;
    out["extrapolated"] = t.extrapolated;
    out["error_bar"] = t.error_bar;
    return out;
}

}  // namespace

PYBIND11_MODULE(_fraccap, m)
{
    m.doc() = "Fractional capacity of convex bodies";

    py::class_<DirectionGrid, std::shared_ptr<DirectionGrid>>(m, "DirectionGrid")
        .def_property_readonly("dim", &DirectionGrid::dim)
        .def_property_readonly("size", &DirectionGrid::size);

    py::class_<ConvexBody>(m, "ConvexBody")
        .def_property_readonly("dim", &ConvexBody::dim)
        .def_property_readonly("support", &ConvexBody::support)
        .def_property_readonly("is_ball", [](const ConvexBody& k) { return k.ball() != nullptr; })
        .def("mean_half_width", &ConvexBody::mean_half_width)
        .def("inradius", &ConvexBody::inradius)
        .def("directions", [](const ConvexBody& k) {
            std::vector<std::vector<double>> out;
            for (const auto& d : k.grid().directions()) out.push_back(from_point(d, k.dim()));
            return out;
        })
        .def("__repr__", [](const ConvexBody& k) { return format_body(k); });

    py::class_<HomothetyFit>(m, "HomothetyFit")
        .def_readonly("rho", &HomothetyFit::rho)
        .def_property_readonly("xi", [](const HomothetyFit& f) { return from_point(f.xi, 3); })
        .def_readonly("residual", &HomothetyFit::residual)
        .def_readonly("clamped", &HomothetyFit::clamped);

    py::class_<Quadrature>(m, "Quadrature")
        .def_readonly("dim", &Quadrature::dim)
        .def_readonly("weights", &Quadrature::weights)
        .def_readonly("cell_size", &Quadrature::cell_size)
        .def("size", &Quadrature::size)
        .def("total_weight", &Quadrature::total_weight)
        .def("nodes", [](const Quadrature& q) {
            std::vector<std::vector<double>> out;
            for (const auto& p : q.nodes) out.push_back(from_point(p, q.dim));
            return out;
        });

    py::class_<EquilibriumSolution>(m, "EquilibriumSolution")
        .def_readonly("quadrature", &EquilibriumSolution::quadrature)
        .def_readonly("density", &EquilibriumSolution::density)
        .def_readonly("capacity_mass", &EquilibriumSolution::capacity_mass)
        .def_readonly("iterations", &EquilibriumSolution::iterations)
        .def_property_readonly("residual_max", [](const EquilibriumSolution& s) { return s.residual_stats.max; })
        .def_property_readonly("negative_count", [](const EquilibriumSolution& s) { return s.negativity_stats.count; })
        .def("potential", [](const EquilibriumSolution& s, const std::vector<double>& x) {
            return eval_potential(s, to_point(x));
        });

    py::class_<CapacityEstimate>(m, "CapacityEstimate")
        .def_readonly("mass_estimate", &CapacityEstimate::mass_estimate)
        .def_readonly("asymptotic_estimate", &CapacityEstimate::asymptotic_estimate)
        .def_readonly("discrepancy", &CapacityEstimate::discrepancy)
        .def_readonly("resolution", &CapacityEstimate::resolution)
        .def_readonly("nodes", &CapacityEstimate::nodes);

    m.def("make_ball", [](const std::vector<double>& c, double r, int directions) {
        return make_ball(to_point(c), r, grid_for(static_cast<int>(c.size()), directions));
    }, py::arg("center"), py::arg("radius"), py::arg("directions") = 0);
    m.def("make_polytope", [](const std::vector<std::vector<double>>& verts, int directions) {
        if (verts.empty()) throw py::value_error("no vertices");
        std::vector<Point> pts;
        for (const auto& v : verts) pts.push_back(to_point(v));
        return make_polytope(pts, grid_for(static_cast<int>(verts[0].size()), directions));
    }, py::arg("vertices"), py::arg("directions") = 0);
    m.def("parse_body", &parse_body, py::arg("text"), py::arg("source") = "<body>");
    m.def("load_body", &load_body);
    m.def("minkowski_combine", &minkowski_combine, py::arg("lam"), py::arg("k1"), py::arg("k2"));
    m.def("scale_translate", [](const ConvexBody& k, double rho, const std::vector<double>& xi) {
        return scale_translate(k, rho, to_point(xi));
    });
    m.def("contains_point", [](const ConvexBody& k, const std::vector<double>& x) { return contains_point(k, to_point(x)); });
    m.def("is_subset", &is_subset);
    m.def("detect_homothety", &detect_homothety);
    m.def("rasterize", [](const ConvexBody& k, double h) { return rasterize(k, h); });

    m.def("solve_equilibrium", [](const Quadrature& q, double exponent) {
        py::gil_scoped_release nogil;
        return solve_equilibrium(q, {exponent, q.dim});
    }, py::arg("quadrature"), py::arg("exponent") = 1.0);
    m.def("capacity", [](const ConvexBody& k, double h) {
        py::gil_scoped_release nogil;
        return capacity(k, h, KernelSpec::fractional(k.dim()));
    });
    m.def("refine_study", [](const ConvexBody& k, const std::vector<double>& sizes) {
        ConvergenceTable t;
        {
            py::gil_scoped_release nogil;
            t = refine_study(k, sizes, KernelSpec::fractional(k.dim()));
        }
        return table_dict(t);
    });

    m.def("concavity_index", [](const std::function<double(std::vector<double>)>& f, int dim, double r_in, double r_out,
                                int n_segments, std::uint64_t seed) {
        SamplingRegion reg;
        reg.dim = dim;
        reg.r_in = r_in;
        reg.r_out = r_out;
        ConcavityOptions o;
        o.n_segments = n_segments;
        o.seed = seed;
        const auto rep = concavity_index([&](const Point& x) { return f(from_point(x, dim)); }, reg, o);
        py::dict d;
        d["alpha"] = rep.alpha;
        d["beta_lo"] = rep.beta_lo;
        d["beta_hi"] = rep.beta_hi;
        return d;
    }, py::arg("field"), py::arg("dim"), py::arg("r_in"), py::arg("r_out"), py::arg("n_segments") = 2000,
       py::arg("seed") = 0);

    m.def("bm_sweep", [](const ConvexBody& k1, const ConvexBody& k2, const std::vector<double>& lambdas, double h) {
        BMReport rep;
        {
            py::gil_scoped_release nogil;
            rep = bm_sweep(k1, k2, lambdas, h);
        }
        py::list rows;
        for (const auto& r : rep.rows) {
            py::dict d;
            d["lambda"] = r.lambda;
            d["capacity"] = r.body.capacity;
            d["deficit"] = r.deficit;
            d["bar"] = r.bar;
            d["class"] = to_string(r.classification);
            rows.append(d);
        }
        return rows;
    });

    m.def("extension_capacity", [](const ConvexBody& k, double spacing) {
        py::gil_scoped_release nogil;
        return solve_extension(k, ExtensionGrid::for_body(k, spacing)).capacity_estimate;
    });
}
