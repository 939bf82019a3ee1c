#include "cpfmesh/curvature.hpp"
#include "cpfmesh/guiding_field.hpp"
#include "cpfmesh/pipeline.hpp"
#include "cpfmesh/quality.hpp"
#include "cpfmesh/shapes.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cpfmesh;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const Array& a) {
    if (a.ndim() != 2 || a.shape(1) != 3) throw py::value_error("expected an (n, 3) array of points");
    std::vector<Vec3> out(a.shape(0));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = Vec3(r(i, 0), r(i, 1), r(i, 2));
    return out;
}

Array from_points(const std::vector<Vec3>& p) {
    Array a({static_cast<py::ssize_t>(p.size()), py::ssize_t{3}});
    auto w = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < p.size(); ++i)
        for (int k = 0; k < 3; ++k) w(i, k) = p[i][k];
    return a;
}

Array from_scalars(const std::vector<double>& v) {
    Array a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

TriangleSurface make_surface(const Array& vertices, const IndexArray& faces) {
    if (faces.ndim() != 2 || faces.shape(1) != 3) throw py::value_error("expected an (m, 3) array of triangle indices");
    std::vector<std::array<int, 3>> f(faces.shape(0));
    auto r = faces.unchecked<2>();
    for (py::ssize_t i = 0; i < faces.shape(0); ++i) f[i] = {r(i, 0), r(i, 1), r(i, 2)};
    return TriangleSurface(to_points(vertices), std::move(f));
}

py::dict quality_dict(const QualityReport& q) {
    py::dict d;
    d["faces"] = q.faceCount;
    d["max_planarity"] = q.maxPlanarity;
    d["avg_planarity"] = q.avgPlanarity;
    d["hausdorff"] = q.hausdorff;
    d["degenerate_faces"] = q.degenerateFaces;
    d["per_face_planarity"] = from_scalars(q.perFacePlanarity);
    return d;
}

}  // namespace

PYBIND11_MODULE(_cpfmesh, m) {
    m.doc() = "Planar hexagonal and quad remeshing of triangle surfaces";
    m.attr("__version__") = "0.1.0";

    py::register_exception<MeshError>(m, "MeshError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

    py::class_<TriangleSurface>(m, "TriangleSurface")
        .def(py::init(&make_surface), py::arg("vertices"), py::arg("faces"))
        .def_property_readonly("vertices", [](const TriangleSurface& s) { return from_points(s.vertices()); })
        .def_property_readonly("faces",
                               [](const TriangleSurface& s) {
                                   IndexArray a({static_cast<py::ssize_t>(s.faceCount()), py::ssize_t{3}});
                                   auto w = a.mutable_unchecked<2>();
                                   for (int f = 0; f < s.faceCount(); ++f)
                                       for (int k = 0; k < 3; ++k) w(f, k) = s.face(f)[k];
                                   return a;
                               })
        .def_property_readonly("vertex_count", &TriangleSurface::vertexCount)
        .def_property_readonly("face_count", &TriangleSurface::faceCount)
        .def_property_readonly("total_area", &TriangleSurface::totalArea)
        .def_property_readonly("bbox_diagonal", &TriangleSurface::bboxDiagonal)
        .def_property_readonly("average_edge_length", &TriangleSurface::averageEdgeLength)
        .def("euler_characteristic", &TriangleSurface::eulerCharacteristic)
        .def("face_normals", [](const TriangleSurface& s) {
            std::vector<Vec3> n(s.faceCount());
            for (int f = 0; f < s.faceCount(); ++f) n[f] = s.faceNormal(f);
            return from_points(n);
        });

    py::class_<PolyMesh>(m, "PolyMesh")
        .def(py::init([](const Array& v, std::vector<std::vector<int>> f) {
                 PolyMesh p;
                 p.vertices = to_points(v);
                 p.faces = std::move(f);
                 return p;
             }),
             py::arg("vertices"), py::arg("faces"))
        .def_property_readonly("vertices", [](const PolyMesh& p) { return from_points(p.vertices); })
        .def_readonly("faces", &PolyMesh::faces)
        .def_property_readonly("vertex_count", &PolyMesh::vertexCount)
        .def_property_readonly("face_count", &PolyMesh::faceCount)
        .def("face_degrees", [](const PolyMesh& p) {
            std::vector<int> d;
            for (const auto& f : p.faces) d.push_back(static_cast<int>(f.size()));
            return d;
        });

    m.def("load_mesh", &load_mesh, py::arg("path"), "Read a triangle OBJ.");
    m.def("load_poly_mesh", &load_poly_mesh, py::arg("path"), "Read a polygon OBJ.");
    m.def("write_obj", py::overload_cast<const std::string&, const PolyMesh&>(&write_obj), py::arg("path"), py::arg("mesh"));
    m.def("write_obj", py::overload_cast<const std::string&, const TriangleSurface&>(&write_obj), py::arg("path"),
          py::arg("mesh"));

    auto sh = m.def_submodule("shapes", "Analytic test surfaces");
    sh.def("icosphere", &shapes::icosphere, py::arg("subdivisions"), py::arg("radius") = 1.0);
    sh.def("cylinder", &shapes::cylinder, py::arg("radius"), py::arg("height"), py::arg("around"), py::arg("along"));
    sh.def("grid", &shapes::grid, py::arg("n"), py::arg("size") = 1.0);
    sh.def("hyperbolic_paraboloid", &shapes::hyperbolic_paraboloid, py::arg("n"), py::arg("extent") = 1.0);
    sh.def("torus_sector", &shapes::torus_sector, py::arg("R"), py::arg("r"), py::arg("sweep"), py::arg("n_major"),
           py::arg("n_minor"));

    m.def(
        "compute_curvature",
        [](const TriangleSurface& s) {
            const CurvatureField c = compute_curvature(s);
            std::vector<double> kMin, kMax;
            std::vector<Vec3> dMin, dMax;
            std::vector<std::string> region;
            for (int f = 0; f < s.faceCount(); ++f) {
                kMin.push_back(c.principal[f].kMin);
                kMax.push_back(c.principal[f].kMax);
                dMin.push_back(s.basis(f).toWorld(c.principal[f].dMin));
                dMax.push_back(s.basis(f).toWorld(c.principal[f].dMax));
                region.emplace_back(region_name(c.region[f]));
            }
            py::dict d;
            d["k_min"] = from_scalars(kMin);
            d["k_max"] = from_scalars(kMax);
            d["d_min"] = from_points(dMin);
            d["d_max"] = from_points(dMax);
            d["phi"] = from_scalars(c.phi);
            d["rho"] = from_scalars(c.rho);
            d["region"] = region;
            return d;
        },
        py::arg("mesh"), "Per-face principal curvatures, directions (3D) and region labels.");

    m.def(
        "guiding_field",
        [](const TriangleSurface& s, const std::string& mode) {
            GuidingOptions o;
            if (mode == "quad")
                o.mode = GuidingMode::Quad;
            else if (mode != "hex")
                throw py::value_error("mode must be 'hex' or 'quad'");
            const RoSyField g = solve_guiding_field(s, compute_curvature(s), o);
            std::vector<Vec3> d(s.faceCount());
            for (int f = 0; f < s.faceCount(); ++f) d[f] = s.basis(f).toWorld(g.direction(f));
            return from_points(d);
        },
        py::arg("mesh"), py::arg("mode") = "hex", "One representative unit direction per face of the guiding field.");

    m.def("planarity_error", [](const Array& pts) { return planarity_error(to_points(pts)); }, py::arg("points"),
          "Planarity of one polygon in percent.");
    m.def(
        "planarity_errors", [](const PolyMesh& p) { return from_scalars(planarity_errors(p)); }, py::arg("mesh"));
    m.def(
        "hausdorff",
        [](const PolyMesh& out, const TriangleSurface& ref, std::uint64_t seed) {
            HausdorffOptions o;
            o.seed = seed;
            return hausdorff_one_sided(out, TriangleTree(ref), o);
        },
        py::arg("output"), py::arg("reference"), py::arg("seed") = 0,
        "One-sided distance from output to reference, relative to the reference bbox diagonal.");
    m.def(
        "evaluate_quality",
        [](const PolyMesh& out, const TriangleSurface& ref, std::uint64_t seed) {
            HausdorffOptions o;
            o.seed = seed;
            return quality_dict(evaluate_quality(out, TriangleTree(ref), o));
        },
        py::arg("output"), py::arg("reference"), py::arg("seed") = 0);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("input_path", &PipelineConfig::inputPath)
        .def_readwrite("output_dir", &PipelineConfig::outputDir)
        .def_property(
            "mode", [](const PipelineConfig& c) { return std::string(mode_name(c.mode)); },
            [](PipelineConfig& c, const std::string& s) { c.mode = parse_mode(s); })
        .def_readwrite("delta", &PipelineConfig::delta)
        .def_readwrite("eta", &PipelineConfig::eta)
        .def_readwrite("target_max_planarity", &PipelineConfig::targetMaxPlanarity)
        .def_readwrite("beta_rounds", &PipelineConfig::betaRounds)
        .def_readwrite("planarization_rounds", &PipelineConfig::planarizationRounds)
        .def_readwrite("random_seed", &PipelineConfig::randomSeed)
        .def_readwrite("random_init", &PipelineConfig::randomInit)
        .def_readwrite("dump_all", &PipelineConfig::dumpAll)
        .def_readwrite("stop_after", &PipelineConfig::stopAfter)
        .def_readwrite("resume_from", &PipelineConfig::resumeFrom)
        .def_property_readonly("N", &PipelineConfig::N)
        .def("validate", &PipelineConfig::validate);

    m.def("load_config", [](const std::string& path) { return load_config(path); }, py::arg("path"));
    m.def("pipeline_stages", &pipeline_stages);

    m.def(
        "run_pipeline",
        [](const PipelineConfig& c) {
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(c);
            }
            py::dict d;
            d["executed"] = r.executed;
            d["report"] = py::module_::import("json").attr("loads")(r.reportJson);
            d["primal"] = r.primal;
            d["dual"] = r.dualMesh;
            d["final"] = r.finalMesh;
            return d;
        },
        py::arg("config"), "Run the remeshing pipeline; returns the report and the primal, dual and final meshes.");
}
