#pragma once

#include "cpfmesh/extraction.hpp"
#include "cpfmesh/shapes.hpp"

namespace cpfmesh::fixtures {

// Single-round CPF fields on a closed surface with the default sizing fractions.
inline FieldPair optimized_fields(const TriangleSurface& m, int N = 6) {
    const CurvatureField c = compute_curvature(m);
    const auto g = sizing_metric(c, sizing_from_fractions(m, 0.005, 0.0025));
    const RoSyField gf = solve_guiding_field(m, c);
    const ConstraintSet cs = build_constraints(m, c, gf, g, N == 6 ? FieldMode::Hexagonal : FieldMode::Quad);
    CpfOptions opt;
    opt.maxRounds = 1;
    return optimize_cpf(m, cs, initialize_fields(m, gf, g, N), opt).fields;
}

struct SphereMeshes {
    TriangleSurface surface;
    PolyMesh primal;
    PolyMesh dual;
};

inline SphereMeshes sphere_meshes(int level = 2) {
    SphereMeshes s{shapes::icosphere(level), {}, {}};
    const FieldPair p = optimized_fields(s.surface);
    const Matching mt = compute_matching(s.surface, p);
    s.primal = assemble_primal(s.surface, cut_and_integrate(s.surface, p, mt));
    s.dual = barycentric_dual(s.primal);
    return s;
}

}  // namespace cpfmesh::fixtures
