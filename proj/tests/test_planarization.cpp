#include "cpfmesh/planarization.hpp"
#include "cpfmesh/quality.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cpfmesh;

namespace {

// Flat hexagonal patch from a constant field on a square.
PolyMesh flat_hex_patch(const TriangleSurface& m) {
    FieldPair p;
    p.N = 6;
    for (int f = 0; f < m.faceCount(); ++f) {
        p.U.push_back(m.basis(f).toLocal(Vec3(0.15, 0, 0)));
        p.V.push_back(m.basis(f).toLocal(Vec3(0, 0.15, 0)));
    }
    p.z.assign(m.interiorEdges().size(), Vec2::Zero());
    p.zSmooth = p.z;
    return barycentric_dual(assemble_primal(m, cut_and_integrate(m, p, compute_matching(m, p))));
}

}  // namespace

TEST(Planarization, PlanarInputIsUnchanged) {
    const TriangleSurface m = shapes::grid(10, 2.0);
    const PolyMesh hex = flat_hex_patch(m);
    ASSERT_GT(hex.faceCount(), 10);
    const PlanarizationResult r = planarize(hex, m);
    EXPECT_TRUE(r.reachedTarget);
    EXPECT_EQ(r.rounds.size(), 1u);
    for (int v = 0; v < hex.vertexCount(); ++v) EXPECT_EQ(r.mesh.vertices[v], hex.vertices[v]);
}

TEST(Planarization, JacobianMatchesFiniteDifferences) {
    const TriangleSurface m = shapes::grid(10, 2.0);
    PolyMesh hex = flat_hex_patch(m);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    const double L = hex.averageEdgeLength();
    for (Vec3& v : hex.vertices) v += 0.1 * L * Vec3(u(rng), u(rng), u(rng));
    std::vector<Vec3> normals;
    for (int f = 0; f < hex.faceCount(); ++f) normals.push_back(polygon_normal(hex, f) + 0.2 * Vec3(u(rng), u(rng), u(rng)));
    const PlanarizationState s = start_round(hex, normals, TriangleTree(m), {}, L);
    for (bool fair : {false, true}) {
        const ResidualSystem sys = planarization_system(hex, s, fair);
        Eigen::VectorXd x(sys.variableCount());
        for (int v = 0; v < hex.vertexCount(); ++v) x.segment<3>(3 * v) = hex.vertices[v];
        for (int f = 0; f < hex.faceCount(); ++f) x.segment<3>(3 * hex.vertexCount() + 3 * f) = normals[f];
        // Collapse one edge far enough that its barrier is active.
        const auto [a, b] = s.edges[0];
        x.segment<3>(3 * b) = x.segment<3>(3 * a) + 0.04 * (x.segment<3>(3 * b) - x.segment<3>(3 * a));
        double barrier = 0;
        for (const auto& [tag, c] : sys.costByTag(x))
            if (tag == "length") barrier = c;
        EXPECT_GT(barrier, 0);
        EXPECT_LT(check_jacobian(sys, x, 1e-6 * L), 1e-5);
    }
}

TEST(Planarization, SymmetryVanishesForCentrallySymmetricFaces) {
    const TriangleSurface m = shapes::grid(10, 2.0);
    const PolyMesh hex = flat_hex_patch(m);
    const PlanarizationState s = start_round(hex, {}, TriangleTree(m), {}, hex.averageEdgeLength());
    const ResidualSystem sys = planarization_system(hex, s, false);
    Eigen::VectorXd x(sys.variableCount());
    for (int v = 0; v < hex.vertexCount(); ++v) x.segment<3>(3 * v) = hex.vertices[v];
    for (int f = 0; f < hex.faceCount(); ++f) x.segment<3>(3 * hex.vertexCount() + 3 * f) = s.faceNormals[f];
    for (const auto& [tag, c] : sys.costByTag(x))
        if (tag != "length") EXPECT_LT(c, 1e-24) << tag;
}

TEST(Planarization, SphereDualReachesTarget) {
    const auto s = fixtures::sphere_meshes(2);
    const QualityReport before = evaluate_quality(s.dual, TriangleTree(s.surface));
    const PlanarizationResult r = planarize(s.dual, s.surface);
    EXPECT_TRUE(r.reachedTarget) << r.csv();
    EXPECT_LE(r.maxPlanarity, 1.0);
    EXPECT_LE(static_cast<int>(r.rounds.size()) - 1, 20);
    EXPECT_GT(r.minLengthRatio, 0.1);
    for (const Vec3& n : r.faceNormals) EXPECT_NEAR(n.norm(), 1.0, 1e-9);
    const QualityReport after = evaluate_quality(r.mesh, TriangleTree(s.surface));
    EXPECT_LE(after.maxPlanarity, before.maxPlanarity);
    EXPECT_LT(after.hausdorff, 0.01);
    EXPECT_EQ(r.csv().substr(0, r.csv().find('\n')), "round,maxPlanarity,avgPlanarity,hausdorff");
}

TEST(Planarization, QuadFairnessRuns) {
    const TriangleSurface m = shapes::hyperbolic_paraboloid(12);
    // Quad grid lifted onto the saddle, turned off the conjugate x/y directions.
    PolyMesh quads;
    const int n = 6;
    const double c = std::cos(0.4), s = std::sin(0.4);
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            const double a = -0.7 + 1.4 * i / n, b = -0.7 + 1.4 * j / n;
            const double x = c * a - s * b, y = s * a + c * b;
            quads.vertices.emplace_back(x, y, 0.5 * (x * x - y * y));
        }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            quads.faces.push_back({j * (n + 1) + i, j * (n + 1) + i + 1, (j + 1) * (n + 1) + i + 1, (j + 1) * (n + 1) + i});
    PlanarizationOptions opt;
    opt.quadFairness = true;
    const PlanarizationResult r = planarize(quads, m, opt);
    EXPECT_TRUE(r.reachedTarget) << r.csv();
    EXPECT_GT(r.rounds.front().maxPlanarity, 1.0);
}
