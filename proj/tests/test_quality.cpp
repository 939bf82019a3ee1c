#include "cpfmesh/quality.hpp"
#include "cpfmesh/shapes.hpp"
#include "cpfmesh/spatial.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <numbers>
#include <random>

using namespace cpfmesh;

namespace {

ClosestPoint brute_force(const TriangleSurface& m, const Vec3& p) {
    ClosestPoint best;
    best.distance = 1e300;
    for (int f = 0; f < m.faceCount(); ++f) {
        const auto& t = m.face(f);
        ClosestPoint c = closest_point_on_triangle(p, m.vertex(t[0]), m.vertex(t[1]), m.vertex(t[2]));
        if (c.distance < best.distance) {
            best = c;
            best.face = f;
        }
    }
    return best;
}

std::vector<Vec3> hexagon(double r = 1.0) {
    std::vector<Vec3> h;
    for (int i = 0; i < 6; ++i) {
        const double a = std::numbers::pi / 3 * i;
        h.emplace_back(r * std::cos(a), r * std::sin(a), 0);
    }
    return h;
}

}  // namespace

TEST(Spatial, VertexAndFootPoint) {
    const TriangleSurface m = shapes::icosphere(1);
    const TriangleTree tree(m);
    const ClosestPoint v = tree.closest(m.vertex(5));
    EXPECT_LT(v.distance, 1e-15);
    EXPECT_EQ(v.feature, Feature::Vertex);
    const Vec3 c = m.faceCentroid(7);
    const ClosestPoint above = tree.closest(c + 0.05 * m.faceNormal(7));
    EXPECT_EQ(above.face, 7);
    EXPECT_EQ(above.feature, Feature::Interior);
    EXPECT_LT((above.point - c).norm(), 1e-12);
    EXPECT_NEAR(above.distance, 0.05, 1e-12);
}

TEST(Spatial, TriangleFeatures) {
    const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
    EXPECT_EQ(closest_point_on_triangle(Vec3(-1, -1, 1), a, b, c).feature, Feature::Vertex);
    const ClosestPoint e = closest_point_on_triangle(Vec3(0.5, -2, 0), a, b, c);
    EXPECT_EQ(e.feature, Feature::Edge);
    EXPECT_TRUE(e.point.isApprox(Vec3(0.5, 0, 0)));
    const ClosestPoint h = closest_point_on_triangle(Vec3(1, 1, 0), a, b, c);
    EXPECT_EQ(h.feature, Feature::Edge);
    EXPECT_TRUE(h.point.isApprox(Vec3(0.5, 0.5, 0)));
    EXPECT_NEAR(h.bary.sum(), 1.0, 1e-15);
}

TEST(Spatial, MatchesBruteForce) {
    const TriangleSurface m = shapes::hyperbolic_paraboloid(16);
    const TriangleTree tree(m);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 500; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng));
        const ClosestPoint t = tree.closest(p), b = brute_force(m, p);
        EXPECT_NEAR(t.distance, b.distance, 1e-12);
        EXPECT_LT((t.point - b.point).norm(), 1e-12);
    }
}

TEST(Quality, TrianglesAndPlanarHexagonsAreZero) {
    EXPECT_EQ(planarity_error({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 3)}), 0.0);
    EXPECT_LT(planarity_error(hexagon()), 1e-14);
    // Planar bow-tie: two vertices pushed through the centre.
    auto bow = hexagon();
    bow[1] = Vec3(0.2, -0.3, 0);
    bow[4] = Vec3(-0.2, 0.3, 0);
    EXPECT_LT(planarity_error(bow), 1e-14);
}

TEST(Quality, SkewQuadMatchesHandEvaluation) {
    const Vec3 p1(0, 0, 0), p2(1, 0, 0), p3(1, 1, 0), p4(0, 1, 0.1);
    // p31 = (1,1,0), p42 = (-1,1,0.1): cross = (0.1,-0.1,2), <n, p21> = 0.1 / (|p31||p42|).
    const double l31 = std::sqrt(2.0), l42 = std::sqrt(2.01);
    const double q = (0.1 / (l31 * l42)) / ((l31 + l42) / 2);
    EXPECT_NEAR(planarity_error({p1, p2, p3, p4}), 100 * q, 1e-12);
    // Every rotation of a quad gives the same sliding value.
    EXPECT_NEAR(planarity_error({p2, p3, p4, p1}), 100 * q, 1e-12);
}

TEST(Quality, InvariantUnderRigidMotionAndScale) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec3> f = hexagon();
    for (Vec3& p : f) p.z() = 0.1 * u(rng);
    const double base = planarity_error(f);
    EXPECT_GT(base, 0.1);
    const Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    for (Vec3& p : f) p = 3.5 * (R * p) + Vec3(4, -2, 9);
    EXPECT_NEAR(planarity_error(f), base, 1e-12);
}

TEST(Quality, DegenerateDiagonalFlagged) {
    bool deg = false;
    planarity_error({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)}, &deg);
    EXPECT_TRUE(deg);
}

TEST(Quality, HausdorffOfCopyIsZero) {
    const TriangleSurface m = shapes::icosphere(2);
    EXPECT_LT(hausdorff_one_sided(to_poly_mesh(m), TriangleTree(m)), 1e-12);
}

TEST(Quality, HausdorffOfTranslatedPatch) {
    const TriangleSurface m = shapes::grid(6, 2.0);
    const TriangleTree tree(m);
    PolyMesh out = to_poly_mesh(m);
    const double t = 0.037;
    for (Vec3& v : out.vertices) v.z() += t;
    EXPECT_NEAR(hausdorff_one_sided(out, tree), t / m.bboxDiagonal(), 1e-15);
}

TEST(Quality, HausdorffOfScaledSphere) {
    const TriangleSurface m = shapes::icosphere(4);
    const TriangleTree tree(m);
    PolyMesh out = to_poly_mesh(m);
    for (Vec3& v : out.vertices) v *= 1.01;
    // Vertices sit 0.01 off the reference; face interiors slightly less.
    const double h = hausdorff_one_sided(out, tree);
    EXPECT_NEAR(h * m.bboxDiagonal(), 0.01, 0.01 * 0.02);
    EXPECT_LE(h * m.bboxDiagonal(), 0.01 + 1e-12);
}

TEST(Quality, DeterministicForSeed) {
    const TriangleSurface m = shapes::icosphere(2);
    PolyMesh out = to_poly_mesh(shapes::icosphere(1));
    const TriangleTree tree(m);
    EXPECT_EQ(hausdorff_one_sided(out, tree), hausdorff_one_sided(out, tree));
}

TEST(Quality, JsonReport) {
    const TriangleSurface m = shapes::grid(3);
    PolyMesh out;
    out.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0.1)};
    out.faces = {{0, 1, 2, 3}};
    const QualityReport r = evaluate_quality(out, TriangleTree(m));
    const auto j = nlohmann::json::parse(r.to_json());
    EXPECT_EQ(j["faces"], 1);
    EXPECT_DOUBLE_EQ(j["maxPlanarity"].get<double>(), r.perFacePlanarity[0]);
    EXPECT_DOUBLE_EQ(j["avgPlanarity"].get<double>(), r.perFacePlanarity[0]);
    EXPECT_GT(j["hausdorff"].get<double>(), 0.0);
}
