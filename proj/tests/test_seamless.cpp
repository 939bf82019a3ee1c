#include "cpfmesh/seamless.hpp"
#include "cpfmesh/shapes.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <numbers>
#include <random>

using namespace cpfmesh;

namespace {

constexpr double kPi = std::numbers::pi;

// Field pair given by world-space vectors per face.
FieldPair world_fields(const TriangleSurface& m, int N, const std::function<std::pair<Vec3, Vec3>(int)>& uv) {
    FieldPair p;
    p.N = N;
    for (int f = 0; f < m.faceCount(); ++f) {
        const auto [U, V] = uv(f);
        p.U.push_back(m.basis(f).toLocal(U));
        p.V.push_back(m.basis(f).toLocal(V));
    }
    p.z.assign(m.interiorEdges().size(), Vec2::Zero());
    p.zSmooth = p.z;
    return p;
}

FieldPair optimized_sphere(const TriangleSurface& m) {
    const CurvatureField c = compute_curvature(m);
    const auto g = sizing_metric(c, sizing_from_fractions(m, 0.005, 0.0025));
    const RoSyField gf = solve_guiding_field(m, c);
    const ConstraintSet cs = build_constraints(m, c, gf, g, FieldMode::Hexagonal);
    CpfOptions opt;
    opt.maxRounds = 1;
    return optimize_cpf(m, cs, initialize_fields(m, gf, g, 6), opt).fields;
}

}  // namespace

TEST(Seamless, LatticeRotationIsIntegerSymmetry) {
    Mat2i M6;
    M6 << 1, -1, 1, 0;
    EXPECT_EQ(lattice_rotation(6), M6);
    Mat2i P = Mat2i::Identity();
    for (int k = 0; k < 6; ++k) P = P * M6;
    EXPECT_EQ(P, Mat2i::Identity());
    Mat2i M4;
    M4 << 0, -1, 1, 0;
    EXPECT_EQ(lattice_rotation(4), M4);
    EXPECT_EQ(lattice_rotation(1, 3), Mat2i::Identity());
    for (int N : {4, 6}) {
        const auto dirs = lattice_directions(N);
        for (const Vec2i& d : dirs) {
            const Vec2i r = lattice_rotation(N) * d;
            EXPECT_NE(std::find(dirs.begin(), dirs.end(), r), dirs.end());
        }
    }
}

TEST(Seamless, GridGradientsOfAxisFields) {
    FieldPair p;
    p.N = 6;
    p.U = {Vec2(1, 0)};
    p.V = {Vec2(0, 1)};
    const auto F = fields_to_grid_gradients(p)[0];
    EXPECT_TRUE(F[0].isApprox(Vec2(1, 0)));
    EXPECT_TRUE(F[1].isApprox(Vec2(0.5, std::sqrt(3.0) / 2)));
    EXPECT_TRUE(F[2].isApprox(Vec2(-0.5, std::sqrt(3.0) / 2)));
}

TEST(Seamless, GridGradientIdentities) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 50; ++t) {
        FieldPair p;
        p.N = 6;
        Vec2 U(u(rng), u(rng)), V(u(rng), u(rng));
        if (lico_value(U, V) < 0.1) continue;
        p.U = {U};
        p.V = {V};
        const auto F = fields_to_grid_gradients(p)[0];
        EXPECT_LT((F[0] - F[1] + F[2]).norm(), 1e-12);
        // grad u is F1; it reads 1 along U and 0 along V.
        EXPECT_NEAR(F[0].dot(U), 1.0, 1e-12);
        EXPECT_NEAR(F[0].dot(V), 0.0, 1e-12);
    }
}

TEST(Seamless, MatchingOfIdenticalAndRotatedFrames) {
    const TriangleSurface m = shapes::grid(1);
    ASSERT_EQ(m.interiorEdges().size(), 1u);
    const int fj = m.interiorEdges()[0].fj;
    for (int step : {0, 1, -1, 2}) {
        // Frame of fj turned by -step * 60 degrees: its chart is the fi chart turned by +step.
        const FieldPair p = world_fields(m, 6, [&](int f) {
            const double a = f == fj ? -step * kPi / 3 : 0.0;
            return std::make_pair(Vec3(std::cos(a), std::sin(a), 0), Vec3(-std::sin(a), std::cos(a), 0));
        });
        const Matching mt = compute_matching(m, p);
        EXPECT_EQ(mt.k[0], ((step % 6) + 6) % 6);
        EXPECT_TRUE(mt.degenerate.empty());
    }
}

TEST(Seamless, FlatDiskIntegratesToLinearCoordinates) {
    const TriangleSurface m = shapes::grid(8, 2.0);
    const double s = 0.3;
    for (int N : {1, 4, 6}) {
        const FieldPair p = world_fields(m, N, [&](int) { return std::make_pair(Vec3(s, 0, 0), Vec3(0, s, 0)); });
        const Matching mt = compute_matching(m, p);
        EXPECT_TRUE(mt.singular.empty());
        const SeamlessParam P = cut_and_integrate(m, p, mt);
        EXPECT_EQ(std::count(P.cutEdge.begin(), P.cutEdge.end(), 1), 0);
        EXPECT_LT(P.poissonResidual, 1e-10);
        const Mat2 A = grid_matrix(N);
        // Values are the linear map up to one global offset.
        const Vec2 offset = P.value(0, 0) - A * m.vertex(m.face(0)[0]).head<2>() / s;
        for (int f = 0; f < m.faceCount(); ++f)
            for (int c = 0; c < 3; ++c) {
                const Vec2 expected = A * m.vertex(m.face(f)[c]).head<2>() / s + offset;
                EXPECT_LT((P.value(f, c) - expected).norm(), 1e-9);
                const Eigen::Vector3d h = P.triple(f, c);
                EXPECT_NEAR(h[0] - h[1] + h[2], 0.0, 1e-12);
            }
        EXPECT_TRUE(check_integration(mt, P).success());
    }
}

TEST(Seamless, CylinderSeamJumpIsIntegerBeforeRounding) {
    const int around = 24, turns = 5;
    const TriangleSurface m = shapes::cylinder(1.0, 2.0, around, 6);
    // U follows each face's horizontal chord so that one loop spans exactly `turns` units.
    const double chord = 2.0 * std::sin(kPi / around);
    const FieldPair p = world_fields(m, 4, [&](int f) {
        const auto& t = m.face(f);
        Vec3 h;
        for (int c = 0; c < 3; ++c) {
            const Vec3 e = m.vertex(t[(c + 1) % 3]) - m.vertex(t[c]);
            if (std::abs(e.z()) < 1e-12) h = e.normalized();
        }
        if (h.cross(Vec3::UnitZ()).dot(m.faceNormal(f)) < 0) h = -h;
        return std::make_pair(Vec3(h * chord * around / turns), Vec3(0, 0, 0.5));
    });
    const Matching mt = compute_matching(m, p);
    EXPECT_TRUE(mt.singular.empty());
    IntegrationOptions opt;
    opt.roundTranslations = false;
    const SeamlessParam P = cut_and_integrate(m, p, mt, opt);
    int seams = 0;
    for (size_t e = 0; e < P.cutEdge.size(); ++e) {
        if (!P.cutEdge[e]) continue;
        ++seams;
        EXPECT_EQ(P.edgeRotation[e], 0);
        EXPECT_NEAR(std::abs(P.rawTranslation[e].x()), turns, 1e-9);
        EXPECT_NEAR(P.rawTranslation[e].y(), 0.0, 1e-9);
    }
    EXPECT_GT(seams, 0);
    EXPECT_LT(P.maxRoundingDistance, 1e-9);
}

TEST(Seamless, OptimizedSphereHasTwelveConesAndIntegrates) {
    const TriangleSurface m = shapes::icosphere(2);
    const FieldPair p = optimized_sphere(m);
    const Matching mt = compute_matching(m, p);
    EXPECT_NEAR(mt.indexSum(), 2.0, 1e-12);
    EXPECT_TRUE(mt.allConsistent());
    for (int v : mt.singular) EXPECT_NEAR(mt.vertexIndex[v] * 6, std::round(mt.vertexIndex[v] * 6), 1e-12);
    const TheoremReport th = verify_theorem(m, p, mt, 1.0, 1e-8);
    EXPECT_EQ(th.negativeFaces, 0);
    EXPECT_LT(th.maxGradientError, 1e-12);

    const SeamlessParam P = cut_and_integrate(m, p, mt);
    const IntegrationCheck ck = check_integration(mt, P);
    EXPECT_TRUE(ck.success()) << ck.summary();
    // Seam relations hold with integer jumps.
    const auto& edges = m.interiorEdges();
    for (size_t e = 0; e < edges.size(); ++e) {
        if (!P.cutEdge[e]) continue;
        for (int c = 0; c < 3; ++c) {
            const int v = m.face(edges[e].fi)[c];
            if (v != edges[e].v0 && v != edges[e].v1) continue;
            int cj = -1;
            for (int d = 0; d < 3; ++d)
                if (m.face(edges[e].fj)[d] == v) cj = d;
            const Vec2 mapped = P.transfer(m, static_cast<int>(e), edges[e].fi, P.value(edges[e].fi, c));
            EXPECT_LT((mapped - P.value(edges[e].fj, cj)).norm(), 1e-9);
        }
    }
    // Every singularity is on the cut.
    std::vector<char> onCut(m.vertexCount(), 0);
    for (size_t e = 0; e < edges.size(); ++e)
        if (P.cutEdge[e]) onCut[edges[e].v0] = onCut[edges[e].v1] = 1;
    for (int v : mt.singular) EXPECT_TRUE(onCut[v]);
}

TEST(Seamless, RandomFieldsFailTheoremCheck) {
    const TriangleSurface m = shapes::icosphere(2);
    const FieldPair p = random_fields(m, std::vector<Mat2>(m.faceCount(), Mat2::Identity()), 6, 11);
    const TheoremReport th = verify_theorem(m, p, compute_matching(m, p), 1.0, 1e-8);
    EXPECT_GT(th.maxMismatch, 0.1);
    EXPECT_FALSE(th.ok(1e-4) && th.checkedEdges == static_cast<int>(m.interiorEdges().size()));
}

TEST(Seamless, ExactFieldsHaveZeroViolation) {
    const TriangleSurface m = shapes::grid(6);
    const FieldPair p = world_fields(m, 6, [](int) { return std::make_pair(Vec3(0.2, 0, 0), Vec3(0.1, 0.17, 0)); });
    const TheoremReport th = verify_theorem(m, p, compute_matching(m, p), 1.0, 1e-8);
    EXPECT_EQ(th.checkedEdges, static_cast<int>(m.interiorEdges().size()));
    EXPECT_LT(th.maxMismatch, 1e-12);
    EXPECT_TRUE(th.ok(1e-12));
}

TEST(Seamless, CutObjRoundTrip) {
    const TriangleSurface m = shapes::icosphere(1);
    const FieldPair p = optimized_sphere(m);
    const Matching mt = compute_matching(m, p);
    const SeamlessParam P = cut_and_integrate(m, p, mt);
    const std::string path = std::string(CPFMESH_TEST_TMP) + "/cut.obj";
    write_cut_obj(path, m, P);
    const PolyMesh back = load_poly_mesh(path);
    EXPECT_EQ(back.faceCount(), m.faceCount());
    EXPECT_EQ(back.vertexCount(), static_cast<int>(P.copyVertex.size()));
}
