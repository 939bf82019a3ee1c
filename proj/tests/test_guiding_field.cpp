#include "cpfmesh/guiding_field.hpp"
#include "cpfmesh/shapes.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <numbers>

using namespace cpfmesh;

namespace {

// The same 3D direction expressed in every face basis, raised to the power 2.
Eigen::VectorXd constant_field(const TriangleSurface& m, const Vec3& dir) {
    Eigen::VectorXd x(2 * m.faceCount());
    for (int f = 0; f < m.faceCount(); ++f) {
        const Complex c = to_complex(m.basis(f).toLocal(dir));
        x.segment<2>(2 * f) = to_vec(c * c);
    }
    return x;
}

double angle_between_lines(const Vec3& a, const Vec3& b) {
    return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized()))));
}

}  // namespace

TEST(GuidingField, ConstantFieldIsInKernelOnFlatMesh) {
    const TriangleSurface m = shapes::grid(8);
    const auto L = build_rosy_laplacian(m, 2);
    const Eigen::VectorXd x = constant_field(m, Vec3(1, 0.3, 0).normalized());
    EXPECT_LT((L * x).norm(), 1e-10);
}

TEST(GuidingField, LaplacianIsSymmetricPsd) {
    const TriangleSurface m = shapes::icosphere(1);
    const Eigen::MatrixXd L = Eigen::MatrixXd(build_rosy_laplacian(m, 2));
    EXPECT_LT((L - L.transpose()).norm(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(GuidingField, TwoTriangleMatrixMatchesTransport) {
    // Square split along the diagonal (0,0)-(1,1).
    const TriangleSurface m({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
    const Eigen::MatrixXd L = Eigen::MatrixXd(build_rosy_laplacian(m, 2));
    // Face 0 basis starts along x, face 1 along the diagonal: the shared diagonal has angle
    // pi/4 in face 0 and 0 in face 1, so rho = exp(2i(0 - pi/4)) = -i.
    const Complex rho(0, -1);
    Eigen::Matrix4d expected;
    expected << 1, 0, -rho.real(), -rho.imag(),
                0, 1, rho.imag(), -rho.real(),
                -rho.real(), rho.imag(), 1, 0,
                -rho.imag(), -rho.real(), 0, 1;
    EXPECT_LT((L - expected).norm(), 1e-12) << L;
}

TEST(GuidingField, SmallestEigenpairSkipsKernel) {
    const TriangleSurface m = shapes::grid(6);
    const auto L = build_rosy_laplacian(m, 2);
    const EigenPair zero = smallest_eigenpair(L, false);
    EXPECT_LT(zero.value, 1e-8);
    const EigenPair first = smallest_eigenpair(L, true);
    EXPECT_GT(first.value, 1e-6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(L)};
    double expected = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > 1e-8) {
            expected = es.eigenvalues()[i];
            break;
        }
    EXPECT_NEAR(first.value, expected, 1e-6 * expected);
}

TEST(GuidingField, SphereUsesLowestEigenvector) {
    const TriangleSurface m = shapes::icosphere(2);
    const RoSyField g = solve_guiding_field(m, compute_curvature(m));
    EXPECT_EQ(g.solvePath, "eigenvector");
    for (const Complex& c : g.values) EXPECT_GT(std::abs(c), 0.0);
}

TEST(GuidingField, CylinderFollowsAxis) {
    const TriangleSurface m = shapes::cylinder(1.0, 4.0, 40, 30);
    const CurvatureField c = compute_curvature(m);
    const RoSyField g = solve_guiding_field(m, c);
    EXPECT_EQ(g.solvePath, "linear");
    for (int f = 0; f < m.faceCount(); ++f) {
        if (c.region[f] != Region::Parabolic) continue;
        const Vec3 d = m.basis(f).toWorld(g.direction(f));
        EXPECT_LT(angle_between_lines(d, Vec3::UnitZ()), std::numbers::pi / 180.0);
    }
}

TEST(GuidingField, PinnedFlatFieldExtendsConstant) {
    const TriangleSurface m = shapes::grid(10);
    const Vec3 x = Vec3::UnitX();
    std::vector<GuidingTarget> pins;
    for (int f : {3, 150}) {
        const Complex d = to_complex(m.basis(f).toLocal(x));
        pins.push_back({f, d * d, 1.0});
    }
    const RoSyField g = solve_rosy(m, pins, {}, 1e5);
    const Eigen::VectorXd expected = constant_field(m, x);
    for (int f = 0; f < m.faceCount(); ++f)
        EXPECT_NEAR(std::abs(g.values[f] - Complex(expected[2 * f], expected[2 * f + 1])), 0.0, 1e-8);
    const auto L = build_rosy_laplacian(m, 2);
    Eigen::VectorXd v(2 * m.faceCount());
    for (int f = 0; f < m.faceCount(); ++f) v.segment<2>(2 * f) = to_vec(g.values[f]);
    EXPECT_LT(v.dot(L * v), 1e-14);
}

TEST(GuidingField, RootChoiceIsCanonical) {
    RoSyField g;
    g.values = {Complex(-1, 0), Complex(0, 1), Complex(1, 0)};
    EXPECT_TRUE(g.direction(0).isApprox(Vec2(0, 1)));   // sqrt(-1): +i has zero real part, positive imaginary
    EXPECT_TRUE(g.direction(1).isApprox(Vec2(1, 1).normalized()));
    EXPECT_TRUE(g.direction(2).isApprox(Vec2(1, 0)));
}

namespace {

// Face rings to the nearest boundary face (0 for boundary faces), by BFS over face adjacency.
std::vector<int> boundary_rings(const TriangleSurface& m) {
    std::vector<int> ring(m.faceCount(), -1);
    std::vector<int> queue;
    for (int f = 0; f < m.faceCount(); ++f)
        if (m.isBoundaryFace(f)) {
            ring[f] = 0;
            queue.push_back(f);
        }
    for (size_t k = 0; k < queue.size(); ++k)
        for (int c = 0; c < 3; ++c) {
            const int t = m.twin(3 * queue[k] + c);
            if (t >= 0 && ring[t / 3] < 0) {
                ring[t / 3] = ring[queue[k]] + 1;
                queue.push_back(t / 3);
            }
        }
    return ring;
}

// Largest line-angle between the field and dAbsMin over high-rho parabolic faces at least minRing rings inside.
double worst_parabolic_deviation(const TriangleSurface& m, const CurvatureField& c, const RoSyField& g, int* count,
                                 int minRing = 3) {
    const std::vector<int> ring = boundary_rings(m);
    double worst = 0;
    *count = 0;
    for (int f = 0; f < m.faceCount(); ++f) {
        if (c.region[f] != Region::Parabolic || c.rho[f] < 0.5 || ring[f] < minRing) continue;
        const Vec3 d = m.basis(f).toWorld(g.direction(f));
        const Vec3 t = m.basis(f).toWorld(c.dAbsMin[f]);
        worst = std::max(worst, angle_between_lines(d, t));
        ++*count;
    }
    return worst;
}

}  // namespace

TEST(GuidingField, TorusUsesPenaltyPathAndRespectsParabolicTargets) {
    const TriangleSurface m = shapes::torus_sector(2.0, 0.8, 1.5, 40, 40);
    const CurvatureField c = compute_curvature(m);
    const RoSyField g = solve_guiding_field(m, c);
    EXPECT_EQ(g.solvePath, "penalty");
    int checked = 0;
    EXPECT_LT(worst_parabolic_deviation(m, c, g, &checked), 2.0 * std::numbers::pi / 180.0);
    EXPECT_GT(checked, 50);
    // Near the open ends the free boundary lets the field relax against the penalty.
    EXPECT_LT(worst_parabolic_deviation(m, c, g, &checked, 1), 5.0 * std::numbers::pi / 180.0);
}

TEST(GuidingField, ParabolicDeviationShrinksWithPenalty) {
    const TriangleSurface m = shapes::torus_sector(2.0, 0.8, 1.5, 24, 24);
    const CurvatureField c = compute_curvature(m);
    double previous = std::numeric_limits<double>::infinity();
    for (double beta : {1e4, 1e5, 1e6}) {
        GuidingOptions opt;
        opt.beta = beta;
        int checked = 0;
        const double dev = worst_parabolic_deviation(m, c, solve_guiding_field(m, c, opt), &checked);
        ASSERT_GT(checked, 0);
        EXPECT_LT(dev, previous);
        previous = dev;
    }
}

TEST(GuidingField, BasisRotationInvariance) {
    // Same geometry with faces listed from a different starting corner rotates the local bases.
    const TriangleSurface a = shapes::cylinder(1.0, 2.0, 24, 10);
    std::vector<std::array<int, 3>> rotated;
    for (const auto& f : a.faces()) rotated.push_back({f[1], f[2], f[0]});
    const TriangleSurface b(a.vertices(), rotated, a.vertexNormals());
    const RoSyField ga = solve_guiding_field(a, compute_curvature(a));
    const RoSyField gb = solve_guiding_field(b, compute_curvature(b));
    for (int f = 0; f < a.faceCount(); ++f) {
        const Vec3 da = a.basis(f).toWorld(ga.direction(f)), db = b.basis(f).toWorld(gb.direction(f));
        EXPECT_LT(angle_between_lines(da, db), 1e-8);
    }
}
