#include "cpfmesh/cpf_optimizer.hpp"
#include "cpfmesh/shapes.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cpfmesh;

namespace {

// Fields given by one constant 3D frame (x, y axes) on a flat mesh.
FieldPair axis_fields(const TriangleSurface& m, int N, double scale = 1.0) {
    FieldPair p;
    p.N = N;
    for (int f = 0; f < m.faceCount(); ++f) {
        p.U.push_back(scale * m.basis(f).toLocal(Vec3::UnitX()));
        p.V.push_back(scale * m.basis(f).toLocal(Vec3::UnitY()));
    }
    return p;
}

ConstraintSet bare(int N) {
    ConstraintSet c;
    c.N = N;
    c.sizing = false;
    return c;
}

}  // namespace

TEST(CpfOptimizer, ResidualCount) {
    const TriangleSurface m = shapes::icosphere(1);
    const CurvatureField curv = compute_curvature(m);
    const auto metric = sizing_metric(curv, sizing_from_fractions(m, 0.005, 0.0025));
    const RoSyField g = solve_guiding_field(m, curv);
    const ConstraintSet c = build_constraints(m, curv, g, metric, FieldMode::Hexagonal);
    auto anchors = std::make_shared<std::vector<double>>(m.faceCount(), 0.1);
    const ResidualSystem sys = assemble_cpf_system(m, c, 1.0, anchors);
    const int E = static_cast<int>(m.interiorEdges().size()), F = m.faceCount();
    EXPECT_EQ(sys.residualCount(), 4 * E + 4 * E + F + static_cast<int>(c.alignment.size()) + 2 * F +
                                       static_cast<int>(c.orthogonality.size()));
    EXPECT_EQ(sys.variableCount(), 4 * F + 4 * E);
}

TEST(CpfOptimizer, SatisfyingConfigurationHasZeroCost) {
    const TriangleSurface m = shapes::grid(6);
    ConstraintSet c = bare(6);
    c.metric.assign(m.faceCount(), Mat2::Identity());
    c.sizing = true;
    for (int f = 0; f < m.faceCount(); ++f) c.orthogonality.push_back({f, Mat2::Identity(), "orthogonality"});
    FieldPair p = axis_fields(m, 6);
    initialize_consensus(m, p, balance_length(m, c));
    auto anchors = std::make_shared<std::vector<double>>(m.faceCount(), 0.1);
    const ResidualSystem sys = assemble_cpf_system(m, c, 1.0, anchors);
    EXPECT_LT(sys.cost(pack_fields(p)), 1e-28);
}

TEST(CpfOptimizer, AssembledJacobianMatchesFiniteDifferences) {
    const TriangleSurface m = shapes::torus_sector(2.0, 0.8, 1.0, 6, 8);
    const CurvatureField curv = compute_curvature(m);
    const auto metric = sizing_metric(curv, sizing_from_fractions(m, 0.005, 0.0025));
    const RoSyField g = solve_guiding_field(m, curv);
    for (FieldMode mode : {FieldMode::Hexagonal, FieldMode::Quad}) {
        const ConstraintSet c = build_constraints(m, curv, g, metric, mode);
        FieldPair p = random_fields(m, metric, c.N, 3);
        initialize_consensus(m, p, balance_length(m, c));
        auto anchors = std::make_shared<std::vector<double>>(m.faceCount());
        for (int f = 0; f < m.faceCount(); ++f)
            (*anchors)[f] = 1.5 * lico_value(p.U[f], p.V[f]) * std::sqrt(metric[f].determinant());
        const ResidualSystem sys = assemble_cpf_system(m, c, 4.0, anchors);
        EXPECT_LT(check_jacobian(sys, pack_fields(p)), 1e-5);
    }
}

TEST(CpfOptimizer, FlatAxisFieldsStopAtRoundZero) {
    const TriangleSurface m = shapes::grid(20);
    const ConstraintSet c = bare(6);
    const CpfResult r = optimize_cpf(m, c, axis_fields(m, 6));
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.round, 0);
    EXPECT_LT(r.rounds[0].energies.cpf, 1e-14);
    EXPECT_EQ(r.rounds[0].solver.iterations, 0);
}

TEST(CpfOptimizer, ScaleInvariantBalancedEnergies) {
    const TriangleSurface a = shapes::torus_sector(2.0, 0.8, 1.0, 8, 10);
    std::vector<Vec3> scaled;
    for (const Vec3& v : a.vertices()) scaled.push_back(10.0 * v);
    const TriangleSurface b(scaled, a.faces(), a.vertexNormals());
    std::vector<CpfEnergies> energies;
    for (const TriangleSurface* m : {&a, &b}) {
        const CurvatureField curv = compute_curvature(*m);
        const auto metric = sizing_metric(curv, sizing_from_fractions(*m, 0.005, 0.0025));
        const RoSyField g = solve_guiding_field(*m, curv);
        const ConstraintSet c = build_constraints(*m, curv, g, metric, FieldMode::Hexagonal);
        FieldPair p = random_fields(*m, metric, 6, 11);
        initialize_consensus(*m, p, balance_length(*m, c));
        energies.push_back(cpf_energies(*m, c, p));
    }
    auto close = [](double x, double y) { return std::abs(x - y) <= 0.01 * std::max(std::abs(x), 1e-12); };
    EXPECT_TRUE(close(energies[0].cpf, energies[1].cpf));
    EXPECT_TRUE(close(energies[0].smoothness, energies[1].smoothness));
    EXPECT_TRUE(close(energies[0].alignment, energies[1].alignment));
    EXPECT_TRUE(close(energies[0].sizing, energies[1].sizing));
    EXPECT_TRUE(close(energies[0].orthogonality, energies[1].orthogonality));
}

TEST(CpfOptimizer, InitializationIsLicoAndUnitLength) {
    const TriangleSurface m = shapes::cylinder(1.0, 2.0, 20, 8);
    const CurvatureField curv = compute_curvature(m);
    const auto metric = sizing_metric(curv, sizing_from_fractions(m, 0.005, 0.0025));
    const FieldPair p = initialize_fields(m, solve_guiding_field(m, curv), metric, 6);
    for (int f = 0; f < m.faceCount(); ++f) {
        EXPECT_GT(lico_value(p.U[f], p.V[f]), 0.0);
        EXPECT_NEAR(p.U[f].dot(metric[f] * p.U[f]), 1.0, 1e-12);
        EXPECT_NEAR(p.V[f].dot(metric[f] * p.V[f]), 1.0, 1e-12);
    }
}

TEST(CpfOptimizer, RejectsNonInjectiveStart) {
    const TriangleSurface m = shapes::grid(2);
    FieldPair p = axis_fields(m, 6);
    std::swap(p.U[0], p.V[0]);
    EXPECT_THROW(optimize_cpf(m, bare(6), p), LicoError);
}

TEST(CpfOptimizer, ReducesPenaltyFromPerturbedStart) {
    const TriangleSurface m = shapes::grid(6);
    FieldPair p = axis_fields(m, 4);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 0.05);
    for (auto& u : p.U) u += Vec2(n(rng), n(rng));
    ConstraintSet c = bare(4);
    FieldPair q = p;
    initialize_consensus(m, q, balance_length(m, c));
    const double before = cpf_energies(m, c, q).cpf;
    CpfOptions o;
    o.maxRounds = 3;
    const CpfResult r = optimize_cpf(m, c, p, o);
    EXPECT_LT(r.rounds.back().energies.cpf, 1e-3 * before);
    for (int f = 0; f < m.faceCount(); ++f) EXPECT_GT(lico_value(r.fields.U[f], r.fields.V[f]), 0.0);
}
