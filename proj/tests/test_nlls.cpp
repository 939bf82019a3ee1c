#include "cpfmesh/nlls.hpp"

#include <gtest/gtest.h>

using namespace cpfmesh;

namespace {

ResidualSystem linear_system(const Eigen::Matrix3d& A, const Eigen::Vector3d& b) {
    ResidualSystem sys(3);
    sys.addBlock({0, 1, 2}, 3, [A, b](const double* x, double* r, double* J) {
        const Eigen::Vector3d v(x[0], x[1], x[2]);
        Eigen::Map<Eigen::Vector3d> out(r);
        out = A * v - b;
        if (J)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) J[3 * i + j] = A(i, j);
    });
    return sys;
}

ResidualSystem rosenbrock() {
    ResidualSystem sys(2);
    sys.addBlock({0, 1}, 2, [](const double* x, double* r, double* J) {
        r[0] = 10.0 * (x[1] - x[0] * x[0]);
        r[1] = 1.0 - x[0];
        if (J) {
            J[0] = -20.0 * x[0], J[1] = 10.0, J[2] = -1.0, J[3] = 0.0;
        }
    });
    return sys;
}

}  // namespace

TEST(Nlls, LinearSystemConvergesQuickly) {
    Eigen::Matrix3d A;
    A << 4, 1, 0, 1, 3, -1, 0.5, 0, 2;
    const Eigen::Vector3d b(1, -2, 3);
    auto sys = linear_system(A, b);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    const SolverReport rep = solve_lm(sys, x, {});
    EXPECT_LT(rep.finalCost, 1e-20);
    EXPECT_TRUE(x.isApprox(A.inverse() * b, 1e-10));
    // Cost after the third iteration.
    double third = INFINITY;
    for (const auto& h : rep.history)
        if (h.iteration == 3 && h.accepted) third = h.cost;
    EXPECT_LT(third, 1e-20);
}

TEST(Nlls, Rosenbrock) {
    auto sys = rosenbrock();
    Eigen::VectorXd x(2);
    x << -1.2, 1.0;
    const SolverReport rep = solve_lm(sys, x, {});
    EXPECT_LT(rep.finalCost, 1e-12);
    EXPECT_NEAR(x[0], 1.0, 1e-6);
    EXPECT_NEAR(x[1], 1.0, 1e-6);
}

TEST(Nlls, ZeroResidualStartStopsImmediately) {
    auto sys = rosenbrock();
    Eigen::VectorXd x(2);
    x << 1.0, 1.0;
    const SolverReport rep = solve_lm(sys, x, {});
    EXPECT_EQ(rep.iterations, 0);
    EXPECT_EQ(rep.termination, Termination::GradientTolerance);
}

TEST(Nlls, AcceptedCostsAreMonotone) {
    auto sys = rosenbrock();
    for (bool scaling : {true, false}) {
        Eigen::VectorXd x(2);
        x << -1.2, 1.0;
        SolverOptions o;
        o.jacobianScaling = scaling;
        const SolverReport rep = solve_lm(sys, x, o);
        double last = rep.initialCost;
        for (const auto& h : rep.history)
            if (h.accepted) {
                EXPECT_LE(h.cost, last);
                last = h.cost;
            }
        EXPECT_LE(rep.finalCost, rep.initialCost);
        EXPECT_NEAR(x[0], 1.0, 1e-6);  // same fixed point with and without scaling
    }
}

TEST(Nlls, DeterministicTrajectory) {
    auto sys = rosenbrock();
    Eigen::VectorXd a(2), b(2);
    a << -1.2, 1.0;
    b = a;
    const auto ra = solve_lm(sys, a, {});
    const auto rb = solve_lm(sys, b, {});
    ASSERT_EQ(ra.history.size(), rb.history.size());
    for (size_t i = 0; i < ra.history.size(); ++i) EXPECT_EQ(ra.history[i].cost, rb.history[i].cost);
    EXPECT_EQ(a, b);
}

TEST(Nlls, NonFiniteStartIsRejected) {
    ResidualSystem sys(1);
    sys.addBlock({0}, 1, [](const double* x, double* r, double* J) {
        r[0] = 1.0 / x[0];
        if (J) J[0] = -1.0 / (x[0] * x[0]);
    });
    Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    EXPECT_THROW(solve_lm(sys, x, {}), NumericalError);
}

TEST(Nlls, CheckJacobianQuadratic) {
    ResidualSystem sys(2);
    sys.addBlock({0, 1}, 1, [](const double* x, double* r, double* J) {
        r[0] = 3 * x[0] * x[0] + x[0] * x[1] - 2 * x[1] * x[1];
        if (J) {
            J[0] = 6 * x[0] + x[1];
            J[1] = x[0] - 4 * x[1];
        }
    });
    Eigen::VectorXd x(2);
    x << 0.7, -1.3;
    EXPECT_LT(check_jacobian(sys, x, 1e-5), 1e-8);
}

TEST(Nlls, CheckJacobianDetectsWrongDerivative) {
    ResidualSystem sys(1);
    sys.addBlock({0}, 1, [](const double* x, double* r, double* J) {
        r[0] = x[0] * x[0];
        if (J) J[0] = x[0];  // wrong by a factor 2
    });
    Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    EXPECT_GT(check_jacobian(sys, x), 0.4);
}
