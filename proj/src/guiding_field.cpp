#include "cpfmesh/guiding_field.hpp"

#include "cpfmesh/nlls.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

namespace cpfmesh {

Vec2 RoSyField::direction(int f) const {
    const Complex g = values[f];
    if (std::abs(g) == 0) return Vec2::UnitX();
    Complex r = std::pow(g / std::abs(g), 1.0 / degree);
    // For degree 2 the two roots are +-r; pick the canonical one.
    if (r.real() < 0 || (r.real() == 0 && r.imag() < 0)) r = -r;
    return to_vec(r);
}

Eigen::SparseMatrix<double> build_rosy_laplacian(const TriangleSurface& mesh, int degree) {
    const int n = 2 * mesh.faceCount();
    std::vector<Eigen::Triplet<double>> t;
    for (const InteriorEdge& e : mesh.interiorEdges()) {
        const Vec2 ei = mesh.basis(e.fi).toLocal(e.vector), ej = mesh.basis(e.fj).toLocal(e.vector);
        const double angle = degree * (std::atan2(ej.y(), ej.x()) - std::atan2(ei.y(), ei.x()));
        const double c = std::cos(angle), s = std::sin(angle);
        const int i = 2 * e.fi, j = 2 * e.fj;
        for (int k = 0; k < 2; ++k) {
            t.emplace_back(i + k, i + k, 1.0);
            t.emplace_back(j + k, j + k, 1.0);
        }
        // L_ji = -R(rho), L_ij = -R(rho)^T with R(rho) = [[c, -s], [s, c]].
        t.emplace_back(j, i, -c);
        t.emplace_back(j, i + 1, s);
        t.emplace_back(j + 1, i, -s);
        t.emplace_back(j + 1, i + 1, -c);
        t.emplace_back(i, j, -c);
        t.emplace_back(i + 1, j, s);
        t.emplace_back(i, j + 1, -s);
        t.emplace_back(i + 1, j + 1, -c);
    }
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(t.begin(), t.end());
    return L;
}

namespace {

// Multiplication by i in the real representation.
Eigen::VectorXd times_i(const Eigen::VectorXd& x) {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index k = 0; k + 1 < x.size(); k += 2) {
        y[k] = -x[k + 1];
        y[k + 1] = x[k];
    }
    return y;
}

void deflate(Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& basis) {
    for (const auto& b : basis) x -= b.dot(x) * b;
}

}  // namespace

EigenPair smallest_eigenpair(const Eigen::SparseMatrix<double>& L, bool skipKernel, double tolerance) {
    const Eigen::Index n = L.rows();
    if (n == 0) throw std::invalid_argument("empty matrix");
    const double meanDiag = L.diagonal().mean();
    const double shift = 1e-10 * std::max(meanDiag, 1e-300);
    Eigen::SparseMatrix<double> A = L;
    for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) += shift;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw NumericalError("eigen solve: factorization failed");

    std::vector<Eigen::VectorXd> kernel;
    for (int attempt = 0; attempt < 16; ++attempt) {
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.37 * std::sin(1.3 * i + attempt);  // deterministic start
        deflate(x, kernel);
        x.normalize();
        double value = x.dot(L * x);
        for (int it = 0; it < 2000; ++it) {
            Eigen::VectorXd y = solver.solve(x);
            deflate(y, kernel);
            const double norm = y.norm();
            if (!(norm > 0)) throw NumericalError("eigen solve: iteration collapsed");
            x = y / norm;
            const double next = x.dot(L * x);
            const bool converged = std::abs(next - value) <= tolerance * std::max(std::abs(next), 1e-12 * meanDiag);
            value = next;
            if (converged && it > 2) break;
        }
        if (!skipKernel || value > 1e-8 * meanDiag) return {value, x};
        // Null vector found: deflate it together with its complex rotation.
        kernel.push_back(x);
        Eigen::VectorXd ix = times_i(x);
        deflate(ix, kernel);
        if (ix.norm() > 1e-8) kernel.push_back(ix.normalized());
    }
    throw NumericalError("eigen solve: kernel did not deflate");
}

namespace {

Complex square(const Vec2& d) { return to_complex(d) * to_complex(d); }

std::vector<Complex> to_complex_values(const Eigen::VectorXd& x) {
    std::vector<Complex> out(x.size() / 2);
    for (size_t f = 0; f < out.size(); ++f) out[f] = {x[2 * f], x[2 * f + 1]};
    return out;
}

// Minimizes (1/lambda) x^T L x + beta * sum_k (w_k / m) |x_k - c_k|^2.
Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& L, double lambda, double beta,
                             const std::vector<GuidingTarget>& targets) {
    Eigen::SparseMatrix<double> A = L / lambda;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(L.rows());
    const double m = static_cast<double>(targets.size());
    for (const GuidingTarget& t : targets) {
        const double w = beta * t.weight / m;
        for (int k = 0; k < 2; ++k) A.coeffRef(2 * t.face + k, 2 * t.face + k) += w;
        b[2 * t.face] += w * t.target.real();
        b[2 * t.face + 1] += w * t.target.imag();
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw NumericalError("guiding field: linear solve failed");
    return solver.solve(b);
}

}  // namespace

RoSyField solve_guiding_field(const TriangleSurface& mesh, const CurvatureField& curv, const GuidingOptions& opt) {
    if (mesh.faceCount() == 0) throw MeshError("empty mesh");
    std::vector<GuidingTarget> linear, quadratic;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const Region r = curv.region[f];
        const double w = curv.rho[f] * curv.rho[f];
        if (opt.mode == GuidingMode::Quad) {
            if (r == Region::Elliptic || r == Region::Parabolic || r == Region::Hyperbolic)
                linear.push_back({f, square(curv.principal[f].dMin), w});
        } else if (r == Region::Parabolic) {
            linear.push_back({f, square(curv.dAbsMin[f]), w});
        } else if (r == Region::Elliptic || r == Region::Hyperbolic) {
            quadratic.push_back({f, square(curv.dAbsMin[f]), w});
        }
    }
    // Without linear targets the quadratic faces are constrained linearly to dMin instead.
    if (linear.empty())
        for (GuidingTarget& q : quadratic) q.target = square(curv.principal[q.face].dMin);
    return solve_rosy(mesh, std::move(linear), std::move(quadratic), opt.beta);
}

RoSyField solve_rosy(const TriangleSurface& mesh, std::vector<GuidingTarget> linear,
                     std::vector<GuidingTarget> quadratic, double beta) {
    const Eigen::SparseMatrix<double> L = build_rosy_laplacian(mesh, 2);
    RoSyField field;
    field.degree = 2;
    if (linear.empty() && quadratic.empty()) {
        const EigenPair lowest = smallest_eigenpair(L, false);
        field.values = to_complex_values(lowest.vector);
        field.lambda = smallest_eigenpair(L, true).value;
        field.solvePath = "eigenvector";
        return field;
    }
    field.lambda = smallest_eigenpair(L, true).value;
    if (quadratic.empty() || linear.empty()) {
        auto targets = linear.empty() ? quadratic : linear;
        field.values = to_complex_values(solve_linear(L, field.lambda, beta, targets));
        field.solvePath = "linear";
        return field;
    }

    // Both kinds: start from the convex problem, then penalize the quadratic constraints too.
    Eigen::VectorXd x = solve_linear(L, field.lambda, beta, linear);
    ResidualSystem sys(2 * mesh.faceCount());
    const double lapScale = 1.0 / std::sqrt(field.lambda);
    for (const InteriorEdge& e : mesh.interiorEdges()) {
        const Vec2 ei = mesh.basis(e.fi).toLocal(e.vector), ej = mesh.basis(e.fj).toLocal(e.vector);
        const double angle = 2.0 * (std::atan2(ej.y(), ej.x()) - std::atan2(ei.y(), ei.x()));
        const double c = std::cos(angle) * lapScale, s = std::sin(angle) * lapScale;
        sys.addBlock({2 * e.fi, 2 * e.fi + 1, 2 * e.fj, 2 * e.fj + 1}, 2,
                     [c, s, lapScale](const double* v, double* r, double* J) {
                         // psi_j - rho psi_i
                         r[0] = lapScale * v[2] - (c * v[0] - s * v[1]);
                         r[1] = lapScale * v[3] - (s * v[0] + c * v[1]);
                         if (J) {
                             const double rows[8] = {-c, s, lapScale, 0, -s, -c, 0, lapScale};
                             std::copy(rows, rows + 8, J);
                         }
                     },
                     "laplacian");
    }
    const double ml = static_cast<double>(linear.size()), mq = static_cast<double>(quadratic.size());
    for (const GuidingTarget& t : linear) {
        const double w = std::sqrt(beta * t.weight / ml);
        const Complex c = t.target;
        sys.addBlock({2 * t.face, 2 * t.face + 1}, 2,
                     [w, c](const double* v, double* r, double* J) {
                         r[0] = w * (v[0] - c.real());
                         r[1] = w * (v[1] - c.imag());
                         if (J) {
                             J[0] = w, J[1] = 0, J[2] = 0, J[3] = w;
                         }
                     },
                     "linear");
    }
    for (const GuidingTarget& t : quadratic) {
        const double w = std::sqrt(beta * t.weight / mq);
        const Complex c2 = t.target * t.target;
        sys.addBlock({2 * t.face, 2 * t.face + 1}, 2,
                     [w, c2](const double* v, double* r, double* J) {
                         // G^2 - d^4
                         r[0] = w * (v[0] * v[0] - v[1] * v[1] - c2.real());
                         r[1] = w * (2 * v[0] * v[1] - c2.imag());
                         if (J) {
                             J[0] = 2 * w * v[0], J[1] = -2 * w * v[1];
                             J[2] = 2 * w * v[1], J[3] = 2 * w * v[0];
                         }
                     },
                     "quadratic");
    }
    SolverOptions so;
    so.functionTolerance = 1e-12;
    solve_lm(sys, x, so);
    field.values = to_complex_values(x);
    field.solvePath = "penalty";
    return field;
}

}  // namespace cpfmesh
