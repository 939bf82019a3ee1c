#pragma once

#include "cpfmesh/curvature.hpp"
#include "cpfmesh/geometry.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace cpfmesh {

// Per-face complex value (direction)^degree in the face basis.
struct RoSyField {
    int degree = 2;
    std::vector<Complex> values;
    double lambda = 0;         // first nonzero eigenvalue of the Laplacian used for normalization
    std::string solvePath;     // "eigenvector", "linear", "penalty"

    // Unit root with nonnegative first coordinate (ties toward positive second).
    Vec2 direction(int f) const;
};

// Real 2F x 2F connection Laplacian: sum over interior edges of |psi_j - rho_ij psi_i|^2 with
// rho_ij = exp(i * degree * (theta_j - theta_i)), theta the edge angle in each face basis.
Eigen::SparseMatrix<double> build_rosy_laplacian(const TriangleSurface& mesh, int degree);

struct EigenPair {
    double value;
    Eigen::VectorXd vector;
};

// Smallest eigenpair by inverse iteration; with `skipKernel` the null space (eigenvalues below
// 1e-8 of the mean diagonal) is deflated first.
EigenPair smallest_eigenpair(const Eigen::SparseMatrix<double>& L, bool skipKernel, double tolerance = 1e-8);

enum class GuidingMode { Hexagonal, Quad };

struct GuidingOptions {
    GuidingMode mode = GuidingMode::Hexagonal;
    double beta = 1e5;
};

struct GuidingTarget {
    int face;
    Complex target;  // d^2 for the unit direction d in the face basis
    double weight;
};

// Minimizes (1/lambda) G^T L G + beta (E2 + E4) with E2 = mean w |G - d^2|^2 over `linear` and
// E4 = mean w |G^2 - d^4|^2 over `quadratic`. With no targets the lowest eigenvector is returned.
// If only quadratic targets exist they are treated as linear ones.
RoSyField solve_rosy(const TriangleSurface& mesh, std::vector<GuidingTarget> linear,
                     std::vector<GuidingTarget> quadratic, double beta);

// Constraint faces per mode. Hexagonal: parabolic faces get G = d^2, elliptic and hyperbolic
// faces G^2 = d^4, with d the direction of smallest absolute curvature. Quad: every elliptic,
// parabolic or hyperbolic face gets G = dMin^2.
RoSyField solve_guiding_field(const TriangleSurface& mesh, const CurvatureField& curv, const GuidingOptions& opt = {});

}  // namespace cpfmesh
