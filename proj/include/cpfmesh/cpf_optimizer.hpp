#pragma once

#include "cpfmesh/cpf_terms.hpp"
#include "cpfmesh/curvature.hpp"
#include "cpfmesh/guiding_field.hpp"
#include "cpfmesh/nlls.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cpfmesh {

// Per-face frame fields (face basis) plus per-edge consensus variables. The consensus values
// live in balanced units: they approximate (dr^{-1} e / lambda)^N.
struct FieldPair {
    int N = 6;
    std::vector<Vec2> U, V;
    std::vector<Vec2> z;        // CPF consensus per interior edge
    std::vector<Vec2> zSmooth;  // smoothness consensus per interior edge
};

struct AlignmentConstraint {
    int face;
    Vec2 direction;  // unit, face basis
    int n;           // even divisor of N
    double weight;
};

struct OrthogonalityConstraint {
    int face;
    Mat2 inner;  // symmetric
    std::string kind;
};

struct ConstraintSet {
    int N = 6;
    std::vector<Mat2> metric;  // per face; sizing target and balancing metric (identity if empty)
    bool sizing = true;
    std::vector<AlignmentConstraint> alignment;
    std::vector<OrthogonalityConstraint> orthogonality;
    double licoEpsilon = 1e-3;
};

// Average over faces and their edges of the metric edge length sqrt(e^T g e).
double balance_length(const TriangleSurface& mesh, const ConstraintSet& c);

enum class FieldMode { Hexagonal, Quad };

// Hexagonal: alignment n=6 on elliptic faces and n=2 on parabolic/hyperbolic faces toward the
// guiding directions, weighted (rho^3 - 3rho^2 + 3rho)^2. Quad: n=4 on all curved faces,
// weighted rho^2. Both add the Dupin sizing, conjugacy (shape operator) and orthogonality.
ConstraintSet build_constraints(const TriangleSurface& mesh, const CurvatureField& curv, const RoSyField& guiding,
                                const std::vector<Mat2>& metric, FieldMode mode);

// U along the guiding direction, V = J U, both of unit metric length. Falls back to the basis
// axes where the guiding field vanishes.
FieldPair initialize_fields(const TriangleSurface& mesh, const RoSyField& guiding, const std::vector<Mat2>& metric,
                            int N);
// Uniformly random U direction per face, V = J U, unit metric length.
FieldPair random_fields(const TriangleSurface& mesh, const std::vector<Mat2>& metric, int N, std::uint64_t seed);
// Sets both consensus variables to the average of the two edge powers.
void initialize_consensus(const TriangleSurface& mesh, FieldPair& fields, double lambda);

struct CpfEnergies {
    double smoothness = 0, cpf = 0, lico = 0, alignment = 0, sizing = 0, orthogonality = 0;
    double maxCpfResidual = 0;  // max over edges of |a^N - b^N| in balanced units
    double minLico = 0;         // min s over faces
};

CpfEnergies cpf_energies(const TriangleSurface& mesh, const ConstraintSet& c, const FieldPair& fields);

// Residual system over the variables [U V per face | z | zSmooth]. `anchors` holds the barrier
// anchors per face and may be updated between evaluations.
ResidualSystem assemble_cpf_system(const TriangleSurface& mesh, const ConstraintSet& c, double beta,
                                   std::shared_ptr<std::vector<double>> anchors);

Eigen::VectorXd pack_fields(const FieldPair& f);
void unpack_fields(const Eigen::VectorXd& x, FieldPair& f);

struct CpfRound {
    int round;
    double beta;
    SolverReport solver;
    CpfEnergies energies;
    bool accepted;
};

inline SolverOptions default_lm() {
    SolverOptions o;
    o.functionTolerance = 1e-10;
    return o;
}

struct CpfOptions {
    int maxRounds = 10;
    double beta0 = 1.0;
    double betaFactor = 2.0;
    SolverOptions lm = default_lm();
    // Decides whether a round's result is good enough; defaults to maxCpfResidual < threshold.
    std::function<bool(const FieldPair&, const CpfEnergies&)> accept;
    double residualThreshold = 1e-6;
};

struct CpfResult {
    FieldPair fields;
    bool success = false;
    int round = -1;  // index of the accepted round
    double beta = 0;
    std::vector<CpfRound> rounds;
};

// Penalty loop: solve, test, double beta, up to maxRounds.
CpfResult optimize_cpf(const TriangleSurface& mesh, const ConstraintSet& c, const FieldPair& init,
                       const CpfOptions& opt = {});

}  // namespace cpfmesh
