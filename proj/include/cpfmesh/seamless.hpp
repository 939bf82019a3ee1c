#pragma once

#include "cpfmesh/cpf_optimizer.hpp"
#include "cpfmesh/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace cpfmesh {

using Mat2i = Eigen::Matrix2i;
using Vec2i = Eigen::Vector2i;

// Maps Cartesian parameter coordinates (u, v) to lattice coordinates (h1, h2). For N=6 the rows
// are the first two triangular-grid axes (h3 = h2 - h1 follows); otherwise the identity.
Mat2 grid_matrix(int N);
// Rotation by 2*pi/N of the (u, v) plane expressed on lattice coordinates; integer for N in {1, 2, 4, 6}.
Mat2i lattice_rotation(int N, int k = 1);
// Lattice directions joining neighbouring grid vertices: six for N=6, four otherwise.
std::vector<Vec2i> lattice_directions(int N);

struct Matching {
    int N = 6;
    std::vector<int> k;                 // per interior edge: chart_fj ~ R^k chart_fi
    std::vector<double> vertexIndex;    // per vertex, multiple of 1/N; 0 on the boundary
    std::vector<int> holonomy;          // per interior vertex: sum of k around the fan mod N (-1 on boundary)
    std::vector<char> consistent;       // per vertex: N*index == holonomy (mod N)
    std::vector<int> singular;          // vertices with nonzero index
    std::vector<int> degenerate;        // edges whose best rotation is ambiguous
    bool allConsistent() const;
    double indexSum() const;
};

// Rotation index taking face i's chart to face j's chart, seen from `from` toward `to`.
int directed_matching(const TriangleSurface& mesh, const Matching& m, int edge, int from);

Matching compute_matching(const TriangleSurface& mesh, const FieldPair& fields);

struct TheoremReport {
    double maxGradientError = 0;     // max |dr^{-1} [U V] - I|
    int negativeFaces = 0;           // parametric triangles with non-positive orientation
    double minOrientation = 0;       // min signed parametric area / 3D area
    int checkedEdges = 0;            // edges whose CPF residual is below the tolerance
    double maxMismatchChecked = 0;   // max |R^k a - b| (balanced) over checked edges
    double maxMismatch = 0;          // same over all edges
    bool ok(double mismatchTolerance) const {
        return negativeFaces == 0 && maxMismatchChecked < mismatchTolerance && maxGradientError < 1e-9;
    }
};

// Builds the per-face parametric triangles and checks the discrete integrability conclusions.
// `lambda` converts to balanced units; `tolerance` selects edges by CPF residual.
TheoremReport verify_theorem(const TriangleSurface& mesh, const FieldPair& fields, const Matching& matching,
                             double lambda, double tolerance);

// Per-face gradients of h1, h2, h3 in the face basis.
std::vector<std::array<Vec2, 3>> fields_to_grid_gradients(const FieldPair& fields);

struct SeamlessParam {
    int N = 6;
    std::vector<std::array<int, 3>> cornerCopy;  // cut-mesh vertex per face corner
    std::vector<int> copyVertex;                 // original vertex of each cut-mesh vertex
    std::vector<Vec2> copyValue;                 // (h1, h2) per cut-mesh vertex
    std::vector<int> faceRotation;               // combing rotation per face
    std::vector<char> cutEdge;                   // per interior edge
    std::vector<int> edgeRotation;               // combed rotation per interior edge (0 off the cut)
    std::vector<Vec2i> edgeTranslation;          // integer jump per interior edge (0 off the cut)
    std::vector<Vec2> rawTranslation;            // jumps before rounding
    double poissonResidual = 0;                  // area-weighted RMS gradient misfit
    double maxSeamError = 0;                     // max violation of the seam relations
    double maxRoundingDistance = 0;              // max |t - round(t)| before rounding
    int unmatchedEdges = 0;                      // uncut edges whose combed rotation is not zero

    // (h1, h2) of a face corner.
    Vec2 value(int f, int c) const { return copyValue[cornerCopy[f][c]]; }
    // (h1, h2, h3) with h3 = h2 - h1.
    Eigen::Vector3d triple(int f, int c) const;
    // Maps lattice coordinates of face fi's chart into face fj's chart across an interior edge.
    Vec2 transfer(const TriangleSurface& mesh, int edge, int from, const Vec2& h) const;
    Mat2i transferRotation(const TriangleSurface& mesh, int edge, int from) const;
    // Signed parametric area of a face in Cartesian (u, v) units.
    double parametricArea(int f) const;
};

struct IntegrationOptions {
    Vec2 anchorOffset{0.2137, 0.3761};  // generic, keeps grid lines off mesh vertices
    bool roundTranslations = true;
};

// Cuts the mesh to a disk through the singular vertices, combs the fields, integrates (h1, h2)
// by an area-weighted least-squares fit, then rounds the seam jumps and solves again.
SeamlessParam cut_and_integrate(const TriangleSurface& mesh, const FieldPair& fields, const Matching& matching,
                                const IntegrationOptions& opt = {});

struct IntegrationCheck {
    int flippedFaces = 0;
    int unmatchedEdges = 0;
    bool indicesConsistent = false;
    double maxSeamError = 0;
    bool success() const { return flippedFaces == 0 && unmatchedEdges == 0 && indicesConsistent && maxSeamError < 1e-6; }
    std::string summary() const;
};

IntegrationCheck check_integration(const Matching& matching, const SeamlessParam& param);

// Cut mesh with (h1, h2) as texture coordinates.
void write_cut_obj(const std::string& path, const TriangleSurface& mesh, const SeamlessParam& param);

}  // namespace cpfmesh
