#pragma once

#include "cpfmesh/mesh.hpp"
#include "cpfmesh/seamless.hpp"

#include <array>
#include <vector>

namespace cpfmesh {

struct IsolineSegment {
    int face;
    int axis;   // 0, 1, 2 for h1, h2, h3
    int level;
    Vec2 a, b;  // endpoints in the face chart (h1, h2)
    Vec3 pa, pb;
};

struct IsolineVertex {
    int face;
    Vec2 h;                     // chart coordinates
    Vec3 position;
    std::array<int, 3> axes{};  // 1 where an isoline of that axis passes
};

struct IsolineArrangement {
    std::vector<IsolineSegment> segments;
    std::vector<IsolineVertex> vertices;  // pairwise intersections inside each face
    std::vector<int> skippedFaces;        // degenerate or flipped parametric triangles
};

// Integer isolines of h1, h2 (and h3 for N=6) clipped to each face, with their intersections.
IsolineArrangement trace_isolines(const TriangleSurface& mesh, const SeamlessParam& param);

// Isoline segments of one linear function over a triangle with the given corner values.
std::vector<std::pair<Vec2, Vec2>> isoline_segments(const std::array<Vec2, 3>& corners,
                                                     const std::array<double, 3>& values, int level);

struct ExtractionReport {
    int latticePoints = 0;
    int tracedEdges = 0;
    int abortedTraces = 0;
    int rejectedWalks = 0;
    int quadsSplit = 0;
    int skippedFaces = 0;
    int maxValence = 0;
};

// Grid-vertex mesh: one vertex per lattice point, edges along lattice directions traced across
// faces and seams, faces from the rotation system. For N=6 quads are split on the Delaunay
// diagonal, so the result is all triangles.
PolyMesh assemble_primal(const TriangleSurface& mesh, const SeamlessParam& param, ExtractionReport* report = nullptr);

// Splits every quad along the diagonal whose opposite angles sum to at most pi.
PolyMesh split_quads_delaunay(const PolyMesh& mesh, int* split = nullptr);

// Faces incident to a boundary vertex removed; unused vertices dropped.
PolyMesh remove_boundary_strip(const PolyMesh& mesh);

struct DualReport {
    int primalStripRemoved = 0;
    int dualStripRemoved = 0;
    int inconsistentFans = 0;
};

// Barycenter of every primal face becomes a vertex; every interior primal vertex a face.
// `trimStrips` removes one boundary strip before and one after dualizing.
PolyMesh barycentric_dual(const PolyMesh& primal, bool trimStrips = true, DualReport* report = nullptr);

// Every undirected edge borders at most two faces with opposite orientation, every face loop has
// distinct vertices and every vertex fan is a single disk or half-disk.
bool is_manifold(const PolyMesh& mesh);

// Faces around each vertex in counter-clockwise order; `closed` false for boundary vertices.
struct VertexRing {
    std::vector<int> faces;
    bool closed = false;
    bool valid = true;
};
std::vector<VertexRing> vertex_rings(const PolyMesh& mesh);

}  // namespace cpfmesh
