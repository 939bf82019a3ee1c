#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpfmesh {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Raised for malformed input geometry; carries the offending element id when known.
class MeshError : public std::runtime_error {
public:
    MeshError(const std::string& what, int element = -1)
        : std::runtime_error(what), element_(element) {}
    int element() const { return element_; }

private:
    int element_;
};

// Raised for out-of-range user parameters.
class ParameterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Per-face orthonormal tangent frame. b1 is the first edge direction, b2 = n x b1.
struct LocalBasis {
    Vec3 b1, b2, n;
    Vec2 toLocal(const Vec3& v) const { return {v.dot(b1), v.dot(b2)}; }
    Vec3 toWorld(const Vec2& w) const { return w.x() * b1 + w.y() * b2; }
};

// An interior edge shared by faces fi < fj. `vector` is the 3D edge vector, oriented
// along the half-edge as seen from fi; cornerI/cornerJ index the half-edge inside each face.
struct InteriorEdge {
    int fi, fj;
    int cornerI, cornerJ;
    int v0, v1;  // endpoints, v0 -> v1 along `vector`
    Vec3 vector;
};

class TriangleSurface {
public:
    TriangleSurface() = default;
    TriangleSurface(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces,
                    std::vector<Vec3> vertexNormals = {});

    int vertexCount() const { return static_cast<int>(vertices_.size()); }
    int faceCount() const { return static_cast<int>(faces_.size()); }

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& faces() const { return faces_; }
    const Vec3& vertex(int v) const { return vertices_[v]; }
    const std::array<int, 3>& face(int f) const { return faces_[f]; }

    // Half-edge h = 3f + c runs from faces[f][c] to faces[f][(c+1)%3].
    int twin(int h) const { return twin_[h]; }
    int halfedgeFrom(int h) const { return faces_[h / 3][h % 3]; }
    int halfedgeTo(int h) const { return faces_[h / 3][(h % 3 + 1) % 3]; }
    Vec3 halfedgeVector(int h) const { return vertices_[halfedgeTo(h)] - vertices_[halfedgeFrom(h)]; }

    const std::vector<InteriorEdge>& interiorEdges() const { return interiorEdges_; }
    // Interior edge index for a half-edge, or -1 on the boundary.
    int edgeOfHalfedge(int h) const { return halfedgeEdge_[h]; }

    const LocalBasis& basis(int f) const { return bases_[f]; }
    double faceArea(int f) const { return areas_[f]; }
    Vec3 faceNormal(int f) const { return bases_[f].n; }
    Vec3 faceCentroid(int f) const;
    double totalArea() const { return totalArea_; }
    double bboxDiagonal() const { return bboxDiagonal_; }
    double averageEdgeLength() const { return averageEdgeLength_; }

    bool isBoundaryVertex(int v) const { return boundaryVertex_[v]; }
    bool isBoundaryFace(int f) const;
    bool hasBoundary() const;

    // Faces around a vertex in counter-clockwise order as (face, corner) pairs. For boundary
    // vertices the fan starts at the face whose outgoing half-edge lies on the boundary.
    const std::vector<std::pair<int, int>>& vertexFan(int v) const { return fans_[v]; }

    bool hasInputNormals() const { return !inputNormals_.empty(); }
    const std::vector<Vec3>& vertexNormals() const { return normals_; }

    int eulerCharacteristic() const;

private:
    void build();

    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 3>> faces_;
    std::vector<Vec3> inputNormals_;
    std::vector<Vec3> normals_;
    std::vector<int> twin_;
    std::vector<int> halfedgeEdge_;
    std::vector<InteriorEdge> interiorEdges_;
    std::vector<LocalBasis> bases_;
    std::vector<double> areas_;
    std::vector<char> boundaryVertex_;
    std::vector<std::vector<std::pair<int, int>>> fans_;
    double totalArea_ = 0, bboxDiagonal_ = 0, averageEdgeLength_ = 0;
};

// General polygon mesh, used for extracted and planarized output.
struct PolyMesh {
    std::vector<Vec3> vertices;
    std::vector<std::vector<int>> faces;

    int vertexCount() const { return static_cast<int>(vertices.size()); }
    int faceCount() const { return static_cast<int>(faces.size()); }
    double averageEdgeLength() const;
    // Vertices on an open half-edge (one without an opposite).
    std::vector<char> boundaryVertices() const;
};

struct ObjData {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;  // per vertex when the file provides them, else empty
    std::vector<std::vector<int>> faces;
};

ObjData read_obj(const std::string& path);
TriangleSurface load_mesh(const std::string& path);
PolyMesh load_poly_mesh(const std::string& path);

// Vertices are written with 9 significant digits.
void write_obj(const std::string& path, const PolyMesh& mesh);
void write_obj(const std::string& path, const TriangleSurface& mesh);
PolyMesh to_poly_mesh(const TriangleSurface& mesh);

}  // namespace cpfmesh
