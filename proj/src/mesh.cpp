#include "cpfmesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace cpfmesh {

TriangleSurface::TriangleSurface(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces,
                                 std::vector<Vec3> vertexNormals)
    : vertices_(std::move(vertices)), faces_(std::move(faces)), inputNormals_(std::move(vertexNormals)) {
    build();
}

void TriangleSurface::build() {
    const int nv = vertexCount(), nf = faceCount();
    if (nf == 0) throw MeshError("mesh has no faces");
    if (!inputNormals_.empty() && static_cast<int>(inputNormals_.size()) != nv)
        throw MeshError("vertex normal count does not match vertex count");
    for (int f = 0; f < nf; ++f) {
        const auto& t = faces_[f];
        for (int c = 0; c < 3; ++c)
            if (t[c] < 0 || t[c] >= nv) throw MeshError("face references a missing vertex", f);
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw MeshError("face repeats a vertex", f);
    }

    // Half-edge twins; reject edges with more than two faces or with clashing orientation.
    std::map<std::pair<int, int>, int> directed;
    std::map<std::pair<int, int>, int> undirectedCount;
    for (int h = 0; h < 3 * nf; ++h) {
        const int a = halfedgeFrom(h), b = halfedgeTo(h);
        if (++undirectedCount[{std::min(a, b), std::max(a, b)}] > 2)
            throw MeshError("non-manifold edge (" + std::to_string(a) + "," + std::to_string(b) + ")", h / 3);
        if (!directed.emplace(std::make_pair(a, b), h).second)
            throw MeshError("inconsistently oriented edge (" + std::to_string(a) + "," + std::to_string(b) + ")",
                            h / 3);
    }
    twin_.assign(3 * nf, -1);
    for (int h = 0; h < 3 * nf; ++h) {
        auto it = directed.find({halfedgeTo(h), halfedgeFrom(h)});
        if (it != directed.end()) twin_[h] = it->second;
    }

    // Geometry.
    areas_.resize(nf);
    bases_.resize(nf);
    totalArea_ = 0;
    for (int f = 0; f < nf; ++f) {
        const Vec3& p0 = vertices_[faces_[f][0]];
        const Vec3 e1 = vertices_[faces_[f][1]] - p0, e2 = vertices_[faces_[f][2]] - p0;
        const Vec3 cr = e1.cross(e2);
        areas_[f] = 0.5 * cr.norm();
        totalArea_ += areas_[f];
        LocalBasis& b = bases_[f];
        b.n = cr.norm() > 0 ? Vec3(cr.normalized()) : Vec3::UnitZ();
        b.b1 = e1.norm() > 0 ? Vec3(e1.normalized()) : Vec3::UnitX();
        b.b2 = b.n.cross(b.b1);
    }
    const double minArea = 1e-12 * totalArea_ / nf;
    for (int f = 0; f < nf; ++f)
        if (!(areas_[f] > minArea)) throw MeshError("degenerate face", f);

    Vec3 lo = vertices_[0], hi = vertices_[0];
    for (const Vec3& p : vertices_) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    bboxDiagonal_ = (hi - lo).norm();
    double edgeSum = 0;
    for (int h = 0; h < 3 * nf; ++h) edgeSum += halfedgeVector(h).norm();
    averageEdgeLength_ = edgeSum / (3.0 * nf);

    boundaryVertex_.assign(nv, 0);
    for (int h = 0; h < 3 * nf; ++h)
        if (twin_[h] < 0) boundaryVertex_[halfedgeFrom(h)] = boundaryVertex_[halfedgeTo(h)] = 1;

    // Counter-clockwise fans.
    std::vector<int> incident(nv, 0), anyCorner(nv, -1);
    for (int f = 0; f < nf; ++f)
        for (int c = 0; c < 3; ++c) {
            ++incident[faces_[f][c]];
            anyCorner[faces_[f][c]] = 3 * f + c;
        }
    fans_.assign(nv, {});
    for (int v = 0; v < nv; ++v) {
        if (anyCorner[v] < 0) continue;
        int h = anyCorner[v];  // outgoing half-edge of v
        if (boundaryVertex_[v]) {
            // Rotate clockwise until the outgoing half-edge has no twin.
            for (int guard = 0; twin_[h] >= 0 && guard < incident[v]; ++guard) {
                const int t = twin_[h];
                h = 3 * (t / 3) + (t % 3 + 1) % 3;
            }
        }
        const int start = h;
        auto& fan = fans_[v];
        for (int guard = 0; guard <= incident[v]; ++guard) {
            fan.emplace_back(h / 3, h % 3);
            const int prev = 3 * (h / 3) + (h % 3 + 2) % 3;
            const int t = twin_[prev];
            if (t < 0 || t == start) break;
            h = t;
        }
        if (static_cast<int>(fan.size()) != incident[v]) throw MeshError("non-manifold vertex", v);
    }

    halfedgeEdge_.assign(3 * nf, -1);
    interiorEdges_.clear();
    for (int h = 0; h < 3 * nf; ++h) {
        const int t = twin_[h];
        if (t < 0 || h / 3 > t / 3) continue;
        InteriorEdge e{h / 3, t / 3, h % 3, t % 3, halfedgeFrom(h), halfedgeTo(h), halfedgeVector(h)};
        halfedgeEdge_[h] = halfedgeEdge_[t] = static_cast<int>(interiorEdges_.size());
        interiorEdges_.push_back(e);
    }

    if (!inputNormals_.empty()) {
        normals_ = inputNormals_;
        for (Vec3& n : normals_) {
            if (!(n.norm() > 0)) throw MeshError("zero vertex normal in input");
            n.normalize();
        }
    } else {
        normals_.assign(nv, Vec3::Zero());
        for (int f = 0; f < nf; ++f)
            for (int c = 0; c < 3; ++c) normals_[faces_[f][c]] += areas_[f] * bases_[f].n;
        for (Vec3& n : normals_)
            if (n.norm() > 0) n.normalize();
    }
}

Vec3 TriangleSurface::faceCentroid(int f) const {
    return (vertices_[faces_[f][0]] + vertices_[faces_[f][1]] + vertices_[faces_[f][2]]) / 3.0;
}

bool TriangleSurface::isBoundaryFace(int f) const {
    return boundaryVertex_[faces_[f][0]] || boundaryVertex_[faces_[f][1]] || boundaryVertex_[faces_[f][2]];
}

bool TriangleSurface::hasBoundary() const {
    return std::find(twin_.begin(), twin_.end(), -1) != twin_.end();
}

int TriangleSurface::eulerCharacteristic() const {
    const int halfedges = 3 * faceCount();
    const int boundaryHalfedges = static_cast<int>(std::count(twin_.begin(), twin_.end(), -1));
    const int edges = (halfedges - boundaryHalfedges) / 2 + boundaryHalfedges;
    int used = 0;
    for (const auto& fan : fans_) used += fan.empty() ? 0 : 1;
    return used - edges + faceCount();
}

double PolyMesh::averageEdgeLength() const {
    double sum = 0;
    long count = 0;
    for (const auto& f : faces)
        for (size_t i = 0; i < f.size(); ++i) {
            sum += (vertices[f[(i + 1) % f.size()]] - vertices[f[i]]).norm();
            ++count;
        }
    return count ? sum / count : 0.0;
}

std::vector<char> PolyMesh::boundaryVertices() const {
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : faces)
        for (size_t i = 0; i < f.size(); ++i) ++directed[{f[i], f[(i + 1) % f.size()]}];
    std::vector<char> out(vertices.size(), 0);
    for (const auto& [key, count] : directed)
        if (!directed.count({key.second, key.first})) out[key.first] = out[key.second] = 1;
    return out;
}

namespace {

int resolveIndex(long idx, size_t count, int line) {
    const long n = static_cast<long>(count);
    const long r = idx < 0 ? n + idx : idx - 1;
    if (idx == 0 || r < 0 || r >= n) throw MeshError("OBJ index out of range at line " + std::to_string(line));
    return static_cast<int>(r);
}

}  // namespace

ObjData read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open " + path);
    ObjData data;
    std::vector<Vec3> fileNormals;
    std::vector<int> normalOfVertex;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z())) throw MeshError("bad vertex at line " + std::to_string(lineNo));
            data.vertices.push_back(p);
        } else if (tag == "vn") {
            Vec3 n;
            if (!(ls >> n.x() >> n.y() >> n.z())) throw MeshError("bad normal at line " + std::to_string(lineNo));
            fileNormals.push_back(n);
        } else if (tag == "f") {
            std::vector<int> face;
            std::string tok;
            while (ls >> tok) {
                const auto s1 = tok.find('/');
                const int v = resolveIndex(std::stol(tok.substr(0, s1)), data.vertices.size(), lineNo);
                face.push_back(v);
                if (s1 != std::string::npos) {
                    const auto s2 = tok.find('/', s1 + 1);
                    if (s2 != std::string::npos && s2 + 1 < tok.size()) {
                        const int n = resolveIndex(std::stol(tok.substr(s2 + 1)), fileNormals.size(), lineNo);
                        if (normalOfVertex.size() < data.vertices.size()) normalOfVertex.resize(data.vertices.size(), -1);
                        normalOfVertex[v] = n;
                    }
                }
            }
            if (face.size() < 3) throw MeshError("face with fewer than 3 vertices at line " + std::to_string(lineNo));
            data.faces.push_back(std::move(face));
        }
    }
    if (!fileNormals.empty()) {
        normalOfVertex.resize(data.vertices.size(), -1);
        const bool referenced = std::any_of(normalOfVertex.begin(), normalOfVertex.end(), [](int i) { return i >= 0; });
        if (referenced && std::all_of(normalOfVertex.begin(), normalOfVertex.end(), [](int i) { return i >= 0; })) {
            for (int i : normalOfVertex) data.normals.push_back(fileNormals[i]);
        } else if (!referenced && fileNormals.size() == data.vertices.size()) {
            data.normals = fileNormals;
        }
    }
    return data;
}

TriangleSurface load_mesh(const std::string& path) {
    ObjData data = read_obj(path);
    std::vector<std::array<int, 3>> tris;
    tris.reserve(data.faces.size());
    for (size_t f = 0; f < data.faces.size(); ++f) {
        if (data.faces[f].size() != 3) throw MeshError("input mesh must be a triangle mesh", static_cast<int>(f));
        tris.push_back({data.faces[f][0], data.faces[f][1], data.faces[f][2]});
    }
    return TriangleSurface(std::move(data.vertices), std::move(tris), std::move(data.normals));
}

PolyMesh load_poly_mesh(const std::string& path) {
    ObjData data = read_obj(path);
    return PolyMesh{std::move(data.vertices), std::move(data.faces)};
}

void write_obj(const std::string& path, const PolyMesh& mesh) {
    FILE* out = std::fopen(path.c_str(), "w");
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const Vec3& p : mesh.vertices) std::fprintf(out, "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    for (const auto& f : mesh.faces) {
        std::fputc('f', out);
        for (int v : f) std::fprintf(out, " %d", v + 1);
        std::fputc('\n', out);
    }
    std::fclose(out);
}

PolyMesh to_poly_mesh(const TriangleSurface& mesh) {
    PolyMesh p;
    p.vertices = mesh.vertices();
    for (const auto& f : mesh.faces()) p.faces.push_back({f[0], f[1], f[2]});
    return p;
}

void write_obj(const std::string& path, const TriangleSurface& mesh) { write_obj(path, to_poly_mesh(mesh)); }

}  // namespace cpfmesh
