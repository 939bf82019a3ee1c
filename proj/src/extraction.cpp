#include "cpfmesh/extraction.hpp"

#include "cpfmesh/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>

namespace cpfmesh {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Barycentric coordinates of p in the triangle (a, b, c).
Eigen::Vector3d barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
    const double det = cross2(b - a, c - a);
    const double l1 = cross2(p - a, c - a) / det;
    const double l2 = cross2(b - a, p - a) / det;
    return {1.0 - l1 - l2, l1, l2};
}

// CCW angle from r to w in [0, 2pi), with tiny negative noise folded to zero.
double ccw_angle(const Vec2& r, const Vec2& w) {
    double a = std::atan2(cross2(r, w), r.dot(w));
    if (a < 0) a += kTwoPi;
    if (a > kTwoPi - 1e-9) a = 0;
    return a;
}

std::array<Vec2, 3> chart(const SeamlessParam& P, int f) { return {P.value(f, 0), P.value(f, 1), P.value(f, 2)}; }

double chart_area(const std::array<Vec2, 3>& q) { return 0.5 * cross2(q[1] - q[0], q[2] - q[0]); }

constexpr double kParamAreaMin = 1e-12;

}  // namespace

std::vector<std::pair<Vec2, Vec2>> isoline_segments(const std::array<Vec2, 3>& corners,
                                                     const std::array<double, 3>& values, int level) {
    std::vector<Vec2> pts;
    auto add = [&](const Vec2& p) {
        for (const Vec2& q : pts)
            if ((q - p).norm() < 1e-12) return;
        pts.push_back(p);
    };
    const double L = level;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const double a = values[i] - L, b = values[j] - L;
        if (a == 0) add(corners[i]);
        if (a * b < 0) add(corners[i] + (a / (a - b)) * (corners[j] - corners[i]));
    }
    if (pts.size() != 2) return {};
    return {{pts[0], pts[1]}};
}

IsolineArrangement trace_isolines(const TriangleSurface& mesh, const SeamlessParam& param) {
    IsolineArrangement out;
    const int axes = param.N == 6 ? 3 : 2;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const auto q = chart(param, f);
        if (!(chart_area(q) > kParamAreaMin)) {
            out.skippedFaces.push_back(f);
            continue;
        }
        const auto& t = mesh.face(f);
        auto to3d = [&](const Vec2& h) {
            const Eigen::Vector3d b = barycentric(q[0], q[1], q[2], h);
            return Vec3(b[0] * mesh.vertex(t[0]) + b[1] * mesh.vertex(t[1]) + b[2] * mesh.vertex(t[2]));
        };
        const size_t first = out.segments.size();
        for (int axis = 0; axis < axes; ++axis) {
            std::array<double, 3> vals;
            for (int c = 0; c < 3; ++c) vals[c] = axis == 0 ? q[c].x() : axis == 1 ? q[c].y() : q[c].y() - q[c].x();
            const auto [lo, hi] = std::minmax({vals[0], vals[1], vals[2]});
            for (int L = static_cast<int>(std::ceil(lo)); L <= static_cast<int>(std::floor(hi)); ++L)
                for (const auto& [a, b] : isoline_segments(q, vals, L))
                    out.segments.push_back({f, axis, L, a, b, to3d(a), to3d(b)});
        }
        // Pairwise intersections of different axes; lines h_a = L_a are solved exactly.
        const size_t firstVertex = out.vertices.size();
        for (size_t i = first; i < out.segments.size(); ++i)
            for (size_t j = i + 1; j < out.segments.size(); ++j) {
                const auto& si = out.segments[i];
                const auto& sj = out.segments[j];
                if (si.axis == sj.axis) continue;
                Mat2 rows;
                Vec2 rhs(si.level, sj.level);
                const Vec2 axisRow[3] = {Vec2(1, 0), Vec2(0, 1), Vec2(-1, 1)};
                rows.row(0) = axisRow[si.axis].transpose();
                rows.row(1) = axisRow[sj.axis].transpose();
                const Vec2 h = rows.inverse() * rhs;
                const Eigen::Vector3d b = barycentric(q[0], q[1], q[2], h);
                if (b.minCoeff() < -1e-9) continue;
                bool merged = false;
                for (size_t k = firstVertex; k < out.vertices.size(); ++k)
                    if ((out.vertices[k].h - h).norm() < 1e-7) {
                        out.vertices[k].axes[si.axis] = out.vertices[k].axes[sj.axis] = 1;
                        merged = true;
                        break;
                    }
                if (merged) continue;
                IsolineVertex v{f, h, to3d(h), {0, 0, 0}};
                v.axes[si.axis] = v.axes[sj.axis] = 1;
                out.vertices.push_back(v);
            }
    }
    return out;
}

namespace {

// A lattice point found inside (or on the boundary of) one input face.
struct Instance {
    int face;
    Vec2i h;
    Eigen::Vector3d bary;
    int weld = -1;
};

enum class Where { Interior, Edge, Vertex };

struct Location {
    Where where = Where::Interior;
    int element = -1;  // canonical half-edge or mesh vertex
};

struct Outgoing {
    int to;
    double alpha;
};

struct Weld {
    Vec3 position;
    Location loc;
    std::vector<int> instances;
    std::vector<Outgoing> out;  // sorted by alpha
    double total = kTwoPi;
    bool closed = true;
};

class Extractor {
public:
    Extractor(const TriangleSurface& m, const SeamlessParam& p, ExtractionReport& r) : m_(m), P_(p), rep_(r) {
        q_.resize(m.faceCount());
        valid_.assign(m.faceCount(), 0);
        toLocal_.resize(m.faceCount());
        faceInstances_.resize(m.faceCount());
        for (int f = 0; f < m.faceCount(); ++f) {
            q_[f] = chart(p, f);
            if (!(chart_area(q_[f]) > kParamAreaMin)) {
                ++rep_.skippedFaces;
                continue;
            }
            valid_[f] = 1;
            // Local 2D directions from lattice directions: L maps face-basis offsets to lattice offsets.
            const auto lc = local_corners(m, f);
            Mat2 H, Q;
            H << q_[f][1] - q_[f][0], q_[f][2] - q_[f][0];
            Q << lc[1] - lc[0], lc[2] - lc[0];
            toLocal_[f] = (H * Q.inverse()).inverse();
        }
    }

    PolyMesh run() {
        collect_points();
        trace_all();
        return walk_faces();
    }

private:
    Location locate(const Instance& in) const {
        const auto& b = in.bary;
        for (int c = 0; c < 3; ++c)
            if (b[c] > 1.0 - kOnTol) return {Where::Vertex, m_.face(in.face)[c]};
        for (int c = 0; c < 3; ++c)
            if (b[c] < kOnTol) {
                int he = 3 * in.face + (c + 1) % 3;
                const int tw = m_.twin(he);
                if (tw >= 0 && tw < he) he = tw;
                return {Where::Edge, he};
            }
        return {};
    }

    void collect_points() {
        const double tol = 1e-6 * m_.averageEdgeLength();
        std::map<std::array<long long, 3>, std::vector<int>> grid;
        auto key = [&](const Vec3& p) {
            return std::array<long long, 3>{static_cast<long long>(std::floor(p.x() / tol)),
                                            static_cast<long long>(std::floor(p.y() / tol)),
                                            static_cast<long long>(std::floor(p.z() / tol))};
        };
        for (int f = 0; f < m_.faceCount(); ++f) {
            if (!valid_[f]) continue;
            const auto& q = q_[f];
            const auto& t = m_.face(f);
            const Vec2 lo = q[0].cwiseMin(q[1]).cwiseMin(q[2]), hi = q[0].cwiseMax(q[1]).cwiseMax(q[2]);
            for (int i = static_cast<int>(std::ceil(lo.x() - 1e-9)); i <= static_cast<int>(std::floor(hi.x() + 1e-9)); ++i)
                for (int j = static_cast<int>(std::ceil(lo.y() - 1e-9)); j <= static_cast<int>(std::floor(hi.y() + 1e-9)); ++j) {
                    Eigen::Vector3d b = barycentric(q[0], q[1], q[2], Vec2(i, j));
                    if (b.minCoeff() < -kInTol) continue;
                    b = b.cwiseMax(0.0);
                    b /= b.sum();
                    const Vec3 pos = b[0] * m_.vertex(t[0]) + b[1] * m_.vertex(t[1]) + b[2] * m_.vertex(t[2]);
                    Instance in{f, Vec2i(i, j), b};
                    // Weld with an existing point within tolerance.
                    const auto k = key(pos);
                    int found = -1;
                    for (long long dx = -1; dx <= 1 && found < 0; ++dx)
                        for (long long dy = -1; dy <= 1 && found < 0; ++dy)
                            for (long long dz = -1; dz <= 1 && found < 0; ++dz) {
                                auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
                                if (it == grid.end()) continue;
                                for (int w : it->second)
                                    if ((welds_[w].position - pos).norm() <= tol) {
                                        found = w;
                                        break;
                                    }
                            }
                    if (found < 0) {
                        found = static_cast<int>(welds_.size());
                        welds_.push_back({pos, {}, {}, {}});
                        grid[k].push_back(found);
                    }
                    in.weld = found;
                    const int id = static_cast<int>(instances_.size());
                    instances_.push_back(in);
                    welds_[found].instances.push_back(id);
                    faceInstances_[f].push_back(id);
                }
        }
        rep_.latticePoints = static_cast<int>(welds_.size());
        // The most degenerate location among a weld's instances fixes its angular coordinate.
        for (Weld& w : welds_) {
            for (int id : w.instances) {
                const Location l = locate(instances_[id]);
                if (static_cast<int>(l.where) > static_cast<int>(w.loc.where)) w.loc = l;
            }
            if (w.loc.where == Where::Edge) {
                w.closed = m_.twin(w.loc.element) >= 0;
            } else if (w.loc.where == Where::Vertex) {
                const int v = w.loc.element;
                w.closed = !m_.isBoundaryVertex(v);
                w.total = 0;
                for (const auto& [f, c] : m_.vertexFan(v)) w.total += corner_angle(f, c);
            }
        }
    }

    double corner_angle(int f, int c) const {
        const auto lc = local_corners(m_, f);
        return ccw_angle(lc[(c + 1) % 3] - lc[c], lc[(c + 2) % 3] - lc[c]);
    }

    // Angular coordinate of a direction leaving weld w inside face f; negative if undefined.
    double alpha(const Weld& w, int f, const Vec2& dirLocal) const {
        const auto lc = local_corners(m_, f);
        switch (w.loc.where) {
        case Where::Interior: return ccw_angle(Vec2(1, 0), dirLocal);
        case Where::Edge: {
            const int he = w.loc.element;
            for (int sidePass = 0; sidePass < 2; ++sidePass) {
                const int h = sidePass == 0 ? he : m_.twin(he);
                if (h < 0 || h / 3 != f) continue;
                const int c = h % 3;
                return (sidePass == 0 ? 0.0 : kPi) + ccw_angle(lc[(c + 1) % 3] - lc[c], dirLocal);
            }
            return -1;
        }
        case Where::Vertex: {
            double before = 0;
            for (const auto& [ff, cc] : m_.vertexFan(w.loc.element)) {
                if (ff == f) return before + ccw_angle(lc[(cc + 1) % 3] - lc[cc], dirLocal);
                before += corner_angle(ff, cc);
            }
            return -1;
        }
        }
        return -1;
    }

    // Follows the lattice segment from instance `start` along d; returns the weld reached or -1.
    int trace(int start, const Vec2i& d) {
        const Instance& s = instances_[start];
        int f = s.face;
        Vec2 a = s.h.cast<double>();
        Vec2 b = a + d.cast<double>();
        int entry = -1;
        for (int step = 0; step < 100000; ++step) {
            const auto& q = q_[f];
            const Eigen::Vector3d bb = barycentric(q[0], q[1], q[2], b);
            if (bb.minCoeff() >= -kInTol) {
                const Vec2i target(static_cast<int>(std::lround(b.x())), static_cast<int>(std::lround(b.y())));
                if ((b - target.cast<double>()).norm() > 1e-6) return -1;
                for (int id : faceInstances_[f])
                    if (instances_[id].h == target) return instances_[id].weld;
                return -1;
            }
            const Eigen::Vector3d ba = barycentric(q[0], q[1], q[2], a);
            double tBest = std::numeric_limits<double>::infinity();
            int cBest = -1;
            for (int c = 0; c < 3; ++c) {
                if (bb[c] >= -kInTol) continue;
                if (entry >= 0 && 3 * f + (c + 1) % 3 == entry) continue;
                const double t = std::max(0.0, ba[c]) / (std::max(0.0, ba[c]) - bb[c]);
                if (t < tBest) {
                    tBest = t;
                    cBest = c;
                }
            }
            if (cBest < 0) return -1;
            const Eigen::Vector3d bx = ba + tBest * (bb - ba);
            // Passing through a mesh vertex (a cone or a coincidence) aborts the trace.
            for (int c = 0; c < 3; ++c)
                if (c != cBest && std::abs(bx[c]) < 1e-9) return -1;
            const int he = 3 * f + (cBest + 1) % 3;
            const int tw = m_.twin(he);
            if (tw < 0) return -1;
            const int e = m_.edgeOfHalfedge(he);
            const Vec2 x = a + tBest * (b - a);
            a = P_.transfer(m_, e, f, x);
            b = P_.transfer(m_, e, f, b);
            f = tw / 3;
            entry = tw;
            if (!valid_[f]) return -1;
        }
        return -1;
    }

    void trace_all() {
        const auto dirs = lattice_directions(P_.N);
        for (int w = 0; w < static_cast<int>(welds_.size()); ++w) {
            Weld& W = welds_[w];
            std::map<int, double> seen;
            for (int id : W.instances) {
                const Instance& in = instances_[id];
                const auto& q = q_[in.face];
                for (const Vec2i& d : dirs) {
                    // The instance owns d if a small step along d stays in its face.
                    const Eigen::Vector3d db = barycentric(q[0], q[1], q[2], in.h.cast<double>() + d.cast<double>()) - in.bary;
                    bool owned = true;
                    for (int c = 0; c < 3; ++c)
                        if (in.bary[c] < kOnTol && db[c] < -1e-9 * db.cwiseAbs().maxCoeff()) owned = false;
                    if (!owned) continue;
                    const double a = alpha(W, in.face, toLocal_[in.face] * d.cast<double>());
                    if (a < 0) continue;
                    const int to = trace(id, d);
                    if (to < 0 || to == w) {
                        ++rep_.abortedTraces;
                        continue;
                    }
                    seen.emplace(to, a);
                }
            }
            for (const auto& [to, a] : seen) W.out.push_back({to, a});
        }
        // Keep only edges traced from both ends.
        for (int w = 0; w < static_cast<int>(welds_.size()); ++w) {
            auto& out = welds_[w].out;
            std::erase_if(out, [&](const Outgoing& o) {
                const auto& back = welds_[o.to].out;
                return std::none_of(back.begin(), back.end(), [&](const Outgoing& x) { return x.to == w; });
            });
            std::sort(out.begin(), out.end(), [](const Outgoing& x, const Outgoing& y) { return x.alpha < y.alpha; });
            rep_.tracedEdges += static_cast<int>(out.size());
            rep_.maxValence = std::max(rep_.maxValence, static_cast<int>(out.size()));
        }
        rep_.tracedEdges /= 2;
    }

    int index_of(int w, int to) const {
        const auto& out = welds_[w].out;
        for (size_t i = 0; i < out.size(); ++i)
            if (out[i].to == to) return static_cast<int>(i);
        return -1;
    }

    PolyMesh walk_faces() {
        const size_t maxDegree = P_.N == 6 ? 4 : 6;
        std::vector<std::vector<char>> used(welds_.size());
        for (size_t w = 0; w < welds_.size(); ++w) used[w].assign(welds_[w].out.size(), 0);
        std::vector<std::vector<int>> faces;
        for (int w0 = 0; w0 < static_cast<int>(welds_.size()); ++w0)
            for (size_t i0 = 0; i0 < welds_[w0].out.size(); ++i0) {
                if (used[w0][i0]) continue;
                std::vector<int> loop{w0};
                std::vector<std::pair<int, int>> darts{{w0, static_cast<int>(i0)}};
                int from = w0, cur = welds_[w0].out[i0].to;
                bool ok = true;
                while (true) {
                    const Weld& W = welds_[cur];
                    const int back = index_of(cur, from);
                    if (back < 0) {
                        ok = false;
                        break;
                    }
                    int next;
                    double wedge;
                    if (back > 0) {
                        next = back - 1;
                        wedge = W.out[back].alpha - W.out[next].alpha;
                    } else if (W.closed) {
                        next = static_cast<int>(W.out.size()) - 1;
                        wedge = W.out[back].alpha - W.out[next].alpha + W.total;
                    } else {
                        ok = false;
                        break;
                    }
                    if (wedge >= kPi - 1e-9 || next == back) ok = false;
                    if (cur == w0) {
                        // Closed only if the next dart is the starting one.
                        if (next != static_cast<int>(i0)) ok = false;
                        break;
                    }
                    loop.push_back(cur);
                    darts.emplace_back(cur, next);
                    if (loop.size() > maxDegree) {
                        ok = false;
                        break;
                    }
                    from = cur;
                    cur = W.out[next].to;
                }
                for (const auto& [w, i] : darts) used[w][i] = 1;
                std::vector<int> sorted = loop;
                std::sort(sorted.begin(), sorted.end());
                if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) ok = false;
                if (!ok || loop.size() < 3) {
                    ++rep_.rejectedWalks;
                    continue;
                }
                faces.push_back(loop);
            }
        PolyMesh out;
        std::vector<int> remap(welds_.size(), -1);
        for (auto& f : faces)
            for (int& v : f) {
                if (remap[v] < 0) {
                    remap[v] = out.vertexCount();
                    out.vertices.push_back(welds_[v].position);
                }
                v = remap[v];
            }
        out.faces = std::move(faces);
        return out;
    }

    static constexpr double kInTol = 1e-9;
    static constexpr double kOnTol = 1e-9;

    const TriangleSurface& m_;
    const SeamlessParam& P_;
    ExtractionReport& rep_;
    std::vector<std::array<Vec2, 3>> q_;
    std::vector<char> valid_;
    std::vector<Mat2> toLocal_;
    std::vector<Instance> instances_;
    std::vector<std::vector<int>> faceInstances_;
    std::vector<Weld> welds_;
};

}  // namespace

PolyMesh assemble_primal(const TriangleSurface& mesh, const SeamlessParam& param, ExtractionReport* report) {
    ExtractionReport local;
    ExtractionReport& rep = report ? *report : local;
    rep = {};
    PolyMesh primal = Extractor(mesh, param, rep).run();
    if (param.N == 6) primal = split_quads_delaunay(primal, &rep.quadsSplit);
    return primal;
}

PolyMesh split_quads_delaunay(const PolyMesh& mesh, int* split) {
    PolyMesh out;
    out.vertices = mesh.vertices;
    int count = 0;
    auto angle = [&](int prev, int at, int next) {
        const Vec3 a = mesh.vertices[prev] - mesh.vertices[at], b = mesh.vertices[next] - mesh.vertices[at];
        return std::atan2(a.cross(b).norm(), a.dot(b));
    };
    for (const auto& f : mesh.faces) {
        if (f.size() != 4) {
            out.faces.push_back(f);
            continue;
        }
        ++count;
        // a-c is Delaunay when the angles at b and d sum to at most pi.
        if (angle(f[0], f[1], f[2]) + angle(f[2], f[3], f[0]) <= kPi) {
            out.faces.push_back({f[0], f[1], f[2]});
            out.faces.push_back({f[0], f[2], f[3]});
        } else {
            out.faces.push_back({f[0], f[1], f[3]});
            out.faces.push_back({f[1], f[2], f[3]});
        }
    }
    if (split) *split = count;
    return out;
}

namespace {

PolyMesh compact(const std::vector<Vec3>& vertices, std::vector<std::vector<int>> faces) {
    PolyMesh out;
    std::vector<int> remap(vertices.size(), -1);
    for (auto& f : faces)
        for (int& v : f) {
            if (remap[v] < 0) {
                remap[v] = out.vertexCount();
                out.vertices.push_back(vertices[v]);
            }
            v = remap[v];
        }
    out.faces = std::move(faces);
    return out;
}

}  // namespace

PolyMesh remove_boundary_strip(const PolyMesh& mesh) {
    const auto boundary = mesh.boundaryVertices();
    std::vector<std::vector<int>> kept;
    for (const auto& f : mesh.faces)
        if (std::none_of(f.begin(), f.end(), [&](int v) { return boundary[v]; })) kept.push_back(f);
    return compact(mesh.vertices, std::move(kept));
}

std::vector<VertexRing> vertex_rings(const PolyMesh& mesh) {
    std::map<std::pair<int, int>, int> dart;  // directed edge -> face
    std::vector<VertexRing> rings(mesh.vertices.size());
    std::vector<std::vector<int>> incident(mesh.vertices.size());
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const auto& F = mesh.faces[f];
        for (size_t i = 0; i < F.size(); ++i) {
            incident[F[i]].push_back(f);
            if (!dart.emplace(std::make_pair(F[i], F[(i + 1) % F.size()]), f).second) rings[F[i]].valid = false;
        }
    }
    auto corner = [&](int f, int v, int offset) {
        const auto& F = mesh.faces[f];
        const int n = static_cast<int>(F.size());
        for (int i = 0; i < n; ++i)
            if (F[i] == v) return F[((i + offset) % n + n) % n];
        return -1;
    };
    for (int v = 0; v < mesh.vertexCount(); ++v) {
        auto& R = rings[v];
        if (incident[v].empty()) {
            R.valid = false;
            continue;
        }
        int start = incident[v][0];
        R.closed = true;
        for (int f : incident[v])
            if (!dart.count({corner(f, v, 1), v})) {
                start = f;
                R.closed = false;
                break;
            }
        int f = start;
        while (true) {
            R.faces.push_back(f);
            auto it = dart.find({v, corner(f, v, -1)});
            if (it == dart.end() || it->second == start) break;
            f = it->second;
            if (R.faces.size() > incident[v].size()) break;
        }
        if (R.faces.size() != incident[v].size()) R.valid = false;
    }
    return rings;
}

bool is_manifold(const PolyMesh& mesh) {
    std::map<std::pair<int, int>, int> undirected;
    for (const auto& F : mesh.faces) {
        std::vector<int> s = F;
        std::sort(s.begin(), s.end());
        if (F.size() < 3 || std::adjacent_find(s.begin(), s.end()) != s.end()) return false;
        for (size_t i = 0; i < F.size(); ++i) {
            const int a = F[i], b = F[(i + 1) % F.size()];
            if (++undirected[{std::min(a, b), std::max(a, b)}] > 2) return false;
        }
    }
    for (const auto& r : vertex_rings(mesh))
        if (!r.valid && !r.faces.empty()) return false;
    return true;
}

PolyMesh barycentric_dual(const PolyMesh& input, bool trimStrips, DualReport* report) {
    DualReport local;
    DualReport& rep = report ? *report : local;
    rep = {};
    const PolyMesh primal = trimStrips ? remove_boundary_strip(input) : input;
    rep.primalStripRemoved = input.faceCount() - primal.faceCount();
    std::vector<Vec3> centers;
    centers.reserve(primal.faces.size());
    for (const auto& F : primal.faces) {
        Vec3 c = Vec3::Zero();
        for (int v : F) c += primal.vertices[v];
        centers.push_back(c / static_cast<double>(F.size()));
    }
    std::vector<std::vector<int>> faces;
    const auto rings = vertex_rings(primal);
    for (const auto& r : rings) {
        if (r.faces.empty()) continue;
        if (!r.valid) {
            ++rep.inconsistentFans;
            continue;
        }
        if (!r.closed || r.faces.size() < 3) continue;
        faces.push_back(r.faces);
    }
    PolyMesh dual = compact(centers, std::move(faces));
    if (!trimStrips) return dual;
    const PolyMesh trimmed = remove_boundary_strip(dual);
    rep.dualStripRemoved = dual.faceCount() - trimmed.faceCount();
    return trimmed;
}

}  // namespace cpfmesh
