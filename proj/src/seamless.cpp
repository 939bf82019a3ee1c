#include "cpfmesh/seamless.hpp"

#include "cpfmesh/geometry.hpp"
#include "cpfmesh/nlls.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <queue>
#include <sstream>

namespace cpfmesh {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int mod(int a, int n) { return ((a % n) + n) % n; }

// Pullback of face f applied to the 3D vector w.
Vec2 pull(const TriangleSurface& mesh, const FieldPair& p, int f, const Vec3& w) {
    return pullback_map(p.U[f], p.V[f]) * mesh.basis(f).toLocal(w);
}

// Half-edge of fan entry `a` pointing into v; its twin belongs to the next fan face.
int incoming_halfedge(const std::pair<int, int>& entry) { return 3 * entry.first + (entry.second + 2) % 3; }

}  // namespace

Mat2 grid_matrix(int N) {
    Mat2 A = Mat2::Identity();
    if (N == 6) A << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    return A;
}

Mat2i lattice_rotation(int N, int k) {
    const Mat2 A = grid_matrix(N);
    const Mat2 M = A * rotation(kTwoPi * mod(k, N) / N) * A.inverse();
    Mat2i out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double r = std::round(M(i, j));
            if (std::abs(M(i, j) - r) > 1e-9) throw ParameterError("rotation is not a lattice symmetry");
            out(i, j) = static_cast<int>(r);
        }
    return out;
}

std::vector<Vec2i> lattice_directions(int N) {
    if (N == 6) return {{1, 0}, {1, 1}, {0, 1}, {-1, 0}, {-1, -1}, {0, -1}};
    return {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
}

bool Matching::allConsistent() const {
    return std::all_of(consistent.begin(), consistent.end(), [](char c) { return c != 0; });
}

double Matching::indexSum() const {
    double s = 0;
    for (double x : vertexIndex) s += x;
    return s;
}

int directed_matching(const TriangleSurface& mesh, const Matching& m, int edge, int from) {
    const int k = m.k[edge];
    return mesh.interiorEdges()[edge].fi == from ? k : mod(-k, m.N);
}

Matching compute_matching(const TriangleSurface& mesh, const FieldPair& p) {
    Matching m;
    m.N = p.N;
    const auto& edges = mesh.interiorEdges();
    m.k.assign(edges.size(), 0);
    for (size_t e = 0; e < edges.size(); ++e) {
        const Vec2 a = pull(mesh, p, edges[e].fi, edges[e].vector);
        const Vec2 b = pull(mesh, p, edges[e].fj, edges[e].vector);
        double best = INFINITY, second = INFINITY;
        for (int k = 0; k < p.N; ++k) {
            const double d = (rotation(kTwoPi * k / p.N) * a - b).norm();
            if (d < best) {
                second = best;
                best = d;
                m.k[e] = k;
            } else {
                second = std::min(second, d);
            }
        }
        if (p.N > 1 && second - best < 1e-9) m.degenerate.push_back(static_cast<int>(e));
    }

    const int nv = mesh.vertexCount();
    m.vertexIndex.assign(nv, 0.0);
    m.holonomy.assign(nv, -1);
    m.consistent.assign(nv, 1);
    for (int v = 0; v < nv; ++v) {
        const auto& fan = mesh.vertexFan(v);
        if (fan.empty() || mesh.isBoundaryVertex(v)) continue;
        double theta = 0;
        int K = 0;
        for (size_t a = 0; a < fan.size(); ++a) {
            const auto [f, c] = fan[a];
            const auto& t = mesh.face(f);
            const Vec3& x = mesh.vertex(t[c]);
            const Vec2 e1 = pull(mesh, p, f, mesh.vertex(t[(c + 1) % 3]) - x);
            const Vec2 e2 = pull(mesh, p, f, mesh.vertex(t[(c + 2) % 3]) - x);
            theta += std::abs(signed_angle(e1, e2));
            // Gap between this face's copy of the shared edge and the next face's, after matching.
            const int h = incoming_halfedge(fan[a]);
            const int edge = mesh.edgeOfHalfedge(h);
            const int k = directed_matching(mesh, m, edge, f);
            const int next = fan[(a + 1) % fan.size()].first;
            const Vec3 w = mesh.halfedgeVector(h);
            theta += signed_angle(rotation(kTwoPi * k / p.N) * pull(mesh, p, f, w), pull(mesh, p, next, w));
            K += k;
        }
        K = mod(K, p.N);
        const double exact = p.N * (kTwoPi - theta) / kTwoPi;
        const int steps = static_cast<int>(std::lround(exact));
        m.vertexIndex[v] = static_cast<double>(steps) / p.N;
        m.holonomy[v] = K;
        m.consistent[v] = mod(steps - K, p.N) == 0 && std::abs(exact - steps) < 1e-6;
        if (steps != 0) m.singular.push_back(v);
    }
    return m;
}

TheoremReport verify_theorem(const TriangleSurface& mesh, const FieldPair& p, const Matching& matching,
                             double lambda, double tolerance) {
    TheoremReport rep;
    rep.minOrientation = INFINITY;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const Mat2 P = pullback_map(p.U[f], p.V[f]);
        Mat2 UV;
        UV << p.U[f], p.V[f];
        rep.maxGradientError = std::max(rep.maxGradientError, (P * UV - Mat2::Identity()).norm());
        const auto q = local_corners(mesh, f);
        const double area = 0.5 * cross2(P * q[1], P * q[2]);
        rep.minOrientation = std::min(rep.minOrientation, area / mesh.faceArea(f));
        if (!(area > 0)) ++rep.negativeFaces;
    }
    const auto& edges = mesh.interiorEdges();
    for (size_t e = 0; e < edges.size(); ++e) {
        const Vec2 a = pull(mesh, p, edges[e].fi, edges[e].vector) / lambda;
        const Vec2 b = pull(mesh, p, edges[e].fj, edges[e].vector) / lambda;
        const double residual = std::abs(std::pow(to_complex(a), p.N) - std::pow(to_complex(b), p.N));
        const double mismatch = (rotation(kTwoPi * matching.k[e] / p.N) * a - b).norm();
        rep.maxMismatch = std::max(rep.maxMismatch, mismatch);
        if (residual < tolerance) {
            ++rep.checkedEdges;
            rep.maxMismatchChecked = std::max(rep.maxMismatchChecked, mismatch);
        }
    }
    return rep;
}

std::vector<std::array<Vec2, 3>> fields_to_grid_gradients(const FieldPair& p) {
    const Mat2 A = grid_matrix(p.N);
    std::vector<std::array<Vec2, 3>> out(p.U.size());
    for (size_t f = 0; f < out.size(); ++f) {
        const Mat2 G = A * pullback_map(p.U[f], p.V[f]);
        const Vec2 g1 = G.row(0).transpose(), g2 = G.row(1).transpose();
        out[f] = {g1, g2, g2 - g1};
    }
    return out;
}

Eigen::Vector3d SeamlessParam::triple(int f, int c) const {
    const Vec2 h = value(f, c);
    return {h.x(), h.y(), h.y() - h.x()};
}

Mat2i SeamlessParam::transferRotation(const TriangleSurface& mesh, int edge, int from) const {
    const int k = edgeRotation[edge];
    return lattice_rotation(N, mesh.interiorEdges()[edge].fi == from ? k : -k);
}

Vec2 SeamlessParam::transfer(const TriangleSurface& mesh, int edge, int from, const Vec2& h) const {
    const Mat2i M = lattice_rotation(N, edgeRotation[edge]);
    const Vec2 t = edgeTranslation[edge].cast<double>();
    if (mesh.interiorEdges()[edge].fi == from) return M.cast<double>() * h + t;
    return M.cast<double>().inverse() * (h - t);
}

double SeamlessParam::parametricArea(int f) const {
    const Mat2 Ainv = grid_matrix(N).inverse();
    const Vec2 p0 = Ainv * value(f, 0), p1 = Ainv * value(f, 1), p2 = Ainv * value(f, 2);
    return 0.5 * cross2(p1 - p0, p2 - p0);
}

namespace {

struct CutGraph {
    std::vector<int> faceRotation;
    std::vector<char> cut;  // per interior edge
};

CutGraph build_cut(const TriangleSurface& mesh, const Matching& m) {
    const int nf = mesh.faceCount(), N = m.N;
    const auto& edges = mesh.interiorEdges();
    CutGraph g;
    g.faceRotation.assign(nf, 0);
    g.cut.assign(edges.size(), 1);

    // Shortest-path dual tree from every component's first face.
    std::vector<double> dist(nf, INFINITY);
    std::vector<char> done(nf, 0);
    using Item = std::pair<double, int>;
    for (int root = 0; root < nf; ++root) {
        if (done[root]) continue;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[root] = 0;
        std::vector<int> parentEdge(nf, -1);
        pq.push({0.0, root});
        while (!pq.empty()) {
            const auto [d, f] = pq.top();
            pq.pop();
            if (done[f]) continue;
            done[f] = 1;
            if (f != root) {
                const int e = parentEdge[f];
                const int from = edges[e].fi == f ? edges[e].fj : edges[e].fi;
                g.cut[e] = 0;
                // Comb so the rotation across the tree edge vanishes.
                g.faceRotation[f] = mod(g.faceRotation[from] - directed_matching(mesh, m, e, from), N);
            }
            for (int c = 0; c < 3; ++c) {
                const int e = mesh.edgeOfHalfedge(3 * f + c);
                if (e < 0) continue;
                const int o = edges[e].fi == f ? edges[e].fj : edges[e].fi;
                if (done[o]) continue;
                const double nd = d + (mesh.faceCentroid(o) - mesh.faceCentroid(f)).norm();
                if (nd < dist[o]) {
                    dist[o] = nd;
                    parentEdge[o] = e;
                    pq.push({nd, o});
                }
            }
        }
    }

    // Prune dangling branches; boundary vertices and singularities are never leaves.
    const int nv = mesh.vertexCount();
    std::vector<char> keep(nv, 0);
    for (int v = 0; v < nv; ++v) keep[v] = mesh.isBoundaryVertex(v) || m.vertexIndex[v] != 0.0;
    std::vector<std::vector<int>> incident(nv);
    std::vector<int> degree(nv, 0);
    for (size_t e = 0; e < edges.size(); ++e)
        if (g.cut[e]) {
            incident[edges[e].v0].push_back(static_cast<int>(e));
            incident[edges[e].v1].push_back(static_cast<int>(e));
            ++degree[edges[e].v0];
            ++degree[edges[e].v1];
        }
    std::vector<int> leaves;
    for (int v = 0; v < nv; ++v)
        if (!keep[v] && degree[v] == 1) leaves.push_back(v);
    while (!leaves.empty()) {
        const int v = leaves.back();
        leaves.pop_back();
        if (degree[v] != 1) continue;
        for (int e : incident[v]) {
            if (!g.cut[e]) continue;
            g.cut[e] = 0;
            const int o = edges[e].v0 == v ? edges[e].v1 : edges[e].v0;
            --degree[v];
            --degree[o];
            if (!keep[o] && degree[o] == 1) leaves.push_back(o);
        }
    }
    return g;
}

}  // namespace

SeamlessParam cut_and_integrate(const TriangleSurface& mesh, const FieldPair& fields, const Matching& matching,
                                const IntegrationOptions& opt) {
    const int nf = mesh.faceCount(), nv = mesh.vertexCount(), N = fields.N;
    const auto& edges = mesh.interiorEdges();
    const int ne = static_cast<int>(edges.size());
    if (nf == 0) throw MeshError("empty mesh");

    SeamlessParam P;
    P.N = N;
    const CutGraph cut = build_cut(mesh, matching);
    P.faceRotation = cut.faceRotation;
    P.cutEdge = cut.cut;
    P.edgeRotation.assign(ne, 0);
    P.edgeTranslation.assign(ne, Vec2i::Zero());
    P.rawTranslation.assign(ne, Vec2::Zero());
    for (int e = 0; e < ne; ++e)
        P.edgeRotation[e] =
            mod(matching.k[e] + P.faceRotation[edges[e].fj] - P.faceRotation[edges[e].fi], N);
    for (int e = 0; e < ne; ++e)
        if (!P.cutEdge[e] && P.edgeRotation[e] != 0) ++P.unmatchedEdges;

    // Cut-mesh vertices: split each vertex fan at cut edges.
    P.cornerCopy.assign(nf, {-1, -1, -1});
    for (int v = 0; v < nv; ++v) {
        const auto& fan = mesh.vertexFan(v);
        if (fan.empty()) continue;
        const size_t n = fan.size();
        // For a closed fan, start right after a cut edge so wedges are contiguous.
        size_t start = 0;
        if (!mesh.isBoundaryVertex(v))
            for (size_t a = 0; a < n; ++a) {
                const int e = mesh.edgeOfHalfedge(incoming_halfedge(fan[(a + n - 1) % n]));
                if (P.cutEdge[e]) {
                    start = a;
                    break;
                }
            }
        int copy = static_cast<int>(P.copyVertex.size());
        P.copyVertex.push_back(v);
        for (size_t i = 0; i < n; ++i) {
            const size_t a = (start + i) % n;
            if (i > 0) {
                const int e = mesh.edgeOfHalfedge(incoming_halfedge(fan[(a + n - 1) % n]));
                if (e >= 0 && P.cutEdge[e]) {
                    copy = static_cast<int>(P.copyVertex.size());
                    P.copyVertex.push_back(v);
                }
            }
            P.cornerCopy[fan[a].first][fan[a].second] = copy;
        }
    }
    const int nc = static_cast<int>(P.copyVertex.size());

    // Least-squares rows: sqrt(area) * (grad h_k - target_k) per face and component.
    const Mat2 A = grid_matrix(N);
    std::vector<Eigen::Triplet<double>> Bt;
    std::vector<double> bvals;
    int row = 0;
    double totalArea = 0;
    for (int f = 0; f < nf; ++f) {
        const auto q = local_corners(mesh, f);
        const auto grad = barycentric_gradients(q[0], q[1], q[2]);
        const Mat2 G = A * rotation(kTwoPi * P.faceRotation[f] / N) * pullback_map(fields.U[f], fields.V[f]);
        const double w = std::sqrt(mesh.faceArea(f));
        totalArea += mesh.faceArea(f);
        for (int k = 0; k < 2; ++k)
            for (int d = 0; d < 2; ++d) {
                for (int c = 0; c < 3; ++c) Bt.emplace_back(row, 2 * P.cornerCopy[f][c] + k, w * grad[c][d]);
                bvals.push_back(w * G(k, d));
                ++row;
            }
    }

    std::vector<int> cutList;
    for (int e = 0; e < ne; ++e)
        if (P.cutEdge[e]) cutList.push_back(e);
    const int nt = 2 * static_cast<int>(cutList.size());
    const int nx = 2 * nc + nt;

    Eigen::SparseMatrix<double> B(row, nx);
    B.setFromTriplets(Bt.begin(), Bt.end());
    Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(bvals.data(), row);
    Eigen::SparseMatrix<double> Q = B.transpose() * B;
    Eigen::VectorXd rhs = B.transpose() * b;
    // Weak anchor fixes the global translation without competing with the seam relations.
    const double anchorWeight = 1e-8 * totalArea / nf;
    int anchor = P.cornerCopy[0][0];
    for (int k = 0; k < 2; ++k) {
        Q.coeffRef(2 * anchor + k, 2 * anchor + k) += anchorWeight;
        rhs[2 * anchor + k] += anchorWeight * opt.anchorOffset[k];
    }
    for (int i = 2 * nc; i < nx; ++i) Q.coeffRef(i, i) += 1e-14;

    // Seam relations h_j - M h_i - t = 0 at both endpoints of each cut edge.
    struct SeamRow {
        int ci, cj, edge, slot;
    };
    std::vector<SeamRow> seamRows;
    for (size_t s = 0; s < cutList.size(); ++s) {
        const int e = cutList[s];
        const InteriorEdge& E = edges[e];
        for (int v : {E.v0, E.v1}) {
            int ci = -1, cj = -1;
            for (int c = 0; c < 3; ++c) {
                if (mesh.face(E.fi)[c] == v) ci = P.cornerCopy[E.fi][c];
                if (mesh.face(E.fj)[c] == v) cj = P.cornerCopy[E.fj][c];
            }
            seamRows.push_back({ci, cj, e, static_cast<int>(s)});
        }
    }

    std::vector<char> fixed(nt, 0);
    std::vector<double> fixedValue(nt, 0.0);
    Eigen::VectorXd x;
    auto solve = [&]() {
        std::vector<Eigen::Triplet<double>> K;
        for (int c = 0; c < Q.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(Q, c); it; ++it)
                K.emplace_back(it.row(), it.col(), it.value());
        int r = nx;
        std::vector<double> d;
        for (const SeamRow& s : seamRows) {
            const Mat2i M = lattice_rotation(N, P.edgeRotation[s.edge]);
            for (int k = 0; k < 2; ++k) {
                std::vector<std::pair<int, double>> entries = {{2 * s.cj + k, 1.0}, {2 * nc + 2 * s.slot + k, -1.0}};
                for (int l = 0; l < 2; ++l)
                    if (M(k, l) != 0) entries.push_back({2 * s.ci + l, -static_cast<double>(M(k, l))});
                for (auto [col, val] : entries) {
                    K.emplace_back(r, col, val);
                    K.emplace_back(col, r, val);
                }
                d.push_back(0.0);
                ++r;
            }
        }
        for (int i = 0; i < nt; ++i)
            if (fixed[i]) {
                K.emplace_back(r, 2 * nc + i, 1.0);
                K.emplace_back(2 * nc + i, r, 1.0);
                d.push_back(fixedValue[i]);
                ++r;
            }
        // Tiny negative diagonal keeps consistent redundant relations solvable.
        for (int i = nx; i < r; ++i) K.emplace_back(i, i, -1e-12);
        Eigen::SparseMatrix<double> KKT(r, r);
        KKT.setFromTriplets(K.begin(), K.end());
        Eigen::VectorXd full(r);
        full.head(nx) = rhs;
        for (int i = nx; i < r; ++i) full[i] = d[i - nx];
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(KKT);
        if (lu.info() != Eigen::Success) throw NumericalError("integration: factorization failed");
        x = lu.solve(full).head(nx);
        if (!x.allFinite()) throw NumericalError("integration: non-finite solution");
    };

    solve();
    for (size_t s = 0; s < cutList.size(); ++s)
        P.rawTranslation[cutList[s]] = x.segment<2>(2 * nc + 2 * s);
    for (int i = 0; i < nt; ++i) {
        const double t = x[2 * nc + i];
        P.maxRoundingDistance = std::max(P.maxRoundingDistance, std::abs(t - std::round(t)));
    }

    if (opt.roundTranslations) {
        // Fix one jump at a time (nearest to an integer first); jumps tied to it by the seam
        // relations become integral in the next solve and are fixed together.
        for (;;) {
            int pick = -1;
            double best = INFINITY;
            bool any = false;
            for (int i = 0; i < nt; ++i) {
                if (fixed[i]) continue;
                const double t = x[2 * nc + i], dist = std::abs(t - std::round(t));
                if (dist < 1e-6) {
                    fixed[i] = 1;
                    fixedValue[i] = std::round(t);
                    any = true;
                } else if (dist < best) {
                    best = dist;
                    pick = i;
                }
            }
            if (pick < 0 && !any) break;
            if (pick >= 0 && !any) {
                fixed[pick] = 1;
                fixedValue[pick] = std::round(x[2 * nc + pick]);
            }
            solve();
            if (std::all_of(fixed.begin(), fixed.end(), [](char c) { return c != 0; })) break;
        }
    }

    P.copyValue.resize(nc);
    for (int c = 0; c < nc; ++c) P.copyValue[c] = x.segment<2>(2 * c);
    for (size_t s = 0; s < cutList.size(); ++s) {
        const Vec2 t = x.segment<2>(2 * nc + 2 * s);
        P.edgeTranslation[cutList[s]] = Vec2i(static_cast<int>(std::lround(t.x())), static_cast<int>(std::lround(t.y())));
    }
    for (const SeamRow& s : seamRows) {
        const Mat2 M = lattice_rotation(N, P.edgeRotation[s.edge]).cast<double>();
        const Vec2 t = opt.roundTranslations ? Vec2(P.edgeTranslation[s.edge].cast<double>())
                                             : Vec2(x.segment<2>(2 * nc + 2 * s.slot));
        P.maxSeamError = std::max(P.maxSeamError, (P.copyValue[s.cj] - M * P.copyValue[s.ci] - t).norm());
    }
    const Eigen::VectorXd misfit = B * x - b;
    P.poissonResidual = std::sqrt(misfit.squaredNorm() / totalArea);
    return P;
}

std::string IntegrationCheck::summary() const {
    std::ostringstream s;
    s << "flipped=" << flippedFaces << " indicesConsistent=" << (indicesConsistent ? "yes" : "no")
      << " unmatchedEdges=" << unmatchedEdges << " seamError=" << maxSeamError;
    return s.str();
}

IntegrationCheck check_integration(const Matching& matching, const SeamlessParam& param) {
    IntegrationCheck c;
    for (size_t f = 0; f < param.cornerCopy.size(); ++f)
        if (!(param.parametricArea(static_cast<int>(f)) > 0)) ++c.flippedFaces;
    c.unmatchedEdges = param.unmatchedEdges;
    c.indicesConsistent = matching.allConsistent() && matching.degenerate.empty();
    c.maxSeamError = param.maxSeamError;
    return c;
}

void write_cut_obj(const std::string& path, const TriangleSurface& mesh, const SeamlessParam& param) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[128];
    for (int v : param.copyVertex) {
        const Vec3& p = mesh.vertex(v);
        std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
        out << buf;
    }
    for (const Vec2& h : param.copyValue) {
        std::snprintf(buf, sizeof buf, "vt %.9g %.9g\n", h.x(), h.y());
        out << buf;
    }
    for (const auto& f : param.cornerCopy)
        out << "f " << f[0] + 1 << '/' << f[0] + 1 << ' ' << f[1] + 1 << '/' << f[1] + 1 << ' ' << f[2] + 1 << '/'
            << f[2] + 1 << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cpfmesh
