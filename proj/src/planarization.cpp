#include "cpfmesh/planarization.hpp"

#include "cpfmesh/cpf_terms.hpp"
#include "cpfmesh/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace cpfmesh {

Vec3 polygon_normal(const PolyMesh& mesh, int face) {
    const auto& f = mesh.faces[face];
    Vec3 n = Vec3::Zero();
    for (size_t i = 0; i < f.size(); ++i) n += mesh.vertices[f[i]].cross(mesh.vertices[f[(i + 1) % f.size()]]);
    const double l = n.norm();
    return l > 0 ? Vec3(n / l) : Vec3::UnitZ();
}

PlanarizationState start_round(const PolyMesh& mesh, const std::vector<Vec3>& faceNormals, const TriangleTree& reference,
                               const PlanarizationWeights& weights, double unit) {
    PlanarizationState s;
    s.vertices = mesh.vertices;
    s.prevVertices = mesh.vertices;
    s.weights = weights;
    s.unit = unit;
    *s.lengthWeight = weights.length;
    const int nv = mesh.vertexCount(), nf = mesh.faceCount();
    s.faceNormals.resize(nf);
    for (int f = 0; f < nf; ++f) {
        const Vec3 n = f < static_cast<int>(faceNormals.size()) ? faceNormals[f] : Vec3::Zero();
        s.faceNormals[f] = n.norm() > 0 ? Vec3(n.normalized()) : polygon_normal(mesh, f);
    }
    s.projected.resize(nv);
    for (int v = 0; v < nv; ++v) s.projected[v] = reference.closest(mesh.vertices[v]).point;
    s.driftNormals.assign(nv, Vec3::Zero());
    s.centers.resize(nf);
    std::set<std::pair<int, int>> edges;
    for (int f = 0; f < nf; ++f) {
        const auto& F = mesh.faces[f];
        const Vec3 n = polygon_normal(mesh, f);
        Vec3 c = Vec3::Zero();
        for (int v : F) {
            s.driftNormals[v] += n;
            c += mesh.vertices[v];
        }
        s.centers[f] = c / static_cast<double>(F.size());
        const size_t d = F.size();
        for (size_t i = 0; i < d; ++i) {
            const int a = F[i], b = F[(i + 1) % d];
            edges.insert({std::min(a, b), std::max(a, b)});
            if (d >= 4) s.diagonals.emplace_back(F[i], F[(i + d / 2) % d]);
        }
    }
    for (Vec3& n : s.driftNormals)
        if (n.norm() > 0) n.normalize();
    s.edges.assign(edges.begin(), edges.end());
    for (const auto& [a, b] : s.edges) s.edgeStart.push_back((mesh.vertices[b] - mesh.vertices[a]).norm() / unit);
    for (const auto& [a, b] : s.diagonals) s.diagonalStart.push_back((mesh.vertices[b] - mesh.vertices[a]).norm() / unit);
    return s;
}

namespace {

void add_length_barrier(ResidualSystem& sys, int a, int b, double startLength, double unit, double fraction,
                        std::shared_ptr<double> weight, const char* tag) {
    const double sbar = fraction * startLength;
    sys.addBlock({3 * a, 3 * a + 1, 3 * a + 2, 3 * b, 3 * b + 1, 3 * b + 2}, 1,
                 [sbar, unit, weight](const double* x, double* r, double* jac) {
                     const Vec3 e = Vec3(x[3], x[4], x[5]) - Vec3(x[0], x[1], x[2]);
                     const double len = e.norm();
                     double d = 0;
                     const double w = std::sqrt(*weight);
                     r[0] = w * lico_barrier(len / unit, sbar, jac ? &d : nullptr);
                     if (jac) {
                         const Vec3 g = len > 0 ? Vec3(w * d / unit * e / len) : Vec3::Zero();
                         for (int k = 0; k < 3; ++k) {
                             jac[k] = -g[k];
                             jac[3 + k] = g[k];
                         }
                     }
                 },
                 tag);
}

}  // namespace

ResidualSystem planarization_system(const PolyMesh& mesh, const PlanarizationState& s, bool quadFairness,
                                    double barrierFraction) {
    const int nv = mesh.vertexCount(), nf = mesh.faceCount();
    ResidualSystem sys(3 * nv + 3 * nf);
    const double inv = 1.0 / s.unit;
    const PlanarizationWeights& W = s.weights;

    // Planarity: each edge orthogonal to the face's homogeneous normal.
    const double wp = std::sqrt(W.planarity) * inv;
    for (int f = 0; f < nf; ++f) {
        const auto& F = mesh.faces[f];
        if (F.size() < 4) continue;
        const int nb = 3 * nv + 3 * f;
        for (size_t i = 0; i < F.size(); ++i) {
            const int a = F[i], b = F[(i + 1) % F.size()];
            sys.addBlock({nb, nb + 1, nb + 2, 3 * a, 3 * a + 1, 3 * a + 2, 3 * b, 3 * b + 1, 3 * b + 2}, 1,
                         [wp](const double* x, double* r, double* jac) {
                             const Vec3 n(x[0], x[1], x[2]);
                             const Vec3 e = Vec3(x[6], x[7], x[8]) - Vec3(x[3], x[4], x[5]);
                             const double ln = n.norm();
                             const double ne = n.dot(e);
                             r[0] = wp * ne / ln;
                             if (jac) {
                                 const Vec3 dn = wp * (e / ln - ne * n / (ln * ln * ln));
                                 const Vec3 dv = wp * n / ln;
                                 for (int k = 0; k < 3; ++k) {
                                     jac[k] = dn[k];
                                     jac[3 + k] = -dv[k];
                                     jac[6 + k] = dv[k];
                                 }
                             }
                         },
                         "planarity");
        }
    }

    const double wd = std::sqrt(W.distance) * inv, wc = std::sqrt(W.drift) * inv;
    for (int v = 0; v < nv; ++v) {
        const Vec3 target = s.projected[v];
        sys.addBlock({3 * v, 3 * v + 1, 3 * v + 2}, 3,
                     [wd, target](const double* x, double* r, double* jac) {
                         for (int k = 0; k < 3; ++k) r[k] = wd * (x[k] - target[k]);
                         if (jac) {
                             std::fill(jac, jac + 9, 0.0);
                             jac[0] = jac[4] = jac[8] = wd;
                         }
                     },
                     "distance");
        const Vec3 n = s.driftNormals[v], prev = s.prevVertices[v];
        sys.addBlock({3 * v, 3 * v + 1, 3 * v + 2}, 1,
                     [wc, n, prev](const double* x, double* r, double* jac) {
                         r[0] = wc * n.dot(Vec3(x[0], x[1], x[2]) - prev);
                         if (jac)
                             for (int k = 0; k < 3; ++k) jac[k] = wc * n[k];
                     },
                     "drift");
    }

    // Symmetry about the round-start barycenter for even-degree faces.
    const double ws = std::sqrt(W.symmetry) * inv;
    for (int f = 0; f < nf; ++f) {
        const auto& F = mesh.faces[f];
        const size_t d = F.size();
        if (d % 2 || d < 4) continue;
        const Vec3 c = s.centers[f];
        for (size_t i = 0; i < d; ++i) {
            const int a = F[i], b = F[(i + d / 2) % d];
            sys.addBlock({3 * a, 3 * a + 1, 3 * a + 2, 3 * b, 3 * b + 1, 3 * b + 2}, 3,
                         [ws, c](const double* x, double* r, double* jac) {
                             for (int k = 0; k < 3; ++k) r[k] = ws * (2 * c[k] - x[k] - x[3 + k]);
                             if (jac) {
                                 std::fill(jac, jac + 18, 0.0);
                                 for (int k = 0; k < 3; ++k) jac[6 * k + k] = jac[6 * k + 3 + k] = -ws;
                             }
                         },
                         "symmetry");
        }
    }

    for (size_t e = 0; e < s.edges.size(); ++e)
        add_length_barrier(sys, s.edges[e].first, s.edges[e].second, s.edgeStart[e], s.unit, barrierFraction,
                           s.lengthWeight, "length");
    for (size_t e = 0; e < s.diagonals.size(); ++e)
        add_length_barrier(sys, s.diagonals[e].first, s.diagonals[e].second, s.diagonalStart[e], s.unit,
                           barrierFraction, s.lengthWeight, "length");

    if (quadFairness) {
        std::vector<std::set<int>> ring(nv);
        for (const auto& F : mesh.faces)
            for (size_t i = 0; i < F.size(); ++i) {
                ring[F[i]].insert(F[(i + 1) % F.size()]);
                ring[F[(i + 1) % F.size()]].insert(F[i]);
            }
        const double wf = std::sqrt(W.fairness) * inv;
        for (int v = 0; v < nv; ++v) {
            if (ring[v].empty()) continue;
            std::vector<int> vars{3 * v, 3 * v + 1, 3 * v + 2};
            for (int u : ring[v])
                for (int k = 0; k < 3; ++k) vars.push_back(3 * u + k);
            const int m = static_cast<int>(ring[v].size());
            const int cols = 3 * (m + 1);
            sys.addBlock(vars, 3,
                         [wf, m, cols](const double* x, double* r, double* jac) {
                             for (int k = 0; k < 3; ++k) {
                                 double mean = 0;
                                 for (int j = 1; j <= m; ++j) mean += x[3 * j + k];
                                 r[k] = wf * (x[k] - mean / m);
                             }
                             if (jac) {
                                 std::fill(jac, jac + 3 * cols, 0.0);
                                 for (int k = 0; k < 3; ++k) {
                                     jac[k * cols + k] = wf;
                                     for (int j = 1; j <= m; ++j) jac[k * cols + 3 * j + k] = -wf / m;
                                 }
                             }
                         },
                         "fairness");
        }
    }
    return sys;
}

std::string PlanarizationResult::csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "round,maxPlanarity,avgPlanarity,hausdorff\n";
    for (const auto& r : rounds) out << r.round << ',' << r.maxPlanarity << ',' << r.avgPlanarity << ',' << r.hausdorff << '\n';
    return out.str();
}

PlanarizationResult planarize(const PolyMesh& input, const TriangleSurface& reference, const PlanarizationOptions& opt) {
    const TriangleTree tree(reference);
    PlanarizationResult result;
    PolyMesh mesh = input;
    std::vector<Vec3> normals;
    for (int f = 0; f < mesh.faceCount(); ++f) normals.push_back(polygon_normal(mesh, f));
    const double unit = std::max(input.averageEdgeLength(), 1e-300);
    PlanarizationWeights weights = opt.weights;
    double bestMax = std::numeric_limits<double>::infinity();
    int lastIterations = 0;
    for (int round = 0;; ++round) {
        const auto errs = planarity_errors(mesh);
        double mx = 0, avg = 0;
        for (double e : errs) {
            mx = std::max(mx, e);
            avg += e;
        }
        if (!errs.empty()) avg /= static_cast<double>(errs.size());
        const double hd = opt.trackHausdorff ? hausdorff_one_sided(mesh, tree, {2.0, 0}) : 0.0;
        result.rounds.push_back({round, mx, avg, hd, lastIterations, weights.planarity, weights.length});
        if (mx < bestMax) {
            bestMax = mx;
            result.mesh = mesh;
            result.faceNormals = normals;
        }
        if (mx < opt.targetMaxPlanarity) {
            result.reachedTarget = true;
            break;
        }
        if (round >= opt.maxRounds) break;

        PlanarizationState s = start_round(mesh, normals, tree, weights, unit);
        const ResidualSystem sys = planarization_system(mesh, s, opt.quadFairness, opt.barrierFraction);
        Eigen::VectorXd x(sys.variableCount());
        for (int v = 0; v < mesh.vertexCount(); ++v) x.segment<3>(3 * v) = mesh.vertices[v];
        for (int f = 0; f < mesh.faceCount(); ++f) x.segment<3>(3 * mesh.vertexCount() + 3 * f) = s.faceNormals[f];
        SolverOptions so;
        so.maxIterations = opt.innerIterations;
        so.functionTolerance = 1e-10;
        if (opt.lengthScheduleInner) {
            auto counter = std::make_shared<int>(0);
            auto lw = s.lengthWeight;
            const int every = opt.lengthEvery;
            const double growth = opt.lengthGrowth;
            so.onAccept = [counter, lw, every, growth](const Eigen::VectorXd&) {
                if (++*counter % every == 0) *lw *= growth;
                return true;
            };
        }
        const SolverReport rep = solve_lm(sys, x, so);
        lastIterations = rep.iterations;
        for (int v = 0; v < mesh.vertexCount(); ++v) mesh.vertices[v] = x.segment<3>(3 * v);
        for (int f = 0; f < mesh.faceCount(); ++f) {
            const Vec3 n = x.segment<3>(3 * mesh.vertexCount() + 3 * f);
            normals[f] = n.norm() > 0 ? Vec3(n.normalized()) : polygon_normal(mesh, f);
        }
        for (size_t e = 0; e < s.edges.size(); ++e)
            if (s.edgeStart[e] > 0)
                result.minLengthRatio = std::min(result.minLengthRatio,
                    (mesh.vertices[s.edges[e].second] - mesh.vertices[s.edges[e].first]).norm() / unit / s.edgeStart[e]);
        for (size_t e = 0; e < s.diagonals.size(); ++e)
            if (s.diagonalStart[e] > 0)
                result.minLengthRatio = std::min(result.minLengthRatio,
                    (mesh.vertices[s.diagonals[e].second] - mesh.vertices[s.diagonals[e].first]).norm() / unit / s.diagonalStart[e]);
        weights.planarity *= opt.planarityGrowth;
        weights.length = opt.lengthScheduleInner ? *s.lengthWeight : weights.length * opt.lengthGrowth;
    }
    result.maxPlanarity = bestMax;
    return result;
}

}  // namespace cpfmesh
