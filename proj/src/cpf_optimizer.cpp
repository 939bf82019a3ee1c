#include "cpfmesh/cpf_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace cpfmesh {

namespace {

Mat2 metric_of(const ConstraintSet& c, int f) { return c.metric.empty() ? Mat2::Identity() : c.metric[f]; }

// Edge vectors in both face bases, divided by the balance length.
struct EdgeData {
    std::vector<Vec2> ei, ej;
};

EdgeData edge_data(const TriangleSurface& mesh, double lambda) {
    EdgeData d;
    for (const InteriorEdge& e : mesh.interiorEdges()) {
        d.ei.push_back(mesh.basis(e.fi).toLocal(e.vector) / lambda);
        d.ej.push_back(mesh.basis(e.fj).toLocal(e.vector) / lambda);
    }
    return d;
}

// Typical s of a unit metric-orthonormal frame, 1/sqrt(det g).
double s_reference(const Mat2& g) { return 1.0 / std::sqrt(g.determinant()); }

template <int R, int C>
void copy_row_major(const Eigen::Matrix<double, R, C>& m, double* out) {
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) out[i * C + j] = m(i, j);
}

}  // namespace

double balance_length(const TriangleSurface& mesh, const ConstraintSet& c) {
    double sum = 0;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const Mat2 g = metric_of(c, f);
        for (int k = 0; k < 3; ++k) {
            const Vec2 e = mesh.basis(f).toLocal(mesh.halfedgeVector(3 * f + k));
            sum += std::sqrt(e.dot(g * e));
        }
    }
    return sum / (3.0 * mesh.faceCount());
}

ConstraintSet build_constraints(const TriangleSurface& mesh, const CurvatureField& curv, const RoSyField& guiding,
                                const std::vector<Mat2>& metric, FieldMode mode) {
    ConstraintSet c;
    c.N = mode == FieldMode::Hexagonal ? 6 : 4;
    c.metric = metric;
    c.sizing = true;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const Region r = curv.region[f];
        const double rho = curv.rho[f];
        const Vec2 d = guiding.direction(f);
        if (mode == FieldMode::Hexagonal) {
            const double s = rho * rho * rho - 3 * rho * rho + 3 * rho;
            if (r == Region::Elliptic) c.alignment.push_back({f, d, 6, s * s});
            if (r == Region::Parabolic || r == Region::Hyperbolic) c.alignment.push_back({f, d, 2, s * s});
        } else if (r == Region::Elliptic || r == Region::Parabolic || r == Region::Hyperbolic) {
            c.alignment.push_back({f, d, 4, rho * rho});
        }
        const double detRoot = std::sqrt(metric[f].determinant());
        if (r != Region::Boundary && curv.rhoScale > 0)
            c.orthogonality.push_back({f, curv.shapeOperator[f] * detRoot / curv.rhoScale, "conjugacy"});
        c.orthogonality.push_back({f, Mat2::Identity() * detRoot, "orthogonality"});
    }
    return c;
}

FieldPair initialize_fields(const TriangleSurface& mesh, const RoSyField& guiding, const std::vector<Mat2>& metric,
                            int N) {
    FieldPair p;
    p.N = N;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const Mat2 g = metric.empty() ? Mat2::Identity() : metric[f];
        Vec2 u = std::abs(guiding.values[f]) > 1e-12 ? guiding.direction(f) : Vec2::UnitX();
        Vec2 v = rot90(u);
        p.U.push_back(u / std::sqrt(u.dot(g * u)));
        p.V.push_back(v / std::sqrt(v.dot(g * v)));
    }
    return p;
}

FieldPair random_fields(const TriangleSurface& mesh, const std::vector<Mat2>& metric, int N, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    FieldPair p;
    p.N = N;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const Mat2 g = metric.empty() ? Mat2::Identity() : metric[f];
        const double a = angle(rng);
        const Vec2 u(std::cos(a), std::sin(a)), v = rot90(u);
        p.U.push_back(u / std::sqrt(u.dot(g * u)));
        p.V.push_back(v / std::sqrt(v.dot(g * v)));
    }
    return p;
}

void initialize_consensus(const TriangleSurface& mesh, FieldPair& p, double lambda) {
    const EdgeData ed = edge_data(mesh, lambda);
    const auto& edges = mesh.interiorEdges();
    p.z.resize(edges.size());
    p.zSmooth.resize(edges.size());
    for (size_t k = 0; k < edges.size(); ++k) {
        const int i = edges[k].fi, j = edges[k].fj;
        auto avg = [&](const Vec2& ei, const Vec2& ej) {
            const Vec2 a = complex_power(pullback_vector(p.U[i], p.V[i], ei), p.N);
            const Vec2 b = complex_power(pullback_vector(p.U[j], p.V[j], ej), p.N);
            return Vec2(0.5 * (a + b));
        };
        p.z[k] = avg(ed.ei[k], ed.ej[k]);
        p.zSmooth[k] = avg(rot90(ed.ei[k]), rot90(ed.ej[k]));
    }
}

CpfEnergies cpf_energies(const TriangleSurface& mesh, const ConstraintSet& c, const FieldPair& p) {
    CpfEnergies out;
    const double lambda = balance_length(mesh, c);
    const EdgeData ed = edge_data(mesh, lambda);
    const auto& edges = mesh.interiorEdges();
    for (size_t k = 0; k < edges.size(); ++k) {
        const int i = edges[k].fi, j = edges[k].fj;
        const Vec4 rs = residual_smoothness(p.U[i], p.V[i], p.U[j], p.V[j], p.zSmooth[k], ed.ei[k], ed.ej[k], p.N);
        const Vec4 rc = residual_cpf(p.U[i], p.V[i], p.U[j], p.V[j], p.z[k], ed.ei[k], ed.ej[k], p.N);
        out.smoothness += rs.squaredNorm();
        out.cpf += rc.squaredNorm();
        out.maxCpfResidual = std::max(out.maxCpfResidual, (rc.head<2>() - rc.tail<2>()).norm());
    }
    if (!edges.empty()) {
        out.smoothness /= edges.size();
        out.cpf /= edges.size();
    }
    const int nf = mesh.faceCount();
    out.minLico = INFINITY;
    for (int f = 0; f < nf; ++f) {
        const Mat2 g = metric_of(c, f);
        const double s = lico_value(p.U[f], p.V[f]);
        out.minLico = std::min(out.minLico, s);
        const double sb = s / s_reference(g);
        const double r = residual_lico(p.U[f], p.V[f], 0.1 * std::max(sb - c.licoEpsilon, 1e-300), c.licoEpsilon,
                                       s_reference(g));
        out.lico += r * r / nf;
        if (c.sizing) {
            const double ru = residual_sizing(p.U[f], g), rv = residual_sizing(p.V[f], g);
            out.sizing += (ru * ru + rv * rv) / nf;
        }
    }
    for (const AlignmentConstraint& a : c.alignment) {
        const Mat2 g = metric_of(c, a.face);
        const Vec2 d = a.direction / std::sqrt(a.direction.dot(g * a.direction));
        const double r = residual_alignment(p.U[a.face], p.V[a.face], d, a.n, a.weight);
        out.alignment += r * r / c.alignment.size();
    }
    std::map<std::string, std::pair<double, int>> ortho;
    for (const OrthogonalityConstraint& o : c.orthogonality) {
        const double r = residual_orthogonality(p.U[o.face], p.V[o.face], o.inner);
        ortho[o.kind].first += r * r;
        ortho[o.kind].second += 1;
    }
    for (const auto& [kind, acc] : ortho) out.orthogonality += acc.first / acc.second;
    return out;
}

Eigen::VectorXd pack_fields(const FieldPair& p) {
    const int nf = static_cast<int>(p.U.size()), ne = static_cast<int>(p.z.size());
    Eigen::VectorXd x(4 * nf + 4 * ne);
    for (int f = 0; f < nf; ++f) x.segment<4>(4 * f) << p.U[f], p.V[f];
    for (int e = 0; e < ne; ++e) {
        x.segment<2>(4 * nf + 2 * e) = p.z[e];
        x.segment<2>(4 * nf + 2 * ne + 2 * e) = p.zSmooth[e];
    }
    return x;
}

void unpack_fields(const Eigen::VectorXd& x, FieldPair& p) {
    const int nf = static_cast<int>(p.U.size()), ne = static_cast<int>(p.z.size());
    for (int f = 0; f < nf; ++f) {
        p.U[f] = x.segment<2>(4 * f);
        p.V[f] = x.segment<2>(4 * f + 2);
    }
    for (int e = 0; e < ne; ++e) {
        p.z[e] = x.segment<2>(4 * nf + 2 * e);
        p.zSmooth[e] = x.segment<2>(4 * nf + 2 * ne + 2 * e);
    }
}

ResidualSystem assemble_cpf_system(const TriangleSurface& mesh, const ConstraintSet& c, double beta,
                                   std::shared_ptr<std::vector<double>> anchors) {
    const int nf = mesh.faceCount();
    const auto& edges = mesh.interiorEdges();
    const int ne = static_cast<int>(edges.size());
    const int N = c.N;
    const double lambda = balance_length(mesh, c);
    const EdgeData ed = edge_data(mesh, lambda);
    ResidualSystem sys(4 * nf + 4 * ne);
    auto faceVars = [](int f) { return std::vector<int>{4 * f, 4 * f + 1, 4 * f + 2, 4 * f + 3}; };

    if (ne > 0) {
        const double ws = 1.0 / std::sqrt(double(ne)), wc = std::sqrt(beta) * ws;
        for (int k = 0; k < ne; ++k) {
            const int i = edges[k].fi, j = edges[k].fj;
            std::vector<int> vars = faceVars(i);
            for (int v : faceVars(j)) vars.push_back(v);
            const Vec2 ei = ed.ei[k], ej = ed.ej[k];
            for (int pass = 0; pass < 2; ++pass) {
                std::vector<int> vv = vars;
                const int zOffset = pass == 0 ? 4 * nf + 2 * ne : 4 * nf;
                vv.push_back(zOffset + 2 * k);
                vv.push_back(zOffset + 2 * k + 1);
                const double w = pass == 0 ? ws : wc;
                const bool smooth = pass == 0;
                sys.addBlock(std::move(vv), 4,
                             [=](const double* x, double* r, double* J) {
                                 const Vec2 Ui(x[0], x[1]), Vi(x[2], x[3]), Uj(x[4], x[5]), Vj(x[6], x[7]), z(x[8], x[9]);
                                 Mat4x10 jac;
                                 const Vec4 res = smooth
                                     ? residual_smoothness(Ui, Vi, Uj, Vj, z, ei, ej, N, J ? &jac : nullptr)
                                     : residual_cpf(Ui, Vi, Uj, Vj, z, ei, ej, N, J ? &jac : nullptr);
                                 for (int q = 0; q < 4; ++q) r[q] = w * res[q];
                                 if (J) copy_row_major<4, 10>(w * jac, J);
                             },
                             smooth ? "smoothness" : "cpf");
            }
        }
    }

    const double wf = 1.0 / std::sqrt(double(nf));
    const double eps = c.licoEpsilon;
    for (int f = 0; f < nf; ++f) {
        const double scale = s_reference(metric_of(c, f));
        sys.addBlock(faceVars(f), 1,
                     [=](const double* x, double* r, double* J) {
                         Row4 jac;
                         r[0] = wf * residual_lico(Vec2(x[0], x[1]), Vec2(x[2], x[3]), (*anchors)[f], eps, scale,
                                                   J ? &jac : nullptr);
                         if (J) copy_row_major<1, 4>(wf * jac, J);
                     },
                     "lico");
    }

    if (!c.alignment.empty()) {
        const double wa = 1.0 / std::sqrt(double(c.alignment.size()));
        for (const AlignmentConstraint& a : c.alignment) {
            const Mat2 g = metric_of(c, a.face);
            const Vec2 d = a.direction / std::sqrt(a.direction.dot(g * a.direction));
            const int n = a.n;
            const double w = a.weight;
            sys.addBlock(faceVars(a.face), 1,
                         [=](const double* x, double* r, double* J) {
                             Row4 jac;
                             r[0] = wa * residual_alignment(Vec2(x[0], x[1]), Vec2(x[2], x[3]), d, n, w,
                                                            J ? &jac : nullptr);
                             if (J) copy_row_major<1, 4>(wa * jac, J);
                         },
                         "alignment");
        }
    }

    if (c.sizing) {
        for (int f = 0; f < nf; ++f) {
            const Mat2 g = metric_of(c, f);
            for (int part = 0; part < 2; ++part)
                sys.addBlock({4 * f + 2 * part, 4 * f + 2 * part + 1}, 1,
                             [=](const double* x, double* r, double* J) {
                                 Row2 jac;
                                 r[0] = wf * residual_sizing(Vec2(x[0], x[1]), g, J ? &jac : nullptr);
                                 if (J) copy_row_major<1, 2>(wf * jac, J);
                             },
                             "sizing");
        }
    }

    std::map<std::string, int> counts;
    for (const auto& o : c.orthogonality) ++counts[o.kind];
    for (const auto& o : c.orthogonality) {
        const double w = 1.0 / std::sqrt(double(counts[o.kind]));
        const Mat2 S = o.inner;
        sys.addBlock(faceVars(o.face), 1,
                     [=](const double* x, double* r, double* J) {
                         Row4 jac;
                         r[0] = w * residual_orthogonality(Vec2(x[0], x[1]), Vec2(x[2], x[3]), S, J ? &jac : nullptr);
                         if (J) copy_row_major<1, 4>(w * jac, J);
                     },
                     o.kind);
    }
    return sys;
}

namespace {

// Barrier anchors: a tenth of the current distance to the injectivity threshold.
bool refresh_anchors(const TriangleSurface& mesh, const ConstraintSet& c, const Eigen::VectorXd& x,
                     std::vector<double>& anchors) {
    bool ok = true;
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const double s = lico_value(x.segment<2>(4 * f), x.segment<2>(4 * f + 2)) / s_reference(metric_of(c, f));
        if (s - c.licoEpsilon > 0)
            anchors[f] = 0.1 * (s - c.licoEpsilon);
        else
            ok = false;
    }
    return ok;
}

}  // namespace

CpfResult optimize_cpf(const TriangleSurface& mesh, const ConstraintSet& c, const FieldPair& init,
                       const CpfOptions& opt) {
    CpfResult result;
    result.fields = init;
    if (result.fields.z.size() != mesh.interiorEdges().size())
        initialize_consensus(mesh, result.fields, balance_length(mesh, c));
    Eigen::VectorXd x = pack_fields(result.fields);
    auto anchors = std::make_shared<std::vector<double>>(mesh.faceCount(), 0.0);
    if (!refresh_anchors(mesh, c, x, *anchors))
        throw LicoError("initial fields are not locally injective and orientation preserving");

    double beta = opt.beta0;
    for (int round = 0; round < opt.maxRounds; ++round, beta *= opt.betaFactor) {
        refresh_anchors(mesh, c, x, *anchors);
        const ResidualSystem sys = assemble_cpf_system(mesh, c, beta, anchors);
        SolverOptions lm = opt.lm;
        auto userAccept = lm.onAccept;
        lm.onAccept = [&](const Eigen::VectorXd& xa) {
            refresh_anchors(mesh, c, xa, *anchors);
            return userAccept ? userAccept(xa) : true;
        };
        CpfRound rec{round, beta, solve_lm(sys, x, lm), {}, false};
        unpack_fields(x, result.fields);
        rec.energies = cpf_energies(mesh, c, result.fields);
        rec.accepted = opt.accept ? opt.accept(result.fields, rec.energies)
                                  : rec.energies.maxCpfResidual < opt.residualThreshold;
        result.rounds.push_back(rec);
        if (rec.accepted) {
            result.success = true;
            result.round = round;
            result.beta = beta;
            return result;
        }
    }
    result.beta = beta / opt.betaFactor;
    return result;
}

}  // namespace cpfmesh
