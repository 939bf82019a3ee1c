#include "cpfmesh/curvature.hpp"

#include "cpfmesh/geometry.hpp"

#include <algorithm>
#include <numbers>

namespace cpfmesh {

const char* region_name(Region r) {
    switch (r) {
        case Region::Planar: return "planar";
        case Region::Umbilic: return "umbilic";
        case Region::Elliptic: return "elliptic";
        case Region::Parabolic: return "parabolic";
        case Region::Hyperbolic: return "hyperbolic";
        case Region::Boundary: return "boundary";
    }
    return "unknown";
}

Principal principal_curvatures(const Mat2& S) {
    const double a = S(0, 0), d = S(1, 1), b = 0.5 * (S(0, 1) + S(1, 0));
    const double mean = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    Principal p;
    p.kMin = mean - radius;
    p.kMax = mean + radius;
    if (2.0 * radius <= 1e-12 * S.norm()) return p;  // umbilic or planar: keep basis axes
    const double theta = 0.5 * std::atan2(2.0 * b, a - d);
    p.dMax = Vec2(std::cos(theta), std::sin(theta));
    p.dMin = rot90(p.dMax);
    return p;
}

std::vector<Mat2> shape_operators(const TriangleSurface& mesh) {
    const auto& normals = mesh.vertexNormals();
    std::vector<Mat2> out(mesh.faceCount());
    for (int f = 0; f < mesh.faceCount(); ++f) {
        const auto c = local_corners(mesh, f);
        const auto grad = barycentric_gradients(c[0], c[1], c[2]);
        const LocalBasis& b = mesh.basis(f);
        Mat2 S = Mat2::Zero();
        for (int k = 0; k < 3; ++k) S += b.toLocal(normals[mesh.face(f)[k]]) * grad[k].transpose();
        out[f] = 0.5 * (S + S.transpose());
    }
    return out;
}

double polar_angle(double kMin, double kMax) {
    const double gap = kMax - kMin;
    if (gap <= 1e-12 * std::hypot(kMin, kMax)) return std::numbers::pi / 2;
    return std::abs(std::atan((kMin + kMax) / (kMin - kMax)));
}

Region classify_region(double phi, double rho, const RegionThresholds& t) {
    if (rho <= t.planar) return Region::Planar;
    if (phi >= std::numbers::pi / 2 - t.umbilic) return Region::Umbilic;
    const double off = phi - std::numbers::pi / 4;
    if (off >= t.parabolic) return Region::Elliptic;
    if (off <= -t.parabolic) return Region::Hyperbolic;
    return Region::Parabolic;
}

namespace {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = q * (values.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

}  // namespace

CurvatureField compute_curvature(const TriangleSurface& mesh, const RegionThresholds& t) {
    const int nf = mesh.faceCount();
    CurvatureField c;
    c.shapeOperator = shape_operators(mesh);
    c.principal.resize(nf);
    c.phi.resize(nf);
    c.rhoRaw.resize(nf);
    c.rho.resize(nf);
    c.region.resize(nf);
    c.dAbsMin.resize(nf);
    std::vector<double> interior;
    for (int f = 0; f < nf; ++f) {
        const Principal p = principal_curvatures(c.shapeOperator[f]);
        c.principal[f] = p;
        c.phi[f] = polar_angle(p.kMin, p.kMax);
        c.rhoRaw[f] = std::hypot(p.kMin, p.kMax);
        c.dAbsMin[f] = std::abs(p.kMin) <= std::abs(p.kMax) ? p.dMin : p.dMax;
        if (!mesh.isBoundaryFace(f)) interior.push_back(c.rhoRaw[f]);
    }
    c.rhoScale = percentile(interior.empty() ? c.rhoRaw : interior, 0.95);
    for (int f = 0; f < nf; ++f) {
        c.rho[f] = c.rhoScale > 0 ? std::clamp(c.rhoRaw[f] / c.rhoScale, 0.0, 1.0) : 0.0;
        c.region[f] = mesh.isBoundaryFace(f) ? Region::Boundary : classify_region(c.phi[f], c.rho[f], t);
    }
    return c;
}

double SizingParams::epsilon() const { return 2.0 * std::numbers::pi * delta / eta; }
double SizingParams::gamma() const { return std::sqrt(2.0 * delta); }

SizingParams sizing_from_fractions(const TriangleSurface& mesh, double deltaFraction, double etaFraction) {
    if (!(deltaFraction > 0) || !(etaFraction > 0)) throw ParameterError("delta and eta must be positive");
    return {deltaFraction * mesh.bboxDiagonal(), etaFraction * mesh.totalArea()};
}

Mat2 dupin_metric(const Principal& p, const SizingParams& s) {
    const double eps = s.epsilon(), g2 = s.gamma() * s.gamma();
    const double a = std::sqrt(p.kMin * p.kMin + eps * eps), b = std::sqrt(p.kMax * p.kMax + eps * eps);
    return (a * p.dMin * p.dMin.transpose() + b * p.dMax * p.dMax.transpose()) / g2;
}

std::vector<Mat2> sizing_metric(const CurvatureField& curv, const SizingParams& s) {
    std::vector<Mat2> g;
    g.reserve(curv.principal.size());
    for (const Principal& p : curv.principal) g.push_back(dupin_metric(p, s));
    return g;
}

double metric_ellipse_area(const Mat2& g) { return std::numbers::pi / std::sqrt(g.determinant()); }

}  // namespace cpfmesh
