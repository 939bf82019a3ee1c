#pragma once

#include "cpfmesh/mesh.hpp"

#include <string>
#include <vector>

namespace cpfmesh {

enum class Region { Planar, Umbilic, Elliptic, Parabolic, Hyperbolic, Boundary };

const char* region_name(Region r);

struct Principal {
    double kMin = 0, kMax = 0;  // signed, kMin <= kMax
    Vec2 dMin = Vec2::UnitX(), dMax = Vec2::UnitY();
};

// Closed-form eigen-decomposition of a symmetric 2x2 operator. When the eigenvalue gap is
// below 1e-12 * |S| the directions fall back to the basis axes.
Principal principal_curvatures(const Mat2& S);

struct RegionThresholds {
    double planar = 0.01;    // on normalized rho
    double umbilic = 0.2;    // phi >= pi/2 - umbilic
    double parabolic = 0.05; // |phi - pi/4| < parabolic
};

struct CurvatureField {
    std::vector<Mat2> shapeOperator;  // per face, local basis
    std::vector<Principal> principal;
    std::vector<double> phi;          // polar angle in [0, pi/2]
    std::vector<double> rhoRaw;
    std::vector<double> rho;          // normalized to [0, 1]
    std::vector<Region> region;
    std::vector<Vec2> dAbsMin;        // direction of the curvature with smallest magnitude
    double rhoScale = 0;              // the percentile used for normalization
};

// Per-face operator from the tangential gradient of the interpolated vertex normals,
// symmetrized and expressed in the face basis. Positive for a sphere with outward normals.
std::vector<Mat2> shape_operators(const TriangleSurface& mesh);

double polar_angle(double kMin, double kMax);
Region classify_region(double phi, double rho, const RegionThresholds& t = {});

CurvatureField compute_curvature(const TriangleSurface& mesh, const RegionThresholds& t = {});

struct SizingParams {
    double delta;  // absolute approximation error
    double eta;    // absolute target face area
    double epsilon() const;
    double gamma() const;
};

// Converts fractions of the bounding-box diagonal and of the total area to absolute values.
SizingParams sizing_from_fractions(const TriangleSurface& mesh, double deltaFraction, double etaFraction);

// Regularized Dupin metric: (1/gamma^2) E diag(sqrt(k^2+eps^2)) E^T.
Mat2 dupin_metric(const Principal& p, const SizingParams& s);
std::vector<Mat2> sizing_metric(const CurvatureField& curv, const SizingParams& s);

// Area of the unit ellipse of a metric, {w : w^T g w <= 1}.
double metric_ellipse_area(const Mat2& g);

}  // namespace cpfmesh
