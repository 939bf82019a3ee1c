#pragma once

#include "cpfmesh/mesh.hpp"

#include <cmath>
#include <complex>

namespace cpfmesh {

using Complex = std::complex<double>;

// Rotation by +90 degrees.
inline Mat2 J() {
    Mat2 m;
    m << 0, -1, 1, 0;
    return m;
}

inline Vec2 rot90(const Vec2& v) { return {-v.y(), v.x()}; }

inline Mat2 rotation(double angle) {
    Mat2 m;
    m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return m;
}

inline Complex to_complex(const Vec2& v) { return {v.x(), v.y()}; }
inline Vec2 to_vec(const Complex& z) { return {z.real(), z.imag()}; }

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Gradients of the three barycentric coordinate functions of a planar triangle.
inline std::array<Vec2, 3> barycentric_gradients(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    Mat2 E;
    E.col(0) = p1 - p0;
    E.col(1) = p2 - p0;
    const Mat2 inv = E.inverse();
    const Vec2 g1 = inv.row(0).transpose(), g2 = inv.row(1).transpose();
    return {-(g1 + g2), g1, g2};
}

// Corner positions of face f in its local basis, with corner 0 at the origin.
inline std::array<Vec2, 3> local_corners(const TriangleSurface& mesh, int f) {
    const auto& t = mesh.face(f);
    const LocalBasis& b = mesh.basis(f);
    const Vec3& o = mesh.vertex(t[0]);
    return {Vec2::Zero(), b.toLocal(mesh.vertex(t[1]) - o), b.toLocal(mesh.vertex(t[2]) - o)};
}

// Angle in (-pi, pi] from a to b.
inline double signed_angle(const Vec2& a, const Vec2& b) { return std::atan2(cross2(a, b), a.dot(b)); }

}  // namespace cpfmesh
