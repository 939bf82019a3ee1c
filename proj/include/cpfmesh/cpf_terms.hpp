#pragma once

#include "cpfmesh/geometry.hpp"

#include <stdexcept>

// Residual building blocks on a single face (U, V in the face basis) or a pair of faces
// sharing an edge. Jacobians are with respect to (U0, U1, V0, V1) per face, then z.
namespace cpfmesh {

using Mat24 = Eigen::Matrix<double, 2, 4>;
using Row4 = Eigen::Matrix<double, 1, 4>;
using Row2 = Eigen::Matrix<double, 1, 2>;
using Vec4 = Eigen::Vector4d;
using Mat4x10 = Eigen::Matrix<double, 4, 10>;

// s = <U, -J V> = det[U V]; the pair is locally injective and orientation preserving when s > 0.
inline double lico_value(const Vec2& U, const Vec2& V) { return U.x() * V.y() - U.y() * V.x(); }

class LicoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inverse of [U V]; throws LicoError unless s > 0.
Mat2 pullback_map(const Vec2& U, const Vec2& V);

// [U V]^{-1} e and its derivative with respect to (U, V). Unchecked: callers inside the
// optimizer rely on the barrier to reject non-injective trial points.
Vec2 pullback_vector(const Vec2& U, const Vec2& V, const Vec2& e, Mat24* jac = nullptr);

// w^N as a complex number, with the 2x2 real Jacobian.
Vec2 complex_power(const Vec2& w, int N, Mat2* jac = nullptr);

// (a - z, b - z) with a = (dr_i^{-1} e)^N and b = (dr_j^{-1} e)^N. ei and ej are the same edge
// in the two face bases.
Vec4 residual_cpf(const Vec2& Ui, const Vec2& Vi, const Vec2& Uj, const Vec2& Vj, const Vec2& z,
                  const Vec2& ei, const Vec2& ej, int N, Mat4x10* jac = nullptr);

// Same form on the rotated edge J e, with its own consensus variable.
Vec4 residual_smoothness(const Vec2& Ui, const Vec2& Vi, const Vec2& Uj, const Vec2& Vj, const Vec2& z,
                         const Vec2& ei, const Vec2& ej, int N, Mat4x10* jac = nullptr);

// Barrier that is zero for x >= sbar and blows up as x -> 0+. Capped at 1e10 with a linear
// continuation for x at or below the cap point.
double lico_barrier(double x, double sbar, double* derivative = nullptr);

// Barrier on s/scale - eps.
double residual_lico(const Vec2& U, const Vec2& V, double sbar, double eps, double scale, Row4* jac = nullptr);

// weight * Im((dr^{-1} d)^{n/2}); n must be even.
double residual_alignment(const Vec2& U, const Vec2& V, const Vec2& d, int n, double weight, Row4* jac = nullptr);

// X^T g X - 1.
double residual_sizing(const Vec2& X, const Mat2& g, Row2* jac = nullptr);

// U^T S V.
double residual_orthogonality(const Vec2& U, const Vec2& V, const Mat2& S, Row4* jac = nullptr);

}  // namespace cpfmesh
