#include "cpfmesh/cpf_terms.hpp"

#include <cmath>

namespace cpfmesh {

namespace {

Mat2 inverse_of_uv(const Vec2& U, const Vec2& V) {
    const double s = lico_value(U, V);
    Mat2 inv;
    inv.row(0) = -(J() * V).transpose() / s;
    inv.row(1) = (J() * U).transpose() / s;
    return inv;
}

}  // namespace

Mat2 pullback_map(const Vec2& U, const Vec2& V) {
    if (!(lico_value(U, V) > 0)) throw LicoError("fields are not locally injective and orientation preserving");
    return inverse_of_uv(U, V);
}

Vec2 pullback_vector(const Vec2& U, const Vec2& V, const Vec2& e, Mat24* jac) {
    const Mat2 inv = inverse_of_uv(U, V);
    const Vec2 g = inv * e;
    if (jac) {
        // d g = -M^{-1} (dU g0 + dV g1)
        jac->leftCols<2>() = -g.x() * inv;
        jac->rightCols<2>() = -g.y() * inv;
    }
    return g;
}

Vec2 complex_power(const Vec2& w, int N, Mat2* jac) {
    const Complex z = to_complex(w);
    if (jac) {
        const Complex d = N == 0 ? Complex(0) : double(N) * std::pow(z, N - 1);
        *jac << d.real(), -d.imag(), d.imag(), d.real();
    }
    return to_vec(std::pow(z, N));
}

namespace {

Vec4 edge_consensus(const Vec2& Ui, const Vec2& Vi, const Vec2& Uj, const Vec2& Vj, const Vec2& z,
                    const Vec2& ei, const Vec2& ej, int N, Mat4x10* jac) {
    Mat24 gi, gj;
    Mat2 pi, pj;
    const Vec2 wi = pullback_vector(Ui, Vi, ei, jac ? &gi : nullptr);
    const Vec2 wj = pullback_vector(Uj, Vj, ej, jac ? &gj : nullptr);
    const Vec2 a = complex_power(wi, N, jac ? &pi : nullptr);
    const Vec2 b = complex_power(wj, N, jac ? &pj : nullptr);
    Vec4 r;
    r << a - z, b - z;
    if (jac) {
        jac->setZero();
        jac->block<2, 4>(0, 0) = pi * gi;
        jac->block<2, 4>(2, 4) = pj * gj;
        jac->block<2, 2>(0, 8) = -Mat2::Identity();
        jac->block<2, 2>(2, 8) = -Mat2::Identity();
    }
    return r;
}

}  // namespace

Vec4 residual_cpf(const Vec2& Ui, const Vec2& Vi, const Vec2& Uj, const Vec2& Vj, const Vec2& z,
                  const Vec2& ei, const Vec2& ej, int N, Mat4x10* jac) {
    return edge_consensus(Ui, Vi, Uj, Vj, z, ei, ej, N, jac);
}

Vec4 residual_smoothness(const Vec2& Ui, const Vec2& Vi, const Vec2& Uj, const Vec2& Vj, const Vec2& z,
                         const Vec2& ei, const Vec2& ej, int N, Mat4x10* jac) {
    return edge_consensus(Ui, Vi, Uj, Vj, z, rot90(ei), rot90(ej), N, jac);
}

double lico_barrier(double x, double sbar, double* derivative) {
    if (x >= sbar) {
        if (derivative) *derivative = 0;
        return 0;
    }
    auto phi = [sbar](double t, double* d) {
        const double q = t / sbar;
        const double g = q * q * q - 3 * q * q + 3 * q;
        const double dg = 3.0 / sbar * (1 - q) * (1 - q);
        if (d) *d = -dg / (g * g);
        return 1.0 / g - 1.0;
    };
    constexpr double cap = 1e10;
    const double xc = sbar / (3.0 * (1.0 + cap));  // phi(xc) is about cap
    if (x > xc) return phi(x, derivative);
    double slope;
    const double base = phi(xc, &slope);
    if (derivative) *derivative = slope;
    return base + slope * (x - xc);
}

double residual_lico(const Vec2& U, const Vec2& V, double sbar, double eps, double scale, Row4* jac) {
    const double s = lico_value(U, V) / scale;
    double d;
    const double r = lico_barrier(s - eps, sbar, jac ? &d : nullptr);
    if (jac) *jac << d * V.y() / scale, -d * V.x() / scale, -d * U.y() / scale, d * U.x() / scale;
    return r;
}

double residual_alignment(const Vec2& U, const Vec2& V, const Vec2& d, int n, double weight, Row4* jac) {
    Mat24 gw;
    Mat2 pw;
    const Vec2 w = pullback_vector(U, V, d, jac ? &gw : nullptr);
    const Vec2 p = complex_power(w, n / 2, jac ? &pw : nullptr);
    if (jac) *jac = weight * pw.row(1) * gw;
    return weight * p.y();
}

double residual_sizing(const Vec2& X, const Mat2& g, Row2* jac) {
    if (jac) *jac = ((g + g.transpose()) * X).transpose();
    return X.dot(g * X) - 1.0;
}

double residual_orthogonality(const Vec2& U, const Vec2& V, const Mat2& S, Row4* jac) {
    if (jac) *jac << (S * V).transpose(), (S.transpose() * U).transpose();
    return U.dot(S * V);
}

}  // namespace cpfmesh
