#include "cpfmesh/shapes.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace cpfmesh::shapes {

namespace {

// Triangulates a (rows+1) x (cols+1) vertex lattice indexed row-major, optionally wrapping columns.
std::vector<std::array<int, 3>> lattice_faces(int rows, int cols, bool wrapCols) {
    const int stride = wrapCols ? cols : cols + 1;
    std::vector<std::array<int, 3>> faces;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const int jn = wrapCols ? (j + 1) % cols : j + 1;
            const int a = i * stride + j, b = i * stride + jn, c = (i + 1) * stride + jn, d = (i + 1) * stride + j;
            faces.push_back({a, b, c});
            faces.push_back({a, c, d});
        }
    return faces;
}

}  // namespace

TriangleSurface icosphere(int subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& p : v) p.normalize();
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                                         {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            return mid[key] = static_cast<int>(v.size()) - 1;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& tri : f) {
            const int ab = midpoint(tri[0], tri[1]), bc = midpoint(tri[1], tri[2]), ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    std::vector<Vec3> normals = v;
    for (Vec3& p : v) p *= radius;
    return TriangleSurface(std::move(v), std::move(f), std::move(normals));
}

TriangleSurface cylinder(double radius, double height, int around, int along) {
    std::vector<Vec3> v, n;
    for (int i = 0; i <= along; ++i)
        for (int j = 0; j < around; ++j) {
            const double a = 2.0 * std::numbers::pi * j / around;
            v.emplace_back(radius * std::cos(a), radius * std::sin(a), height * i / along);
            n.emplace_back(std::cos(a), std::sin(a), 0.0);
        }
    return TriangleSurface(std::move(v), lattice_faces(along, around, true), std::move(n));
}

TriangleSurface grid(int n, double size) {
    std::vector<Vec3> v;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) v.emplace_back(size * j / n, size * i / n, 0.0);
    return TriangleSurface(std::move(v), lattice_faces(n, n, false));
}

TriangleSurface hyperbolic_paraboloid(int n, double extent) {
    std::vector<Vec3> v, nr;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const double x = -extent + 2.0 * extent * j / n, y = -extent + 2.0 * extent * i / n;
            v.emplace_back(x, y, 0.5 * (x * x - y * y));
            nr.push_back(Vec3(-x, y, 1.0).normalized());
        }
    return TriangleSurface(std::move(v), lattice_faces(n, n, false), std::move(nr));
}

TriangleSurface torus_sector(double R, double r, double sweep, int nMajor, int nMinor) {
    std::vector<Vec3> v, nr;
    for (int i = 0; i <= nMajor; ++i) {
        const double th = sweep * i / nMajor;
        for (int j = 0; j < nMinor; ++j) {
            const double ph = 2.0 * std::numbers::pi * j / nMinor;
            const Vec3 radial(std::cos(th), std::sin(th), 0.0);
            const Vec3 normal = std::cos(ph) * radial + std::sin(ph) * Vec3::UnitZ();
            v.push_back(R * radial + r * normal);
            nr.push_back(normal);
        }
    }
    // Rows advance along the major angle; the column order keeps normals outward.
    auto faces = lattice_faces(nMajor, nMinor, true);
    for (auto& f : faces) std::swap(f[1], f[2]);
    return TriangleSurface(std::move(v), std::move(faces), std::move(nr));
}

}  // namespace cpfmesh::shapes
