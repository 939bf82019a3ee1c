#include "cpfmesh/spatial.hpp"

#include <algorithm>
#include <limits>

namespace cpfmesh {

ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Voronoi-region walk over vertices, edges and the interior.
    ClosestPoint out;
    auto finish = [&](double u, double v, double w, Feature f) {
        out.bary = Vec3(u, v, w);
        out.point = u * a + v * b + w * c;
        out.distance = (p - out.point).norm();
        out.feature = f;
        return out;
    };
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return finish(1, 0, 0, Feature::Vertex);
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return finish(0, 1, 0, Feature::Vertex);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double t = d1 / (d1 - d3);
        return finish(1 - t, t, 0, Feature::Edge);
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return finish(0, 0, 1, Feature::Vertex);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double t = d2 / (d2 - d6);
        return finish(1 - t, 0, t, Feature::Edge);
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return finish(0, 1 - t, t, Feature::Edge);
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return finish(1 - v - w, v, w, Feature::Interior);
}

TriangleTree::TriangleTree(const TriangleSurface& mesh) : mesh_(mesh) {
    const int n = mesh.faceCount();
    order_.resize(n);
    faceBoxes_.resize(n);
    for (int f = 0; f < n; ++f) {
        order_[f] = f;
        faceBoxes_[f].setEmpty();
        for (int v : mesh.face(f)) faceBoxes_[f].extend(mesh.vertex(v));
    }
    nodes_.reserve(2 * n / 4 + 2);
    if (n > 0) build(0, n);
}

int TriangleTree::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box;
    box.setEmpty();
    for (int i = begin; i < end; ++i) box.extend(faceBoxes_[order_[i]]);
    nodes_[id].box = box;
    if (end - begin <= 4) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    int axis;
    box.sizes().maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int x, int y) {
        return faceBoxes_[x].center()[axis] < faceBoxes_[y].center()[axis];
    });
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

ClosestPoint TriangleTree::closest(const Vec3& p) const {
    ClosestPoint best;
    best.distance = std::numeric_limits<double>::infinity();
    if (nodes_.empty()) return best;
    double bestSq = best.distance;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (node.box.squaredExteriorDistance(p) > bestSq) continue;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int f = order_[i];
                const auto& t = mesh_.face(f);
                ClosestPoint c = closest_point_on_triangle(p, mesh_.vertex(t[0]), mesh_.vertex(t[1]), mesh_.vertex(t[2]));
                if (c.distance * c.distance < bestSq) {
                    c.face = f;
                    best = c;
                    bestSq = c.distance * c.distance;
                }
            }
            continue;
        }
        // Visit the nearer child first.
        const double dl = nodes_[node.left].box.squaredExteriorDistance(p);
        const double dr = nodes_[node.right].box.squaredExteriorDistance(p);
        if (dl < dr) {
            stack.push_back(node.right);
            stack.push_back(node.left);
        } else {
            stack.push_back(node.left);
            stack.push_back(node.right);
        }
    }
    return best;
}

}  // namespace cpfmesh
