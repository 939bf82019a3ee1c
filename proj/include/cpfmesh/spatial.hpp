#pragma once

#include "cpfmesh/mesh.hpp"

#include <Eigen/Geometry>

#include <vector>

namespace cpfmesh {

enum class Feature { Vertex, Edge, Interior };

struct ClosestPoint {
    Vec3 point;
    double distance = 0;
    int face = -1;
    Vec3 bary;  // barycentric coordinates in that face
    Feature feature = Feature::Interior;
};

// Closest point on triangle (a, b, c) to p, classified by the feature it lies on.
ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

class TriangleTree {
public:
    explicit TriangleTree(const TriangleSurface& mesh);
    ClosestPoint closest(const Vec3& p) const;
    const TriangleSurface& mesh() const { return mesh_; }

private:
    struct Node {
        Eigen::AlignedBox3d box;
        int left = -1, right = -1;  // children, or -1 for leaves
        int begin = 0, end = 0;     // range into order_ for leaves
    };
    int build(int begin, int end);

    const TriangleSurface& mesh_;
    std::vector<int> order_;
    std::vector<Eigen::AlignedBox3d> faceBoxes_;
    std::vector<Node> nodes_;
};

inline ClosestPoint project_to_surface(const Vec3& p, const TriangleTree& tree) { return tree.closest(p); }

}  // namespace cpfmesh
