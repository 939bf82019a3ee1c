#pragma once

#include "cpfmesh/mesh.hpp"
#include "cpfmesh/spatial.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cpfmesh {

// Percent. RMS over the sliding vertex quadruples of the face of the normal-projection measure
// normalized by the mean diagonal length. Triangles are 0. `degenerate` is set when a diagonal
// has norm below 1e-14.
double planarity_error(const std::vector<Vec3>& face, bool* degenerate = nullptr);
std::vector<double> planarity_errors(const PolyMesh& mesh, int* degenerateFaces = nullptr);

struct HausdorffOptions {
    double samplesPerMeanFace = 10;
    std::uint64_t seed = 0;
};

// Max distance from samples on `output` to `reference`, over the reference bbox diagonal.
double hausdorff_one_sided(const PolyMesh& output, const TriangleTree& reference, const HausdorffOptions& opt = {});

struct QualityReport {
    std::vector<double> perFacePlanarity;
    double maxPlanarity = 0;
    double avgPlanarity = 0;
    double hausdorff = 0;
    int faceCount = 0;
    int degenerateFaces = 0;
    std::string to_json() const;  // {faces, maxPlanarity, avgPlanarity, hausdorff}
};

QualityReport evaluate_quality(const PolyMesh& output, const TriangleTree& reference, const HausdorffOptions& opt = {});

}  // namespace cpfmesh
