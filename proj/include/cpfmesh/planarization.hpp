#pragma once

#include "cpfmesh/mesh.hpp"
#include "cpfmesh/nlls.hpp"
#include "cpfmesh/spatial.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cpfmesh {

struct PlanarizationWeights {
    double planarity = 0.01;
    double distance = 0.5;
    double symmetry = 1.0;
    double drift = 0.01;
    double length = 0.001;
    double fairness = 5.0;  // used only with quad fairness enabled
};

struct PlanarizationOptions {
    PlanarizationWeights weights;
    double targetMaxPlanarity = 1.0;  // percent
    int maxRounds = 30;
    int innerIterations = 250;
    double planarityGrowth = 2.0;  // per outer round
    double lengthGrowth = 2.0;
    // false: length weight grows once per outer round; true: every `lengthEvery` accepted LM steps.
    bool lengthScheduleInner = false;
    int lengthEvery = 5;
    double barrierFraction = 0.1;  // barrier activates below this fraction of the round-start length
    bool quadFairness = false;
    bool trackHausdorff = true;
};

// Everything held fixed during one outer round. Lengths are measured in units of `unit`.
struct PlanarizationState {
    std::vector<Vec3> vertices;
    std::vector<Vec3> faceNormals;
    std::vector<Vec3> prevVertices;
    std::vector<Vec3> projected;    // prevVertices projected onto the reference
    std::vector<Vec3> driftNormals; // averaged face normals at prevVertices
    std::vector<Vec3> centers;      // face barycenters at round start
    std::vector<std::pair<int, int>> edges;
    std::vector<double> edgeStart;
    std::vector<std::pair<int, int>> diagonals;
    std::vector<double> diagonalStart;
    PlanarizationWeights weights;
    double unit = 1.0;
    // Read by the length barrier blocks at evaluation time, so the inner schedule can change it.
    std::shared_ptr<double> lengthWeight = std::make_shared<double>(0.001);
};

// Unit Newell normal of a polygon, oriented by its winding.
Vec3 polygon_normal(const PolyMesh& mesh, int face);

PlanarizationState start_round(const PolyMesh& mesh, const std::vector<Vec3>& faceNormals, const TriangleTree& reference,
                               const PlanarizationWeights& weights, double unit);

// Variables: 3 per vertex, then 3 per face normal.
ResidualSystem planarization_system(const PolyMesh& mesh, const PlanarizationState& state, bool quadFairness,
                                    double barrierFraction = 0.1);

struct PlanarizationRound {
    int round;
    double maxPlanarity;
    double avgPlanarity;
    double hausdorff;
    int iterations;
    double planarityWeight;
    double lengthWeight;
};

struct PlanarizationResult {
    PolyMesh mesh;                    // best round by max planarity
    std::vector<Vec3> faceNormals;
    std::vector<PlanarizationRound> rounds;
    bool reachedTarget = false;
    double maxPlanarity = 0;
    double minLengthRatio = 1;        // smallest edge or diagonal length over its round-start length
    std::string csv() const;          // round,maxPlanarity,avgPlanarity,hausdorff
};

PlanarizationResult planarize(const PolyMesh& mesh, const TriangleSurface& reference, const PlanarizationOptions& opt = {});

}  // namespace cpfmesh
