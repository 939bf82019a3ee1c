#include "cpfmesh/quality.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace cpfmesh {

double planarity_error(const std::vector<Vec3>& face, bool* degenerate) {
    if (degenerate) *degenerate = false;
    const size_t d = face.size();
    if (d < 4) return 0.0;
    double sum = 0;
    for (size_t j = 0; j < d; ++j) {
        const Vec3& p1 = face[j];
        const Vec3& p2 = face[(j + 1) % d];
        const Vec3& p3 = face[(j + 2) % d];
        const Vec3& p4 = face[(j + 3) % d];
        const Vec3 d31 = p3 - p1, d42 = p4 - p2;
        const double l31 = d31.norm(), l42 = d42.norm();
        if (l31 < 1e-14 || l42 < 1e-14) {
            if (degenerate) *degenerate = true;
            continue;
        }
        const Vec3 n = d31.cross(d42) / (l31 * l42);
        const double q = std::abs(n.dot(p2 - p1)) / (0.5 * (l31 + l42));
        sum += q * q;
    }
    return 100.0 * std::sqrt(sum / static_cast<double>(d));
}

std::vector<double> planarity_errors(const PolyMesh& mesh, int* degenerateFaces) {
    std::vector<double> out;
    out.reserve(mesh.faces.size());
    int bad = 0;
    std::vector<Vec3> pts;
    for (const auto& f : mesh.faces) {
        pts.clear();
        for (int v : f) pts.push_back(mesh.vertices[v]);
        bool deg;
        out.push_back(planarity_error(pts, &deg));
        bad += deg;
    }
    if (degenerateFaces) *degenerateFaces = bad;
    return out;
}

double hausdorff_one_sided(const PolyMesh& output, const TriangleTree& reference, const HausdorffOptions& opt) {
    if (output.faces.empty() || reference.mesh().faceCount() == 0) return 0.0;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // Each polygon is fanned from its barycenter.
    struct Tri {
        Vec3 a, b, c;
        double area;
    };
    std::vector<std::vector<Tri>> fans;
    double totalArea = 0;
    for (const auto& f : output.faces) {
        Vec3 c = Vec3::Zero();
        for (int v : f) c += output.vertices[v];
        c /= static_cast<double>(f.size());
        std::vector<Tri> fan;
        for (size_t i = 0; i < f.size(); ++i) {
            const Vec3& a = output.vertices[f[i]];
            const Vec3& b = output.vertices[f[(i + 1) % f.size()]];
            fan.push_back({c, a, b, 0.5 * (a - c).cross(b - c).norm()});
            totalArea += fan.back().area;
        }
        fans.push_back(std::move(fan));
    }
    const double meanArea = totalArea / static_cast<double>(fans.size());
    double worst = 0;
    auto sample = [&](const Vec3& p) { worst = std::max(worst, reference.closest(p).distance); };
    for (const Vec3& v : output.vertices) sample(v);
    for (const auto& fan : fans) {
        double area = 0;
        for (const Tri& t : fan) area += t.area;
        const int count = meanArea > 0 ? std::max(1, static_cast<int>(std::lround(opt.samplesPerMeanFace * area / meanArea))) : 1;
        for (int s = 0; s < count; ++s) {
            // Triangle by area, then a uniform point in it.
            double pick = uni(rng) * area;
            size_t k = 0;
            while (k + 1 < fan.size() && pick > fan[k].area) pick -= fan[k++].area;
            double r1 = std::sqrt(uni(rng)), r2 = uni(rng);
            const Tri& t = fan[k];
            sample((1 - r1) * t.a + r1 * (1 - r2) * t.b + r1 * r2 * t.c);
        }
    }
    return worst / reference.mesh().bboxDiagonal();
}

std::string QualityReport::to_json() const {
    nlohmann::json j;
    j["faces"] = faceCount;
    j["maxPlanarity"] = maxPlanarity;
    j["avgPlanarity"] = avgPlanarity;
    j["hausdorff"] = hausdorff;
    return j.dump(2);
}

QualityReport evaluate_quality(const PolyMesh& output, const TriangleTree& reference, const HausdorffOptions& opt) {
    QualityReport r;
    r.perFacePlanarity = planarity_errors(output, &r.degenerateFaces);
    r.faceCount = output.faceCount();
    for (double p : r.perFacePlanarity) {
        r.maxPlanarity = std::max(r.maxPlanarity, p);
        r.avgPlanarity += p;
    }
    if (r.faceCount) r.avgPlanarity /= r.faceCount;
    r.hausdorff = hausdorff_one_sided(output, reference, opt);
    return r;
}

}  // namespace cpfmesh
