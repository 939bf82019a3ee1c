#pragma once

#include "cpfmesh/cpf_optimizer.hpp"
#include "cpfmesh/extraction.hpp"
#include "cpfmesh/planarization.hpp"
#include "cpfmesh/quality.hpp"
#include "cpfmesh/seamless.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpfmesh {

enum class Mode { PH, PQ, Sanity };

// Invalid configuration or unusable artifacts (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A pipeline stage could not complete (CLI exit code 3).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Stage order; a stage name selects where to stop or resume.
const std::vector<std::string>& pipeline_stages();

struct PipelineConfig {
    std::string inputPath;
    std::string outputDir = "cpfmesh_out";
    Mode mode = Mode::PH;
    double delta = 0.5;               // percent of the bbox diagonal
    double eta = 0.25;                // percent of the total area
    double targetMaxPlanarity = 1.0;  // percent
    double rhoMin = 0.01;
    double deltaP = 0.05;
    double deltaE = 0.2;
    int betaRounds = 10;
    int planarizationRounds = 30;
    std::uint64_t randomSeed = 0;
    bool randomInit = false;
    double gridSpacing = 1.0;  // lattice spacing h in parameter units
    bool dumpAll = false;
    std::string stopAfter;     // empty: run every stage
    std::string resumeFrom;    // empty: start from scratch

    int N() const { return mode == Mode::PH ? 6 : mode == Mode::PQ ? 4 : 1; }
    void validate() const;
};

const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);

// "key = value" lines, '#' comments. Keys match the CLI flags without dashes.
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});
void apply_config_value(PipelineConfig& c, const std::string& key, const std::string& value);

// Dependency hashes embedded in artifacts; a stage's hash covers the input and every parameter
// that can change its output.
struct StageHashes {
    std::string fields, primal, dual, final;
};
StageHashes stage_hashes(const PipelineConfig& c);

struct PipelineResult {
    std::vector<std::string> executed;
    std::map<std::string, double> seconds;
    std::optional<CpfResult> cpf;
    std::optional<IntegrationCheck> integration;
    std::optional<SeamlessParam> param;
    ExtractionReport extraction;
    DualReport dual;
    std::optional<PlanarizationResult> planarization;
    PolyMesh primal, dualMesh, finalMesh;
    std::optional<QualityReport> pre;    // the mesh handed to planarization
    std::optional<QualityReport> quality;
    std::map<std::string, double> preAvgPlanarityByRegion;
    double poissonResidual = 0;
    std::string reportJson;
};

PipelineResult run_pipeline(const PipelineConfig& config);

// Region of the reference face nearest to each face barycenter.
std::vector<Region> face_regions(const PolyMesh& mesh, const TriangleSurface& reference, const CurvatureField& curv);

}  // namespace cpfmesh
