#include "cpfmesh/pipeline.hpp"
#include "cpfmesh/shapes.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace cpfmesh;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kStageFailure = 3;

int run_command(PipelineConfig& cfg, const std::string& configPath, bool outGiven, const std::map<std::string, std::string>& overrides) {
    if (!configPath.empty()) {
        // Positional input and --out win over the file.
        const PipelineConfig cli = cfg;
        cfg = load_config(configPath, cfg);
        cfg.inputPath = cli.inputPath;
        if (outGiven) cfg.outputDir = cli.outputDir;
    }
    for (const auto& [k, v] : overrides) apply_config_value(cfg, k, v);
    const PipelineResult r = run_pipeline(cfg);
    std::cout << r.reportJson << '\n';
    if (r.planarization && !r.planarization->reachedTarget)
        std::cerr << "warning: planarity target not reached; best max planarity " << r.planarization->maxPlanarity << "%\n";
    return kOk;
}

TriangleSurface make_shape(const std::string& name, int res) {
    if (name == "sphere") return shapes::icosphere(res);
    if (name == "cylinder") return shapes::cylinder(1.0, 4.0, 8 * res, 4 * res);
    if (name == "grid" || name == "disk") return shapes::grid(res);
    if (name == "saddle") return shapes::hyperbolic_paraboloid(res);
    if (name == "torus") return shapes::torus_sector(2.0, 0.8, 1.5, 2 * res, res);
    throw ConfigError("unknown shape '" + name + "' (sphere, cylinder, grid, saddle, torus)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar hexagonal and quad remeshing from coordinate power fields"};
    app.require_subcommand(1);

    PipelineConfig cfg;
    std::string configPath;
    std::map<std::string, std::string> overrides;
    std::string mode, delta, eta, maxPlanarity, seed, stage, resume, h;
    bool dumpAll = false;

    auto* run = app.add_subcommand("run", "Run the pipeline on a triangle mesh");
    run->add_option("input", cfg.inputPath, "Input OBJ")->required();
    run->add_option("-o,--out", cfg.outputDir, "Output directory");
    run->add_option("-c,--config", configPath, "key = value config file; flags override it");
    run->add_option("--mode", mode, "PH (hexagonal), PQ (quad) or sanity (N=1)");
    run->add_option("--delta", delta, "Approximation error, percent of bbox diagonal");
    run->add_option("--eta", eta, "Target face area, percent of total area");
    run->add_option("--max-planarity", maxPlanarity, "Planarity target in percent");
    run->add_option("--seed", seed, "Random seed");
    run->add_flag("--dump-all", dumpAll, "Write every intermediate artifact");
    run->add_option("--stage", stage, "Stop after this stage");
    run->add_option("--resume", resume, "Resume from this stage using artifacts in the output directory");
    run->add_option("--grid-spacing", h, "Lattice spacing h in parameter units")->group("");

    std::string shape, shapeOut;
    int resolution = 3;
    auto* gen = app.add_subcommand("generate", "Write an analytic test surface");
    gen->add_option("shape", shape, "sphere, cylinder, grid, saddle or torus")->required();
    gen->add_option("output", shapeOut, "Output OBJ")->required();
    gen->add_option("-r,--resolution", resolution, "Subdivision level or grid resolution");

    std::string metricOut, metricRef;
    std::uint64_t metricSeed = 0;
    auto* met = app.add_subcommand("metrics", "Planarity and Hausdorff of a mesh against a reference");
    met->add_option("mesh", metricOut, "Polygon mesh OBJ")->required();
    met->add_option("reference", metricRef, "Reference triangle OBJ")->required();
    met->add_option("--seed", metricSeed, "Sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*run) {
            const std::pair<const char*, std::string*> flags[] = {{"mode", &mode}, {"delta", &delta}, {"eta", &eta},
                                                                  {"max-planarity", &maxPlanarity}, {"seed", &seed},
                                                                  {"stage", &stage}, {"resume", &resume}, {"h", &h}};
            for (const auto& [key, value] : flags)
                if (!value->empty()) overrides[key] = *value;
            if (dumpAll) overrides["dump-all"] = "true";
            return run_command(cfg, configPath, run->count("--out") > 0, overrides);
        }
        if (*gen) {
            if (resolution < 1) throw ConfigError("resolution must be >= 1");
            write_obj(shapeOut, make_shape(shape, resolution));
            return kOk;
        }
        if (*met) {
            const TriangleSurface ref = load_mesh(metricRef);
            HausdorffOptions ho;
            ho.seed = metricSeed;
            std::cout << evaluate_quality(load_poly_mesh(metricOut), TriangleTree(ref), ho).to_json() << '\n';
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const MeshError& e) {
        std::cerr << "error: invalid mesh: " << e.what() << '\n';
        return kValidation;
    } catch (const StageError& e) {
        std::cerr << "error: stage " << e.what() << '\n';
        return kStageFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kStageFailure;
    }
    return kOk;
}
