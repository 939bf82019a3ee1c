#include "cpfmesh/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cpfmesh {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> stages{"curvature", "guiding", "constraints", "fields", "integration",
                                                 "extraction", "dual", "planarization", "metrics"};
    return stages;
}

const char* mode_name(Mode m) {
    switch (m) {
    case Mode::PH: return "PH";
    case Mode::PQ: return "PQ";
    case Mode::Sanity: return "sanity";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    std::string l = s;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "ph") return Mode::PH;
    if (l == "pq") return Mode::PQ;
    if (l == "sanity") return Mode::Sanity;
    throw ConfigError("unknown mode '" + s + "' (expected PH, PQ or sanity)");
}

namespace {

int stage_index(const std::string& name) {
    const auto& s = pipeline_stages();
    const auto it = std::find(s.begin(), s.end(), name);
    if (it == s.end()) throw ConfigError("unknown stage '" + name + "'");
    return static_cast<int>(it - s.begin());
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("value of '" + key + "' is not a number: " + v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("value of '" + key + "' is not a boolean: " + v);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// FNV-1a over the canonical text of the inputs; stable across platforms.
std::string fnv_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read input mesh " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string num(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

void PipelineConfig::validate() const {
    if (!(delta > 0)) throw ConfigError("delta must be > 0");
    if (!(eta > 0)) throw ConfigError("eta must be > 0");
    if (!(targetMaxPlanarity > 0)) throw ConfigError("max-planarity must be > 0");
    if (!(gridSpacing > 0)) throw ConfigError("h must be > 0");
    if (betaRounds < 1) throw ConfigError("beta-rounds must be >= 1");
    if (planarizationRounds < 0) throw ConfigError("planarization-rounds must be >= 0");
    if (!(rhoMin >= 0 && deltaP > 0 && deltaE > 0)) throw ConfigError("region thresholds must be positive");
    if (inputPath.empty()) throw ConfigError("no input mesh given");
    if (!stopAfter.empty()) stage_index(stopAfter);
    if (!resumeFrom.empty()) stage_index(resumeFrom);
    if (!stopAfter.empty() && !resumeFrom.empty() && stage_index(stopAfter) < stage_index(resumeFrom))
        throw ConfigError("stage '" + stopAfter + "' comes before resume stage '" + resumeFrom + "'");
}

void apply_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
    if (key == "input") c.inputPath = value;
    else if (key == "out" || key == "output") c.outputDir = value;
    else if (key == "mode") c.mode = parse_mode(value);
    else if (key == "delta") c.delta = to_double(key, value);
    else if (key == "eta") c.eta = to_double(key, value);
    else if (key == "max-planarity") c.targetMaxPlanarity = to_double(key, value);
    else if (key == "rho-min") c.rhoMin = to_double(key, value);
    else if (key == "delta-p") c.deltaP = to_double(key, value);
    else if (key == "delta-e") c.deltaE = to_double(key, value);
    else if (key == "beta-rounds") c.betaRounds = static_cast<int>(to_double(key, value));
    else if (key == "planarization-rounds") c.planarizationRounds = static_cast<int>(to_double(key, value));
    else if (key == "seed") c.randomSeed = static_cast<std::uint64_t>(to_double(key, value));
    else if (key == "random-init") c.randomInit = to_bool(key, value);
    else if (key == "h") c.gridSpacing = to_double(key, value);
    else if (key == "dump-all") c.dumpAll = to_bool(key, value);
    else if (key == "stage") c.stopAfter = value;
    else if (key == "resume") c.resumeFrom = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineNo) + ": expected key = value");
        apply_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

StageHashes stage_hashes(const PipelineConfig& c) {
    StageHashes h;
    std::ostringstream f;
    f << fnv_hash(file_bytes(c.inputPath)) << '|' << mode_name(c.mode) << '|' << num(c.delta) << '|' << num(c.eta) << '|'
      << num(c.rhoMin) << '|' << num(c.deltaP) << '|' << num(c.deltaE) << '|' << c.betaRounds << '|' << c.randomSeed << '|'
      << c.randomInit << '|' << num(c.gridSpacing);
    h.fields = fnv_hash(f.str());
    h.primal = fnv_hash(h.fields + "|extraction");
    h.dual = fnv_hash(h.primal + "|dual");
    h.final = fnv_hash(h.dual + "|" + num(c.targetMaxPlanarity) + "|" + std::to_string(c.planarizationRounds));
    return h;
}

std::vector<Region> face_regions(const PolyMesh& mesh, const TriangleSurface& reference, const CurvatureField& curv) {
    const TriangleTree tree(reference);
    std::vector<Region> out;
    for (const auto& f : mesh.faces) {
        Vec3 c = Vec3::Zero();
        for (int v : f) c += mesh.vertices[v];
        out.push_back(curv.region[tree.closest(c / static_cast<double>(f.size())).face]);
    }
    return out;
}

namespace {

json vec2_list(const std::vector<Vec2>& v) {
    json a = json::array();
    for (const Vec2& x : v) a.push_back({x.x(), x.y()});
    return a;
}

std::vector<Vec2> read_vec2_list(const json& a) {
    std::vector<Vec2> out;
    for (const auto& x : a) out.emplace_back(x.at(0).get<double>(), x.at(1).get<double>());
    return out;
}

json mesh_json(const PolyMesh& m) {
    json v = json::array();
    for (const Vec3& p : m.vertices) v.push_back({p.x(), p.y(), p.z()});
    return {{"vertices", v}, {"faces", m.faces}};
}

PolyMesh read_mesh_json(const json& j) {
    PolyMesh m;
    for (const auto& p : j.at("vertices")) m.vertices.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    m.faces = j.at("faces").get<std::vector<std::vector<int>>>();
    return m;
}

class Runner {
public:
    explicit Runner(const PipelineConfig& c) : c_(c) {}

    PipelineResult run() {
        c_.validate();
        int first = c_.resumeFrom.empty() ? 0 : stage_index(c_.resumeFrom);
        const int last = c_.stopAfter.empty() ? static_cast<int>(pipeline_stages().size()) - 1 : stage_index(c_.stopAfter);
        try {
            mesh_ = load_mesh(c_.inputPath);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("input mesh: ") + e.what());
        }
        hashes_ = stage_hashes(c_);
        fs::create_directories(artifacts());
        const bool quadOutput = c_.mode != Mode::PH;

        // Nothing before the fields is stored, so resuming there is a fresh start. Later resume
        // points load the newest artifact they depend on; curvature is cheap and recomputed.
        const int fieldsIdx = stage_index("fields"), extractionIdx = stage_index("extraction");
        const int dualIdx = stage_index("dual"), planIdx = stage_index("planarization"), metricsIdx = stage_index("metrics");
        if (first <= fieldsIdx) first = 0;
        if (first > fieldsIdx && first <= extractionIdx) fields_ = load_fields();
        if (first >= dualIdx) r_.primal = load_mesh_artifact("primal", hashes_.primal);
        if (first >= planIdx && !quadOutput) r_.dualMesh = load_mesh_artifact("dual", hashes_.dual);
        if (first == metricsIdx) r_.finalMesh = load_mesh_artifact("final", hashes_.final);
        if (first > 0) curv_ = compute_curvature(mesh_, thresholds());

        stage("curvature", first, last, [&] { do_curvature(); });
        stage("guiding", first, last, [&] { do_guiding(); });
        stage("constraints", first, last, [&] { do_constraints(); });
        stage("fields", first, last, [&] { do_fields(); });
        stage("integration", first, last, [&] { do_integration(); });
        stage("extraction", first, last, [&] { do_extraction(); });
        if (!quadOutput) stage("dual", first, last, [&] { do_dual(); });
        stage("planarization", first, last, [&] { do_planarization(quadOutput); });
        stage("metrics", first, last, [&] { do_metrics(quadOutput); });
        write_report();
        r_.param = param_;
        return r_;
    }

private:
    template <class F>
    void stage(const std::string& name, int first, int last, F&& body) {
        const int idx = stage_index(name);
        if (idx < first || idx > last) return;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
        r_.seconds[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r_.executed.push_back(name);
    }

    fs::path out() const { return fs::path(c_.outputDir); }
    fs::path artifacts() const { return out() / "artifacts"; }

    RegionThresholds thresholds() const {
        RegionThresholds t;
        t.planar = c_.rhoMin;
        t.parabolic = c_.deltaP;
        t.umbilic = c_.deltaE;
        return t;
    }

    void do_curvature() {
        curv_ = compute_curvature(mesh_, thresholds());
        if (!c_.dumpAll) return;
        std::ofstream csv(out() / "curvature.csv");
        csv << "face,kMin,kMax,rho,phi,region\n" << std::setprecision(10);
        for (int f = 0; f < mesh_.faceCount(); ++f)
            csv << f << ',' << curv_.principal[f].kMin << ',' << curv_.principal[f].kMax << ',' << curv_.rho[f] << ','
                << curv_.phi[f] << ',' << region_name(curv_.region[f]) << '\n';
    }

    void do_guiding() {
        GuidingOptions go;
        go.mode = c_.mode == Mode::PH ? GuidingMode::Hexagonal : GuidingMode::Quad;
        guiding_ = solve_guiding_field(mesh_, curv_, go);
        if (!c_.dumpAll) return;
        std::ofstream csv(out() / "guiding.csv");
        csv << "face,dx,dy\n" << std::setprecision(10);
        for (int f = 0; f < mesh_.faceCount(); ++f) {
            const Vec2 d = guiding_.direction(f);
            csv << f << ',' << d.x() << ',' << d.y() << '\n';
        }
    }

    void do_constraints() {
        // Grid spacing h scales element size: unit metric length becomes h.
        metric_ = sizing_metric(curv_, sizing_from_fractions(mesh_, c_.delta / 100.0, c_.eta / 100.0));
        for (Mat2& g : metric_) g /= c_.gridSpacing * c_.gridSpacing;
        if (c_.mode == Mode::Sanity) {
            cs_ = ConstraintSet{};
            cs_.N = 1;
            cs_.metric = metric_;
        } else {
            cs_ = build_constraints(mesh_, curv_, guiding_, metric_, c_.mode == Mode::PH ? FieldMode::Hexagonal : FieldMode::Quad);
        }
    }

    void do_fields() {
        const int N = c_.N();
        const FieldPair init = c_.randomInit ? random_fields(mesh_, metric_, N, c_.randomSeed)
                                             : initialize_fields(mesh_, guiding_, metric_, N);
        CpfOptions opt;
        opt.maxRounds = c_.betaRounds;
        opt.accept = [&](const FieldPair& f, const CpfEnergies&) {
            const Matching mt = compute_matching(mesh_, f);
            if (!mt.allConsistent()) return false;
            SeamlessParam p = cut_and_integrate(mesh_, f, mt);
            const IntegrationCheck ck = check_integration(mt, p);
            if (!ck.success()) return false;
            matching_ = mt;
            param_ = std::move(p);
            r_.integration = ck;
            return true;
        };
        r_.cpf = optimize_cpf(mesh_, cs_, init, opt);
        fields_ = r_.cpf->fields;
        std::ofstream csv(out() / "cpf_rounds.csv");
        csv << "round,beta,iterations,finalCost,maxCpfResidual,minLico,accepted\n" << std::setprecision(10);
        for (const auto& rd : r_.cpf->rounds)
            csv << rd.round << ',' << rd.beta << ',' << rd.solver.iterations << ',' << rd.solver.finalCost << ','
                << rd.energies.maxCpfResidual << ',' << rd.energies.minLico << ',' << rd.accepted << '\n';
        json j{{"stage", "fields"}, {"hash", hashes_.fields}, {"N", fields_.N}, {"U", vec2_list(fields_.U)},
               {"V", vec2_list(fields_.V)}, {"z", vec2_list(fields_.z)}, {"zSmooth", vec2_list(fields_.zSmooth)},
               {"success", r_.cpf->success}};
        std::ofstream(artifacts() / "fields.json") << j.dump();
        if (!r_.cpf->success)
            throw StageError("fields", "integration with integer seams failed in all " + std::to_string(c_.betaRounds) +
                                           " penalty rounds");
    }

    FieldPair load_fields() {
        const json j = read_artifact("fields", hashes_.fields);
        if (!j.value("success", false)) throw ConfigError("fields artifact is from a failed run");
        FieldPair f;
        f.N = j.at("N").get<int>();
        f.U = read_vec2_list(j.at("U"));
        f.V = read_vec2_list(j.at("V"));
        f.z = read_vec2_list(j.at("z"));
        f.zSmooth = read_vec2_list(j.at("zSmooth"));
        if (static_cast<int>(f.U.size()) != mesh_.faceCount() || f.U.size() != f.V.size())
            throw ConfigError("fields artifact does not match the input mesh");
        return f;
    }

    json read_artifact(const std::string& name, const std::string& hash) {
        const fs::path p = artifacts() / (name + ".json");
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot resume: missing artifact " + p.string());
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ConfigError("cannot resume: corrupt artifact " + p.string() + ": " + e.what());
        }
        if (j.value("hash", std::string()) != hash)
            throw ConfigError("cannot resume: " + p.string() + " was produced with a different input or configuration");
        return j;
    }

    PolyMesh load_mesh_artifact(const std::string& name, const std::string& hash) {
        try {
            return read_mesh_json(read_artifact(name, hash).at("mesh"));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("cannot resume: malformed " + name + " artifact: " + e.what());
        }
    }

    void save_mesh(const std::string& name, const std::string& hash, const PolyMesh& m) {
        write_obj((out() / (name + ".obj")).string(), m);
        std::ofstream(artifacts() / (name + ".json")) << json{{"stage", name}, {"hash", hash}, {"mesh", mesh_json(m)}}.dump();
    }

    void ensure_param() {
        if (param_) return;
        matching_ = compute_matching(mesh_, fields_);
        param_ = cut_and_integrate(mesh_, fields_, *matching_);
        r_.integration = check_integration(*matching_, *param_);
        if (!r_.integration->success()) throw StageError("integration", r_.integration->summary());
    }

    void do_integration() {
        ensure_param();
        r_.poissonResidual = param_->poissonResidual;
        if (c_.dumpAll) write_cut_obj((out() / "cut.obj").string(), mesh_, *param_);
    }

    void do_extraction() {
        ensure_param();
        r_.primal = assemble_primal(mesh_, *param_, &r_.extraction);
        if (r_.primal.faces.empty()) throw StageError("extraction", "no faces extracted");
        if (!is_manifold(r_.primal)) throw StageError("extraction", "primal mesh is not manifold");
        save_mesh("primal", hashes_.primal, r_.primal);
    }

    void do_dual() {
        r_.dualMesh = barycentric_dual(r_.primal, true, &r_.dual);
        if (r_.dual.inconsistentFans > 0)
            throw StageError("dual", std::to_string(r_.dual.inconsistentFans) + " interior vertices with inconsistent fans");
        if (r_.dualMesh.faces.empty()) throw StageError("dual", "empty dual after strip removal");
        save_mesh("dual", hashes_.dual, r_.dualMesh);
    }

    const PolyMesh& planarization_input(bool quadOutput) const { return quadOutput ? r_.primal : r_.dualMesh; }

    void do_planarization(bool quadOutput) {
        PlanarizationOptions opt;
        opt.targetMaxPlanarity = c_.targetMaxPlanarity;
        opt.maxRounds = c_.planarizationRounds;
        opt.quadFairness = c_.mode == Mode::PQ;
        r_.planarization = planarize(planarization_input(quadOutput), mesh_, opt);
        r_.finalMesh = r_.planarization->mesh;
        std::ofstream(out() / "planarization.csv") << r_.planarization->csv();
        save_mesh("final", hashes_.final, r_.finalMesh);
    }

    void do_metrics(bool quadOutput) {
        const TriangleTree tree(mesh_);
        HausdorffOptions ho;
        ho.seed = c_.randomSeed;
        const PolyMesh& before = planarization_input(quadOutput);
        r_.pre = evaluate_quality(before, tree, ho);
        r_.quality = evaluate_quality(r_.finalMesh, tree, ho);
        const auto regions = face_regions(before, mesh_, curv_);
        std::map<std::string, std::pair<double, int>> acc;
        for (size_t f = 0; f < regions.size(); ++f) {
            auto& a = acc[region_name(regions[f])];
            a.first += r_.pre->perFacePlanarity[f];
            ++a.second;
        }
        for (const auto& [name, a] : acc) r_.preAvgPlanarityByRegion[name] = a.first / a.second;
        std::ofstream csv(out() / "planarity.csv");
        csv << "face,degree,planarity\n" << std::setprecision(10);
        for (int f = 0; f < r_.finalMesh.faceCount(); ++f)
            csv << f << ',' << r_.finalMesh.faces[f].size() << ',' << r_.quality->perFacePlanarity[f] << '\n';
    }

    void write_report() {
        json j;
        if (r_.quality) j = json::parse(r_.quality->to_json());
        j["mode"] = mode_name(c_.mode);
        j["configHash"] = hashes_.final;
        j["stages"] = r_.executed;
        j["seconds"] = r_.seconds;
        if (r_.cpf) {
            j["cpf"] = {{"success", r_.cpf->success}, {"round", r_.cpf->round}, {"beta", r_.cpf->beta},
                        {"maxCpfResidual", r_.cpf->rounds.empty() ? 0.0 : r_.cpf->rounds.back().energies.maxCpfResidual}};
        }
        if (r_.integration)
            j["integration"] = {{"flippedFaces", r_.integration->flippedFaces}, {"maxSeamError", r_.integration->maxSeamError},
                                {"poissonResidual", r_.poissonResidual}};
        if (matching_) j["singularities"] = matching_->singular.size();
        if (!r_.primal.faces.empty())
            j["extraction"] = {{"primalVertices", r_.primal.vertexCount()}, {"primalFaces", r_.primal.faceCount()},
                               {"abortedTraces", r_.extraction.abortedTraces}, {"rejectedWalks", r_.extraction.rejectedWalks},
                               {"quadsSplit", r_.extraction.quadsSplit}, {"dualFaces", r_.dualMesh.faceCount()}};
        if (r_.planarization)
            j["planarization"] = {{"rounds", static_cast<int>(r_.planarization->rounds.size()) - 1},
                                  {"reachedTarget", r_.planarization->reachedTarget},
                                  {"minLengthRatio", r_.planarization->minLengthRatio}};
        if (r_.pre)
            j["prePlanarization"] = {{"maxPlanarity", r_.pre->maxPlanarity}, {"avgPlanarity", r_.pre->avgPlanarity},
                                     {"avgByRegion", r_.preAvgPlanarityByRegion}};
        r_.reportJson = j.dump(2);
        std::ofstream(out() / "report.json") << r_.reportJson << '\n';
    }

    PipelineConfig c_;
    TriangleSurface mesh_;
    StageHashes hashes_;
    CurvatureField curv_;
    RoSyField guiding_;
    std::vector<Mat2> metric_;
    ConstraintSet cs_;
    FieldPair fields_;
    std::optional<Matching> matching_;
    std::optional<SeamlessParam> param_;
    PipelineResult r_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) { return Runner(config).run(); }

}  // namespace cpfmesh
