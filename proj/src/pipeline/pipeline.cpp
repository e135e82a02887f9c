#include "octgan/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "octgan/evaluation.hpp"
#include "octgan/seed.hpp"
#include "octgan/study.hpp"
#include "octgan/trainer.hpp"

namespace octgan::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, json>& stage_defaults() {
    static const std::map<std::string, json> d = {
        {"simulate",
         {{"volumes", 3}, {"frames", 1}, {"a_lines", 256}, {"spectral_samples", 1024},
          {"scatterers_per_um2", 0.25}, {"noise_floor", 0.02}}},
        {"degrade", {{"mode", "2d"}, {"fwhm_fraction", 0.25}, {"window_lines", 6}, {"dynamic_range_db", 50.0}}},
        {"dataset", {{"frames", "single"}, {"train", 0}, {"val", 1}, {"patch_size", 256}, {"png", false}}},
        {"train",
         {{"mode", nullptr},
          {"frames", nullptr},
          {"generator", json::object()},
          {"discriminator", json::object()},
          {"train", json::object()}}},
        {"evaluate", {{"name", "phantom"}, {"noise", true}}},
        {"study", {{"split", "val"}, {"noise", true}, {"limit", 0}}},
    };
    return d;
}

// Stages whose artifacts a stage consumes when it has no explicit inputs.
const std::map<std::string, std::vector<std::string>>& producers() {
    static const std::map<std::string, std::vector<std::string>> p = {
        {"simulate", {}},
        {"degrade", {"simulate"}},
        {"dataset", {"degrade"}},
        {"train", {"dataset"}},
        {"evaluate", {"train", "dataset"}},
        {"study", {"train", "dataset"}},
    };
    return p;
}

std::size_t stage_rank(const std::string& stage) {
    const auto it = std::find(kStageOrder.begin(), kStageOrder.end(), stage);
    if (it == kStageOrder.end()) throw RecipeError("unknown stage '" + stage + "'");
    return static_cast<std::size_t>(it - kStageOrder.begin());
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw RecipeError("cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw RecipeError(p.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& p, const json& j) {
    std::ofstream out(p);
    out << j.dump(2) << '\n';
    if (!out) throw Error("cannot write " + p.string());
}

void check_keys(const json& given, const json& allowed, const std::string& where) {
    if (!given.is_object()) throw RecipeError(where + ": expected an object");
    for (const auto& [k, v] : given.items()) {
        if (!allowed.contains(k)) throw RecipeError(where + ": unknown key '" + k + "'");
    }
}

void check_train_sections(const json& params) {
    check_keys(params.at("generator"), json(gan::GeneratorConfig{}), "train.generator");
    check_keys(params.at("discriminator"), json(gan::DiscriminatorConfig{}), "train.discriminator");
    check_keys(params.at("train"), json(train::TrainConfig{}), "train.train");
}

// Run-relative spelling for paths inside the run, as given otherwise, so
// identical runs in different directories record identical configs.
std::string display_path(const fs::path& p, const fs::path& run_dir) {
    const auto rel = fs::weakly_canonical(p).lexically_relative(fs::weakly_canonical(run_dir));
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
}

bool volatile_output(const fs::path& p) { return p.filename().string().rfind("train_log", 0) == 0; }

std::vector<OutputRecord> list_outputs(const fs::path& dir, const fs::path& run_dir) {
    std::vector<OutputRecord> out;
    if (!fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        OutputRecord r;
        r.path = f.lexically_relative(run_dir).generic_string();
        if (!volatile_output(f)) {
            r.bytes = fs::file_size(f);
            r.sha256 = sha256_file(f);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string strip_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return s.substr(0, s.size() - suffix.size());
    }
    return s;
}

struct Artifacts {
    std::vector<fs::path> fringes;
    fs::path pairs_dir;
    fs::path manifest;
    fs::path checkpoint;
    std::string mode = "2d";
    std::string frames = "single";
};

// Explicit inputs, split by what the stage expects.
void apply_inputs(const StageSpec& spec, Artifacts& a) {
    if (spec.inputs.empty()) return;
    if (spec.stage == "degrade") {
        a.fringes = spec.inputs;
    } else if (spec.stage == "dataset") {
        if (spec.inputs.size() != 1) throw RecipeError("dataset: inputs must be one directory of tomogram pairs");
        a.pairs_dir = spec.inputs[0];
    } else if (spec.stage == "train") {
        if (spec.inputs.size() != 1) throw RecipeError("train: inputs must be one dataset manifest");
        a.manifest = spec.inputs[0];
    } else {
        if (spec.inputs.size() != 2) throw RecipeError(spec.stage + ": inputs must be [checkpoint, manifest]");
        a.checkpoint = spec.inputs[0];
        a.manifest = spec.inputs[1];
    }
}

void run_simulate(const json& p, std::uint64_t seed, const fs::path& dir, Artifacts& a) {
    SimulateParams sp;
    sp.frames = p.at("frames");
    sp.a_lines = p.at("a_lines");
    sp.spectral_samples = p.at("spectral_samples");
    sp.scatterers_per_um2 = p.at("scatterers_per_um2");
    sp.noise_floor = p.at("noise_floor");
    const std::size_t n = p.at("volumes");
    a.fringes.clear();
    for (std::size_t k = 0; k < n; ++k) {
        std::ostringstream name;
        name << "vol_" << std::setw(2) << std::setfill('0') << k << ".fringe.bin";
        const auto path = dir / name.str();
        fringe::save_fringes(path, simulate_tissue(sp, derive_seed(seed, k)));
        a.fringes.push_back(path);
    }
}

void run_degrade(const json& p, const fs::path& dir, Artifacts& a) {
    const auto mode = fringe::parse_degrade_mode(p.at("mode").get<std::string>());
    const double range = p.at("dynamic_range_db");
    for (const auto& f : a.fringes) {
        const auto stem = strip_suffix(f.filename().string(), ".fringe.bin");
        const auto fr = fringe::load_fringes(f);
        fringe::save_tomogram(dir / (stem + ".low.tomo.bin"),
                              fringe::reconstruct(fringe::degrade(fr, mode, p.at("fwhm_fraction"), p.at("window_lines")), range));
        fringe::save_tomogram(dir / (stem + ".high.tomo.bin"), fringe::reconstruct(fr, range));
    }
    a.pairs_dir = dir;
    a.mode = p.at("mode");
}

void run_dataset(const json& p, std::uint64_t seed, const fs::path& dir, Artifacts& a) {
    std::vector<dataset::VolumeSource> sources;
    std::vector<fs::path> lows;
    for (const auto& e : fs::directory_iterator(a.pairs_dir)) {
        if (e.path().filename().string().ends_with(".low.tomo.bin")) lows.push_back(e.path());
    }
    std::sort(lows.begin(), lows.end());
    for (const auto& low : lows) {
        const auto id = strip_suffix(low.filename().string(), ".low.tomo.bin");
        const auto high = a.pairs_dir / (id + ".high.tomo.bin");
        if (!fs::exists(high)) throw RecipeError("dataset: no partner " + high.string());
        sources.push_back({id, low, high});
    }
    if (sources.empty()) throw RecipeError("dataset: no tomogram pairs in " + a.pairs_dir.string());
    dataset::BuildOptions o;
    o.frames = dataset::parse_frames(p.at("frames").get<std::string>());
    o.val_count = p.at("val");
    o.train_count = p.at("train");
    if (o.train_count == 0) {
        if (sources.size() <= o.val_count) throw RecipeError("dataset: no volumes left for training");
        o.train_count = sources.size() - o.val_count;
    }
    o.seed = seed;
    o.extract.size = p.at("patch_size");
    o.png = p.at("png");
    dataset::build_dataset(sources, dir, o);
    a.manifest = dir / "manifest.jsonl";
    a.frames = p.at("frames");
}

void run_train(const json& p, std::uint64_t seed, const fs::path& dir, Artifacts& a) {
    const auto data = dataset::load_split(a.manifest, dataset::Split::Train);
    auto cfg = p.at("train").get<train::TrainConfig>();
    cfg.seed = seed;
    train::TrainOptions o;
    o.out_dir = dir;
    o.info = {{"mode", p.at("mode")}, {"frames", p.at("frames")}};
    train::train(data, p.at("generator").get<gan::GeneratorConfig>(), p.at("discriminator").get<gan::DiscriminatorConfig>(),
                 cfg, o);
    a.checkpoint = dir / "latest.ckpt";
}

std::string info_or(const gan::Checkpoint& ck, const char* key, const std::string& fallback) {
    if (ck.info.contains(key) && ck.info.at(key).is_string()) return ck.info.at(key).get<std::string>();
    return fallback;
}

void run_evaluate(const json& p, std::uint64_t seed, const fs::path& dir, const Artifacts& a) {
    const auto ck = gan::load_checkpoint(a.checkpoint);
    const auto mode = fringe::parse_degrade_mode(info_or(ck, "mode", a.mode));
    const auto frames = dataset::parse_frames(info_or(ck, "frames", a.frames));
    eval::MetricReport report;
    report.rows.push_back(eval::evaluate(a.checkpoint, a.manifest, mode, frames, p.at("name"), p.at("noise"), seed));
    report.write(dir / "metrics.csv", dir / "metrics.md");
}

void run_study(const json& p, std::uint64_t seed, const fs::path& dir, const Artifacts& a) {
    const auto ck = gan::load_checkpoint(a.checkpoint);
    auto g = ck.make_generator();
    const auto pairs = dataset::load_split(a.manifest, dataset::parse_split(p.at("split").get<std::string>()));
    const std::size_t limit = p.at("limit");
    const std::size_t n = limit == 0 ? pairs.size() : std::min(limit, pairs.size());
    std::mt19937_64 rng(seed);
    study::ImageBank bank;
    for (std::size_t i = 0; i < n; ++i) {
        bank.real.push_back(pairs[i].high_res);
        bank.generated.push_back(train::infer_normalized(pairs[i].low_res, g, p.at("noise"), rng));
    }
    bank.save(dir / "bank");
}

}  // namespace

Recipe Recipe::parse(const json& j, const fs::path& base) {
    check_keys(j, {{"name", 0}, {"stages", 0}}, "recipe");
    Recipe r;
    r.name = j.value("name", r.name);
    if (!j.contains("stages") || !j.at("stages").is_array()) throw RecipeError("recipe: 'stages' must be a list");
    for (const auto& s : j.at("stages")) {
        check_keys(s, {{"stage", 0}, {"seed", 0}, {"params", 0}, {"config", 0}, {"inputs", 0}}, "recipe stage");
        StageSpec spec;
        if (!s.contains("stage")) throw RecipeError("recipe stage without a 'stage' name");
        spec.stage = s.at("stage").get<std::string>();
        spec.seed = s.value("seed", std::uint64_t{0});
        spec.params = s.value("params", json::object());
        if (s.contains("config")) spec.config = base / s.at("config").get<std::string>();
        for (const auto& in : s.value("inputs", json::array())) spec.inputs.push_back(base / in.get<std::string>());
        r.stages.push_back(std::move(spec));
    }
    return r;
}

Recipe Recipe::load(const fs::path& path) { return parse(read_json_file(path), path.parent_path()); }

json effective_params(const StageSpec& spec) {
    stage_rank(spec.stage);
    json p = stage_defaults().at(spec.stage);
    json given = json::object();
    if (spec.config) {
        if (!fs::exists(*spec.config)) throw RecipeError(spec.stage + ": config not found: " + spec.config->string());
        given = read_json_file(*spec.config);
    }
    if (!spec.params.is_object()) throw RecipeError(spec.stage + ": params must be an object");
    given.merge_patch(spec.params);
    check_keys(given, p, spec.stage + " params");
    for (const auto& [k, v] : given.items()) p[k] = v;
    if (spec.stage == "train") {
        check_train_sections(p);
        p["generator"] = p.at("generator").get<gan::GeneratorConfig>();
        p["discriminator"] = p.at("discriminator").get<gan::DiscriminatorConfig>();
        p["train"] = p.at("train").get<train::TrainConfig>();
        p["train"]["seed"] = spec.seed;
    }
    return p;
}

void Recipe::validate() const {
    if (stages.empty()) throw RecipeError("recipe has no stages");
    std::set<std::string> seen;
    std::optional<std::size_t> last;
    for (const auto& s : stages) {
        const auto rank = stage_rank(s.stage);
        if (last && rank <= *last) {
            throw RecipeError("stage '" + s.stage + "' is out of order (expected simulate, degrade, dataset, train, "
                              "evaluate, study)");
        }
        last = rank;
        effective_params(s);
        for (const auto& in : s.inputs) {
            if (!fs::exists(in)) throw RecipeError(s.stage + ": input not found: " + in.string());
        }
        if (s.stage == "simulate" && !s.inputs.empty()) throw RecipeError("simulate takes no inputs");
        if (s.inputs.empty()) {
            for (const auto& need : producers().at(s.stage)) {
                if (!seen.count(need)) {
                    throw RecipeError(s.stage + ": needs the output of '" + need + "' or explicit inputs");
                }
            }
        }
        seen.insert(s.stage);
    }
}

json RunManifest::to_json() const {
    json stages_j = json::array();
    for (const auto& s : stages) {
        json outs = json::array();
        for (const auto& o : s.outputs) {
            if (o.sha256) {
                outs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"sha256", *o.sha256}});
            } else {
                outs.push_back({{"path", o.path}, {"volatile", true}});
            }
        }
        json sj = {{"stage", s.stage}, {"seed", s.seed}, {"dir", s.dir}, {"status", s.status}, {"outputs", outs}};
        if (!s.error.empty()) sj["error"] = s.error;
        stages_j.push_back(std::move(sj));
    }
    return {{"recipe", recipe}, {"complete", complete}, {"stages", stages_j}};
}

RunManifest run_recipe(const Recipe& recipe, const fs::path& out_dir) {
    recipe.validate();
    fs::create_directories(out_dir);
    RunManifest manifest;
    manifest.recipe = recipe.name;
    Artifacts a;
    const auto manifest_path = out_dir / "manifest.json";

    for (std::size_t i = 0; i < recipe.stages.size(); ++i) {
        const auto& spec = recipe.stages[i];
        std::ostringstream name;
        name << std::setw(2) << std::setfill('0') << i + 1 << "_" << spec.stage;
        const auto dir = out_dir / name.str();
        fs::remove_all(dir);
        fs::create_directories(dir);

        StageRecord rec;
        rec.stage = spec.stage;
        rec.seed = spec.seed;
        rec.dir = name.str();
        try {
            apply_inputs(spec, a);
            json p = effective_params(spec);
            if (spec.stage == "train") {
                if (p.at("mode").is_null()) p["mode"] = a.mode;
                if (p.at("frames").is_null()) p["frames"] = a.frames;
            }
            json inputs = json::array();
            for (const auto& in : spec.inputs) inputs.push_back(display_path(in, out_dir));
            write_json_file(dir / "stage_config.json",
                            {{"stage", spec.stage}, {"seed", spec.seed}, {"params", p}, {"inputs", inputs}});

            if (spec.stage == "simulate") run_simulate(p, spec.seed, dir, a);
            else if (spec.stage == "degrade") run_degrade(p, dir, a);
            else if (spec.stage == "dataset") run_dataset(p, spec.seed, dir, a);
            else if (spec.stage == "train") run_train(p, spec.seed, dir, a);
            else if (spec.stage == "evaluate") run_evaluate(p, spec.seed, dir, a);
            else run_study(p, spec.seed, dir, a);
            rec.status = "ok";
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.error = e.what();
            rec.outputs = list_outputs(dir, out_dir);
            manifest.stages.push_back(std::move(rec));
            write_json_file(manifest_path, manifest.to_json());
            throw;
        }
        rec.outputs = list_outputs(dir, out_dir);
        manifest.stages.push_back(std::move(rec));
        write_json_file(manifest_path, manifest.to_json());
    }
    manifest.complete = true;
    write_json_file(manifest_path, manifest.to_json());
    return manifest;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

fringe::FringeVolume simulate_tissue(const SimulateParams& p, std::uint64_t seed) {
    fringe::SourceSpectrum source;
    source.samples = p.spectral_samples;
    fringe::SimulationOptions sim;
    sim.seed = seed;
    const double depth_um = fringe::unambiguous_depth_um(source, sim.axial_pixel_um);
    const double lateral_um = static_cast<double>(p.a_lines) * sim.lateral_pitch_um;
    const auto phantom = fringe::tissue_phantom(0.95 * depth_um, lateral_um, p.scatterers_per_um2, seed);
    return fringe::simulate_fringes(phantom, source, p.frames, p.noise_floor, sim);
}

}  // namespace octgan::pipeline
