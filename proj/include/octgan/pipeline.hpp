#pragma once

// Recipe runner: simulate -> degrade -> dataset -> train -> evaluate -> study,
// each stage writing into its own directory together with the exact
// parameters and seed it ran with. Recipe schema: docs/recipes.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "octgan/dataset.hpp"
#include "octgan/fringe_lab.hpp"

namespace octgan::pipeline {

class RecipeError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Canonical order; a recipe lists a subsequence of it.
inline const std::vector<std::string> kStageOrder = {"simulate", "degrade", "dataset", "train", "evaluate", "study"};

struct StageSpec {
    std::string stage;
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
    // Parameters file merged under `params` (inline keys win).
    std::optional<std::filesystem::path> config;
    // Explicit inputs replacing the artifacts of earlier stages.
    std::vector<std::filesystem::path> inputs;
};

struct Recipe {
    std::string name = "recipe";
    std::vector<StageSpec> stages;

    // Relative config/input paths resolve against `base`.
    static Recipe parse(const nlohmann::json& j, const std::filesystem::path& base);
    static Recipe load(const std::filesystem::path& path);
    // Throws RecipeError for unknown stages or keys, out-of-order stages,
    // missing config/input paths and stages without a producer for their
    // inputs. Nothing is executed.
    void validate() const;
};

// Parameters of a stage after merging the config file, inline params and
// defaults.
nlohmann::json effective_params(const StageSpec& spec);

struct OutputRecord {
    std::string path;  // relative to the run directory
    // Size and hash are absent for files that legitimately differ between
    // identical runs (wall-clock training logs).
    std::uintmax_t bytes = 0;
    std::optional<std::string> sha256;
};

struct StageRecord {
    std::string stage;
    std::uint64_t seed = 0;
    std::string dir;
    std::string status;  // ok | failed
    std::string error;
    std::vector<OutputRecord> outputs;
};

struct RunManifest {
    std::string recipe;
    bool complete = false;
    std::vector<StageRecord> stages;

    nlohmann::json to_json() const;
};

// Runs every stage in order, writing <out>/manifest.json after each one. A
// failing stage stops the run; the manifest then lists the partial
// artifacts and the error, and the error is rethrown.
RunManifest run_recipe(const Recipe& recipe, const std::filesystem::path& out_dir);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Building blocks shared with the command-line front end.
struct SimulateParams {
    std::size_t frames = 1;
    std::size_t a_lines = 256;
    std::size_t spectral_samples = 1024;
    double scatterers_per_um2 = 0.25;
    double noise_floor = 0.02;
};
fringe::FringeVolume simulate_tissue(const SimulateParams& p, std::uint64_t seed);

}  // namespace octgan::pipeline
