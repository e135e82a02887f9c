#include <doctest.h>

#include <fstream>

#include "octgan/pipeline.hpp"
#include "octgan/study.hpp"

using namespace octgan;
using namespace octgan::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json tiny_recipe() {
    return json::parse(R"({
      "name": "tiny",
      "stages": [
        {"stage": "simulate", "seed": 1,
         "params": {"volumes": 3, "a_lines": 64, "spectral_samples": 256}},
        {"stage": "degrade", "params": {"mode": "axial"}},
        {"stage": "dataset", "seed": 2, "params": {"val": 1, "patch_size": 32}},
        {"stage": "train", "seed": 3,
         "params": {"generator": {"depth": 3, "base_channels": 2, "noise_enabled": false},
                    "discriminator": {"base_channels": 2},
                    "train": {"epochs": 2, "batch_size": 4}}},
        {"stage": "evaluate", "seed": 4, "params": {"noise": false}},
        {"stage": "study", "seed": 5, "params": {"noise": false}}
      ]
    })");
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

}  // namespace

TEST_CASE("sha256 known answers") {
    TempDir dir("octgan_sha");
    const auto p = dir.path / "abc.txt";
    std::ofstream(p) << "abc";
    CHECK(sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::ofstream(p, std::ios::trunc).close();
    CHECK(sha256_file(p) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("recipe validation rejects bad recipes before anything runs") {
    TempDir dir("octgan_recipe_bad");
    auto expect_invalid = [&](json j) {
        const auto r = Recipe::parse(j, dir.path);
        CHECK_THROWS_AS(r.validate(), RecipeError);
        CHECK_THROWS_AS(run_recipe(r, dir.path / "run"), RecipeError);
        CHECK_FALSE(fs::exists(dir.path / "run"));
    };

    auto missing_input = tiny_recipe();
    missing_input["stages"][2]["inputs"] = {"no_such_dir"};
    expect_invalid(missing_input);

    auto missing_config = tiny_recipe();
    missing_config["stages"][3]["config"] = "absent.json";
    expect_invalid(missing_config);

    auto unknown_stage = tiny_recipe();
    unknown_stage["stages"][1]["stage"] = "sharpen";
    expect_invalid(unknown_stage);

    auto typo = tiny_recipe();
    typo["stages"][0]["params"]["volumse"] = 3;
    expect_invalid(typo);

    auto nested_typo = tiny_recipe();
    nested_typo["stages"][3]["params"]["train"]["epoch"] = 3;
    expect_invalid(nested_typo);

    auto reversed = tiny_recipe();
    std::swap(reversed["stages"][0], reversed["stages"][1]);
    expect_invalid(reversed);

    auto orphan = tiny_recipe();
    orphan["stages"].erase(2);  // train has no dataset to read
    expect_invalid(orphan);

    expect_invalid(json{{"stages", json::array()}});
    CHECK_THROWS_AS(Recipe::parse(json{{"stages", 3}}, dir.path), RecipeError);
    CHECK_THROWS_AS(Recipe::parse(json{{"stages", json::array()}, {"extra", 1}}, dir.path), RecipeError);
}

TEST_CASE("effective parameters merge config file, inline params and defaults") {
    TempDir dir("octgan_recipe_params");
    std::ofstream(dir.path / "t.json") << R"({"generator": {"depth": 4}, "train": {"epochs": 7, "batch_size": 2}})";
    StageSpec s;
    s.stage = "train";
    s.seed = 42;
    s.config = dir.path / "t.json";
    s.params = {{"train", {{"epochs", 9}}}};
    const auto p = effective_params(s);
    CHECK(p["generator"]["depth"] == 4);
    CHECK(p["generator"]["base_channels"] == 64);
    CHECK(p["train"]["epochs"] == 9);
    CHECK(p["train"]["batch_size"] == 2);
    CHECK(p["train"]["seed"] == 42);
}

TEST_CASE("tiny recipe runs end to end, records configs and seeds, and is reproducible") {
    TempDir dir("octgan_recipe_run");
    const auto recipe = Recipe::parse(tiny_recipe(), dir.path);
    const auto m = run_recipe(recipe, dir.path / "a");
    CHECK(m.complete);
    REQUIRE(m.stages.size() == 6);
    for (const auto& s : m.stages) {
        CHECK(s.status == "ok");
        const auto cfg = read_json(dir.path / "a" / s.dir / "stage_config.json");
        CHECK(cfg["stage"] == s.stage);
        CHECK(cfg["seed"] == s.seed);
    }
    CHECK(fs::exists(dir.path / "a/04_train/latest.ckpt"));
    CHECK(fs::exists(dir.path / "a/05_evaluate/metrics.csv"));
    const auto bank = study::ImageBank::load(dir.path / "a/06_study/bank");
    CHECK(bank.real.size() == bank.generated.size());
    CHECK_FALSE(bank.real.empty());

    const auto on_disk = read_json(dir.path / "a/manifest.json");
    CHECK(on_disk == m.to_json());

    // Equal seeds: identical manifest, hence identical hashed outputs.
    const auto m2 = run_recipe(recipe, dir.path / "b");
    CHECK(m2.to_json() == m.to_json());
    bool saw_volatile = false;
    for (const auto& s : m.stages)
        for (const auto& o : s.outputs) saw_volatile = saw_volatile || !o.sha256;
    CHECK(saw_volatile);

    auto changed = tiny_recipe();
    changed["stages"][0]["seed"] = 99;
    const auto m3 = run_recipe(Recipe::parse(changed, dir.path), dir.path / "c");
    CHECK(m3.to_json()["stages"][0] != m.to_json()["stages"][0]);
}

TEST_CASE("a failing stage halts the run with a partial manifest") {
    TempDir dir("octgan_recipe_fail");
    auto j = tiny_recipe();
    j["stages"][2]["params"]["val"] = 5;  // only 3 volumes exist
    const auto recipe = Recipe::parse(j, dir.path);
    CHECK_THROWS(run_recipe(recipe, dir.path / "run"));
    const auto m = read_json(dir.path / "run/manifest.json");
    CHECK(m["complete"] == false);
    REQUIRE(m["stages"].size() == 3);
    CHECK(m["stages"][0]["status"] == "ok");
    CHECK(m["stages"][2]["status"] == "failed");
    CHECK(m["stages"][2]["error"].get<std::string>().find("training") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "run/04_train"));
}

TEST_CASE("explicit inputs replace earlier stages") {
    TempDir dir("octgan_recipe_inputs");
    const auto first = run_recipe(Recipe::parse(tiny_recipe(), dir.path), dir.path / "a");
    REQUIRE(first.complete);
    const auto j = json::parse(R"({
      "name": "reuse",
      "stages": [
        {"stage": "evaluate", "seed": 4, "params": {"noise": false},
         "inputs": ["a/04_train/latest.ckpt", "a/03_dataset/manifest.jsonl"]}
      ]
    })");
    const auto m = run_recipe(Recipe::parse(j, dir.path), dir.path / "b");
    CHECK(m.complete);
    // Same checkpoint, data and seed as the full run: same report bytes.
    auto hash_of = [](const RunManifest& rm, const std::string& suffix) {
        for (const auto& s : rm.stages)
            for (const auto& o : s.outputs)
                if (o.path.ends_with(suffix)) return *o.sha256;
        return std::string();
    };
    CHECK(hash_of(m, "metrics.csv") == hash_of(first, "metrics.csv"));
    CHECK_FALSE(hash_of(m, "metrics.csv").empty());
    const auto cfg = read_json(dir.path / "b/01_evaluate/stage_config.json");
    CHECK(cfg["inputs"].size() == 2);
}
