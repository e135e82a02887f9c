#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "octgan/dataset.hpp"

using namespace octgan;
using namespace octgan::dataset;
using fringe::TomogramVolume;

namespace {

TomogramVolume constant_volume(std::size_t frames, std::size_t depth, std::size_t lateral, double db) {
    TomogramVolume t;
    t.intensity_db = Volume(frames, depth, lateral, db);
    return t;
}

DatasetManifest volumes(std::size_t n) {
    DatasetManifest m;
    for (std::size_t i = 0; i < n; ++i) {
        m.entries.push_back({"vol" + std::to_string(i), Split::Train, "vol" + std::to_string(i), 5, 0});
    }
    return m;
}

}  // namespace

TEST_CASE("frame_average identity, constants and output length") {
    auto t = constant_volume(5, 8, 8, -12.5);
    CHECK(frame_average(t, 1).intensity_db == t.intensity_db);
    auto avg = frame_average(t, 3);
    CHECK(avg.frames() == 3);
    for (double v : avg.intensity_db.values()) CHECK(v == doctest::Approx(-12.5).epsilon(1e-12));
    CHECK_THROWS_AS(frame_average(t, 6), InvalidArgument);
    CHECK_THROWS_AS(frame_average(t, 0), InvalidArgument);
}

TEST_CASE("three-frame average reduces independent noise by sqrt(3)") {
    // Flat phantom: linear intensity 100 with per-frame Gaussian noise sigma=1.
    const double sigma = 1.0;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, sigma);
    TomogramVolume t;
    t.intensity_db = Volume(3, 120, 120);
    for (double& v : t.intensity_db.values()) v = 10.0 * std::log10(100.0 + noise(rng));
    auto avg = frame_average(t, 3);
    REQUIRE(avg.frames() == 1);
    double s = 0, s2 = 0;
    const auto n = static_cast<double>(avg.intensity_db.size());
    REQUIRE(n >= 1e4);
    for (double v : avg.intensity_db.values()) {
        const double lin = std::pow(10.0, v / 10.0);
        s += lin;
        s2 += lin * lin;
    }
    const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
    CHECK(sd == doctest::Approx(sigma / std::sqrt(3.0)).epsilon(0.10));
}

TEST_CASE("frame_average commutes with spatial cropping") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-40.0, 0.0);
    TomogramVolume t;
    t.intensity_db = Volume(4, 20, 30);
    for (double& v : t.intensity_db.values()) v = u(rng);
    auto avg = frame_average(t, 3);
    for (std::size_t f = 0; f < avg.frames(); ++f) {
        auto a = avg.intensity_db.slab(f).crop(3, 5, 10, 12);
        TomogramVolume cropped;
        cropped.intensity_db = Volume(4, 10, 12);
        for (std::size_t g = 0; g < 4; ++g) cropped.intensity_db.set_slab(g, t.intensity_db.slab(g).crop(3, 5, 10, 12));
        auto b = frame_average(cropped, 3).intensity_db.slab(f);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
    }
}

TEST_CASE("frame_average_magnitude averages power") {
    Volume m(2, 1, 1);
    m(0, 0, 0) = 3.0;
    m(1, 0, 0) = 4.0;
    CHECK(frame_average_magnitude(m, 2)(0, 0, 0) == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("extract_patches tiles on a non-overlapping grid") {
    auto t512 = constant_volume(1, 512, 512, -10.0);
    CHECK(extract_patches(t512, t512, "v").size() == 4);
    auto t256 = constant_volume(1, 256, 256, -10.0);
    CHECK(extract_patches(t256, t256, "v").size() == 1);
    auto small = constant_volume(1, 200, 512, -10.0);
    CHECK(extract_patches(small, small, "v").empty());

    auto odd = constant_volume(2, 700, 530, -10.0);
    CHECK(extract_patches(odd, odd, "v").size() == 2 * (700 / 256) * (530 / 256));

    CHECK_THROWS_AS(extract_patches(t512, t256, "v"), InvalidArgument);
}

TEST_CASE("low-signal deep patches are discarded") {
    auto t = constant_volume(1, 512, 512, 0.0);
    for (std::size_t z = 256; z < 512; ++z)
        for (std::size_t x = 0; x < 512; ++x) t.intensity_db(0, z, x) = -50.0;
    ExtractOptions opt;
    opt.signal_threshold = 0.5;  // linear intensity: 1.0 above, 1e-5 below
    auto patches = extract_patches(t, t, "v", opt);
    REQUIRE(patches.size() == 2);
    for (const auto& p : patches) CHECK(p.provenance.depth_offset_px == 0);
}

TEST_CASE("patch pairs share provenance, shape and the [-1,1] range") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-60.0, 5.0);
    TomogramVolume lo, hi;
    lo.intensity_db = Volume(2, 512, 256);
    hi.intensity_db = Volume(2, 512, 256);
    for (double& v : lo.intensity_db.values()) v = u(rng);
    for (double& v : hi.intensity_db.values()) v = u(rng);
    auto patches = extract_patches(lo, hi, "vx");
    REQUIRE(!patches.empty());
    for (const auto& p : patches) {
        CHECK(p.low_res.rows() == 256);
        CHECK(p.low_res.cols() == 256);
        CHECK(p.high_res.same_shape(p.low_res));
        CHECK(p.provenance.volume_id == "vx");
        for (double v : p.low_res.values()) CHECK((v >= -1.0 && v <= 1.0));
        // Low member is cut at the same coordinates as the high member.
        const auto w = default_window(lo);
        CHECK(p.low_res(7, 9) == doctest::Approx(normalize_value(
                  lo.intensity_db(p.provenance.frame_index, p.provenance.depth_offset_px + 7,
                                  p.provenance.lateral_offset_px + 9), w)));
    }
}

TEST_CASE("split_by_volume reproduces the 7/3 and 5/3 splits without leakage") {
    for (auto [n, train, val] : {std::tuple{10, 7, 3}, std::tuple{8, 5, 3}}) {
        auto m = split_by_volume(volumes(static_cast<std::size_t>(n)), static_cast<std::size_t>(train),
                                 static_cast<std::size_t>(val), 42);
        std::set<std::string> tr, va;
        for (const auto& e : m.split_entries(Split::Train)) tr.insert(e.volume_id);
        for (const auto& e : m.split_entries(Split::Val)) va.insert(e.volume_id);
        CHECK(tr.size() == static_cast<std::size_t>(train));
        CHECK(va.size() == static_cast<std::size_t>(val));
        for (const auto& id : tr) CHECK(va.count(id) == 0);
    }
    auto a = split_by_volume(volumes(10), 7, 3, 1);
    auto b = split_by_volume(volumes(10), 7, 3, 1);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].volume_id == b.entries[i].volume_id);
        CHECK(a.entries[i].split == b.entries[i].split);
    }
    CHECK_THROWS_AS(split_by_volume(volumes(10), 10, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(split_by_volume(volumes(10), 6, 3, 1), InvalidArgument);
}

TEST_CASE("normalize maps the window affinely onto [-1,1]") {
    const DbWindow w{-50.0, 0.0};
    CHECK(normalize_value(-50.0, w) == -1.0);
    CHECK(normalize_value(0.0, w) == 1.0);
    CHECK(normalize_value(-25.0, w) == doctest::Approx(0.0));
    CHECK(normalize_value(-80.0, w) == -1.0);
    CHECK_THROWS_AS(normalize_value(1.0, DbWindow{0.0, 0.0}), InvalidArgument);

    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-90.0, 30.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng), b = u(rng);
        CHECK(denormalize_value(normalize_value(a, w), w) == doctest::Approx(std::clamp(a, -50.0, 0.0)).epsilon(1e-6));
        if (a < b) CHECK(normalize_value(a, w) <= normalize_value(b, w));
    }
}

TEST_CASE("dataset build writes patch sets and a manifest with disjoint splits") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "octgan_dataset_build";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<VolumeSource> sources;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50.0, 0.0);
    for (int i = 0; i < 4; ++i) {
        TomogramVolume t;
        t.intensity_db = Volume(3, 256, 512);
        for (double& v : t.intensity_db.values()) v = u(rng);
        const auto id = "v" + std::to_string(i);
        fringe::save_tomogram(dir / (id + "_hi.bin"), t);
        fringe::save_tomogram(dir / (id + "_lo.bin"), t);
        sources.push_back({id, dir / (id + "_lo.bin"), dir / (id + "_hi.bin")});
    }
    BuildOptions opt;
    opt.frames = FrameSetting::Avg3;
    opt.train_count = 3;
    opt.val_count = 1;
    opt.seed = 5;
    opt.png = true;
    auto m = build_dataset(sources, dir / "ds", opt);
    auto back = read_manifest(dir / "ds" / "manifest.jsonl");
    REQUIRE(back.entries.size() == 4);
    back.validate();

    auto train = load_split(dir / "ds" / "manifest.jsonl", Split::Train);
    auto val = load_split(dir / "ds" / "manifest.jsonl", Split::Val);
    CHECK(train.size() == 3 * 2);  // one averaged frame, two patches each
    CHECK(val.size() == 2);
    std::set<std::string> train_ids;
    for (const auto& p : train) train_ids.insert(p.provenance.volume_id);
    for (const auto& p : val) CHECK(train_ids.count(p.provenance.volume_id) == 0);
    CHECK(fs::exists(dir / "ds" / "png" / "v0.png.json"));

    auto set = load_patch_set(dir / "ds" / "v0");
    CHECK(set.pairs.size() == 2);
    CHECK(set.pairs[1].provenance.lateral_offset_px == 256);
    fs::remove_all(dir);
}
