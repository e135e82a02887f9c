#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "octgan/container.hpp"
#include "octgan/dataset.hpp"
#include "octgan/image_io.hpp"

namespace octgan::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json window_json(DbWindow w) {
    return {{"floor_db", w.floor_db}, {"ceil_db", w.ceil_db}};
}

DbWindow window_from(const json& j) {
    return {j.at("floor_db").get<double>(), j.at("ceil_db").get<double>()};
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
    return fs::path(prefix.string() + suffix);
}

io::Container stack(const PatchSet& set, bool low) {
    io::Container c;
    c.header.dtype = io::DType::Float32;
    c.header.kind = io::Kind::PatchStack;
    if (set.pairs.empty()) {
        c.data = Volume(0, kPatchSize, kPatchSize);
    } else {
        const auto& first = low ? set.pairs.front().low_res : set.pairs.front().high_res;
        c.data = Volume(set.pairs.size(), first.rows(), first.cols());
        for (std::size_t i = 0; i < set.pairs.size(); ++i) {
            c.data.set_slab(i, low ? set.pairs[i].low_res : set.pairs[i].high_res);
        }
    }
    json prov = json::array();
    for (const auto& p : set.pairs) {
        prov.push_back({p.provenance.frame_index, p.provenance.depth_offset_px, p.provenance.lateral_offset_px});
    }
    c.metadata = json{{"volume_id", set.volume_id},
                      {"member", low ? "low" : "high"},
                      {"window", window_json(low ? set.low_window : set.high_window)},
                      {"provenance", prov}};
    return c;
}

}  // namespace

void save_patch_set(const fs::path& prefix, const PatchSet& set) {
    if (!prefix.parent_path().empty()) fs::create_directories(prefix.parent_path());
    io::write_container(with_suffix(prefix, ".low.bin"), stack(set, true));
    io::write_container(with_suffix(prefix, ".high.bin"), stack(set, false));
}

PatchSet load_patch_set(const fs::path& prefix) {
    auto lo = io::read_container(with_suffix(prefix, ".low.bin"));
    auto hi = io::read_container(with_suffix(prefix, ".high.bin"));
    if (lo.data.dims() != hi.data.dims()) {
        throw Error("load_patch_set: low/high stacks differ in shape for " + prefix.string());
    }
    if (!lo.metadata || !hi.metadata) {
        throw Error("load_patch_set: missing metadata for " + prefix.string());
    }
    PatchSet set;
    set.volume_id = lo.metadata->at("volume_id").get<std::string>();
    set.low_window = window_from(lo.metadata->at("window"));
    set.high_window = window_from(hi.metadata->at("window"));
    const auto& prov = lo.metadata->at("provenance");
    if (prov.size() != lo.data.dim(0)) {
        throw Error("load_patch_set: provenance count mismatch for " + prefix.string());
    }
    for (std::size_t i = 0; i < lo.data.dim(0); ++i) {
        PatchPair p;
        p.low_res = lo.data.slab(i);
        p.high_res = hi.data.slab(i);
        p.provenance = {set.volume_id, prov[i][0].get<std::size_t>(), prov[i][1].get<std::size_t>(),
                        prov[i][2].get<std::size_t>()};
        set.pairs.push_back(std::move(p));
    }
    return set;
}

void export_png(const fs::path& directory, const PatchSet& set) {
    fs::create_directories(directory);
    json index = json::array();
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        const auto& p = set.pairs[i];
        const std::string stem = set.volume_id + "_" + std::to_string(i);
        io::write_png16(directory / (stem + "_low.png"), denormalize(p.low_res, set.low_window),
                        set.low_window.floor_db, set.low_window.ceil_db);
        io::write_png16(directory / (stem + "_high.png"), denormalize(p.high_res, set.high_window),
                        set.high_window.floor_db, set.high_window.ceil_db);
        index.push_back({{"stem", stem},
                         {"frame_index", p.provenance.frame_index},
                         {"depth_offset_px", p.provenance.depth_offset_px},
                         {"lateral_offset_px", p.provenance.lateral_offset_px}});
    }
    json sidecar{{"volume_id", set.volume_id},
                 {"low_window", window_json(set.low_window)},
                 {"high_window", window_json(set.high_window)},
                 {"encoding", "uint16 linear over [floor_db, ceil_db]"},
                 {"patches", index}};
    std::ofstream(directory / (set.volume_id + ".png.json")) << sidecar.dump(2) << '\n';
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("write_manifest: cannot open " + path.string());
    for (const auto& e : manifest.entries) {
        out << json{{"volume_id", e.volume_id},
                    {"split", to_string(e.split)},
                    {"path", e.path},
                    {"frame_count", e.frame_count},
                    {"patch_count", e.patch_count}}
                   .dump()
            << '\n';
    }
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("read_manifest: cannot open " + path.string());
    DatasetManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            ManifestEntry e;
            e.volume_id = j.at("volume_id").get<std::string>();
            e.split = parse_split(j.at("split").get<std::string>());
            e.path = j.at("path").get<std::string>();
            e.frame_count = j.at("frame_count").get<std::size_t>();
            e.patch_count = j.value("patch_count", std::size_t{0});
            m.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw Error("read_manifest: " + path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return m;
}

std::vector<PatchPair> load_split(const fs::path& manifest_path, Split split) {
    const auto manifest = read_manifest(manifest_path);
    std::vector<PatchPair> out;
    for (const auto& e : manifest.split_entries(split)) {
        auto set = load_patch_set(manifest_path.parent_path() / e.path);
        for (auto& p : set.pairs) out.push_back(std::move(p));
    }
    return out;
}

DatasetManifest build_dataset(const std::vector<VolumeSource>& volumes, const fs::path& out_dir,
                              const BuildOptions& options) {
    if (volumes.empty()) throw InvalidArgument("build_dataset: no volumes given");
    fs::create_directories(out_dir);
    DatasetManifest manifest;
    for (const auto& v : volumes) {
        auto low = fringe::load_tomogram(v.low_path);
        auto high = fringe::load_tomogram(v.high_path);
        if (options.frames == FrameSetting::Avg3) {
            low = frame_average(low, 3);
            high = frame_average(high, 3);
        }
        PatchSet set;
        set.volume_id = v.volume_id;
        set.low_window = options.extract.low_window.value_or(default_window(low));
        set.high_window = options.extract.high_window.value_or(default_window(high));
        ExtractOptions ex = options.extract;
        ex.low_window = set.low_window;
        ex.high_window = set.high_window;
        set.pairs = extract_patches(low, high, v.volume_id, ex);
        save_patch_set(out_dir / v.volume_id, set);
        if (options.png) export_png(out_dir / "png", set);
        manifest.entries.push_back({v.volume_id, Split::Train, v.volume_id, high.frames(), set.pairs.size()});
    }
    manifest = split_by_volume(manifest, options.train_count, options.val_count, options.seed);
    write_manifest(out_dir / "manifest.jsonl", manifest);
    return manifest;
}

}  // namespace octgan::dataset
