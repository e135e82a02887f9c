#pragma once

// Paired low/high-resolution patch datasets with volume-level splits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "octgan/array.hpp"
#include "octgan/fringe_lab.hpp"

namespace octgan::dataset {

inline constexpr std::size_t kPatchSize = 256;

// dB display window mapped onto [-1, 1].
struct DbWindow {
    double floor_db = -50.0;
    double ceil_db = 0.0;
};

struct Provenance {
    std::string volume_id;
    std::size_t frame_index = 0;
    std::size_t depth_offset_px = 0;
    std::size_t lateral_offset_px = 0;

    bool operator==(const Provenance&) const = default;
};

struct PatchPair {
    Image low_res;   // normalized to [-1, 1]
    Image high_res;  // normalized to [-1, 1]
    Provenance provenance;
};

enum class Split { Train, Val };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ManifestEntry {
    std::string volume_id;
    Split split = Split::Train;
    std::string path;  // patch-set prefix, relative to the manifest directory
    std::size_t frame_count = 0;
    std::size_t patch_count = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    // Each volume exactly once and both splits populated.
    void validate() const;
    std::vector<ManifestEntry> split_entries(Split split) const;
};

enum class FrameSetting { Single, Avg3 };
std::string_view to_string(FrameSetting frames);
FrameSetting parse_frames(std::string_view text);

// Moving average over `n` consecutive frames of linear intensity (10^(dB/10)),
// stride 1; returns frames - n + 1 frames.
fringe::TomogramVolume frame_average(const fringe::TomogramVolume& volume, std::size_t n = 3);
// Same on a linear-magnitude volume: averages |X|^2 and returns magnitudes.
Volume frame_average_magnitude(const Volume& magnitude, std::size_t n = 3);

DbWindow default_window(const fringe::TomogramVolume& volume, double range_db = 50.0);

double normalize_value(double db, DbWindow window);
double denormalize_value(double normalized, DbWindow window);
Image normalize(const Image& db, DbWindow window);
Image denormalize(const Image& normalized, DbWindow window);

// Mean of 10^(dB/10) over the image.
double mean_linear_intensity(const Image& db);

struct ExtractOptions {
    std::size_t size = kPatchSize;
    // Absolute mean-linear-intensity threshold; when unset, the 10th
    // percentile (nearest rank) of the frame's patch means is used.
    std::optional<double> signal_threshold;
    std::optional<DbWindow> low_window;
    std::optional<DbWindow> high_window;
};

std::vector<PatchPair> extract_patches(const fringe::TomogramVolume& low,
                                       const fringe::TomogramVolume& high,
                                       const std::string& volume_id,
                                       const ExtractOptions& options = {});

// Seeded assignment of whole volumes to train/val.
DatasetManifest split_by_volume(const DatasetManifest& manifest, std::size_t train_count,
                                std::size_t val_count, std::uint64_t seed);

// Patch stack on disk: <prefix>.low.bin and <prefix>.high.bin (PatchStack
// containers, float32, [patch][row][col]) carrying provenance and windows
// in the JSON trailer.
struct PatchSet {
    std::string volume_id;
    DbWindow low_window;
    DbWindow high_window;
    std::vector<PatchPair> pairs;
};

void save_patch_set(const std::filesystem::path& prefix, const PatchSet& set);
PatchSet load_patch_set(const std::filesystem::path& prefix);
// 16-bit PNG export; the window for each member goes into <prefix>.png.json.
void export_png(const std::filesystem::path& directory, const PatchSet& set);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);
// Loads every patch of the given split, resolving paths against the manifest.
std::vector<PatchPair> load_split(const std::filesystem::path& manifest_path, Split split);

struct VolumeSource {
    std::string volume_id;
    std::filesystem::path low_path;   // tomogram container
    std::filesystem::path high_path;  // tomogram container
};

struct BuildOptions {
    FrameSetting frames = FrameSetting::Single;
    std::size_t train_count = 0;
    std::size_t val_count = 0;
    std::uint64_t seed = 0;
    ExtractOptions extract;
    bool png = false;
};

// Averages (if requested), patches, stores patch sets and writes
// <out>/manifest.jsonl. Returns the manifest.
DatasetManifest build_dataset(const std::vector<VolumeSource>& volumes,
                              const std::filesystem::path& out_dir, const BuildOptions& options);

// Simulated stand-in for a co-registered (degraded, original) acquisition:
// a layered tissue phantom imaged at native resolution and through the
// fringe-domain degradation.
struct SyntheticOptions {
    fringe::DegradeMode mode = fringe::DegradeMode::TwoD;
    std::size_t frames = 1;
    std::size_t a_lines = 256;
    std::size_t spectral_samples = 1024;  // depth = samples / 2
    double scatterers_per_um2 = 0.25;
    double noise_floor = 0.02;
    std::uint64_t seed = 0;
};

struct SyntheticVolumePair {
    fringe::TomogramVolume low;
    fringe::TomogramVolume high;
};

SyntheticVolumePair synthetic_volume_pair(const SyntheticOptions& options);

}  // namespace octgan::dataset
