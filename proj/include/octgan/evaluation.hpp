#pragma once

// Before/after quality reports and cross-domain input preparation.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "octgan/dataset.hpp"
#include "octgan/gan.hpp"
#include "octgan/metrics.hpp"
#include "octgan/padding.hpp"

namespace octgan::eval {

// Metrics are computed on [-1, 1]-normalized images with data range 2.
inline constexpr double kNormalizedRange = 2.0;

struct PairMetrics {
    double ssim = 0.0;
    double psnr_db = 0.0;
};
PairMetrics compare(const Image& candidate, const Image& truth);

struct MetricRow {
    std::string dataset;
    std::string mode;    // depth | lateral | 2d
    std::string frames;  // single | avg3
    double ssim_before = 0.0, ssim_after = 0.0;
    double psnr_before_db = 0.0, psnr_after_db = 0.0;
    std::size_t samples = 0;
};

struct MetricReport {
    std::vector<MetricRow> rows;

    void validate() const;
    std::string to_csv() const;
    // "before -> after" cells, one row per (dataset, mode, frames).
    std::string to_markdown() const;
    void write(const std::filesystem::path& csv_path, const std::filesystem::path& markdown_path) const;
};

// Report spelling of a degradation mode ("axial" is reported as "depth").
std::string report_mode(fringe::DegradeMode mode);

// Mean metrics over pairs: low vs truth (before) and generated vs truth (after).
MetricRow evaluate_pairs(const std::vector<dataset::PatchPair>& pairs, gan::Generator& generator, bool noise_enabled,
                         std::uint64_t seed);
// Loads the checkpoint and the validation split of the manifest.
MetricRow evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                   fringe::DegradeMode mode, dataset::FrameSetting frames, const std::string& dataset_name = "phantom",
                   bool noise_enabled = true, std::uint64_t seed = 0);

// Before-only metrics over whole frames, each volume normalized with its own
// [peak - 50, peak] window.
PairMetrics frame_metrics(const fringe::TomogramVolume& low, const fringe::TomogramVolume& truth);

// Cross-domain preparation of a [-1, 1] image.
struct CrossDomainOptions {
    double scale = 4.0;
    bool crop_low_signal = true;
    std::size_t multiple = 256;
};

// Nearest multiple of `multiple` (ties round up, at least `multiple`).
std::size_t nearest_multiple(double extent, std::size_t multiple);
// Number of leading rows kept after dropping the low-signal rows at the bottom.
std::size_t signal_rows(const Image& normalized);
Image crossdomain_prepare(const Image& normalized, const CrossDomainOptions& options = {});

// Prepared input and generator output for each scale; panel of outputs.
struct ScaleCell {
    double scale = 0.0;
    Image prepared;
    Image enhanced;
};
std::vector<ScaleCell> crossdomain_sweep(const Image& normalized, gan::Generator* generator,
                                         const std::vector<double>& scales, bool noise_enabled, std::uint64_t seed);
void write_scale_panel(const std::filesystem::path& path, const std::vector<ScaleCell>& cells);

// Mean over pixels of the local variance in `window` x `window` neighbourhoods.
double mean_local_variance(const Image& image, std::size_t window = 5);

}  // namespace octgan::eval
