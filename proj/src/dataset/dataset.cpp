#include "octgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <set>

namespace octgan::dataset {

std::string_view to_string(Split split) {
    return split == Split::Train ? "train" : "val";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "val") return Split::Val;
    throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

std::string_view to_string(FrameSetting frames) {
    return frames == FrameSetting::Single ? "single" : "avg3";
}

FrameSetting parse_frames(std::string_view text) {
    if (text == "single") return FrameSetting::Single;
    if (text == "avg3") return FrameSetting::Avg3;
    throw InvalidArgument("unknown frame setting '" + std::string(text) + "'");
}

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    bool has_train = false;
    bool has_val = false;
    for (const auto& e : entries) {
        if (!seen.insert(e.volume_id).second) {
            throw InvalidArgument("manifest: volume '" + e.volume_id + "' listed more than once");
        }
        has_train |= e.split == Split::Train;
        has_val |= e.split == Split::Val;
    }
    if (!has_train || !has_val) {
        throw InvalidArgument("manifest: both train and val splits must be non-empty");
    }
}

std::vector<ManifestEntry> DatasetManifest::split_entries(Split split) const {
    std::vector<ManifestEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                 [split](const ManifestEntry& e) { return e.split == split; });
    return out;
}

namespace {

Volume moving_frame_mean(const Volume& v, std::size_t n) {
    const std::size_t frames = v.dim(0);
    if (n < 1 || n > frames) {
        throw InvalidArgument("frame_average: window must be in [1, frames]");
    }
    Volume out(frames - n + 1, v.dim(1), v.dim(2));
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t f = 0; f < out.dim(0); ++f) {
        auto dst = out.slab_span(f);
        for (std::size_t t = 0; t < n; ++t) {
            auto src = v.slab_span(f + t);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
        for (double& x : dst) x *= scale;
    }
    return out;
}

}  // namespace

fringe::TomogramVolume frame_average(const fringe::TomogramVolume& volume, std::size_t n) {
    if (n == 1) {
        if (volume.frames() == 0) throw InvalidArgument("frame_average: empty volume");
        return volume;
    }
    Volume linear = volume.intensity_db;
    for (double& x : linear.values()) x = std::pow(10.0, x / 10.0);
    Volume mean = moving_frame_mean(linear, n);
    for (double& x : mean.values()) x = 10.0 * std::log10(x);
    fringe::TomogramVolume out = volume;
    out.intensity_db = std::move(mean);
    return out;
}

Volume frame_average_magnitude(const Volume& magnitude, std::size_t n) {
    Volume power = magnitude;
    for (double& x : power.values()) x *= x;
    Volume mean = moving_frame_mean(power, n);
    for (double& x : mean.values()) x = std::sqrt(x);
    return mean;
}

DbWindow default_window(const fringe::TomogramVolume& volume, double range_db) {
    const auto& v = volume.intensity_db.values();
    if (v.empty()) throw InvalidArgument("default_window: empty volume");
    const double peak = *std::max_element(v.begin(), v.end());
    return {peak - range_db, peak};
}

double normalize_value(double db, DbWindow w) {
    if (!(w.floor_db < w.ceil_db)) {
        throw InvalidArgument("normalize: floor_db must be below ceil_db");
    }
    const double c = std::clamp(db, w.floor_db, w.ceil_db);
    return 2.0 * (c - w.floor_db) / (w.ceil_db - w.floor_db) - 1.0;
}

double denormalize_value(double normalized, DbWindow w) {
    return w.floor_db + (normalized + 1.0) * 0.5 * (w.ceil_db - w.floor_db);
}

Image normalize(const Image& db, DbWindow window) {
    Image out = db;
    for (double& x : out.values()) x = normalize_value(x, window);
    return out;
}

Image denormalize(const Image& normalized, DbWindow window) {
    Image out = normalized;
    for (double& x : out.values()) x = denormalize_value(x, window);
    return out;
}

double mean_linear_intensity(const Image& db) {
    double s = 0.0;
    for (double x : db.values()) s += std::pow(10.0, x / 10.0);
    return db.empty() ? 0.0 : s / static_cast<double>(db.size());
}

std::vector<PatchPair> extract_patches(const fringe::TomogramVolume& low,
                                       const fringe::TomogramVolume& high,
                                       const std::string& volume_id, const ExtractOptions& options) {
    if (low.intensity_db.dims() != high.intensity_db.dims()) {
        throw InvalidArgument("extract_patches: low and high volumes differ in shape");
    }
    const std::size_t size = options.size;
    if (size == 0) throw InvalidArgument("extract_patches: patch size must be positive");
    const DbWindow low_w = options.low_window.value_or(default_window(low));
    const DbWindow high_w = options.high_window.value_or(default_window(high));

    std::vector<PatchPair> out;
    if (high.depth() < size || high.lateral() < size) {
        std::clog << "warning: volume '" << volume_id << "' frames are " << high.depth() << "x"
                  << high.lateral() << ", smaller than the " << size << " px patch; no patches\n";
        return out;
    }
    const std::size_t rows = high.depth() / size;
    const std::size_t cols = high.lateral() / size;
    for (std::size_t f = 0; f < high.frames(); ++f) {
        const Image hi_frame = high.intensity_db.slab(f);
        const Image lo_frame = low.intensity_db.slab(f);
        std::vector<double> means;
        means.reserve(rows * cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                means.push_back(mean_linear_intensity(hi_frame.crop(r * size, c * size, size, size)));

        double threshold = 0.0;
        if (options.signal_threshold) {
            threshold = *options.signal_threshold;
        } else {
            std::vector<double> sorted = means;
            std::sort(sorted.begin(), sorted.end());
            const auto rank = static_cast<std::size_t>(std::ceil(0.10 * static_cast<double>(sorted.size())));
            threshold = sorted[std::max<std::size_t>(rank, 1) - 1];
        }

        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                if (means[r * cols + c] < threshold) continue;
                PatchPair p;
                p.high_res = normalize(hi_frame.crop(r * size, c * size, size, size), high_w);
                p.low_res = normalize(lo_frame.crop(r * size, c * size, size, size), low_w);
                p.provenance = {volume_id, f, r * size, c * size};
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

DatasetManifest split_by_volume(const DatasetManifest& manifest, std::size_t train_count,
                                std::size_t val_count, std::uint64_t seed) {
    const std::size_t n = manifest.entries.size();
    if (train_count == 0 || val_count == 0) {
        throw InvalidArgument("split_by_volume: both splits need at least one volume");
    }
    if (train_count + val_count != n) {
        throw InvalidArgument("split_by_volume: train + val counts must equal the number of volumes");
    }
    std::set<std::string> ids;
    for (const auto& e : manifest.entries) {
        if (!ids.insert(e.volume_id).second) {
            throw InvalidArgument("split_by_volume: duplicate volume '" + e.volume_id + "'");
        }
    }
    // Sort by id first so the assignment does not depend on input order.
    std::vector<ManifestEntry> entries = manifest.entries;
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.volume_id < b.volume_id; });
    std::mt19937_64 rng(seed);
    std::shuffle(entries.begin(), entries.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
        entries[i].split = i < train_count ? Split::Train : Split::Val;
    }
    DatasetManifest out{std::move(entries)};
    out.validate();
    return out;
}

}  // namespace octgan::dataset
