#include "octgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "octgan/image_io.hpp"
#include "octgan/trainer.hpp"

namespace octgan::eval {

PairMetrics compare(const Image& candidate, const Image& truth) {
    return {ssim(candidate, truth, kNormalizedRange), psnr(candidate, truth, kNormalizedRange)};
}

void MetricReport::validate() const {
    for (const auto& r : rows) {
        for (double s : {r.ssim_before, r.ssim_after}) {
            if (!(s >= -1.0 && s <= 1.0)) throw InvalidArgument("report SSIM outside [-1, 1]");
        }
        for (double p : {r.psnr_before_db, r.psnr_after_db}) {
            if (!std::isfinite(p)) throw InvalidArgument("report PSNR is not finite");
        }
    }
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os.precision(6);
    os << "dataset,mode,frames,ssim_before,ssim_after,psnr_before_db,psnr_after_db,samples\n";
    for (const auto& r : rows) {
        os << r.dataset << ',' << r.mode << ',' << r.frames << ',' << r.ssim_before << ',' << r.ssim_after << ','
           << r.psnr_before_db << ',' << r.psnr_after_db << ',' << r.samples << '\n';
    }
    return os.str();
}

std::string MetricReport::to_markdown() const {
    std::ostringstream os;
    os << "| Dataset | Mode | Frames | SSIM | PSNR (dB) |\n|---|---|---|---|---|\n";
    char cell[96];
    for (const auto& r : rows) {
        os << "| " << r.dataset << " | " << r.mode << " | " << r.frames << " | ";
        std::snprintf(cell, sizeof cell, "%.3f → %.3f | %.1f → %.1f |", r.ssim_before, r.ssim_after, r.psnr_before_db,
                      r.psnr_after_db);
        os << cell << '\n';
    }
    return os.str();
}

void MetricReport::write(const std::filesystem::path& csv_path, const std::filesystem::path& markdown_path) const {
    validate();
    for (const auto& [path, text] : {std::pair{csv_path, to_csv()}, std::pair{markdown_path, to_markdown()}}) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream os(path);
        if (!(os << text)) throw Error("cannot write " + path.string());
    }
}

std::string report_mode(fringe::DegradeMode mode) {
    switch (mode) {
        case fringe::DegradeMode::Axial: return "depth";
        case fringe::DegradeMode::Lateral: return "lateral";
        case fringe::DegradeMode::TwoD: return "2d";
    }
    return "?";
}

MetricRow evaluate_pairs(const std::vector<dataset::PatchPair>& pairs, gan::Generator& generator, bool noise_enabled,
                         std::uint64_t seed) {
    if (pairs.empty()) throw InvalidArgument("evaluate: the validation split is empty");
    std::mt19937_64 rng(seed);
    MetricRow row;
    for (const auto& p : pairs) {
        const auto before = compare(p.low_res, p.high_res);
        const auto after = compare(train::infer_normalized(p.low_res, generator, noise_enabled, rng), p.high_res);
        row.ssim_before += before.ssim;
        row.psnr_before_db += before.psnr_db;
        row.ssim_after += after.ssim;
        row.psnr_after_db += after.psnr_db;
    }
    const double n = static_cast<double>(pairs.size());
    row.ssim_before /= n;
    row.ssim_after /= n;
    row.psnr_before_db /= n;
    row.psnr_after_db /= n;
    row.samples = pairs.size();
    return row;
}

MetricRow evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                   fringe::DegradeMode mode, dataset::FrameSetting frames, const std::string& dataset_name,
                   bool noise_enabled, std::uint64_t seed) {
    if (!std::filesystem::exists(checkpoint)) throw InvalidArgument("checkpoint not found: " + checkpoint.string());
    const auto ck = gan::load_checkpoint(checkpoint);
    if (ck.info.contains("mode") && ck.info.at("mode").is_string() &&
        fringe::parse_degrade_mode(ck.info.at("mode").get<std::string>()) != mode) {
        throw InvalidArgument("checkpoint was trained for mode " + ck.info.at("mode").get<std::string>());
    }
    auto g = ck.make_generator();
    auto row = evaluate_pairs(dataset::load_split(manifest, dataset::Split::Val), g, noise_enabled, seed);
    row.dataset = dataset_name;
    row.mode = report_mode(mode);
    row.frames = std::string(dataset::to_string(frames));
    return row;
}

PairMetrics frame_metrics(const fringe::TomogramVolume& low, const fringe::TomogramVolume& truth) {
    if (low.intensity_db.dims() != truth.intensity_db.dims()) throw InvalidArgument("frame_metrics: shape mismatch");
    const auto wl = dataset::default_window(low);
    const auto wt = dataset::default_window(truth);
    PairMetrics m;
    for (std::size_t f = 0; f < low.frames(); ++f) {
        const auto r = compare(dataset::normalize(low.intensity_db.slab(f), wl),
                               dataset::normalize(truth.intensity_db.slab(f), wt));
        m.ssim += r.ssim;
        m.psnr_db += r.psnr_db;
    }
    m.ssim /= static_cast<double>(low.frames());
    m.psnr_db /= static_cast<double>(low.frames());
    return m;
}

std::size_t nearest_multiple(double extent, std::size_t multiple) {
    if (multiple == 0) throw InvalidArgument("nearest_multiple: multiple must be positive");
    const double m = static_cast<double>(multiple);
    const double lower = std::floor(extent / m) * m;
    const double upper = lower + m;
    const double pick = (extent - lower) < (upper - extent) ? lower : upper;
    return std::max(multiple, static_cast<std::size_t>(pick));
}

std::size_t signal_rows(const Image& normalized) {
    if (normalized.rows() == 0) throw InvalidArgument("signal_rows: empty image");
    // Row signal as mean linear intensity over a 50 dB display window.
    std::vector<double> means(normalized.rows());
    for (std::size_t r = 0; r < normalized.rows(); ++r) {
        double s = 0.0;
        for (double v : normalized.row(r)) s += std::pow(10.0, 2.5 * (std::clamp(v, -1.0, 1.0) + 1.0));
        means[r] = s / static_cast<double>(normalized.cols());
    }
    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());
    // 10th percentile, nearest rank.
    const std::size_t rank = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(sorted.size())));
    const double threshold = sorted[std::max<std::size_t>(rank, 1) - 1];
    std::size_t keep = means.size();
    while (keep > 0 && means[keep - 1] < threshold) --keep;
    return keep;
}

Image crossdomain_prepare(const Image& normalized, const CrossDomainOptions& options) {
    if (!(options.scale > 0.0) || !std::isfinite(options.scale)) throw InvalidArgument("scale must be positive");
    if (normalized.rows() == 0 || normalized.cols() == 0) throw InvalidArgument("crossdomain: empty image");
    const std::size_t rows = options.crop_low_signal ? signal_rows(normalized) : normalized.rows();
    const auto scaled_rows = static_cast<std::size_t>(std::lround(static_cast<double>(rows) * options.scale));
    const auto scaled_cols = static_cast<std::size_t>(std::lround(static_cast<double>(normalized.cols()) * options.scale));
    if (rows == 0 || scaled_rows == 0 || scaled_cols == 0) throw InvalidArgument("crossdomain: degenerate crop");
    const Image scaled = io::resize_bilinear(normalized.crop(0, 0, rows, normalized.cols()), scaled_rows, scaled_cols);
    const std::size_t out_rows = nearest_multiple(static_cast<double>(scaled_rows), options.multiple);
    const std::size_t out_cols = nearest_multiple(static_cast<double>(scaled_cols), options.multiple);
    if (out_rows == scaled_rows && out_cols == scaled_cols) return scaled;
    return io::resize_bilinear(scaled, out_rows, out_cols);
}

std::vector<ScaleCell> crossdomain_sweep(const Image& normalized, gan::Generator* generator,
                                         const std::vector<double>& scales, bool noise_enabled, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ScaleCell> out;
    for (double s : scales) {
        CrossDomainOptions o;
        o.scale = s;
        ScaleCell cell{s, crossdomain_prepare(normalized, o), {}};
        cell.enhanced = generator != nullptr ? train::infer_normalized(cell.prepared, *generator, noise_enabled, rng)
                                             : cell.prepared;
        out.push_back(std::move(cell));
    }
    return out;
}

void write_scale_panel(const std::filesystem::path& path, const std::vector<ScaleCell>& cells) {
    std::vector<Image> tiles;
    for (const auto& c : cells) tiles.push_back(c.enhanced);
    io::write_panel_png8(path, tiles, tiles.size(), -1.0, 1.0);
}

double mean_local_variance(const Image& image, std::size_t window) {
    if (window == 0 || image.rows() < window || image.cols() < window) {
        throw InvalidArgument("mean_local_variance: window larger than image");
    }
    double total = 0.0;
    std::size_t count = 0;
    const double n = static_cast<double>(window * window);
    for (std::size_t r = 0; r + window <= image.rows(); ++r)
        for (std::size_t c = 0; c + window <= image.cols(); ++c) {
            double s = 0.0, ss = 0.0;
            for (std::size_t y = 0; y < window; ++y)
                for (std::size_t x = 0; x < window; ++x) {
                    const double v = image(r + y, c + x);
                    s += v;
                    ss += v * v;
                }
            total += ss / n - (s / n) * (s / n);
            ++count;
        }
    return total / static_cast<double>(count);
}

}  // namespace octgan::eval
