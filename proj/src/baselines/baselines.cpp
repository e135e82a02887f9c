#include "octgan/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "octgan/image_io.hpp"

namespace octgan::baselines {

namespace {

// Half-sample symmetric index: ... c b a | a b c ... | c b a ...
std::size_t symmetric(std::ptrdiff_t i, std::size_t n) {
    const auto N = static_cast<std::ptrdiff_t>(n);
    const std::ptrdiff_t period = 2 * N;
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < N ? m : period - 1 - m);
}

}  // namespace

void RLConfig::validate() const {
    if (!(psf_sigma_px > 0.0) || !std::isfinite(psf_sigma_px)) throw InvalidArgument("RL psf sigma must be positive");
    if (iterations == 0) throw InvalidArgument("RL needs at least one iteration");
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian_kernel: sigma must be positive");
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : taps) v /= sum;
    return taps;
}

Image convolve_separable(const Image& image, const std::vector<double>& taps) {
    const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
    const std::size_t rows = image.rows(), cols = image.cols();
    Image tmp(rows, cols), out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                s += taps[static_cast<std::size_t>(t + radius)] *
                     image(r, symmetric(static_cast<std::ptrdiff_t>(c) + t, cols));
            }
            tmp(r, c) = s;
        }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                s += taps[static_cast<std::size_t>(t + radius)] *
                     tmp(symmetric(static_cast<std::ptrdiff_t>(r) + t, rows), c);
            }
            out(r, c) = s;
        }
    return out;
}

Image rl_step(const Image& estimate, const Image& observed, const std::vector<double>& taps) {
    if (!estimate.same_shape(observed)) throw InvalidArgument("rl_step: shape mismatch");
    // The Gaussian is symmetric, so the adjoint PSF is the PSF itself.
    Image ratio = convolve_separable(estimate, taps);
    for (std::size_t i = 0; i < ratio.size(); ++i) {
        ratio.values()[i] = observed.values()[i] / std::max(ratio.values()[i], kRlEpsilon);
    }
    const Image correction = convolve_separable(ratio, taps);
    Image out = estimate;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= correction.values()[i];
    return out;
}

Image richardson_lucy(const Image& observed, const RLConfig& config) {
    config.validate();
    if (observed.size() == 0) throw InvalidArgument("richardson_lucy: empty image");
    for (double v : observed.values()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidArgument("richardson_lucy: input must be finite and non-negative (convert from dB first)");
        }
    }
    const auto taps = gaussian_kernel(config.psf_sigma_px);
    Image estimate = observed;
    for (std::size_t it = 0; it < config.iterations; ++it) estimate = rl_step(estimate, observed, taps);
    return estimate;
}

std::vector<SweepCell> rl_sweep(const Image& observed, const std::vector<double>& sigmas,
                                const std::vector<std::size_t>& iterations) {
    std::vector<SweepCell> out;
    for (double s : sigmas)
        for (std::size_t n : iterations) out.push_back({s, n, richardson_lucy(observed, {s, n})});
    return out;
}

Image db_to_linear(const Image& db) {
    Image out = db;
    for (double& v : out.values()) v = std::pow(10.0, v / 10.0);
    return out;
}

Image linear_to_db(const Image& linear, double floor_db) {
    Image out = linear;
    for (double& v : out.values()) v = v > 0.0 ? std::max(floor_db, 10.0 * std::log10(v)) : floor_db;
    return out;
}

void write_rl_panel(const std::filesystem::path& path, const Image& observed, const std::vector<SweepCell>& cells,
                    double range_db) {
    if (cells.empty()) throw InvalidArgument("write_rl_panel: nothing to draw");
    const double peak = 10.0 * std::log10(std::max(kRlEpsilon, *std::max_element(observed.values().begin(),
                                                                                  observed.values().end())));
    std::vector<Image> tiles;
    std::size_t cols = 1;
    while (cols < cells.size() && cells[cols].sigma == cells[0].sigma) ++cols;
    for (const auto& c : cells) tiles.push_back(linear_to_db(c.result, peak - range_db));
    io::write_panel_png8(path, tiles, cols, peak - range_db, peak);
}

train::TrainResult unet_baseline_train(const std::vector<dataset::PatchPair>& data, gan::GeneratorConfig gen_cfg,
                                       train::TrainConfig cfg, const train::TrainOptions& options) {
    gen_cfg.noise_enabled = false;
    cfg.adversarial = false;
    train::TrainOptions opts = options;
    opts.info["baseline"] = "unet-l1";
    return train::train(data, gen_cfg, gan::DiscriminatorConfig{}, cfg, opts);
}

}  // namespace octgan::baselines
