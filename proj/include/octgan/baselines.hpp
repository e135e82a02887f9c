#pragma once

// Comparison methods: Richardson-Lucy deconvolution with a known Gaussian
// PSF, and the same U-Net trained without the adversarial term.

#include <filesystem>
#include <vector>

#include "octgan/trainer.hpp"

namespace octgan::baselines {

struct RLConfig {
    double psf_sigma_px = 2.0;  // isotropic Gaussian
    std::size_t iterations = 30;

    void validate() const;
};

inline constexpr double kRlEpsilon = 1e-12;

// Normalized 1-D Gaussian taps over [-ceil(4 sigma), ceil(4 sigma)].
std::vector<double> gaussian_kernel(double sigma);
// Separable 2-D convolution with half-sample symmetric boundaries.
Image convolve_separable(const Image& image, const std::vector<double>& taps);

// One update: estimate * K^T(observed / max(K estimate, eps)).
Image rl_step(const Image& estimate, const Image& observed, const std::vector<double>& taps);

// Multiplicative RL iteration on a non-negative linear-intensity image.
Image richardson_lucy(const Image& observed, const RLConfig& config);

struct SweepCell {
    double sigma = 0.0;
    std::size_t iterations = 0;
    Image result;
};

std::vector<SweepCell> rl_sweep(const Image& observed, const std::vector<double>& sigmas,
                                const std::vector<std::size_t>& iterations);
// Grid of results (rows: sigma, cols: iterations) rendered to an 8-bit PNG
// in dB over the observed image's [peak - range, peak].
void write_rl_panel(const std::filesystem::path& path, const Image& observed, const std::vector<SweepCell>& cells,
                    double range_db = 50.0);

// Linear intensity <-> dB helpers for RL input/output.
Image db_to_linear(const Image& db);
Image linear_to_db(const Image& linear, double floor_db);

// Same generator and data as the adversarial trainer, L1 (plus optional
// DSSIM) only, no discriminator, no noise injection.
train::TrainResult unet_baseline_train(const std::vector<dataset::PatchPair>& data, gan::GeneratorConfig gen_cfg,
                                       train::TrainConfig cfg, const train::TrainOptions& options = {});

}  // namespace octgan::baselines
