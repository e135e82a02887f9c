#pragma once

// Full-reference image quality metrics.

#include "octgan/array.hpp"

namespace octgan::eval {

inline constexpr double kPsnrCapDb = 100.0;

struct SsimParams {
    std::size_t window = 11;  // odd; Gaussian weights with sigma 1.5
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

// Mean local SSIM over every fully-contained window position.
double ssim(const Image& a, const Image& b, double data_range, const SsimParams& params = {});

struct SsimWithGradient {
    double value = 0.0;
    Image grad_a;  // d ssim / d a
};
SsimWithGradient ssim_with_gradient(const Image& a, const Image& b, double data_range,
                                    const SsimParams& params = {});

// 10*log10(range^2 / MSE), capped at kPsnrCapDb (identical inputs return the cap).
double psnr(const Image& a, const Image& b, double data_range);

}  // namespace octgan::eval
