#include "octgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace octgan::eval {

namespace {

std::vector<double> gaussian_taps(std::size_t size, double sigma) {
    std::vector<double> w(size);
    const double h = static_cast<double>(size / 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        const double x = static_cast<double>(i) - h;
        w[i] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable weighted sum over every fully-contained window ("valid" output).
Image filter_valid(const Image& x, const std::vector<double>& taps) {
    const std::size_t k = taps.size();
    const std::size_t oh = x.rows() - k + 1;
    const std::size_t ow = x.cols() - k + 1;
    Image rows(x.rows(), ow);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += taps[t] * x(r, c + t);
            rows(r, c) = s;
        }
    Image out(oh, ow);
    for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += taps[t] * rows(r + t, c);
            out(r, c) = s;
        }
    return out;
}

// Adjoint of filter_valid: spreads each window value back over its window.
Image filter_adjoint(const Image& g, const std::vector<double>& taps, std::size_t rows, std::size_t cols) {
    const std::size_t k = taps.size();
    Image mid(rows, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c)
            for (std::size_t t = 0; t < k; ++t) mid(r + t, c) += taps[t] * g(r, c);
    Image out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < g.cols(); ++c)
            for (std::size_t t = 0; t < k; ++t) out(r, c + t) += taps[t] * mid(r, c);
    return out;
}

void check_inputs(const Image& a, const Image& b, double data_range, const SsimParams& p) {
    if (!a.same_shape(b)) throw InvalidArgument("ssim: images differ in shape");
    if (!(data_range > 0.0)) throw InvalidArgument("ssim: data_range must be positive");
    if (p.window % 2 == 0 || p.window == 0) throw InvalidArgument("ssim: window must be odd");
    if (a.rows() < p.window || a.cols() < p.window) {
        throw InvalidArgument("ssim: image smaller than the SSIM window");
    }
}

Image product(const Image& a, const Image& b) {
    Image out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
    return out;
}

struct LocalStats {
    Image mu_a, mu_b, e_aa, e_bb, e_ab;
};

LocalStats local_stats(const Image& a, const Image& b, const std::vector<double>& taps) {
    return {filter_valid(a, taps), filter_valid(b, taps), filter_valid(product(a, a), taps),
            filter_valid(product(b, b), taps), filter_valid(product(a, b), taps)};
}

}  // namespace

double ssim(const Image& a, const Image& b, double data_range, const SsimParams& params) {
    return ssim_with_gradient(a, b, data_range, params).value;
}

SsimWithGradient ssim_with_gradient(const Image& a, const Image& b, double data_range,
                                    const SsimParams& params) {
    check_inputs(a, b, data_range, params);
    const auto taps = gaussian_taps(params.window, params.sigma);
    const double c1 = (params.k1 * data_range) * (params.k1 * data_range);
    const double c2 = (params.k2 * data_range) * (params.k2 * data_range);
    const auto st = local_stats(a, b, taps);

    const std::size_t count = st.mu_a.size();
    Image g_mu(st.mu_a.rows(), st.mu_a.cols());
    Image g_aa(st.mu_a.rows(), st.mu_a.cols());
    Image g_ab(st.mu_a.rows(), st.mu_a.cols());
    double total = 0.0;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double ma = st.mu_a.values()[i];
        const double mb = st.mu_b.values()[i];
        const double va = st.e_aa.values()[i] - ma * ma;
        const double vb = st.e_bb.values()[i] - mb * mb;
        const double cov = st.e_ab.values()[i] - ma * mb;
        const double a1 = 2.0 * ma * mb + c1;
        const double a2 = 2.0 * cov + c2;
        const double b1 = ma * ma + mb * mb + c1;
        const double b2 = va + vb + c2;
        const double s = (a1 * a2) / (b1 * b2);
        total += s;
        g_mu.values()[i] = inv * s * (2.0 * mb / a1 - 2.0 * mb / a2 - 2.0 * ma / b1 + 2.0 * ma / b2);
        g_ab.values()[i] = inv * s * 2.0 / a2;
        g_aa.values()[i] = inv * s * (-1.0 / b2);
    }

    SsimWithGradient out;
    out.value = total * inv;
    const Image d_mu = filter_adjoint(g_mu, taps, a.rows(), a.cols());
    const Image d_ab = filter_adjoint(g_ab, taps, a.rows(), a.cols());
    const Image d_aa = filter_adjoint(g_aa, taps, a.rows(), a.cols());
    out.grad_a = Image(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.grad_a.values()[i] =
            d_mu.values()[i] + b.values()[i] * d_ab.values()[i] + 2.0 * a.values()[i] * d_aa.values()[i];
    }
    return out;
}

double psnr(const Image& a, const Image& b, double data_range) {
    if (!a.same_shape(b)) throw InvalidArgument("psnr: images differ in shape");
    if (!(data_range > 0.0)) throw InvalidArgument("psnr: data_range must be positive");
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(data_range * data_range / mse));
}

}  // namespace octgan::eval
