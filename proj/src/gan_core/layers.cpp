#include "octgan/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace octgan::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Output positions [lo, hi) whose input index o*s - pad + k lies inside [0, n).
struct ValidRange {
    std::size_t lo, hi;
};

ValidRange valid_range(std::ptrdiff_t n, std::ptrdiff_t s, std::ptrdiff_t pad, std::ptrdiff_t k, std::size_t out) {
    const std::ptrdiff_t first = pad - k;  // need o*s >= first
    const std::ptrdiff_t lo = first <= 0 ? 0 : (first + s - 1) / s;
    const std::ptrdiff_t last = n - 1 + pad - k;  // need o*s <= last
    const std::ptrdiff_t hi = last < 0 ? 0 : last / s + 1;
    const auto clamp = [out](std::ptrdiff_t v) { return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(out))); };
    const std::size_t l = clamp(lo), h = clamp(hi);
    return {l, std::max(l, h)};
}

// Unfolds a (C,H,W) image into (C*k*k, OH*OW) patch columns.
void im2col(const double* x, std::size_t channels, std::size_t h, std::size_t w, const ConvGeometry& g,
            std::size_t oh, std::size_t ow, double* cols) {
    const auto k = g.kernel;
    const auto pad = static_cast<std::ptrdiff_t>(g.pad);
    const auto s = static_cast<std::ptrdiff_t>(g.stride);
    const auto W = static_cast<std::ptrdiff_t>(w);
    for (std::size_t c = 0; c < channels; ++c) {
        const double* plane = x + c * h * w;
        for (std::size_t ki = 0; ki < k; ++ki) {
            const auto ry = valid_range(static_cast<std::ptrdiff_t>(h), s, pad, static_cast<std::ptrdiff_t>(ki), oh);
            for (std::size_t kj = 0; kj < k; ++kj) {
                const auto rx = valid_range(W, s, pad, static_cast<std::ptrdiff_t>(kj), ow);
                double* row = cols + ((c * k + ki) * k + kj) * oh * ow;
                const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(kj) - pad;
                for (std::size_t y = 0; y < oh; ++y) {
                    double* out = row + y * ow;
                    if (y < ry.lo || y >= ry.hi) {
                        std::fill(out, out + ow, 0.0);
                        continue;
                    }
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y) * s - pad + static_cast<std::ptrdiff_t>(ki);
                    const double* src = plane + iy * W;
                    std::fill(out, out + rx.lo, 0.0);
                    if (s == 1) {
                        for (std::size_t xo = rx.lo; xo < rx.hi; ++xo) out[xo] = src[x0 + static_cast<std::ptrdiff_t>(xo)];
                    } else {
                        for (std::size_t xo = rx.lo; xo < rx.hi; ++xo) out[xo] = src[x0 + static_cast<std::ptrdiff_t>(xo) * s];
                    }
                    std::fill(out + rx.hi, out + ow, 0.0);
                }
            }
        }
    }
}

// Adjoint of im2col: scatters columns back, accumulating into x.
void col2im(const double* cols, std::size_t channels, std::size_t h, std::size_t w, const ConvGeometry& g,
            std::size_t oh, std::size_t ow, double* x) {
    const auto k = g.kernel;
    const auto pad = static_cast<std::ptrdiff_t>(g.pad);
    const auto s = static_cast<std::ptrdiff_t>(g.stride);
    const auto W = static_cast<std::ptrdiff_t>(w);
    for (std::size_t c = 0; c < channels; ++c) {
        double* plane = x + c * h * w;
        for (std::size_t ki = 0; ki < k; ++ki) {
            const auto ry = valid_range(static_cast<std::ptrdiff_t>(h), s, pad, static_cast<std::ptrdiff_t>(ki), oh);
            for (std::size_t kj = 0; kj < k; ++kj) {
                const auto rx = valid_range(W, s, pad, static_cast<std::ptrdiff_t>(kj), ow);
                const double* row = cols + ((c * k + ki) * k + kj) * oh * ow;
                const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(kj) - pad;
                for (std::size_t y = ry.lo; y < ry.hi; ++y) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y) * s - pad + static_cast<std::ptrdiff_t>(ki);
                    const double* in = row + y * ow;
                    double* dst = plane + iy * W;
                    if (s == 1) {
                        for (std::size_t xo = rx.lo; xo < rx.hi; ++xo) dst[x0 + static_cast<std::ptrdiff_t>(xo)] += in[xo];
                    } else {
                        for (std::size_t xo = rx.lo; xo < rx.hi; ++xo) dst[x0 + static_cast<std::ptrdiff_t>(xo) * s] += in[xo];
                    }
                }
            }
        }
    }
}

void init_normal(Tensor& t, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, stddev);
    for (double& v : t.values()) v = n(rng);
}

}  // namespace

std::size_t ConvGeometry::conv_out(std::size_t in) const {
    if (in + 2 * pad < kernel) {
        throw InvalidArgument("convolution input of extent " + std::to_string(in) + " is smaller than the kernel");
    }
    return (in + 2 * pad - kernel) / stride + 1;
}

std::size_t ConvGeometry::transposed_out(std::size_t in) const {
    const std::size_t full = (in - 1) * stride + kernel;
    if (full <= 2 * pad) throw InvalidArgument("transposed convolution output would be empty");
    return full - 2 * pad;
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry, std::string name)
    : in_(in_channels), out_(out_channels), geom_(geometry) {
    if (in_ == 0 || out_ == 0 || geom_.kernel == 0 || geom_.stride == 0) {
        throw InvalidArgument("Conv2d: channels, kernel and stride must be positive");
    }
    weight_ = {name + ".weight", Tensor({out_, in_, geom_.kernel, geom_.kernel}), Tensor({out_, in_, geom_.kernel, geom_.kernel})};
    bias_ = {name + ".bias", Tensor({out_, 1, 1, 1}), Tensor({out_, 1, 1, 1})};
}

void Conv2d::init(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(in_ * geom_.kernel * geom_.kernel);
    init_normal(weight_.value, std::sqrt(2.0 / fan_in), rng);
    bias_.value.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& x) {
    const auto& s = x.shape();
    if (s.c != in_) {
        throw InvalidArgument(weight_.name + ": expected " + std::to_string(in_) + " channels, got " + s.str());
    }
    input_ = x;
    const std::size_t oh = geom_.conv_out(s.h);
    const std::size_t ow = geom_.conv_out(s.w);
    const std::size_t kk = in_ * geom_.kernel * geom_.kernel;
    Tensor y({s.n, out_, oh, ow});
    std::vector<double> cols(kk * oh * ow);
    ConstMatrixMap w(weight_.value.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(kk));
    Eigen::Map<const Eigen::VectorXd> b(bias_.value.data(), static_cast<Eigen::Index>(out_));
    for (std::size_t n = 0; n < s.n; ++n) {
        im2col(x.sample(n).data(), in_, s.h, s.w, geom_, oh, ow, cols.data());
        ConstMatrixMap c(cols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(oh * ow));
        MatrixMap out(y.sample(n).data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(oh * ow));
        out.noalias() = w * c;
        out.colwise() += b;
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const auto& s = input_.shape();
    const auto& g = grad_out.shape();
    const std::size_t kk = in_ * geom_.kernel * geom_.kernel;
    const std::size_t p = g.h * g.w;
    Tensor dx(s);
    std::vector<double> cols(kk * p);
    std::vector<double> dcols(kk * p);
    ConstMatrixMap w(weight_.value.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(kk));
    MatrixMap dw(weight_.grad.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(kk));
    for (std::size_t n = 0; n < s.n; ++n) {
        ConstMatrixMap dy(grad_out.sample(n).data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(p));
        im2col(input_.sample(n).data(), in_, s.h, s.w, geom_, g.h, g.w, cols.data());
        ConstMatrixMap c(cols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(p));
        dw.noalias() += dy * c.transpose();
        // Plain loop: Eigen's vectorized reductions round differently with buffer alignment.
        auto gs = grad_out.sample(n);
        for (std::size_t o = 0; o < out_; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < p; ++i) acc += gs[o * p + i];
            bias_.grad.values()[o] += acc;
        }
        MatrixMap dc(dcols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(p));
        dc.noalias() = w.transpose() * dy;
        col2im(dcols.data(), in_, s.h, s.w, geom_, g.h, g.w, dx.sample(n).data());
    }
    return dx;
}

ConvTranspose2d::ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
                                 std::string name)
    : in_(in_channels), out_(out_channels), geom_(geometry) {
    if (in_ == 0 || out_ == 0 || geom_.kernel == 0 || geom_.stride == 0) {
        throw InvalidArgument("ConvTranspose2d: channels, kernel and stride must be positive");
    }
    weight_ = {name + ".weight", Tensor({in_, out_, geom_.kernel, geom_.kernel}), Tensor({in_, out_, geom_.kernel, geom_.kernel})};
    bias_ = {name + ".bias", Tensor({out_, 1, 1, 1}), Tensor({out_, 1, 1, 1})};
}

void ConvTranspose2d::init(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(in_ * geom_.kernel * geom_.kernel) /
                          static_cast<double>(geom_.stride * geom_.stride);
    init_normal(weight_.value, std::sqrt(2.0 / fan_in), rng);
    bias_.value.fill(0.0);
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
    const auto& s = x.shape();
    if (s.c != in_) {
        throw InvalidArgument(weight_.name + ": expected " + std::to_string(in_) + " channels, got " + s.str());
    }
    input_ = x;
    const std::size_t oh = geom_.transposed_out(s.h);
    const std::size_t ow = geom_.transposed_out(s.w);
    const std::size_t kk = out_ * geom_.kernel * geom_.kernel;
    const std::size_t p = s.h * s.w;
    Tensor y({s.n, out_, oh, ow});
    std::vector<double> cols(kk * p);
    ConstMatrixMap w(weight_.value.data(), static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(kk));
    for (std::size_t n = 0; n < s.n; ++n) {
        ConstMatrixMap xin(x.sample(n).data(), static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(p));
        MatrixMap c(cols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(p));
        c.noalias() = w.transpose() * xin;
        col2im(cols.data(), out_, oh, ow, geom_, s.h, s.w, y.sample(n).data());
        auto sample = y.sample(n);
        for (std::size_t o = 0; o < out_; ++o) {
            const double b = bias_.value.values()[o];
            for (std::size_t i = 0; i < oh * ow; ++i) sample[o * oh * ow + i] += b;
        }
    }
    return y;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
    const auto& s = input_.shape();
    const auto& g = grad_out.shape();
    const std::size_t kk = out_ * geom_.kernel * geom_.kernel;
    const std::size_t p = s.h * s.w;
    Tensor dx(s);
    std::vector<double> dcols(kk * p);
    ConstMatrixMap w(weight_.value.data(), static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(kk));
    MatrixMap dw(weight_.grad.data(), static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(kk));
    for (std::size_t n = 0; n < s.n; ++n) {
        im2col(grad_out.sample(n).data(), out_, g.h, g.w, geom_, s.h, s.w, dcols.data());
        ConstMatrixMap dc(dcols.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(p));
        ConstMatrixMap xin(input_.sample(n).data(), static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(p));
        MatrixMap dxn(dx.sample(n).data(), static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(p));
        dxn.noalias() = w * dc;
        dw.noalias() += xin * dc.transpose();
        auto gs = grad_out.sample(n);
        for (std::size_t o = 0; o < out_; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.h * g.w; ++i) acc += gs[o * g.h * g.w + i];
            bias_.grad.values()[o] += acc;
        }
    }
    return dx;
}

Tensor leaky_relu(const Tensor& x, double slope) {
    Tensor y = x;
    for (double& v : y.values()) v = v > 0.0 ? v : slope * v;
    return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& grad_out, double slope) {
    Tensor d = grad_out;
    const auto& xv = x.values();
    auto& dv = d.values();
    for (std::size_t i = 0; i < dv.size(); ++i) {
        if (!(xv[i] > 0.0)) dv[i] *= slope;
    }
    return d;
}

Tensor tanh_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) v = std::tanh(v);
    return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& grad_out) {
    Tensor d = grad_out;
    const auto& yv = y.values();
    auto& dv = d.values();
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= 1.0 - yv[i] * yv[i];
    return d;
}

void add_gaussian_noise(Tensor& t, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    std::normal_distribution<double> n(0.0, sigma);
    for (double& v : t.values()) v += n(rng);
}

void zero_grad(const std::vector<Param*>& params) {
    for (auto* p : params) p->grad.fill(0.0);
}

Adam::Adam(std::vector<Param*> params, double learning_rate, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {
    if (!(lr_ > 0.0) || !(b1_ >= 0.0 && b1_ < 1.0) || !(b2_ >= 0.0 && b2_ < 1.0)) {
        throw InvalidArgument("Adam: invalid hyperparameters");
    }
    for (auto* p : params_) {
        m_.emplace_back(p->value.size(), 0.0);
        v_.emplace_back(p->value.size(), 0.0);
    }
}

void Adam::zero_grad() {
    nn::zero_grad(params_);
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& w = params_[i]->value.values();
        const auto& g = params_[i]->grad.values();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = b1_ * m[j] + (1.0 - b1_) * g[j];
            v[j] = b2_ * v[j] + (1.0 - b2_) * g[j] * g[j];
            w[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
        }
    }
}

}  // namespace octgan::nn
