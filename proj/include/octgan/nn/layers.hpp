#pragma once

// Convolution layers with hand-written backward passes. Each layer caches
// the input of its last forward call; backward() must follow the matching
// forward() before the layer is reused.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "octgan/nn/tensor.hpp"

namespace octgan::nn {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
};

struct ConvGeometry {
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t pad = 0;

    // Output extent of a convolution over `in` samples.
    std::size_t conv_out(std::size_t in) const;
    // Output extent of the transposed convolution over `in` samples.
    std::size_t transposed_out(std::size_t in) const;
};

class Conv2d {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry, std::string name);

    void init(std::mt19937_64& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    std::vector<Param*> params() { return {&weight_, &bias_}; }
    const ConvGeometry& geometry() const noexcept { return geom_; }
    std::size_t in_channels() const noexcept { return in_; }
    std::size_t out_channels() const noexcept { return out_; }

private:
    std::size_t in_, out_;
    ConvGeometry geom_;
    Param weight_;  // [out][in*k*k]
    Param bias_;    // [out]
    Tensor input_;
};

class ConvTranspose2d {
public:
    ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, ConvGeometry geometry,
                    std::string name);

    void init(std::mt19937_64& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    std::vector<Param*> params() { return {&weight_, &bias_}; }
    const ConvGeometry& geometry() const noexcept { return geom_; }

private:
    std::size_t in_, out_;
    ConvGeometry geom_;
    Param weight_;  // [in][out*k*k]
    Param bias_;    // [out]
    Tensor input_;
};

// Pointwise nonlinearities. Backward functions take the forward input
// (leaky ReLU) or output (tanh).
Tensor leaky_relu(const Tensor& x, double slope);
Tensor leaky_relu_backward(const Tensor& x, const Tensor& grad_out, double slope);
Tensor tanh_forward(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& grad_out);

// Adds N(0, sigma) to every element.
void add_gaussian_noise(Tensor& t, double sigma, std::mt19937_64& rng);

class Adam {
public:
    Adam(std::vector<Param*> params, double learning_rate, double beta1, double beta2 = 0.999,
         double epsilon = 1e-8);

    void zero_grad();
    void step();
    std::uint64_t steps() const noexcept { return t_; }

private:
    std::vector<Param*> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, b1_, b2_, eps_;
    std::uint64_t t_ = 0;
};

void zero_grad(const std::vector<Param*>& params);

}  // namespace octgan::nn
