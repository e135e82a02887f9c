#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "octgan/array.hpp"

namespace octgan::nn {

struct Shape {
    std::size_t n = 0, c = 0, h = 0, w = 0;

    std::size_t count() const noexcept { return n * c * h * w; }
    std::size_t plane() const noexcept { return h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// NCHW tensor of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.count(), fill) {}

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    double operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }

    // All channels of sample n, contiguous.
    std::span<double> sample(std::size_t n) noexcept {
        const std::size_t len = shape_.c * shape_.plane();
        return {data_.data() + n * len, len};
    }
    std::span<const double> sample(std::size_t n) const noexcept {
        const std::size_t len = shape_.c * shape_.plane();
        return {data_.data() + n * len, len};
    }

    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    void fill(double v);
    Tensor& operator+=(const Tensor& other);

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Stacks single-channel images into an (N,1,H,W) batch.
Tensor batch_from_images(std::span<const Image* const> images);
Tensor tensor_from_image(const Image& image);
// Channel `c` of sample `n` as an image.
Image image_from_tensor(const Tensor& t, std::size_t n = 0, std::size_t c = 0);

// Channel-wise concatenation and its inverse.
Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& t, std::size_t first_channels);

// Batch-wise concatenation and slicing.
Tensor concat_batch(const Tensor& a, const Tensor& b);
Tensor slice_batch(const Tensor& t, std::size_t first, std::size_t count);

// Spatial crop of every sample and channel.
Tensor crop(const Tensor& t, std::size_t top, std::size_t left, std::size_t h, std::size_t w);

}  // namespace octgan::nn
