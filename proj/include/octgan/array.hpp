#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace octgan {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Dense row-major 2-D array. Rows are the slow axis.
template <typename T>
class Array2 {
public:
    Array2() = default;
    Array2(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Array2(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw InvalidArgument("Array2: data size does not match dimensions");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& values() noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }
    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    bool same_shape(const Array2& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    // Copy of the [r0, r0+nr) x [c0, c0+nc) window.
    Array2 crop(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_) {
            throw InvalidArgument("Array2::crop: window outside array");
        }
        Array2 out(nr, nc);
        for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nc; ++c) {
                out(r, c) = (*this)(r0 + r, c0 + c);
            }
        }
        return out;
    }

    bool operator==(const Array2&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

// Dense row-major 3-D array indexed [slab][row][col].
template <typename T>
class Array3 {
public:
    Array3() = default;
    Array3(std::size_t d0, std::size_t d1, std::size_t d2, T fill = T{})
        : dims_{d0, d1, d2}, data_(d0 * d1 * d2, fill) {}

    const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }
    std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }

    std::span<T> slab_span(std::size_t i) noexcept {
        return {data_.data() + i * dims_[1] * dims_[2], dims_[1] * dims_[2]};
    }
    std::span<const T> slab_span(std::size_t i) const noexcept {
        return {data_.data() + i * dims_[1] * dims_[2], dims_[1] * dims_[2]};
    }
    std::span<T> line(std::size_t i, std::size_t j) noexcept {
        return {data_.data() + (i * dims_[1] + j) * dims_[2], dims_[2]};
    }
    std::span<const T> line(std::size_t i, std::size_t j) const noexcept {
        return {data_.data() + (i * dims_[1] + j) * dims_[2], dims_[2]};
    }

    Array2<T> slab(std::size_t i) const {
        auto s = slab_span(i);
        return Array2<T>(dims_[1], dims_[2], std::vector<T>(s.begin(), s.end()));
    }
    void set_slab(std::size_t i, const Array2<T>& image) {
        if (image.rows() != dims_[1] || image.cols() != dims_[2]) {
            throw InvalidArgument("Array3::set_slab: shape mismatch");
        }
        std::copy(image.values().begin(), image.values().end(), slab_span(i).begin());
    }

    std::vector<T>& values() noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    bool operator==(const Array3&) const = default;

private:
    std::array<std::size_t, 3> dims_{0, 0, 0};
    std::vector<T> data_;
};

using Image = Array2<double>;
using Volume = Array3<double>;

}  // namespace octgan
