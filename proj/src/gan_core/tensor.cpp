#include "octgan/nn/tensor.hpp"

#include <algorithm>

namespace octgan::nn {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

void Tensor::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (!(shape_ == other.shape_)) {
        throw InvalidArgument("Tensor +=: shape mismatch " + shape_.str() + " vs " + other.shape_.str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor batch_from_images(std::span<const Image* const> images) {
    if (images.empty()) throw InvalidArgument("batch_from_images: empty batch");
    const auto rows = images.front()->rows();
    const auto cols = images.front()->cols();
    Tensor t({images.size(), 1, rows, cols});
    for (std::size_t n = 0; n < images.size(); ++n) {
        if (images[n]->rows() != rows || images[n]->cols() != cols) {
            throw InvalidArgument("batch_from_images: images differ in size");
        }
        std::copy(images[n]->values().begin(), images[n]->values().end(), t.sample(n).begin());
    }
    return t;
}

Tensor tensor_from_image(const Image& image) {
    const Image* one[] = {&image};
    return batch_from_images(one);
}

Image image_from_tensor(const Tensor& t, std::size_t n, std::size_t c) {
    const auto& s = t.shape();
    Image out(s.h, s.w);
    const double* src = t.data() + (n * s.c + c) * s.plane();
    std::copy(src, src + s.plane(), out.values().begin());
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
        throw InvalidArgument("concat_channels: shape mismatch " + sa.str() + " vs " + sb.str());
    }
    Tensor out({sa.n, sa.c + sb.c, sa.h, sa.w});
    for (std::size_t n = 0; n < sa.n; ++n) {
        auto dst = out.sample(n);
        auto pa = a.sample(n);
        auto pb = b.sample(n);
        std::copy(pa.begin(), pa.end(), dst.begin());
        std::copy(pb.begin(), pb.end(), dst.begin() + static_cast<std::ptrdiff_t>(pa.size()));
    }
    return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, std::size_t first_channels) {
    const auto& s = t.shape();
    if (first_channels > s.c) throw InvalidArgument("split_channels: too many channels");
    Tensor a({s.n, first_channels, s.h, s.w});
    Tensor b({s.n, s.c - first_channels, s.h, s.w});
    for (std::size_t n = 0; n < s.n; ++n) {
        auto src = t.sample(n);
        const auto cut = static_cast<std::ptrdiff_t>(first_channels * s.plane());
        std::copy(src.begin(), src.begin() + cut, a.sample(n).begin());
        std::copy(src.begin() + cut, src.end(), b.sample(n).begin());
    }
    return {std::move(a), std::move(b)};
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.c != sb.c || sa.h != sb.h || sa.w != sb.w) {
        throw InvalidArgument("concat_batch: shape mismatch " + sa.str() + " vs " + sb.str());
    }
    Tensor out({sa.n + sb.n, sa.c, sa.h, sa.w});
    std::copy(a.values().begin(), a.values().end(), out.values().begin());
    std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

Tensor slice_batch(const Tensor& t, std::size_t first, std::size_t count) {
    const auto& s = t.shape();
    if (first + count > s.n) throw InvalidArgument("slice_batch: range outside batch");
    Tensor out({count, s.c, s.h, s.w});
    const auto len = static_cast<std::ptrdiff_t>(s.c * s.plane());
    std::copy(t.values().begin() + static_cast<std::ptrdiff_t>(first) * len,
              t.values().begin() + static_cast<std::ptrdiff_t>(first + count) * len, out.values().begin());
    return out;
}

Tensor crop(const Tensor& t, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
    const auto& s = t.shape();
    if (top + h > s.h || left + w > s.w) throw InvalidArgument("crop: window outside tensor");
    Tensor out({s.n, s.c, h, w});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) out(n, c, y, x) = t(n, c, top + y, left + x);
    return out;
}

}  // namespace octgan::nn
