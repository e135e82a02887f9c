#include "octgan/padding.hpp"

namespace octgan::eval {

namespace {

// Index into [0, n) mirrored about the edge samples, periodic in 2n - 2.
std::size_t mirror(std::size_t i, std::size_t n) {
    if (n == 1) return 0;
    const std::size_t period = 2 * n - 2;
    const std::size_t m = i % period;
    return m < n ? m : period - m;
}

}  // namespace

Image pad_reflect(const Image& image, std::size_t rows, std::size_t cols) {
    if (image.rows() == 0 || image.cols() == 0) throw InvalidArgument("pad_reflect: empty image");
    if (rows < image.rows() || cols < image.cols()) throw InvalidArgument("pad_reflect: target smaller than image");
    Image out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t sr = mirror(r, image.rows());
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = image(sr, mirror(c, image.cols()));
    }
    return out;
}

Padded pad_to_multiple(const Image& image, std::size_t multiple) {
    if (multiple == 0) throw InvalidArgument("pad_to_multiple: multiple must be positive");
    const auto up = [multiple](std::size_t n) { return (n + multiple - 1) / multiple * multiple; };
    return {pad_reflect(image, up(image.rows()), up(image.cols())), image.rows(), image.cols()};
}

Image unpad(const Padded& padded, const Image& processed) {
    if (!processed.same_shape(padded.image)) throw InvalidArgument("unpad: processed image changed size");
    return processed.crop(0, 0, padded.rows, padded.cols);
}

}  // namespace octgan::eval
