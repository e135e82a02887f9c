#pragma once

#include "octgan/array.hpp"

namespace octgan::eval {

// Reflection (mirror without edge repeat) padding on the bottom and right so
// both extents become multiples of `multiple`. Keeping the original at the
// top-left preserves stride alignment with unpadded inference.
struct Padded {
    Image image;
    std::size_t rows = 0;  // original extent
    std::size_t cols = 0;
};

Padded pad_to_multiple(const Image& image, std::size_t multiple);
Image pad_reflect(const Image& image, std::size_t rows, std::size_t cols);
Image unpad(const Padded& padded, const Image& processed);

}  // namespace octgan::eval
