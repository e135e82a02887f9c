#include "octgan/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace octgan::io {

namespace {

cv::Mat to_mat(const Image& image) {
    cv::Mat m(static_cast<int>(image.rows()), static_cast<int>(image.cols()), CV_64F);
    std::copy(image.values().begin(), image.values().end(), m.ptr<double>());
    return m;
}

Image from_mat(const cv::Mat& m) {
    cv::Mat d;
    m.convertTo(d, CV_64F);
    Image out(static_cast<std::size_t>(d.rows), static_cast<std::size_t>(d.cols));
    for (int r = 0; r < d.rows; ++r) {
        const double* src = d.ptr<double>(r);
        std::copy(src, src + d.cols, out.row(static_cast<std::size_t>(r)).begin());
    }
    return out;
}

cv::Mat quantize(const Image& image, double lo, double hi, int depth, double full) {
    if (!(hi > lo)) {
        throw InvalidArgument("quantize: window upper bound must exceed lower bound");
    }
    cv::Mat out(static_cast<int>(image.rows()), static_cast<int>(image.cols()), depth);
    for (std::size_t r = 0; r < image.rows(); ++r) {
        for (std::size_t c = 0; c < image.cols(); ++c) {
            const double t = std::clamp((image(r, c) - lo) / (hi - lo), 0.0, 1.0);
            const double q = std::round(t * full);
            if (depth == CV_8U) {
                out.at<std::uint8_t>(static_cast<int>(r), static_cast<int>(c)) = static_cast<std::uint8_t>(q);
            } else {
                out.at<std::uint16_t>(static_cast<int>(r), static_cast<int>(c)) = static_cast<std::uint16_t>(q);
            }
        }
    }
    return out;
}

}  // namespace

GrayImage read_gray(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
    if (m.empty()) {
        throw Error("read_gray: cannot decode " + path.string());
    }
    GrayImage g;
    switch (m.depth()) {
        case CV_8U: g.full_scale = 255.0; break;
        case CV_16U: g.full_scale = 65535.0; break;
        default: g.full_scale = 1.0; break;
    }
    g.pixels = from_mat(m);
    return g;
}

std::vector<std::uint8_t> encode_png8(const Image& image, double lo, double hi) {
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", quantize(image, lo, hi, CV_8U, 255.0), buf)) {
        throw Error("encode_png8: PNG encoding failed");
    }
    return buf;
}

void write_png8(const std::filesystem::path& path, const Image& image, double lo, double hi) {
    if (!cv::imwrite(path.string(), quantize(image, lo, hi, CV_8U, 255.0))) {
        throw Error("write_png8: cannot write " + path.string());
    }
}

void write_png16(const std::filesystem::path& path, const Image& image, double lo, double hi) {
    if (!cv::imwrite(path.string(), quantize(image, lo, hi, CV_16U, 65535.0))) {
        throw Error("write_png16: cannot write " + path.string());
    }
}

Image compose_panel(const std::vector<Image>& tiles, std::size_t columns, double background, std::size_t gap) {
    if (tiles.empty() || columns == 0) throw InvalidArgument("compose_panel: no tiles");
    const std::size_t rows = (tiles.size() + columns - 1) / columns;
    std::size_t cell_h = 0, cell_w = 0;
    for (const auto& t : tiles) {
        cell_h = std::max(cell_h, t.rows());
        cell_w = std::max(cell_w, t.cols());
    }
    Image out(rows * cell_h + (rows - 1) * gap, columns * cell_w + (columns - 1) * gap, background);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const std::size_t r0 = (i / columns) * (cell_h + gap);
        const std::size_t c0 = (i % columns) * (cell_w + gap);
        for (std::size_t r = 0; r < tiles[i].rows(); ++r)
            for (std::size_t c = 0; c < tiles[i].cols(); ++c) out(r0 + r, c0 + c) = tiles[i](r, c);
    }
    return out;
}

void write_panel_png8(const std::filesystem::path& path, const std::vector<Image>& tiles, std::size_t columns,
                      double lo, double hi) {
    write_png8(path, compose_panel(tiles, columns, lo, 4), lo, hi);
}

Image resize_bilinear(const Image& image, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || image.empty()) {
        throw InvalidArgument("resize_bilinear: degenerate size");
    }
    cv::Mat out;
    cv::resize(to_mat(image), out, cv::Size(static_cast<int>(cols), static_cast<int>(rows)), 0, 0,
               cv::INTER_LINEAR);
    return from_mat(out);
}

}  // namespace octgan::io
