#include <cmath>
#include <numbers>

#include "octgan/fringe_lab.hpp"

namespace octgan::fringe {

namespace {

// Half-sample symmetric reflection: -1 -> 0, n -> n-1.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    const auto len = static_cast<std::ptrdiff_t>(n);
    const std::ptrdiff_t period = 2 * len;
    i %= period;
    if (i < 0) {
        i += period;
    }
    return static_cast<std::size_t>(i < len ? i : period - 1 - i);
}

}  // namespace

FringeVolume degrade_axial(const FringeVolume& fringes, double fwhm_fraction) {
    fringes.validate();
    if (!(fwhm_fraction > 0.0)) {
        throw InvalidArgument("degrade_axial: fwhm_fraction must be positive");
    }
    const auto k = wavenumber_grid(fringes.source, fringes.axial_pixel_um);
    const double centre = spectral_centroid(fringes.source, fringes.axial_pixel_um);
    const double width = fwhm_fraction * fringes.source.fwhm_wavenumber;
    std::vector<double> window(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double d = (k[i] - centre) / width;
        window[i] = std::exp(-4.0 * std::numbers::ln2 * d * d);
    }

    FringeVolume out = fringes;
    for (std::size_t f = 0; f < out.frames(); ++f) {
        for (std::size_t l = 0; l < out.a_lines(); ++l) {
            auto line = out.fringes.line(f, l);
            for (std::size_t i = 0; i < line.size(); ++i) {
                line[i] *= window[i];
            }
        }
    }
    return out;
}

FringeVolume degrade_lateral(const FringeVolume& fringes, std::size_t window_lines) {
    fringes.validate();
    const std::size_t lines = fringes.a_lines();
    if (window_lines < 1 || window_lines > lines) {
        throw InvalidArgument("degrade_lateral: window must be in [1, a_lines]");
    }
    if (window_lines == 1) {
        return fringes;
    }
    // Line l averages [l - (w-1)/2, l + w/2] so odd windows are centred and
    // even windows lean one line forward.
    const auto back = static_cast<std::ptrdiff_t>((window_lines - 1) / 2);
    const double scale = 1.0 / static_cast<double>(window_lines);
    const std::size_t bins = fringes.bins();

    FringeVolume out = fringes;
    for (std::size_t f = 0; f < fringes.frames(); ++f) {
        for (std::size_t l = 0; l < lines; ++l) {
            auto dst = out.fringes.line(f, l);
            std::fill(dst.begin(), dst.end(), 0.0);
            for (std::size_t t = 0; t < window_lines; ++t) {
                const auto src_line = reflect(static_cast<std::ptrdiff_t>(l) - back +
                                                  static_cast<std::ptrdiff_t>(t),
                                              lines);
                auto src = fringes.fringes.line(f, src_line);
                for (std::size_t i = 0; i < bins; ++i) {
                    dst[i] += src[i];
                }
            }
            for (double& v : dst) {
                v *= scale;
            }
        }
    }
    return out;
}

FringeVolume degrade_2d(const FringeVolume& fringes, double fwhm_fraction, std::size_t window_lines) {
    return degrade_lateral(degrade_axial(fringes, fwhm_fraction), window_lines);
}

double lateral_averaging_extent_um(std::size_t window_lines, double lateral_pitch_um) {
    return static_cast<double>(window_lines) * lateral_pitch_um;
}

DegradeMode parse_degrade_mode(std::string_view text) {
    if (text == "axial" || text == "depth") {
        return DegradeMode::Axial;
    }
    if (text == "lateral") {
        return DegradeMode::Lateral;
    }
    if (text == "2d") {
        return DegradeMode::TwoD;
    }
    throw InvalidArgument("unknown degrade mode '" + std::string(text) + "'");
}

std::string_view to_string(DegradeMode mode) {
    switch (mode) {
        case DegradeMode::Axial: return "axial";
        case DegradeMode::Lateral: return "lateral";
        case DegradeMode::TwoD: return "2d";
    }
    return "?";
}

FringeVolume degrade(const FringeVolume& fringes, DegradeMode mode, double fwhm_fraction,
                     std::size_t window_lines) {
    switch (mode) {
        case DegradeMode::Axial: return degrade_axial(fringes, fwhm_fraction);
        case DegradeMode::Lateral: return degrade_lateral(fringes, window_lines);
        case DegradeMode::TwoD: return degrade_2d(fringes, fwhm_fraction, window_lines);
    }
    throw InvalidArgument("degrade: unknown mode");
}

}  // namespace octgan::fringe
