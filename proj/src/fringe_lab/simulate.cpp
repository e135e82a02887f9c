#include <cmath>
#include <numbers>
#include <random>

#include "octgan/fringe_lab.hpp"
#include "octgan/seed.hpp"

namespace octgan::fringe {

namespace {

constexpr double kFwhmToExponent = 4.0 * std::numbers::ln2;  // exp(-4 ln2 x^2 / fwhm^2)

}  // namespace

void SourceSpectrum::validate() const {
    if (!(fwhm_wavenumber > 0.0) || !std::isfinite(fwhm_wavenumber)) {
        throw InvalidArgument("SourceSpectrum: fwhm_wavenumber must be positive");
    }
    if (!std::isfinite(center_wavenumber) || center_wavenumber <= 0.0) {
        throw InvalidArgument("SourceSpectrum: center_wavenumber must be positive");
    }
    if (samples < 64) {
        throw InvalidArgument("SourceSpectrum: at least 64 spectral samples required");
    }
}

double SourceSpectrum::envelope(double k) const {
    const double d = (k - center_wavenumber) / fwhm_wavenumber;
    return std::exp(-kFwhmToExponent * d * d);
}

void ScattererPhantom::validate() const {
    if (!(extent_depth_um > 0.0) || !(extent_lateral_um > 0.0)) {
        throw InvalidArgument("ScattererPhantom: extent must be positive");
    }
    for (const auto& s : scatterers) {
        if (!std::isfinite(s.amplitude) || s.amplitude < 0.0) {
            throw InvalidArgument("ScattererPhantom: amplitudes must be finite and non-negative");
        }
        if (!std::isfinite(s.depth_um) || !std::isfinite(s.lateral_um) || s.depth_um < 0.0 ||
            s.depth_um > extent_depth_um || s.lateral_um < 0.0 || s.lateral_um > extent_lateral_um) {
            throw InvalidArgument("ScattererPhantom: scatterer outside extent");
        }
    }
}

void FringeVolume::validate() const {
    if (!(axial_pixel_um > 0.0) || !(lateral_pitch_um > 0.0)) {
        throw InvalidArgument("FringeVolume: pixel sizes must be positive");
    }
    source.validate();
    if (fringes.dim(2) != source.samples) {
        throw InvalidArgument("FringeVolume: spectral axis does not match source sample count");
    }
    for (double v : fringes.values()) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("FringeVolume: non-finite fringe value");
        }
    }
}

std::vector<double> wavenumber_grid(const SourceSpectrum& source, double axial_pixel_um) {
    const auto n = source.samples;
    const double dk = std::numbers::pi / (static_cast<double>(n) * axial_pixel_um);
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = source.center_wavenumber + (static_cast<double>(i) - static_cast<double>(n / 2)) * dk;
    }
    return k;
}

double unambiguous_depth_um(const SourceSpectrum& source, double axial_pixel_um) {
    return static_cast<double>(source.samples / 2) * axial_pixel_um;
}

double spectral_centroid(const SourceSpectrum& source, double axial_pixel_um) {
    double num = 0.0;
    double den = 0.0;
    for (double k : wavenumber_grid(source, axial_pixel_um)) {
        const double s = source.envelope(k);
        num += k * s;
        den += s;
    }
    return num / den;
}

FringeVolume simulate_fringes(const ScattererPhantom& phantom, const SourceSpectrum& source,
                              std::size_t n_frames, double noise_floor,
                              const SimulationOptions& options) {
    source.validate();
    phantom.validate();
    if (!(noise_floor >= 0.0) || !std::isfinite(noise_floor)) {
        throw InvalidArgument("simulate_fringes: noise_floor must be >= 0");
    }
    if (n_frames == 0) {
        throw InvalidArgument("simulate_fringes: n_frames must be >= 1");
    }
    if (!(options.lateral_pitch_um > 0.0) || !(options.axial_pixel_um > 0.0) ||
        !(options.beam_fwhm_um > 0.0)) {
        throw InvalidArgument("simulate_fringes: pitches and beam width must be positive");
    }
    if (phantom.extent_depth_um > unambiguous_depth_um(source, options.axial_pixel_um)) {
        throw InvalidArgument("simulate_fringes: phantom depth exceeds the unambiguous depth range");
    }

    const std::size_t bins = source.samples;
    const auto lines = static_cast<std::size_t>(
        std::max(1.0, std::round(phantom.extent_lateral_um / options.lateral_pitch_um)));
    const auto k = wavenumber_grid(source, options.axial_pixel_um);
    std::vector<double> envelope(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        envelope[i] = source.envelope(k[i]);
    }

    // Noise-free frame, shared by every frame.
    Array2<double> clean(lines, bins, 0.0);
    const double reach = 3.0 * options.beam_fwhm_um;
    std::vector<double> term(bins);
    for (const auto& s : phantom.scatterers) {
        if (s.amplitude == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < bins; ++i) {
            term[i] = s.amplitude * envelope[i] * std::cos(2.0 * k[i] * s.depth_um);
        }
        const double first = std::ceil((s.lateral_um - reach) / options.lateral_pitch_um);
        const double last = std::floor((s.lateral_um + reach) / options.lateral_pitch_um);
        const auto l0 = static_cast<std::ptrdiff_t>(std::max(0.0, first));
        const auto l1 = std::min(static_cast<std::ptrdiff_t>(lines) - 1, static_cast<std::ptrdiff_t>(last));
        for (std::ptrdiff_t l = l0; l <= l1; ++l) {
            const double dx = (static_cast<double>(l) * options.lateral_pitch_um - s.lateral_um) /
                              options.beam_fwhm_um;
            const double w = std::exp(-kFwhmToExponent * dx * dx);
            auto row = clean.row(static_cast<std::size_t>(l));
            for (std::size_t i = 0; i < bins; ++i) {
                row[i] += w * term[i];
            }
        }
    }

    FringeVolume out;
    out.source = source;
    out.lateral_pitch_um = options.lateral_pitch_um;
    out.axial_pixel_um = options.axial_pixel_um;
    out.fringes = Volume(n_frames, lines, bins);
    for (std::size_t f = 0; f < n_frames; ++f) {
        auto slab = out.fringes.slab_span(f);
        std::copy(clean.values().begin(), clean.values().end(), slab.begin());
        if (noise_floor > 0.0) {
            std::mt19937_64 rng(derive_seed(options.seed, f));
            std::normal_distribution<double> noise(0.0, noise_floor);
            for (double& v : slab) {
                v += noise(rng);
            }
        }
    }
    return out;
}

ScattererPhantom point_phantom(double depth_um, double lateral_um, double extent_depth_um,
                               double extent_lateral_um, double amplitude) {
    ScattererPhantom p;
    p.extent_depth_um = extent_depth_um;
    p.extent_lateral_um = extent_lateral_um;
    p.scatterers.push_back({depth_um, lateral_um, amplitude});
    p.validate();
    return p;
}

ScattererPhantom tissue_phantom(double extent_depth_um, double extent_lateral_um,
                                double scatterers_per_um2, std::uint64_t seed) {
    if (!(scatterers_per_um2 > 0.0)) {
        throw InvalidArgument("tissue_phantom: density must be positive");
    }
    ScattererPhantom p;
    p.extent_depth_um = extent_depth_um;
    p.extent_lateral_um = extent_lateral_um;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> reflectivity(1.0);

    const double surface = 0.08 * extent_depth_um;
    const double tissue_depth = extent_depth_um - surface;
    const double attenuation = 0.35 * tissue_depth;
    // Layer boundaries as fractions of the tissue depth, each with its own
    // relative backscatter and a gently undulating surface.
    const double bounds[] = {0.0, 0.12, 0.35, 0.6, 1.0};
    const double backscatter[] = {1.6, 0.5, 1.0, 0.7};
    const double wave = 0.03 * tissue_depth;
    const double period = extent_lateral_um / 1.7;

    const auto count = static_cast<std::size_t>(scatterers_per_um2 * tissue_depth * extent_lateral_um);
    p.scatterers.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = unit(rng) * extent_lateral_um;
        const double rel = unit(rng);
        const double offset = wave * (1.0 + std::sin(2.0 * std::numbers::pi * x / period));
        const double z = std::min(extent_depth_um, surface + offset + rel * (tissue_depth - 2.0 * wave));
        std::size_t layer = 0;
        while (layer + 1 < std::size(backscatter) && rel > bounds[layer + 1]) {
            ++layer;
        }
        const double depth_in = z - surface;
        const double a = backscatter[layer] * reflectivity(rng) * std::exp(-depth_in / attenuation);
        p.scatterers.push_back({z, x, a});
    }
    p.validate();
    return p;
}

}  // namespace octgan::fringe
