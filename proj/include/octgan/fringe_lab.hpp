#pragma once

// Spectral-domain OCT fringe simulation, reconstruction and fringe-domain
// resolution degradation.

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "octgan/array.hpp"

namespace octgan::fringe {

// Gaussian source envelope sampled on a linear wavenumber grid. Wavenumbers
// are in 1/um. The sampled span is fixed by the axial pixel size of the
// volume: span = pi / axial_pixel_um, so every depth bin is axial_pixel_um.
struct SourceSpectrum {
    double center_wavenumber = 7.853981633974483;  // 2*pi / 0.8 um
    double fwhm_wavenumber = 2.1327;               // ~1.3 um axial FWHM
    std::size_t samples = 1024;

    void validate() const;
    // Peak-normalized envelope value at wavenumber k.
    double envelope(double k) const;
};

struct Scatterer {
    double depth_um = 0.0;
    double lateral_um = 0.0;
    double amplitude = 1.0;
};

struct ScattererPhantom {
    std::vector<Scatterer> scatterers;
    double extent_depth_um = 0.0;
    double extent_lateral_um = 0.0;

    void validate() const;
};

struct FringeVolume {
    Volume fringes;  // [frame][a_line][spectral_bin]
    SourceSpectrum source;
    double lateral_pitch_um = 0.8;
    double axial_pixel_um = 0.4;

    std::size_t frames() const { return fringes.dim(0); }
    std::size_t a_lines() const { return fringes.dim(1); }
    std::size_t bins() const { return fringes.dim(2); }
    void validate() const;
};

struct TomogramVolume {
    Volume intensity_db;  // [frame][depth][lateral]
    double axial_pixel_um = 0.4;
    double lateral_pitch_um = 0.8;
    double dynamic_range_db = 50.0;

    std::size_t frames() const { return intensity_db.dim(0); }
    std::size_t depth() const { return intensity_db.dim(1); }
    std::size_t lateral() const { return intensity_db.dim(2); }
};

struct SimulationOptions {
    double lateral_pitch_um = 0.8;
    double axial_pixel_um = 0.4;
    double beam_fwhm_um = 1.8;
    std::uint64_t seed = 0;
};

inline constexpr double kDefaultDynamicRangeDb = 50.0;
inline constexpr double kDefaultAxialFraction = 0.25;
inline constexpr std::size_t kDefaultLateralWindow = 6;

// Wavenumber of every spectral bin for the given grid.
std::vector<double> wavenumber_grid(const SourceSpectrum& source, double axial_pixel_um);
// Deepest depth (um) representable without aliasing.
double unambiguous_depth_um(const SourceSpectrum& source, double axial_pixel_um);
// Intensity-weighted mean wavenumber of the sampled envelope.
double spectral_centroid(const SourceSpectrum& source, double axial_pixel_um);

FringeVolume simulate_fringes(const ScattererPhantom& phantom, const SourceSpectrum& source,
                              std::size_t n_frames, double noise_floor,
                              const SimulationOptions& options = {});

// One-sided DFT magnitude along the spectral axis, laid out [frame][depth][lateral].
Volume reconstruct_magnitude(const FringeVolume& fringes);
// 20*log10 of a magnitude volume, clamped to [peak - range, peak]. An all-zero
// volume maps to a uniform -range image.
Volume magnitude_to_db(const Volume& magnitude, double dynamic_range_db);
TomogramVolume reconstruct(const FringeVolume& fringes,
                           double dynamic_range_db = kDefaultDynamicRangeDb);

FringeVolume degrade_axial(const FringeVolume& fringes, double fwhm_fraction = kDefaultAxialFraction);
FringeVolume degrade_lateral(const FringeVolume& fringes,
                             std::size_t window_lines = kDefaultLateralWindow);
FringeVolume degrade_2d(const FringeVolume& fringes, double fwhm_fraction = kDefaultAxialFraction,
                        std::size_t window_lines = kDefaultLateralWindow);

// Physical extent covered by the lateral box average.
double lateral_averaging_extent_um(std::size_t window_lines, double lateral_pitch_um);

enum class DegradeMode { Axial, Lateral, TwoD };
DegradeMode parse_degrade_mode(std::string_view text);
std::string_view to_string(DegradeMode mode);
FringeVolume degrade(const FringeVolume& fringes, DegradeMode mode,
                     double fwhm_fraction = kDefaultAxialFraction,
                     std::size_t window_lines = kDefaultLateralWindow);

// Phantom builders.
ScattererPhantom point_phantom(double depth_um, double lateral_um, double extent_depth_um,
                               double extent_lateral_um, double amplitude = 1.0);
// Layered tissue-like phantom: dense random scatterers whose density decays
// with depth and whose reflectivity steps across a few horizontal layers.
ScattererPhantom tissue_phantom(double extent_depth_um, double extent_lateral_um,
                                double scatterers_per_um2, std::uint64_t seed);

// Binary container I/O (docs/container_format.md).
void save_fringes(const std::filesystem::path& path, const FringeVolume& volume);
FringeVolume load_fringes(const std::filesystem::path& path);
void save_tomogram(const std::filesystem::path& path, const TomogramVolume& volume);
TomogramVolume load_tomogram(const std::filesystem::path& path);

}  // namespace octgan::fringe
