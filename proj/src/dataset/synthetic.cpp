#include "octgan/dataset.hpp"

namespace octgan::dataset {

SyntheticVolumePair synthetic_volume_pair(const SyntheticOptions& options) {
    fringe::SourceSpectrum source;
    source.samples = options.spectral_samples;
    fringe::SimulationOptions sim;
    sim.seed = options.seed;
    const double depth_um = fringe::unambiguous_depth_um(source, sim.axial_pixel_um);
    const double lateral_um = static_cast<double>(options.a_lines) * sim.lateral_pitch_um;
    const auto phantom = fringe::tissue_phantom(0.95 * depth_um, lateral_um, options.scatterers_per_um2, options.seed);
    const auto fringes = fringe::simulate_fringes(phantom, source, options.frames, options.noise_floor, sim);
    return {fringe::reconstruct(fringe::degrade(fringes, options.mode)), fringe::reconstruct(fringes)};
}

}  // namespace octgan::dataset
