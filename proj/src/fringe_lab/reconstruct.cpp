#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "octgan/fringe_lab.hpp"

namespace octgan::fringe {

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

class RealForwardTransform {
public:
    explicit RealForwardTransform(std::size_t n)
        : n_(n),
          in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
        if (plan_ == nullptr) {
            throw Error("reconstruct: FFTW planning failed");
        }
    }
    ~RealForwardTransform() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    RealForwardTransform(const RealForwardTransform&) = delete;
    RealForwardTransform& operator=(const RealForwardTransform&) = delete;

    // Writes |X_m| for m in [0, n/2) into `magnitude`.
    void magnitude(std::span<const double> line, std::span<double> magnitude) {
        std::copy(line.begin(), line.end(), in_.get());
        fftw_execute(plan_);
        for (std::size_t m = 0; m < n_ / 2; ++m) {
            magnitude[m] = std::hypot(out_.get()[m][0], out_.get()[m][1]);
        }
    }

private:
    std::size_t n_;
    std::unique_ptr<double, FftwFree> in_;
    std::unique_ptr<fftw_complex, FftwFree> out_;
    fftw_plan plan_ = nullptr;
};

}  // namespace

Volume reconstruct_magnitude(const FringeVolume& fringes) {
    fringes.validate();
    const std::size_t bins = fringes.bins();
    if (bins % 2 != 0) {
        throw InvalidArgument("reconstruct: spectral bin count must be even");
    }
    const std::size_t frames = fringes.frames();
    const std::size_t lines = fringes.a_lines();
    const std::size_t depth = bins / 2;

    Volume out(frames, depth, lines);
    RealForwardTransform fft(bins);
    std::vector<double> mag(depth);
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t l = 0; l < lines; ++l) {
            fft.magnitude(fringes.fringes.line(f, l), mag);
            for (std::size_t z = 0; z < depth; ++z) {
                out(f, z, l) = mag[z];
            }
        }
    }
    return out;
}

Volume magnitude_to_db(const Volume& magnitude, double dynamic_range_db) {
    if (!(dynamic_range_db > 0.0)) {
        throw InvalidArgument("magnitude_to_db: dynamic range must be positive");
    }
    Volume out = magnitude;
    double peak_mag = 0.0;
    for (double v : magnitude.values()) {
        peak_mag = std::max(peak_mag, v);
    }
    if (peak_mag <= 0.0) {
        std::fill(out.values().begin(), out.values().end(), -dynamic_range_db);
        return out;
    }
    const double peak = 20.0 * std::log10(peak_mag);
    const double floor = peak - dynamic_range_db;
    for (double& v : out.values()) {
        v = v > 0.0 ? std::clamp(20.0 * std::log10(v), floor, peak) : floor;
    }
    return out;
}

TomogramVolume reconstruct(const FringeVolume& fringes, double dynamic_range_db) {
    TomogramVolume t;
    t.intensity_db = magnitude_to_db(reconstruct_magnitude(fringes), dynamic_range_db);
    t.axial_pixel_um = fringes.axial_pixel_um;
    t.lateral_pitch_um = fringes.lateral_pitch_um;
    t.dynamic_range_db = dynamic_range_db;
    return t;
}

}  // namespace octgan::fringe
