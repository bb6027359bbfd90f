#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sldf/image.hpp"

namespace sldf {

enum class imaging_mode { transmission, reflectance };

/// Detector noise model. photon_scale > 0 enables shot noise with the
/// scaled-square-root Gaussian approximation sigma = sqrt(I / photon_scale);
/// photon_scale == 0 disables it. read_noise_sigma adds signal-independent
/// Gaussian noise in intensity counts. Streams are seeded per frame, so a
/// fixed seed reproduces a stack bit for bit.
struct NoiseSpec {
    double read_noise_sigma = 0.0;
    double photon_scale = 0.0;
    std::uint64_t seed = 0;
};

/// Numerical apertures and wavelength of the acquisition. The illumination
/// aperture is an annulus [inner, outer]; dark field needs its inner edge
/// strictly above the detection aperture.
struct OpticsConfig {
    double na_detection = 0.4;
    double na_illumination_inner = 0.5;
    double na_illumination_outer = 0.75;
    double wavelength_um = 0.55;
    imaging_mode mode = imaging_mode::transmission;
    NoiseSpec noise;

    /// Incoherent detection cutoff 2 NA / lambda, cycles/um.
    double detection_cutoff() const { return 2.0 * na_detection / wavelength_um; }
};

/// Range checks (positive NAs <= 1, wavelength within 0.3..1.1 um).
void validate_optics(const OpticsConfig& cfg);

struct DarkfieldReport {
    bool dark_field = false;
    double max_fringe_frequency = 0.0; // 2 * na_illumination_outer / lambda, cycles/um
    std::string detail;
};

/// Checks 0 < na_detection < na_illumination_inner <= na_illumination_outer <= 1.
/// Never throws; the report says which inequality failed.
DarkfieldReport validate_darkfield(const OpticsConfig& cfg);

/// Throws errc::not_darkfield when validate_darkfield fails.
void require_darkfield(const OpticsConfig& cfg);

/// In-focus incoherent OTF of a circular pupil at radial frequency rho:
/// (2/pi)(acos(r) - r sqrt(1 - r^2)) with r = rho / (2 NA / lambda), zero
/// beyond the cutoff.
double otf_radial(double na, double wavelength_um, double rho);

/// Defocused incoherent OTF: normalized autocorrelation of the circular pupil
/// carrying the quadratic defocus phase exp(i 2pi/lambda * w20 * r^2), with
/// w20 = defocus_um * NA^2 / 2. Reduces to otf_radial at defocus 0. Can go
/// negative (contrast reversal); |value| never exceeds the in-focus OTF.
double defocused_otf_radial(double na, double wavelength_um, double defocus_um, double rho);

struct FreqGrid {
    int width = 0;
    int height = 0;
    double freq_step_x = 0.0;
    double freq_step_y = 0.0;
};

FreqGrid grid_of(const Spectrum& spec);
FreqGrid grid_for_image(int width, int height, double pixel_pitch);

/// Samples the in-focus detection OTF on a frequency grid. Fails with
/// errc::grid_too_coarse if the cutoff exceeds the grid Nyquist.
Filter make_otf(const OpticsConfig& cfg, const FreqGrid& grid);

/// Same, for a plane defocused by dz micrometers.
Filter make_defocused_otf(const OpticsConfig& cfg, const FreqGrid& grid, double dz_um);

/// One scattering plane of a synthetic sample: nonnegative scattering density
/// plus its axial offset from the focal plane.
struct SamplePlane {
    Image density;
    double defocus_um = 0.0;
};

struct SampleStack {
    std::vector<SamplePlane> planes;
};

/// Dark-field acquisition of one illumination pattern: per plane, the pattern
/// is attenuated by the illumination-side defocus factor, multiplied by the
/// scattering density, and blurred by the defocused detection OTF; plane
/// contributions add, noise is applied, and the detector output is clamped at
/// zero. Convolutions are circular, so samples must keep a dark margin.
Image simulate_frame(const SampleStack& sample, const Image& pattern, const OpticsConfig& cfg);

// Forward declarations; full definitions in patterns.hpp / stack.hpp.
struct PatternSet;
struct RawStack;

/// Simulates every frame of a pattern set (orientation-major order) and
/// assembles the stack with its manifest. Frame values are quantized to the
/// 32-bit float depth of the on-disk raster format, so a written stack reloads
/// bit for bit.
RawStack simulate_stack(const SampleStack& sample, const PatternSet& patterns, const OpticsConfig& cfg);

} // namespace sldf
