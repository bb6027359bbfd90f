#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sldf/image.hpp"

namespace sldf {

/// Fringe illumination protocol: a projector grating at freq_dmd cycles/mm is
/// demagnified onto the sample, giving fringes at
/// p = freq_dmd / (1000 * magnification) cycles/um, rendered at each listed
/// orientation and phase. Orientations are fringe normal directions in
/// degrees; phases must hold at least 3 values, distinct modulo 360.
struct PatternSpec {
    std::vector<double> orientations_deg;
    std::vector<double> phases_deg;
    double freq_dmd_cycles_per_mm = 0.0;
    double magnification_dmd_to_sample = 1.0;
    double modulation_depth = 1.0; // m in [0, 1]
    double mean_level = 1.0;       // I0 > 0

    double sample_frequency() const; // cycles/um at the sample plane
    std::array<double, 2> frequency_vector(std::size_t orientation_index) const;
};

/// Field-level checks: distinct phases, m in [0, 1], positive mean level and
/// magnification, nonnegative frequency. Does not require a phase count —
/// a stack read back from disk may carry a partial protocol, and the
/// operations that need three phases report that themselves.
void validate_pattern_fields(const PatternSpec& spec);

/// validate_pattern_fields plus the acquisition-protocol minimum of three
/// phases per orientation.
void validate_pattern_spec(const PatternSpec& spec);

/// freq_dmd [cycles/mm] / (1000 * magnification) -> cycles/um.
/// Fails with errc::bad_magnification for magnification <= 0.
double dmd_to_sample_frequency(double freq_dmd_cycles_per_mm, double magnification);

/// Renders I0 * (1 + m cos(2 pi p . r + phi)) with r in micrometers from the
/// image center, p = p * (cos theta, sin theta). phi = 0 puts a fringe
/// maximum at the center. Fails with errc::freq_aliased above grid Nyquist.
Image render_pattern(const PatternSpec& spec, double theta_deg, double phi_deg,
                     int width, int height, double pixel_pitch);

/// All rendered frames of a protocol, orientation-major: frame index
/// oi * phases + pi.
struct PatternSet {
    PatternSpec spec;
    int width = 0;
    int height = 0;
    double pixel_pitch = 0.0;
    std::vector<Image> frames;
    std::vector<std::array<double, 2>> p_vectors; // one per orientation

    std::size_t n_orientations() const { return spec.orientations_deg.size(); }
    std::size_t n_phases() const { return spec.phases_deg.size(); }
    const Image& frame(std::size_t oi, std::size_t pi) const { return frames[oi * n_phases() + pi]; }
};

/// Renders the full protocol and verifies each frame's spectral side peaks
/// land at +-p_vector to within half a frequency bin.
PatternSet make_pattern_set(const PatternSpec& spec, int width, int height, double pixel_pitch);

} // namespace sldf
