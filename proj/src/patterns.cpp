#include "sldf/patterns.hpp"

#include <cmath>
#include <numbers>

#include "sldf/fft.hpp"

namespace sldf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

// Verifies the rendered fringe puts its spectral side peaks at +-p_vector:
// the strongest non-DC bin must be the bin nearest one of the two peaks.
void check_side_peaks(const Image& frame, const std::array<double, 2>& p) {
    const Spectrum spec = forward_fft(frame);
    double best = -1.0;
    int bx = 0, by = 0;
    for (int iy = 0; iy < spec.height; ++iy)
        for (int ix = 0; ix < spec.width; ++ix) {
            if (std::abs(ix - spec.width / 2) <= 1 && std::abs(iy - spec.height / 2) <= 1)
                continue; // skip DC neighborhood
            const double mag = std::abs(spec.at(ix, iy));
            if (mag > best) {
                best = mag;
                bx = ix;
                by = iy;
            }
        }
    const double dxp = std::abs(spec.fx(bx) - p[0]) / spec.freq_step_x;
    const double dyp = std::abs(spec.fy(by) - p[1]) / spec.freq_step_y;
    const double dxm = std::abs(spec.fx(bx) + p[0]) / spec.freq_step_x;
    const double dym = std::abs(spec.fy(by) + p[1]) / spec.freq_step_y;
    const bool at_plus = dxp <= 0.5 + 1e-9 && dyp <= 0.5 + 1e-9;
    const bool at_minus = dxm <= 0.5 + 1e-9 && dym <= 0.5 + 1e-9;
    if (!at_plus && !at_minus)
        fail(errc::freq_aliased, "rendered fringe side peak landed away from the requested frequency");
}

} // namespace

double dmd_to_sample_frequency(double freq_dmd_cycles_per_mm, double magnification) {
    if (!(magnification > 0.0))
        fail(errc::bad_magnification, "projector-to-sample magnification must be positive");
    if (freq_dmd_cycles_per_mm < 0.0)
        fail(errc::bad_spec, "grating frequency must be nonnegative");
    return freq_dmd_cycles_per_mm / (1000.0 * magnification);
}

double PatternSpec::sample_frequency() const {
    return dmd_to_sample_frequency(freq_dmd_cycles_per_mm, magnification_dmd_to_sample);
}

std::array<double, 2> PatternSpec::frequency_vector(std::size_t orientation_index) const {
    const double p = sample_frequency();
    const double theta = orientations_deg.at(orientation_index) * kDeg;
    return {p * std::cos(theta), p * std::sin(theta)};
}

void validate_pattern_fields(const PatternSpec& spec) {
    if (spec.orientations_deg.empty())
        fail(errc::bad_spec, "protocol needs at least one orientation");
    for (std::size_t i = 0; i < spec.phases_deg.size(); ++i)
        for (std::size_t j = i + 1; j < spec.phases_deg.size(); ++j) {
            double d = std::fmod(std::abs(spec.phases_deg[i] - spec.phases_deg[j]), 360.0);
            d = std::min(d, 360.0 - d);
            if (d < 1e-9)
                fail(errc::bad_spec, "phases must be distinct modulo 360 degrees");
        }
    if (!(spec.modulation_depth >= 0.0 && spec.modulation_depth <= 1.0))
        fail(errc::bad_spec, "modulation depth must be within [0, 1]");
    if (!(spec.mean_level > 0.0))
        fail(errc::bad_spec, "mean level must be positive");
    dmd_to_sample_frequency(spec.freq_dmd_cycles_per_mm, spec.magnification_dmd_to_sample);
}

void validate_pattern_spec(const PatternSpec& spec) {
    validate_pattern_fields(spec);
    if (spec.phases_deg.size() < 3)
        fail(errc::bad_spec, "protocol needs at least three phases per orientation");
}

Image render_pattern(const PatternSpec& spec, double theta_deg, double phi_deg,
                     int width, int height, double pixel_pitch) {
    validate_pattern_spec(spec);
    const double p = spec.sample_frequency();
    const double nyquist = 1.0 / (2.0 * pixel_pitch);
    if (p > nyquist * (1.0 + 1e-12))
        fail(errc::freq_aliased, "fringe frequency " + std::to_string(p) + " cycles/um exceeds grid Nyquist " +
                                     std::to_string(nyquist));

    const double px = p * std::cos(theta_deg * kDeg);
    const double py = p * std::sin(theta_deg * kDeg);
    const double phi = phi_deg * kDeg;
    const double m = spec.modulation_depth;
    const double i0 = spec.mean_level;

    Image out(width, height, pixel_pitch);
    for (int iy = 0; iy < height; ++iy) {
        const double y = out.y_um(iy);
        for (int ix = 0; ix < width; ++ix) {
            const double x = out.x_um(ix);
            out.at(ix, iy) = i0 * (1.0 + m * std::cos(2.0 * kPi * (px * x + py * y) + phi));
        }
    }
    return out;
}

PatternSet make_pattern_set(const PatternSpec& spec, int width, int height, double pixel_pitch) {
    validate_pattern_spec(spec);
    PatternSet set;
    set.spec = spec;
    set.width = width;
    set.height = height;
    set.pixel_pitch = pixel_pitch;
    for (std::size_t oi = 0; oi < spec.orientations_deg.size(); ++oi) {
        set.p_vectors.push_back(spec.frequency_vector(oi));
        for (double phase : spec.phases_deg) {
            Image frame = render_pattern(spec, spec.orientations_deg[oi], phase, width, height, pixel_pitch);
            if (spec.modulation_depth > 0.0 && spec.sample_frequency() > 0.0)
                check_side_peaks(frame, set.p_vectors.back());
            set.frames.push_back(std::move(frame));
        }
    }
    return set;
}

} // namespace sldf
