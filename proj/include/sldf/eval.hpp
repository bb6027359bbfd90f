#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sldf/image.hpp"
#include "sldf/optics.hpp"

namespace sldf {

// ---------------------------------------------------------------------------
// Synthetic targets
// ---------------------------------------------------------------------------

/// Placement of one rendered bar group, reported back so measurements can be
/// taken at known positions.
struct BarGroupLayout {
    double frequency = 0.0;   // bar fundamental, cycles/um
    double period_um = 0.0;   // 1 / frequency
    double x_center_um = 0.0; // group center (modulation axis)
    double y_center_um = 0.0;
    double width_um = 0.0;  // extent along the modulation axis
    double height_um = 0.0; // bar length
};

/// Resolution target: one group of equal-width bright/dark bars per requested
/// frequency, modulated along x and stacked top to bottom, on a dark field.
struct BarTargetSpec {
    int width = 0;
    int height = 0;
    double pixel_pitch = 0.0;          // micrometers
    std::vector<double> frequencies;   // cycles/um, one group each
    int bars = 5;                      // bright bars per group
    double bar_length_um = 4.0;        // extent perpendicular to modulation
    double group_gap_um = 2.0;         // vertical spacing between groups
    double margin_um = 2.0;            // required dark border
    double amplitude = 1.0;
};

struct BarTarget {
    Image density;
    std::vector<BarGroupLayout> groups;
};

/// Renders the bar target. Bars are binary (duty cycle 0.5) sampled at pixel
/// centers; a group with period T and c bars spans (2c-1)*T/2 along x.
/// Throws errc::layout_overflow if the groups plus margin do not fit.
BarTarget gen_bars(const BarTargetSpec& spec);

/// Thin annulus on a dark field, rendered with a one-pixel linear edge ramp so
/// it is exactly rotation invariant about its center.
struct RingTargetSpec {
    int width = 0;
    int height = 0;
    double pixel_pitch = 0.0;
    double radius_um = 0.0;    // centerline radius
    double thickness_um = 0.0; // full radial thickness
    std::array<double, 2> center_um = {0.0, 0.0};
    double amplitude = 1.0;
    double margin_um = 1.0;
};

Image gen_ring(const RingTargetSpec& spec);

/// Anti-aliased filled disk, same edge ramp as the ring.
struct DiskSpec {
    std::array<double, 2> center_um = {0.0, 0.0};
    double radius_um = 0.0;
    double amplitude = 1.0;
};

/// Two-plane sectioning phantom: one disk in the focal plane, one displaced
/// axially. The masks select each disk's footprint (dilated) for energy
/// bookkeeping.
struct TwoPlaneSpec {
    int width = 0;
    int height = 0;
    double pixel_pitch = 0.0;
    DiskSpec in_focus;
    DiskSpec out_of_focus;
    double defocus_um = 0.0;      // axial offset of the second plane
    double mask_dilation_um = 1.0;
    double margin_um = 1.0;
};

struct TwoPlaneSample {
    SampleStack stack; // planes[0] in focus, planes[1] at defocus_um
    std::vector<std::uint8_t> in_focus_mask;
    std::vector<std::uint8_t> out_of_focus_mask;
};

TwoPlaneSample gen_two_plane(const TwoPlaneSpec& spec);

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

/// Intensity samples along a straight line segment.
struct ProfileMeasurement {
    std::vector<double> positions_um; // distance from the segment start
    std::vector<double> values;
};

/// Bilinear samples along the segment from `from` to `to` (micrometer
/// coordinates, origin at the field center). Throws errc::out_of_bounds if a
/// sample falls outside the interpolable interior; errc::bad_spec for fewer
/// than 2 samples.
ProfileMeasurement profile(const Image& img, std::array<double, 2> from, std::array<double, 2> to,
                           int n_samples);

/// (max - min) / (max + min) over the samples; 0 when the profile carries no
/// energy. Throws errc::bad_spec on an empty profile or negative values large
/// enough to flip the denominator.
double michelson_contrast(const std::vector<double>& values);

/// Fraction of the image's integrated intensity that falls inside the mask
/// (mask is row-major, same layout as the image; nonzero selects).
double energy_fraction(const Image& img, const std::vector<std::uint8_t>& mask);

/// Largest radius (cycles/um) at which the annular mean of |S| still exceeds
/// noise_floor times the DC magnitude. Annuli are one frequency step wide.
double effective_cutoff(const Spectrum& spec, double noise_floor = 1e-3);

enum class fwhm_mode {
    peak, // FWHM of the profile's own peak
    edge, // FWHM of the peak of |d(profile)/ds| (edge-spread measurement)
};

/// Full width at half maximum, in the profile's position units, with linear
/// interpolation of the half-height crossings. Half maximum is measured above
/// the profile minimum. Throws errc::no_peak if either crossing is missing.
double fwhm(const ProfileMeasurement& prof, fwhm_mode mode);

} // namespace sldf
