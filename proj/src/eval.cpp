#include "sldf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sldf {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Linear one-pixel edge ramp around the zero level set of the signed distance
// s: full amplitude at s <= -pitch, zero at s >= +pitch.
double edge_ramp(double s, double pitch) { return clamp01(0.5 - s / (2.0 * pitch)); }

void fill_disk(Image& img, const DiskSpec& disk) {
    for (int iy = 0; iy < img.height; ++iy) {
        const double dy = img.y_um(iy) - disk.center_um[1];
        for (int ix = 0; ix < img.width; ++ix) {
            const double dx = img.x_um(ix) - disk.center_um[0];
            const double s = std::hypot(dx, dy) - disk.radius_um;
            img.at(ix, iy) += disk.amplitude * edge_ramp(s, img.pixel_pitch);
        }
    }
}

void check_centered_fit(const char* what, const std::array<double, 2>& center, double reach, int width,
                        int height, double pitch, double margin) {
    const double half_x = (width / 2 - 1) * pitch;
    const double half_y = (height / 2 - 1) * pitch;
    if (std::abs(center[0]) + reach + margin > half_x || std::abs(center[1]) + reach + margin > half_y)
        fail(errc::layout_overflow, std::string(what) + " plus a " + std::to_string(margin) +
                                        " um margin does not fit the field");
}

// FWHM of the (single) peak of a sampled curve, measured above its minimum.
double peak_fwhm(const std::vector<double>& pos, const std::vector<double>& val) {
    const std::size_t n = val.size();
    if (n < 3)
        fail(errc::bad_spec, "need at least 3 samples to measure a width");
    std::size_t im = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (val[i] > val[im])
            im = i;
    const double baseline = *std::min_element(val.begin(), val.end());
    const double top = val[im];
    if (!(top > baseline))
        fail(errc::no_peak, "profile is flat");
    const double half = baseline + 0.5 * (top - baseline);

    double left = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = im; i-- > 0;) {
        if (val[i] <= half) {
            const double t = (half - val[i]) / (val[i + 1] - val[i]);
            left = pos[i] + t * (pos[i + 1] - pos[i]);
            break;
        }
    }
    double right = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = im + 1; i < n; ++i) {
        if (val[i] <= half) {
            const double t = (half - val[i]) / (val[i - 1] - val[i]);
            right = pos[i] + t * (pos[i - 1] - pos[i]);
            break;
        }
    }
    if (std::isnan(left) || std::isnan(right))
        fail(errc::no_peak, "half-height crossing runs off the profile");
    return right - left;
}

} // namespace

BarTarget gen_bars(const BarTargetSpec& spec) {
    validate_dims(spec.width, spec.height);
    if (!(spec.pixel_pitch > 0.0))
        fail(errc::bad_spec, "pixel pitch must be positive");
    if (spec.frequencies.empty())
        fail(errc::bad_spec, "bar target needs at least one frequency");
    if (spec.bars < 1)
        fail(errc::bad_spec, "bar target needs at least one bar per group");
    if (!(spec.amplitude > 0.0))
        fail(errc::bad_spec, "bar amplitude must be positive");
    for (double f : spec.frequencies)
        if (!(f > 0.0))
            fail(errc::bad_spec, "bar frequencies must be positive");

    BarTarget out;
    out.density = Image(spec.width, spec.height, spec.pixel_pitch, 0.0);
    const double field_w = spec.width * spec.pixel_pitch;
    const double field_h = spec.height * spec.pixel_pitch;

    double total_h = 0.0;
    for (std::size_t g = 0; g < spec.frequencies.size(); ++g) {
        BarGroupLayout layout;
        layout.frequency = spec.frequencies[g];
        layout.period_um = 1.0 / layout.frequency;
        layout.width_um = (2 * spec.bars - 1) * layout.period_um / 2.0;
        layout.height_um = spec.bar_length_um;
        layout.x_center_um = 0.0;
        out.groups.push_back(layout);
        total_h += layout.height_um;
        if (g > 0)
            total_h += spec.group_gap_um;
        if (layout.width_um + 2.0 * spec.margin_um > field_w)
            fail(errc::layout_overflow, "bar group at " + std::to_string(layout.frequency) +
                                            " cycles/um is wider than the field");
        if (layout.frequency > 0.5 / spec.pixel_pitch)
            fail(errc::grid_too_coarse, "bar group at " + std::to_string(layout.frequency) +
                                            " cycles/um exceeds the grid Nyquist");
    }
    if (total_h + 2.0 * spec.margin_um > field_h)
        fail(errc::layout_overflow, "stacked bar groups are taller than the field");

    double y_cursor = -total_h / 2.0;
    for (auto& layout : out.groups) {
        layout.y_center_um = y_cursor + layout.height_um / 2.0;
        y_cursor += layout.height_um + spec.group_gap_um;

        const double period = layout.period_um;
        const double half_w = layout.width_um / 2.0;
        for (int iy = 0; iy < spec.height; ++iy) {
            const double y = out.density.y_um(iy);
            if (y < layout.y_center_um - layout.height_um / 2.0 ||
                y >= layout.y_center_um + layout.height_um / 2.0)
                continue;
            for (int ix = 0; ix < spec.width; ++ix) {
                const double u = out.density.x_um(ix) + half_w; // distance into the group
                if (u < 0.0 || u >= layout.width_um)
                    continue;
                if (std::fmod(u, period) < period / 2.0)
                    out.density.at(ix, iy) = spec.amplitude;
            }
        }
    }
    return out;
}

Image gen_ring(const RingTargetSpec& spec) {
    validate_dims(spec.width, spec.height);
    if (!(spec.pixel_pitch > 0.0))
        fail(errc::bad_spec, "pixel pitch must be positive");
    if (!(spec.radius_um > 0.0) || !(spec.thickness_um > 0.0))
        fail(errc::bad_spec, "ring radius and thickness must be positive");
    if (spec.thickness_um > 2.0 * spec.radius_um)
        fail(errc::bad_spec, "ring thickness exceeds its diameter");
    if (!(spec.amplitude > 0.0))
        fail(errc::bad_spec, "ring amplitude must be positive");
    check_centered_fit("ring", spec.center_um, spec.radius_um + spec.thickness_um / 2.0 + spec.pixel_pitch,
                       spec.width, spec.height, spec.pixel_pitch, spec.margin_um);

    Image img(spec.width, spec.height, spec.pixel_pitch, 0.0);
    for (int iy = 0; iy < spec.height; ++iy) {
        const double dy = img.y_um(iy) - spec.center_um[1];
        for (int ix = 0; ix < spec.width; ++ix) {
            const double dx = img.x_um(ix) - spec.center_um[0];
            const double s = std::abs(std::hypot(dx, dy) - spec.radius_um) - spec.thickness_um / 2.0;
            img.at(ix, iy) = spec.amplitude * edge_ramp(s, spec.pixel_pitch);
        }
    }
    return img;
}

TwoPlaneSample gen_two_plane(const TwoPlaneSpec& spec) {
    validate_dims(spec.width, spec.height);
    if (!(spec.pixel_pitch > 0.0))
        fail(errc::bad_spec, "pixel pitch must be positive");
    for (const DiskSpec* d : {&spec.in_focus, &spec.out_of_focus}) {
        if (!(d->radius_um > 0.0) || !(d->amplitude > 0.0))
            fail(errc::bad_spec, "disk radius and amplitude must be positive");
        check_centered_fit("disk", d->center_um, d->radius_um + spec.pixel_pitch, spec.width, spec.height,
                           spec.pixel_pitch, spec.margin_um);
    }

    TwoPlaneSample out;
    SamplePlane focal{Image(spec.width, spec.height, spec.pixel_pitch, 0.0), 0.0};
    SamplePlane displaced{Image(spec.width, spec.height, spec.pixel_pitch, 0.0), spec.defocus_um};
    fill_disk(focal.density, spec.in_focus);
    fill_disk(displaced.density, spec.out_of_focus);

    auto make_mask = [&](const DiskSpec& disk) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.width) * spec.height, 0);
        const double reach = disk.radius_um + spec.mask_dilation_um;
        for (int iy = 0; iy < spec.height; ++iy) {
            const double dy = focal.density.y_um(iy) - disk.center_um[1];
            for (int ix = 0; ix < spec.width; ++ix) {
                const double dx = focal.density.x_um(ix) - disk.center_um[0];
                if (std::hypot(dx, dy) <= reach)
                    mask[static_cast<std::size_t>(iy) * spec.width + ix] = 1;
            }
        }
        return mask;
    };
    out.in_focus_mask = make_mask(spec.in_focus);
    out.out_of_focus_mask = make_mask(spec.out_of_focus);
    out.stack.planes.push_back(std::move(focal));
    out.stack.planes.push_back(std::move(displaced));
    return out;
}

ProfileMeasurement profile(const Image& img, std::array<double, 2> from, std::array<double, 2> to,
                           int n_samples) {
    if (n_samples < 2)
        fail(errc::bad_spec, "profile needs at least 2 samples");
    ProfileMeasurement out;
    out.positions_um.reserve(n_samples);
    out.values.reserve(n_samples);
    const double length = std::hypot(to[0] - from[0], to[1] - from[1]);
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        const double x = from[0] + t * (to[0] - from[0]);
        const double y = from[1] + t * (to[1] - from[1]);
        // Continuous pixel coordinates; pixel centers sit on integers.
        const double px = x / img.pixel_pitch + img.width / 2;
        const double py = y / img.pixel_pitch + img.height / 2;
        if (px < 0.0 || px > img.width - 1 || py < 0.0 || py > img.height - 1)
            fail(errc::out_of_bounds, "profile sample at (" + std::to_string(x) + ", " + std::to_string(y) +
                                          ") um leaves the field");
        int ix = static_cast<int>(std::floor(px));
        int iy = static_cast<int>(std::floor(py));
        ix = std::min(ix, img.width - 2);
        iy = std::min(iy, img.height - 2);
        const double fx = px - ix;
        const double fy = py - iy;
        const double v = (1 - fx) * (1 - fy) * img.at(ix, iy) + fx * (1 - fy) * img.at(ix + 1, iy) +
                         (1 - fx) * fy * img.at(ix, iy + 1) + fx * fy * img.at(ix + 1, iy + 1);
        out.positions_um.push_back(t * length);
        out.values.push_back(v);
    }
    return out;
}

double michelson_contrast(const std::vector<double>& values) {
    if (values.empty())
        fail(errc::bad_spec, "contrast of an empty profile is undefined");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double sum = *hi + *lo;
    if (*hi <= 0.0)
        return 0.0;
    if (sum <= 0.0)
        fail(errc::bad_spec, "contrast is undefined for signals straddling zero");
    return (*hi - *lo) / sum;
}

double energy_fraction(const Image& img, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != img.data.size())
        fail(errc::grid_mismatch, "mask and image sizes differ");
    double total = 0.0, inside = 0.0;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        total += img.data[j];
        if (mask[j])
            inside += img.data[j];
    }
    if (!(total > 0.0))
        fail(errc::bad_spec, "image carries no energy");
    return inside / total;
}

double effective_cutoff(const Spectrum& spec, double noise_floor) {
    if (!(noise_floor > 0.0))
        fail(errc::bad_spec, "noise floor must be positive");
    const double step = std::max(spec.freq_step_x, spec.freq_step_y);
    const double dc = std::abs(spec.at(spec.width / 2, spec.height / 2));
    if (!(dc > 0.0))
        return 0.0;
    const double threshold = noise_floor * dc;

    std::vector<double> sums;
    std::vector<std::size_t> counts;
    for (int iy = 0; iy < spec.height; ++iy) {
        const double fy = spec.fy(iy);
        for (int ix = 0; ix < spec.width; ++ix) {
            const double rho = std::hypot(spec.fx(ix), fy);
            const auto k = static_cast<std::size_t>(std::lround(rho / step));
            if (k >= sums.size()) {
                sums.resize(k + 1, 0.0);
                counts.resize(k + 1, 0);
            }
            sums[k] += std::abs(spec.at(ix, iy));
            ++counts[k];
        }
    }
    for (std::size_t k = sums.size(); k-- > 0;)
        if (counts[k] > 0 && sums[k] / static_cast<double>(counts[k]) > threshold)
            return static_cast<double>(k) * step;
    return 0.0;
}

double fwhm(const ProfileMeasurement& prof, fwhm_mode mode) {
    if (prof.positions_um.size() != prof.values.size())
        fail(errc::bad_spec, "profile positions and values differ in length");
    if (mode == fwhm_mode::peak)
        return peak_fwhm(prof.positions_um, prof.values);

    const std::size_t n = prof.values.size();
    if (n < 5)
        fail(errc::bad_spec, "edge width needs at least 5 samples");
    std::vector<double> pos(n - 2), slope(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double ds = prof.positions_um[i + 1] - prof.positions_um[i - 1];
        if (!(ds > 0.0))
            fail(errc::bad_spec, "profile positions must increase");
        pos[i - 1] = prof.positions_um[i];
        slope[i - 1] = std::abs((prof.values[i + 1] - prof.values[i - 1]) / ds);
    }
    return peak_fwhm(pos, slope);
}

} // namespace sldf
