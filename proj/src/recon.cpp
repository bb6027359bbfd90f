#include "sldf/recon.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "sldf/fft.hpp"

namespace sldf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kOverlapThreshold = 0.15; // OTF floor for the parameter regression

using cd = std::complex<double>;

std::vector<cd> to_complex_pixels(const Spectrum& spec) {
    std::vector<cd> pixels(spec.data);
    centered_fft(pixels, spec.width, spec.height, /*forward=*/false);
    return pixels;
}

struct PeakSearch {
    int bx = 0, by = 0;
    double peak = 0.0;
    double ratio = 0.0;
};

// Argmax of |G| over the given bin window, with the peak-to-background ratio
// computed against the window mean outside an `exclusion`-bin square around
// the peak. Exact ties go to the lower-frequency bin (then row-major order).
PeakSearch find_peak(const std::vector<double>& mag, int w, int h, int x0, int x1, int y0, int y1,
                     int exclusion) {
    PeakSearch out;
    double best = -1.0;
    long best_r2 = 0;
    for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) {
            const double v = mag[static_cast<std::size_t>(iy) * w + ix];
            const long dx = ix - w / 2, dy = iy - h / 2;
            const long r2 = dx * dx + dy * dy;
            if (v > best || (v == best && r2 < best_r2)) {
                best = v;
                best_r2 = r2;
                out.bx = ix;
                out.by = iy;
            }
        }
    out.peak = best;

    double background = 0.0;
    std::size_t count = 0;
    for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) {
            if (std::abs(ix - out.bx) <= exclusion && std::abs(iy - out.by) <= exclusion)
                continue;
            background += mag[static_cast<std::size_t>(iy) * w + ix];
            ++count;
        }
    if (count == 0 || background == 0.0)
        out.ratio = (out.peak > 0.0) ? std::numeric_limits<double>::infinity() : 0.0;
    else
        out.ratio = out.peak / (background / static_cast<double>(count));
    return out;
}

// Sub-bin offset of a sampled peak from a 3-point parabola.
double quadratic_offset(double lo, double mid, double hi) {
    const double den = lo - 2.0 * mid + hi;
    if (!(den < 0.0))
        return 0.0; // flat or not a maximum; keep the integer bin
    return std::clamp(0.5 * (lo - hi) / den, -0.5, 0.5);
}

Eigen::Matrix3cd phase_matrix(const std::array<double, 3>& phases_deg) {
    Eigen::Matrix3cd a;
    for (int k = 0; k < 3; ++k) {
        const double phi = phases_deg[k] * kDeg;
        a(k, 0) = cd(1.0, 0.0);
        a(k, 1) = std::exp(cd(0.0, phi));
        a(k, 2) = std::exp(cd(0.0, -phi));
    }
    return a;
}

double apodization_gain(apodization_kind kind, double rho, double extended_cutoff) {
    switch (kind) {
        case apodization_kind::triangle:
            return std::max(0.0, 1.0 - rho / extended_cutoff);
        case apodization_kind::raised_cosine:
            return rho <= extended_cutoff ? 0.5 * (1.0 + std::cos(kPi * rho / extended_cutoff)) : 0.0;
        case apodization_kind::none:
            return 1.0;
    }
    return 1.0;
}

} // namespace

void validate_recon_params(const ReconParams& params) {
    if (!(params.wiener_w > 0.0))
        fail(errc::bad_spec, "wiener regularization must be positive");
    if (params.upsample_factor < 1)
        fail(errc::bad_spec, "upsample factor must be a positive integer");
}

double mixing_condition(const std::array<double, 3>& phases_deg) {
    Eigen::JacobiSVD<Eigen::Matrix3cd> svd(phase_matrix(phases_deg));
    const auto& s = svd.singularValues();
    if (s(2) <= 0.0)
        return std::numeric_limits<double>::infinity();
    return s(0) / s(2);
}

SeparatedComponents separate_components(const std::array<Spectrum, 3>& frames,
                                        const std::array<double, 3>& phases_deg,
                                        double modulation) {
    if (!same_grid(frames[0], frames[1]) || !same_grid(frames[0], frames[2]))
        fail(errc::grid_mismatch, "phase frames live on different grids");
    const double condition = mixing_condition(phases_deg);
    if (!(condition <= 1e8))
        fail(errc::singular_phases, "phase mixing matrix condition number " + std::to_string(condition) +
                                        " exceeds 1e8");
    if (!(modulation > 0.0))
        fail(errc::singular_phases, "zero modulation depth leaves the side components unconstrained");

    Eigen::Matrix3cd m = phase_matrix(phases_deg);
    for (int k = 0; k < 3; ++k) {
        m(k, 1) *= 0.5 * modulation;
        m(k, 2) *= 0.5 * modulation;
    }
    const Eigen::Matrix3cd inv = m.inverse();

    SeparatedComponents out{frames[0], frames[0], frames[0]};
    const std::size_t n = frames[0].data.size();
    for (std::size_t j = 0; j < n; ++j) {
        const cd d0 = frames[0].data[j], d1 = frames[1].data[j], d2 = frames[2].data[j];
        out.c0.data[j] = inv(0, 0) * d0 + inv(0, 1) * d1 + inv(0, 2) * d2;
        out.cp.data[j] = inv(1, 0) * d0 + inv(1, 1) * d1 + inv(1, 2) * d2;
        out.cm.data[j] = inv(2, 0) * d0 + inv(2, 1) * d1 + inv(2, 2) * d2;
    }
    return out;
}

FringeEstimate estimate_fringe_params(const Spectrum& c0, const Spectrum& cp, const OpticsConfig& cfg,
                                      const std::optional<std::array<double, 2>>& p_hint) {
    if (!same_grid(c0, cp))
        fail(errc::grid_mismatch, "components live on different grids");
    validate_optics(cfg);
    const int w = c0.width, h = c0.height;

    // Cross-correlation of the two components over all displacements, computed
    // as the transform of conj(c0(r)) * c+(r); its magnitude peaks where the
    // displaced object spectra align. The product is zero-padded spatially so
    // the correlation is sampled kPad times finer than the component grid:
    // for compact objects the peak's main lobe is only about a bin wide, too
    // narrow for a three-point fit at native sampling.
    constexpr int kPad = 4;
    const std::vector<cd> real0 = to_complex_pixels(c0);
    const std::vector<cd> realp = to_complex_pixels(cp);
    const int fw = w * kPad, fh = h * kPad;
    std::vector<cd> corr(static_cast<std::size_t>(fw) * fh, cd(0.0, 0.0));
    const int ox = fw / 2 - w / 2, oy = fh / 2 - h / 2;
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
            corr[static_cast<std::size_t>(iy + oy) * fw + (ix + ox)] =
                std::conj(real0[static_cast<std::size_t>(iy) * w + ix]) *
                realp[static_cast<std::size_t>(iy) * w + ix];
    centered_fft(corr, fw, fh, /*forward=*/true);

    std::vector<double> mag(corr.size());
    for (std::size_t j = 0; j < corr.size(); ++j)
        mag[j] = std::abs(corr[j]);

    const double step_x = c0.freq_step_x / kPad;
    const double step_y = c0.freq_step_y / kPad;
    int x0 = 0, x1 = fw - 1, y0 = 0, y1 = fh - 1;
    if (p_hint) {
        const int hx = fw / 2 + static_cast<int>(std::lround((*p_hint)[0] / step_x));
        const int hy = fh / 2 + static_cast<int>(std::lround((*p_hint)[1] / step_y));
        x0 = std::max(0, hx - 3 * kPad);
        x1 = std::min(fw - 1, hx + 3 * kPad);
        y0 = std::max(0, hy - 3 * kPad);
        y1 = std::min(fh - 1, hy + 3 * kPad);
        if (x0 > x1 || y0 > y1)
            fail(errc::no_peak, "frequency hint lies outside the grid");
    }

    const PeakSearch peak = find_peak(mag, fw, fh, x0, x1, y0, y1, /*exclusion=*/2 * kPad);
    if (!(peak.ratio >= 3.0))
        fail(errc::no_peak, "correlation peak-to-background ratio " + std::to_string(peak.ratio) +
                                " below 3; no fringe component found");

    auto mag_at = [&](int ix, int iy) { return mag[static_cast<std::size_t>(iy) * fw + ix]; };
    double dx = 0.0, dy = 0.0;
    if (peak.bx > 0 && peak.bx < fw - 1)
        dx = quadratic_offset(mag_at(peak.bx - 1, peak.by), peak.peak, mag_at(peak.bx + 1, peak.by));
    if (peak.by > 0 && peak.by < fh - 1)
        dy = quadratic_offset(mag_at(peak.bx, peak.by - 1), peak.peak, mag_at(peak.bx, peak.by + 1));

    FringeEstimate est;
    est.p_vector = {(peak.bx - fw / 2 + dx) * step_x, (peak.by - fh / 2 + dy) * step_y};
    est.peak_ratio = peak.ratio;

    // Move C+ back by the estimated frequency and regress it against C0 over
    // the well-transferred overlap. For clean data C+(f + p) = m e^{i phi0}
    // O(f) OTF(f + p), so the complex slope is m e^{i phi0}.
    std::vector<cd> shifted = realp;
    const double pitch = c0.pixel_pitch();
    for (int iy = 0; iy < h; ++iy) {
        const double y = (iy - h / 2) * pitch;
        for (int ix = 0; ix < w; ++ix) {
            const double x = (ix - w / 2) * pitch;
            const double arg = -2.0 * kPi * (est.p_vector[0] * x + est.p_vector[1] * y);
            shifted[static_cast<std::size_t>(iy) * w + ix] *= std::exp(cd(0.0, arg));
        }
    }
    centered_fft(shifted, w, h, /*forward=*/true);

    cd cross(0.0, 0.0);
    double norm = 0.0;
    for (int iy = 0; iy < h; ++iy) {
        const double fy = c0.fy(iy);
        for (int ix = 0; ix < w; ++ix) {
            const double fx = c0.fx(ix);
            const double t_here = otf_radial(cfg.na_detection, cfg.wavelength_um, std::hypot(fx, fy));
            if (t_here < kOverlapThreshold)
                continue;
            const double t_there = otf_radial(cfg.na_detection, cfg.wavelength_um,
                                              std::hypot(fx + est.p_vector[0], fy + est.p_vector[1]));
            if (t_there < kOverlapThreshold)
                continue;
            const cd model = c0.at(ix, iy) * (t_there / t_here);
            cross += std::conj(model) * shifted[static_cast<std::size_t>(iy) * w + ix];
            norm += std::norm(model);
        }
    }
    if (norm <= 0.0)
        fail(errc::no_peak, "no spectral overlap between components at the estimated frequency");
    const cd slope = cross / norm;
    est.phase0_rad = std::arg(slope);
    est.modulation = std::abs(slope);
    return est;
}

Spectrum shift_component(const Spectrum& component, std::array<double, 2> shift, int upsample_factor,
                         double support_radius) {
    if (upsample_factor < 1)
        fail(errc::bad_spec, "upsample factor must be a positive integer");
    const int w = component.width * upsample_factor;
    const int h = component.height * upsample_factor;
    const double nyquist = std::min(w / 2 * component.freq_step_x, h / 2 * component.freq_step_y);
    const double reach = std::hypot(shift[0], shift[1]) + support_radius;
    if (reach > nyquist * (1.0 + 1e-12))
        fail(errc::support_overflow, "shifted support reaches " + std::to_string(reach) +
                                         " cycles/um, beyond the upsampled Nyquist " + std::to_string(nyquist));

    // Centered zero pad in frequency; same frequency step, finer pixels.
    std::vector<cd> field(static_cast<std::size_t>(w) * h, cd(0.0, 0.0));
    const int ox = w / 2 - component.width / 2;
    const int oy = h / 2 - component.height / 2;
    for (int iy = 0; iy < component.height; ++iy)
        for (int ix = 0; ix < component.width; ++ix)
            field[static_cast<std::size_t>(iy + oy) * w + (ix + ox)] = component.at(ix, iy);

    centered_fft(field, w, h, /*forward=*/false);

    const double pitch = 1.0 / (w * component.freq_step_x);
    for (int iy = 0; iy < h; ++iy) {
        const double y = (iy - h / 2) * pitch;
        for (int ix = 0; ix < w; ++ix) {
            const double x = (ix - w / 2) * pitch;
            const double arg = 2.0 * kPi * (shift[0] * x + shift[1] * y);
            field[static_cast<std::size_t>(iy) * w + ix] *= std::exp(cd(0.0, arg));
        }
    }

    centered_fft(field, w, h, /*forward=*/true);

    Spectrum out(w, h, component.freq_step_x, component.freq_step_y);
    out.data = std::move(field);
    return out;
}

Spectrum wiener_combine(const std::vector<ShiftedComponent>& components, const OpticsConfig& cfg,
                        const ReconParams& params) {
    if (components.empty())
        fail(errc::bad_spec, "nothing to combine");
    validate_recon_params(params);
    validate_optics(cfg);
    for (const auto& c : components)
        if (!same_grid(components.front().spectrum, c.spectrum))
            fail(errc::grid_mismatch, "components live on different grids");

    const Spectrum& proto = components.front().spectrum;
    const int w = proto.width, h = proto.height;
    double max_shift = 0.0;
    for (const auto& c : components)
        max_shift = std::max(max_shift, std::hypot(c.shift[0], c.shift[1]));
    const double extended_cutoff = cfg.detection_cutoff() + max_shift;
    const double w2 = params.wiener_w * params.wiener_w;

    Spectrum out(w, h, proto.freq_step_x, proto.freq_step_y);
    std::vector<double> denom(out.data.size(), 0.0);

    // Fixed accumulation order over components keeps the reduction
    // deterministic regardless of how callers parallelize around us.
    for (const auto& c : components) {
        for (int iy = 0; iy < h; ++iy) {
            const double fy = proto.fy(iy);
            for (int ix = 0; ix < w; ++ix) {
                const double fx = proto.fx(ix);
                const double t = otf_radial(cfg.na_detection, cfg.wavelength_um,
                                            std::hypot(fx - c.shift[0], fy - c.shift[1]));
                if (t == 0.0)
                    continue;
                const std::size_t j = static_cast<std::size_t>(iy) * w + ix;
                out.data[j] += t * c.spectrum.data[j]; // OTF real: conj(t) == t
                denom[j] += t * t;
            }
        }
    }

    for (int iy = 0; iy < h; ++iy) {
        const double fy = proto.fy(iy);
        for (int ix = 0; ix < w; ++ix) {
            const double fx = proto.fx(ix);
            const std::size_t j = static_cast<std::size_t>(iy) * w + ix;
            out.data[j] *= apodization_gain(params.apodization, std::hypot(fx, fy), extended_cutoff) /
                           (denom[j] + w2);
        }
    }
    return out;
}

Image conventional_image(const RawStack& stack) {
    validate_stack(stack);
    Image out(stack.manifest.width, stack.manifest.height, stack.manifest.pixel_pitch, 0.0);
    for (const auto& frame : stack.frames)
        for (std::size_t j = 0; j < out.data.size(); ++j)
            out.data[j] += frame.data[j];
    const double scale = 1.0 / static_cast<double>(stack.frames.size());
    for (double& v : out.data)
        v *= scale;
    return out;
}

Image wiener_deconvolve(const Image& img, const OpticsConfig& cfg, double wiener_w) {
    if (!(wiener_w > 0.0))
        fail(errc::bad_spec, "wiener regularization must be positive");
    Spectrum spec = forward_fft(img);
    const double w2 = wiener_w * wiener_w;
    for (int iy = 0; iy < spec.height; ++iy) {
        const double fy = spec.fy(iy);
        for (int ix = 0; ix < spec.width; ++ix) {
            const double fx = spec.fx(ix);
            const double t = otf_radial(cfg.na_detection, cfg.wavelength_um, std::hypot(fx, fy));
            spec.at(ix, iy) *= t / (t * t + w2);
        }
    }
    Image out = inverse_fft(spec);
    for (double& v : out.data)
        v = std::max(v, 0.0);
    return out;
}

ReconResult reconstruct(const RawStack& stack, const ReconParams& params) {
    validate_stack(stack);
    validate_recon_params(params);
    if (stack.n_phases() != 3)
        fail(errc::partial_protocol, "reconstruction needs exactly three phases per orientation, stack has " +
                                         std::to_string(stack.n_phases()));

    const OpticsConfig& cfg = stack.manifest.optics;
    const double cutoff = cfg.detection_cutoff();
    const std::array<double, 3> phases = {stack.manifest.pattern.phases_deg[0],
                                          stack.manifest.pattern.phases_deg[1],
                                          stack.manifest.pattern.phases_deg[2]};
    const double manifest_m = stack.manifest.pattern.modulation_depth;

    ReconResult result;
    std::vector<ShiftedComponent> components;

    if (params.source == parameter_source::manifest && manifest_m < 1e-12) {
        // Unmodulated protocol: nothing to separate, plain Wiener deconvolution
        // of the phase-averaged image on the requested output grid.
        const Spectrum c0 = forward_fft(conventional_image(stack));
        components.push_back({shift_component(c0, {0.0, 0.0}, params.upsample_factor, cutoff), {0.0, 0.0}});
        result.per_orientation.assign(stack.n_orientations(), FringeEstimate{});
    } else {
        for (std::size_t oi = 0; oi < stack.n_orientations(); ++oi) {
            const std::array<Spectrum, 3> spectra = {forward_fft(stack.frame(oi, 0)),
                                                     forward_fft(stack.frame(oi, 1)),
                                                     forward_fft(stack.frame(oi, 2))};
            FringeEstimate est;
            SeparatedComponents sep;
            if (params.source == parameter_source::manifest) {
                sep = separate_components(spectra, phases, manifest_m);
                est.p_vector = stack.manifest.pattern.frequency_vector(oi);
                est.modulation = manifest_m;
            } else {
                // Separate at unit modulation, then read the true depth and
                // starting phase off the components themselves.
                sep = separate_components(spectra, phases, 1.0);
                std::optional<std::array<double, 2>> hint;
                if (stack.manifest.pattern.sample_frequency() > 0.0)
                    hint = stack.manifest.pattern.frequency_vector(oi);
                est = estimate_fringe_params(sep.c0, sep.cp, cfg, hint);
                const cd correct_p = std::exp(cd(0.0, -est.phase0_rad)) / est.modulation;
                const cd correct_m = std::exp(cd(0.0, +est.phase0_rad)) / est.modulation;
                for (std::size_t j = 0; j < sep.cp.data.size(); ++j) {
                    sep.cp.data[j] *= correct_p;
                    sep.cm.data[j] *= correct_m;
                }
            }

            const std::array<double, 2> p = est.p_vector;
            components.push_back({shift_component(sep.c0, {0.0, 0.0}, params.upsample_factor, cutoff), {0.0, 0.0}});
            components.push_back({shift_component(sep.cp, {-p[0], -p[1]}, params.upsample_factor, cutoff),
                                  {-p[0], -p[1]}});
            components.push_back({shift_component(sep.cm, {+p[0], +p[1]}, params.upsample_factor, cutoff),
                                  {+p[0], +p[1]}});
            result.per_orientation.push_back(est);
        }
    }

    const Spectrum combined = wiener_combine(components, cfg, params);
    result.enhanced = inverse_fft(combined);
    for (double& v : result.enhanced.data)
        v = std::max(v, 0.0);
    return result;
}

} // namespace sldf
