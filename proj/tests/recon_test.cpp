#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "sldf/error.hpp"
#include "sldf/fft.hpp"
#include "sldf/optics.hpp"
#include "sldf/patterns.hpp"
#include "sldf/recon.hpp"
#include "sldf/stack.hpp"

#include "test_util.hpp"

using namespace sldf;
using test_util::rel_err;

namespace {

Spectrum random_spectrum(int w, int h, double fsx, double fsy, std::uint64_t seed) {
    Spectrum s(w, h, fsx, fsy);
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& v : s.data)
        v = {uni(eng), uni(eng)};
    return s;
}

double max_component_err(const SeparatedComponents& got, const Spectrum& c0, const Spectrum& cp,
                         const Spectrum& cm) {
    double m = 0.0;
    for (std::size_t i = 0; i < c0.size(); ++i) {
        m = std::max(m, std::abs(got.c0.data[i] - c0.data[i]));
        m = std::max(m, std::abs(got.cp.data[i] - cp.data[i]));
        m = std::max(m, std::abs(got.cm.data[i] - cm.data[i]));
    }
    return m;
}

std::array<Spectrum, 3> compose_frames(const Spectrum& c0, const Spectrum& cp, const Spectrum& cm,
                                       const std::array<double, 3>& phases_deg, double m) {
    std::array<Spectrum, 3> frames{c0, c0, c0};
    for (int k = 0; k < 3; ++k) {
        const double phi = phases_deg[k] * std::numbers::pi / 180.0;
        const auto ep = std::polar(m / 2.0, phi);
        const auto em = std::polar(m / 2.0, -phi);
        for (std::size_t i = 0; i < c0.size(); ++i)
            frames[k].data[i] = c0.data[i] + ep * cp.data[i] + em * cm.data[i];
    }
    return frames;
}

/// Ring sample on a dark background, used by the pipeline-level tests.
Image ring_image(int n, double pitch, double radius, double thickness) {
    Image img(n, n, pitch, 0.0);
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const double r = std::hypot(img.x_um(ix), img.y_um(iy));
            const double s = std::abs(r - radius) - thickness / 2.0;
            img.at(ix, iy) = std::clamp(0.5 - s / (2.0 * pitch), 0.0, 1.0);
        }
    }
    return img;
}

} // namespace

TEST_CASE("phase matrix conditioning flags degenerate protocols") {
    CHECK(mixing_condition({0.0, 120.0, 240.0}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mixing_condition({30.0, 150.0, 270.0}) == doctest::Approx(1.0).epsilon(1e-9));
    const double skewed = mixing_condition({0.0, 10.0, 20.0});
    CHECK(skewed > 10.0);
    CHECK(std::isfinite(skewed));
    CHECK(mixing_condition({0.0, 0.0, 120.0}) > 1e8);
}

TEST_CASE("component separation inverts the composed frames") {
    const int n = 32;
    Spectrum c0 = random_spectrum(n, n, 0.1, 0.1, 1);
    Spectrum cp = random_spectrum(n, n, 0.1, 0.1, 2);
    Spectrum cm = random_spectrum(n, n, 0.1, 0.1, 3);

    for (double m : {0.5, 1.0}) {
        auto frames = compose_frames(c0, cp, cm, {0.0, 120.0, 240.0}, m);
        auto got = separate_components(frames, {0.0, 120.0, 240.0}, m);
        CHECK(max_component_err(got, c0, cp, cm) < 1e-11);
    }

    // Rotated and slightly uneven (but well-conditioned) phases work too.
    auto frames = compose_frames(c0, cp, cm, {10.0, 125.0, 260.0}, 0.8);
    auto got = separate_components(frames, {10.0, 125.0, 260.0}, 0.8);
    CHECK(max_component_err(got, c0, cp, cm) < 1e-10);
}

TEST_CASE("separation refuses degenerate phase sets and zero modulation") {
    const int n = 16;
    Spectrum s = random_spectrum(n, n, 0.1, 0.1, 4);
    std::array<Spectrum, 3> frames{s, s, s};
    try {
        separate_components(frames, {0.0, 0.0, 120.0}, 1.0);
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::singular_phases);
    }
    // Nearly coincident phases are ill-conditioned but still below the
    // refusal threshold.
    separate_components(frames, {0.0, 0.5, 120.0}, 1.0);
    CHECK_THROWS_AS(separate_components(frames, {0.0, 120.0, 240.0}, 0.0), error);

    Spectrum other(n, n, 0.2, 0.1);
    std::array<Spectrum, 3> mixed{s, s, other};
    CHECK_THROWS_AS(separate_components(mixed, {0.0, 120.0, 240.0}, 1.0), error);
}

TEST_CASE("integer-bin shifts act as circular bin translations") {
    const int n = 16;
    const double fs = 0.125;
    Spectrum s = random_spectrum(n, n, fs, fs, 5);
    const int kx = 2;
    const int ky = -3;

    Spectrum moved = shift_component(s, {kx * fs, ky * fs}, 1, 0.0);
    REQUIRE(moved.width == n);
    double max_err = 0.0;
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const int sx = ((ix - kx) % n + n) % n;
            const int sy = ((iy - ky) % n + n) % n;
            max_err = std::max(max_err, std::abs(moved.at(ix, iy) - s.at(sx, sy)));
        }
    }
    CHECK(max_err < 1e-12);
}

TEST_CASE("zero shift on an upsampled grid is a centered zero pad") {
    const int n = 16;
    const double fs = 0.125;
    Spectrum s = random_spectrum(n, n, fs, fs, 6);
    Spectrum up = shift_component(s, {0.0, 0.0}, 2, 0.0);
    REQUIRE(up.width == 2 * n);
    REQUIRE(up.height == 2 * n);
    CHECK(up.freq_step_x == doctest::Approx(fs).epsilon(1e-15));
    double max_err = 0.0;
    for (int iy = 0; iy < 2 * n; ++iy) {
        for (int ix = 0; ix < 2 * n; ++ix) {
            std::complex<double> want = 0.0;
            // Center bin n/2 lands on the new center 2n/2 = n, so the embedded
            // block starts at n - n/2.
            const int jx = ix - (n - n / 2);
            const int jy = iy - (n - n / 2);
            if (jx >= 0 && jx < n && jy >= 0 && jy < n)
                want = s.at(jx, jy);
            max_err = std::max(max_err, std::abs(up.at(ix, iy) - want));
        }
    }
    CHECK(max_err < 1e-12);
}

TEST_CASE("sub-bin shifts preserve spectral energy") {
    const int n = 32;
    const double fs = 0.1;
    Spectrum s = random_spectrum(n, n, fs, fs, 7);
    double e0 = 0.0;
    for (const auto& v : s.data)
        e0 += std::norm(v);
    Spectrum moved = shift_component(s, {0.517, -0.233}, 2, 0.0);
    double e1 = 0.0;
    for (const auto& v : moved.data)
        e1 += std::norm(v);
    CHECK(rel_err(e1, e0) < 1e-10);
}

TEST_CASE("shifts that would push content past Nyquist are rejected") {
    const int n = 16;
    const double fs = 0.125; // Nyquist = 1.0
    Spectrum s = random_spectrum(n, n, fs, fs, 8);
    try {
        shift_component(s, {0.9, 0.0}, 1, 0.5);
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::support_overflow);
    }
    // The same shift fits after upsampling doubles the Nyquist.
    Spectrum ok = shift_component(s, {0.9, 0.0}, 2, 0.5);
    CHECK(ok.width == 2 * n);
    CHECK_THROWS_AS(shift_component(s, {0.5, 0.0}, 0, 0.0), error);
}

TEST_CASE("Wiener synthesis matches the per-bin formula") {
    const int n = 32;
    const double pitch = 0.25;
    Image img = test_util::random_image(n, n, pitch, 9);
    Spectrum s = forward_fft(img);

    OpticsConfig cfg;
    ReconParams params;
    params.wiener_w = 0.07;
    params.apodization = apodization_kind::none;
    params.upsample_factor = 1;

    Spectrum combined = wiener_combine({{s, {0.0, 0.0}}}, cfg, params);
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const double t = otf_radial(cfg.na_detection, cfg.wavelength_um,
                                        std::hypot(s.fx(ix), s.fy(iy)));
            const auto want = t * s.at(ix, iy) / (t * t + params.wiener_w * params.wiener_w);
            CHECK(std::abs(combined.at(ix, iy) - want) < 1e-4 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("apodization tapers the extended band edge") {
    const int n = 32;
    Spectrum flat(n, n, 0.1, 0.1);
    for (auto& v : flat.data)
        v = 1.0;
    OpticsConfig cfg;
    ReconParams tri;
    tri.apodization = apodization_kind::triangle;
    ReconParams none;
    none.apodization = apodization_kind::none;

    Spectrum with = wiener_combine({{flat, {0.0, 0.0}}}, cfg, tri);
    Spectrum without = wiener_combine({{flat, {0.0, 0.0}}}, cfg, none);
    // The taper multiplies by 1 - rho/rho_ext (= detection cutoff here).
    const double rho_ext = cfg.detection_cutoff();
    for (int ix = n / 2; ix < n; ++ix) {
        const double rho = with.fx(ix);
        const double gain = std::max(0.0, 1.0 - rho / rho_ext);
        CHECK(std::abs(with.at(ix, n / 2) - gain * without.at(ix, n / 2)) < 1e-9);
    }
}

TEST_CASE("fringe parameters are recovered from synthetic components") {
    // Closed-form components of a ring object: c0 = O * OTF and
    // cp = m e^{i phi0} O(f - p) * OTF, built directly rather than through the
    // simulator.
    const int n = 128;
    const double pitch = 0.15;
    const std::array<double, 2> p{1.1, 0.0};
    const double phi0 = 30.0 * std::numbers::pi / 180.0;
    const double m = 0.7;

    Image obj = ring_image(n, pitch, 6.0, 0.6);
    OpticsConfig cfg;
    FreqGrid grid = grid_for_image(n, n, pitch);
    Filter otf = make_otf(cfg, grid);

    Spectrum c0 = apply_filter(forward_fft(obj), otf);

    // O(f - p): modulate the object before transforming.
    std::vector<std::complex<double>> buf(obj.size());
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            buf[static_cast<std::size_t>(iy) * n + ix] =
                obj.at(ix, iy) * std::polar(1.0, 2.0 * std::numbers::pi *
                                                     (p[0] * obj.x_um(ix) + p[1] * obj.y_um(iy)));
    centered_fft(buf, n, n, true);
    Spectrum cp(n, n, grid.freq_step_x, grid.freq_step_y);
    for (std::size_t i = 0; i < buf.size(); ++i)
        cp.data[i] = std::polar(m, phi0) * buf[i] * otf.data[i];

    FringeEstimate est = estimate_fringe_params(c0, cp, cfg, std::nullopt);
    CHECK(std::abs(est.p_vector[0] - p[0]) < 0.005);
    CHECK(std::abs(est.p_vector[1] - p[1]) < 0.005);
    CHECK(std::abs(est.phase0_rad - phi0) < 0.005);
    CHECK(std::abs(est.modulation - m) < 0.02);
    CHECK(est.peak_ratio >= 3.0);

    // A hint near the truth must give the same answer.
    FringeEstimate hinted = estimate_fringe_params(c0, cp, cfg, std::array<double, 2>{1.05, 0.05});
    CHECK(std::abs(hinted.p_vector[0] - est.p_vector[0]) < 1e-9);
    CHECK(std::abs(hinted.p_vector[1] - est.p_vector[1]) < 1e-9);
}

TEST_CASE("estimation refuses featureless correlations") {
    const int n = 64;
    const double pitch = 0.15;
    OpticsConfig cfg;
    FreqGrid grid = grid_for_image(n, n, pitch);

    Image obj = ring_image(n, pitch, 3.0, 0.4);
    Filter otf = make_otf(cfg, grid);
    Spectrum c0 = apply_filter(forward_fft(obj), otf);

    // An empty displaced component carries no fringe information.
    Spectrum zero(n, n, grid.freq_step_x, grid.freq_step_y);
    try {
        estimate_fringe_params(c0, zero, cfg, std::nullopt);
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::no_peak);
    }
}

TEST_CASE("conventional image is the phase average") {
    const int n = 32;
    const double pitch = 0.25;
    PatternSpec spec;
    spec.orientations_deg = {0.0};
    spec.phases_deg = {0.0, 120.0, 240.0};
    spec.freq_dmd_cycles_per_mm = 500.0;

    RawStack stack;
    stack.manifest.width = n;
    stack.manifest.height = n;
    stack.manifest.pixel_pitch = pitch;
    stack.manifest.pattern = spec;
    for (int k = 0; k < 3; ++k)
        stack.frames.push_back(Image(n, n, pitch, double(k + 1)));

    Image conv = conventional_image(stack);
    for (double v : conv.data)
        CHECK(v == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("zero-modulation stacks degenerate to Wiener deconvolution") {
    const int n = 64;
    const double pitch = 0.25;
    PatternSpec spec;
    spec.orientations_deg = {0.0};
    spec.phases_deg = {0.0, 120.0, 240.0};
    spec.freq_dmd_cycles_per_mm = 500.0;
    spec.modulation_depth = 0.0;
    PatternSet patterns = make_pattern_set(spec, n, n, pitch);

    SampleStack sample;
    Image blob(n, n, pitch, 0.0);
    for (int iy = 24; iy < 40; ++iy)
        for (int ix = 24; ix < 40; ++ix)
            blob.at(ix, iy) = std::exp(-0.1 * ((ix - 32) * (ix - 32) + (iy - 32) * (iy - 32)));
    sample.planes.push_back({blob, 0.0});
    OpticsConfig cfg;
    RawStack stack = simulate_stack(sample, patterns, cfg);

    ReconParams params;
    params.wiener_w = 0.05;
    params.apodization = apodization_kind::none;
    params.upsample_factor = 1;
    ReconResult res = reconstruct(stack, params);

    Image want = wiener_deconvolve(conventional_image(stack), cfg, params.wiener_w);
    CHECK(test_util::max_abs_diff(res.enhanced.data, want.data) < 1e-9);
    CHECK(res.per_orientation.size() == 1);
    CHECK(res.per_orientation[0].modulation == 0.0);
}

TEST_CASE("reconstruction is invariant to orientation ordering") {
    const int n = 64;
    const double pitch = 0.15;
    PatternSpec spec;
    spec.orientations_deg = {0.0, 90.0};
    spec.phases_deg = {0.0, 120.0, 240.0};
    spec.freq_dmd_cycles_per_mm = 1000.0; // 1.0 cycles/um
    PatternSet patterns = make_pattern_set(spec, n, n, pitch);

    SampleStack sample;
    sample.planes.push_back({ring_image(n, pitch, 3.0, 0.4), 0.0});
    OpticsConfig cfg;
    RawStack stack = simulate_stack(sample, patterns, cfg);

    RawStack swapped = stack;
    swapped.manifest.pattern.orientations_deg = {90.0, 0.0};
    for (int pi = 0; pi < 3; ++pi) {
        swapped.frames[pi] = stack.frames[3 + pi];
        swapped.frames[3 + pi] = stack.frames[pi];
    }

    ReconParams params;
    ReconResult a = reconstruct(stack, params);
    ReconResult b = reconstruct(swapped, params);
    REQUIRE(a.enhanced.size() == b.enhanced.size());
    double scale = test_util::max_abs(a.enhanced.data);
    CHECK(test_util::max_abs_diff(a.enhanced.data, b.enhanced.data) < 1e-9 * scale);
}

TEST_CASE("reconstruction output is nonnegative and upsampled") {
    const int n = 64;
    const double pitch = 0.15;
    PatternSpec spec;
    spec.orientations_deg = {0.0, 90.0};
    spec.phases_deg = {0.0, 120.0, 240.0};
    spec.freq_dmd_cycles_per_mm = 1000.0;
    PatternSet patterns = make_pattern_set(spec, n, n, pitch);
    SampleStack sample;
    sample.planes.push_back({ring_image(n, pitch, 3.0, 0.4), 0.0});
    OpticsConfig cfg;
    RawStack stack = simulate_stack(sample, patterns, cfg);

    ReconParams params;
    params.upsample_factor = 2;
    ReconResult res = reconstruct(stack, params);
    CHECK(res.enhanced.width == 2 * n);
    CHECK(res.enhanced.height == 2 * n);
    CHECK(res.enhanced.pixel_pitch == doctest::Approx(pitch / 2.0).epsilon(1e-12));
    for (double v : res.enhanced.data)
        CHECK(v >= 0.0);
    CHECK(res.per_orientation.size() == 2);
    for (const auto& est : res.per_orientation) {
        CHECK(est.modulation == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("estimation inside reconstruction matches the manifest") {
    const int n = 128;
    const double pitch = 0.15;
    PatternSpec spec;
    spec.orientations_deg = {0.0, 90.0};
    spec.phases_deg = {0.0, 120.0, 240.0};
    spec.freq_dmd_cycles_per_mm = 1100.0; // 1.1 cycles/um
    spec.modulation_depth = 0.9;
    PatternSet patterns = make_pattern_set(spec, n, n, pitch);
    SampleStack sample;
    sample.planes.push_back({ring_image(n, pitch, 6.0, 0.5), 0.0});
    OpticsConfig cfg;
    RawStack stack = simulate_stack(sample, patterns, cfg);

    ReconParams params;
    params.source = parameter_source::estimate;
    ReconResult res = reconstruct(stack, params);
    REQUIRE(res.per_orientation.size() == 2);
    for (std::size_t oi = 0; oi < 2; ++oi) {
        const auto want = spec.frequency_vector(oi);
        CHECK(std::abs(res.per_orientation[oi].p_vector[0] - want[0]) < 0.02);
        CHECK(std::abs(res.per_orientation[oi].p_vector[1] - want[1]) < 0.02);
        CHECK(std::abs(res.per_orientation[oi].modulation - 0.9) < 0.05);
        const double phase_err = std::remainder(res.per_orientation[oi].phase0_rad, 2.0 * std::numbers::pi);
        CHECK(std::abs(phase_err) < 0.05);
    }
}

TEST_CASE("reconstruction requires a full three-phase protocol") {
    const int n = 32;
    const double pitch = 0.25;
    RawStack stack;
    stack.manifest.width = n;
    stack.manifest.height = n;
    stack.manifest.pixel_pitch = pitch;
    stack.manifest.pattern.orientations_deg = {0.0};
    stack.manifest.pattern.phases_deg = {0.0, 180.0};
    stack.manifest.pattern.freq_dmd_cycles_per_mm = 500.0;
    stack.frames.assign(2, Image(n, n, pitch, 1.0));
    try {
        reconstruct(stack, ReconParams{});
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::partial_protocol);
    }
}

TEST_CASE("reconstruction parameter validation") {
    ReconParams params;
    params.wiener_w = 0.0;
    CHECK_THROWS_AS(validate_recon_params(params), error);
    params = ReconParams{};
    params.upsample_factor = 0;
    CHECK_THROWS_AS(validate_recon_params(params), error);
    validate_recon_params(ReconParams{});
}
