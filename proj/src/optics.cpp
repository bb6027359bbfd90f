#include "sldf/optics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <random>

#include "sldf/fft.hpp"
#include "sldf/patterns.hpp"
#include "sldf/stack.hpp"

namespace sldf {

namespace {

constexpr double kPi = std::numbers::pi;

// splitmix64; decorrelates per-frame noise streams from (seed, orientation, phase).
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t frame_seed(std::uint64_t seed, std::size_t oi, std::size_t pi) {
    return mix64(mix64(mix64(seed) ^ (0x100000001b3ull * (oi + 1))) ^ (pi + 1));
}

// Deterministic Gaussian draws: Box-Muller over mt19937_64, independent of the
// standard library's unspecified std::normal_distribution implementation.
class GaussStream {
public:
    explicit GaussStream(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

private:
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

double grid_nyquist(const FreqGrid& grid) {
    return std::min(grid.width / 2 * grid.freq_step_x, grid.height / 2 * grid.freq_step_y);
}

// Radial lookup table for a rotationally symmetric transfer function,
// linearly interpolated; dense enough (4096 knots) that interpolation error
// stays below 1e-7 of peak.
class RadialTable {
public:
    template <typename F>
    RadialTable(double cutoff, F&& radial) : cutoff_(cutoff), values_(kKnots + 1) {
        for (int i = 0; i <= kKnots; ++i)
            values_[i] = radial(cutoff_ * i / kKnots);
    }

    double operator()(double rho) const {
        if (rho >= cutoff_)
            return 0.0;
        const double t = rho / cutoff_ * kKnots;
        const int i = std::min(static_cast<int>(t), kKnots - 1);
        const double frac = t - i;
        return values_[i] * (1.0 - frac) + values_[i + 1] * frac;
    }

private:
    static constexpr int kKnots = 4096;
    double cutoff_;
    std::vector<double> values_;
};

Filter sample_radial(const FreqGrid& grid, const RadialTable& table, std::string label) {
    Filter out(grid.width, grid.height, grid.freq_step_x, grid.freq_step_y, std::move(label));
    for (int iy = 0; iy < grid.height; ++iy) {
        const double fy = (iy - grid.height / 2) * grid.freq_step_y;
        for (int ix = 0; ix < grid.width; ++ix) {
            const double fx = (ix - grid.width / 2) * grid.freq_step_x;
            out.at(ix, iy) = table(std::hypot(fx, fy));
        }
    }
    return out;
}

// Per-plane transfer functions reused across the frames of one protocol.
struct PlaneFilters {
    Filter detection;                    // defocused detection OTF
    std::shared_ptr<Filter> fringe_gain; // illumination-side defocus factor, null in focus
};

// Illumination-side defocus factor: the extra fringe attenuation of a plane dz
// away from focus, i.e. the defocused illumination OTF normalized by its
// in-focus value so the factor is identity at dz = 0. Zeroed where the
// in-focus illumination OTF has no support.
Filter illumination_defocus_gain(const OpticsConfig& cfg, const FreqGrid& grid, double dz_um) {
    const double na = cfg.na_illumination_outer;
    const double cutoff = 2.0 * na / cfg.wavelength_um;
    RadialTable focus(cutoff, [&](double rho) { return otf_radial(na, cfg.wavelength_um, rho); });
    RadialTable defocus(cutoff, [&](double rho) {
        return defocused_otf_radial(na, cfg.wavelength_um, dz_um, rho);
    });
    Filter out(grid.width, grid.height, grid.freq_step_x, grid.freq_step_y, "illumination defocus gain");
    for (int iy = 0; iy < grid.height; ++iy) {
        const double fy = (iy - grid.height / 2) * grid.freq_step_y;
        for (int ix = 0; ix < grid.width; ++ix) {
            const double fx = (ix - grid.width / 2) * grid.freq_step_x;
            const double rho = std::hypot(fx, fy);
            const double t0 = focus(rho);
            out.at(ix, iy) = (t0 < 1e-6) ? 0.0 : defocus(rho) / t0;
        }
    }
    return out;
}

std::vector<PlaneFilters> prepare_planes(const SampleStack& sample, const OpticsConfig& cfg,
                                         const FreqGrid& grid) {
    std::vector<PlaneFilters> out;
    std::map<double, std::shared_ptr<Filter>> gain_cache;
    for (const auto& plane : sample.planes) {
        PlaneFilters pf;
        pf.detection = (plane.defocus_um == 0.0) ? make_otf(cfg, grid)
                                                 : make_defocused_otf(cfg, grid, plane.defocus_um);
        if (plane.defocus_um != 0.0) {
            auto it = gain_cache.find(plane.defocus_um);
            if (it == gain_cache.end()) {
                auto gain = std::make_shared<Filter>(illumination_defocus_gain(cfg, grid, plane.defocus_um));
                it = gain_cache.emplace(plane.defocus_um, std::move(gain)).first;
            }
            pf.fringe_gain = it->second;
        }
        out.push_back(std::move(pf));
    }
    return out;
}

Image simulate_frame_prepared(const SampleStack& sample, const Image& pattern, const OpticsConfig& cfg,
                              const std::vector<PlaneFilters>& filters) {
    Image accum(pattern.width, pattern.height, pattern.pixel_pitch, 0.0);
    for (std::size_t pl = 0; pl < sample.planes.size(); ++pl) {
        const auto& plane = sample.planes[pl];
        const auto& pf = filters[pl];

        Image illum = pattern;
        if (pf.fringe_gain)
            illum = inverse_fft(apply_filter(forward_fft(pattern), *pf.fringe_gain));

        Image product(pattern.width, pattern.height, pattern.pixel_pitch);
        for (std::size_t j = 0; j < product.data.size(); ++j)
            product.data[j] = plane.density.data[j] * illum.data[j];

        const Image blurred = inverse_fft(apply_filter(forward_fft(product), pf.detection));
        for (std::size_t j = 0; j < accum.data.size(); ++j)
            accum.data[j] += blurred.data[j];
    }

    const auto& noise = cfg.noise;
    if (noise.read_noise_sigma > 0.0 || noise.photon_scale > 0.0) {
        GaussStream gauss(noise.seed);
        const double read_var = noise.read_noise_sigma * noise.read_noise_sigma;
        for (double& v : accum.data) {
            const double shot_var = noise.photon_scale > 0.0 ? std::max(v, 0.0) / noise.photon_scale : 0.0;
            v += std::sqrt(read_var + shot_var) * gauss.next();
        }
    }

    for (double& v : accum.data)
        v = std::max(v, 0.0);
    return accum;
}

} // namespace

void validate_optics(const OpticsConfig& cfg) {
    auto check_na = [](double na, const char* name) {
        if (!(na > 0.0) || na > 1.0)
            fail(errc::bad_spec, std::string(name) + " must be in (0, 1]");
    };
    check_na(cfg.na_detection, "na_detection");
    check_na(cfg.na_illumination_inner, "na_illumination_inner");
    check_na(cfg.na_illumination_outer, "na_illumination_outer");
    if (!(cfg.wavelength_um >= 0.3 && cfg.wavelength_um <= 1.1))
        fail(errc::bad_spec, "wavelength must be within 0.3..1.1 um");
    if (cfg.noise.read_noise_sigma < 0.0 || cfg.noise.photon_scale < 0.0)
        fail(errc::bad_spec, "noise parameters must be nonnegative");
}

DarkfieldReport validate_darkfield(const OpticsConfig& cfg) {
    DarkfieldReport report;
    report.max_fringe_frequency = 2.0 * cfg.na_illumination_outer / cfg.wavelength_um;
    if (!(cfg.na_detection < cfg.na_illumination_inner)) {
        report.detail = "na_detection < na_illumination_inner violated (" +
                        std::to_string(cfg.na_detection) + " vs " +
                        std::to_string(cfg.na_illumination_inner) + "): illumination reaches the detector";
        return report;
    }
    if (!(cfg.na_illumination_inner <= cfg.na_illumination_outer)) {
        report.detail = "na_illumination_inner <= na_illumination_outer violated";
        return report;
    }
    report.dark_field = true;
    report.detail = "dark field: unscattered illumination falls outside the detection aperture";
    return report;
}

void require_darkfield(const OpticsConfig& cfg) {
    const DarkfieldReport report = validate_darkfield(cfg);
    if (!report.dark_field)
        fail(errc::not_darkfield, report.detail);
}

double otf_radial(double na, double wavelength_um, double rho) {
    const double cutoff = 2.0 * na / wavelength_um;
    const double r = rho / cutoff;
    if (r >= 1.0)
        return 0.0;
    return (2.0 / kPi) * (std::acos(r) - r * std::sqrt(1.0 - r * r));
}

double defocused_otf_radial(double na, double wavelength_um, double defocus_um, double rho) {
    const double cutoff = 2.0 * na / wavelength_um;
    const double r = rho / cutoff;
    if (r >= 1.0)
        return 0.0;
    if (r <= 0.0)
        return 1.0;

    // Normalized pupil-overlap integral reduced to one dimension. With the
    // substitution u + d/2 = NA sin(theta) the integrand is smooth:
    //   OTF = (4/pi) * int_{asin(r)}^{pi/2} cos^2(theta) *
    //         cos(2 pi dz rho (NA sin(theta) - d/2)) dtheta,
    // where d = lambda * rho is the pupil displacement. At dz = 0 this is the
    // closed-form circular-pupil OTF.
    const double d_half = 0.5 * wavelength_um * rho;
    const double beta = 2.0 * kPi * defocus_um * rho;
    const double theta0 = std::asin(r);
    const int n = 2048; // Simpson intervals (even)
    const double h = (kPi / 2.0 - theta0) / n;
    auto integrand = [&](double theta) {
        const double c = std::cos(theta);
        return c * c * std::cos(beta * (na * std::sin(theta) - d_half));
    };
    double sum = integrand(theta0) + integrand(kPi / 2.0);
    for (int i = 1; i < n; ++i)
        sum += integrand(theta0 + i * h) * ((i % 2) ? 4.0 : 2.0);
    return (4.0 / kPi) * sum * h / 3.0;
}

FreqGrid grid_of(const Spectrum& spec) {
    return {spec.width, spec.height, spec.freq_step_x, spec.freq_step_y};
}

FreqGrid grid_for_image(int width, int height, double pixel_pitch) {
    validate_dims(width, height);
    if (!(pixel_pitch > 0.0))
        fail(errc::bad_spec, "pixel pitch must be positive");
    return {width, height, 1.0 / (width * pixel_pitch), 1.0 / (height * pixel_pitch)};
}

Filter make_otf(const OpticsConfig& cfg, const FreqGrid& grid) {
    validate_optics(cfg);
    validate_dims(grid.width, grid.height);
    const double cutoff = cfg.detection_cutoff();
    if (cutoff > grid_nyquist(grid) * (1.0 + 1e-12))
        fail(errc::grid_too_coarse, "detection cutoff " + std::to_string(cutoff) +
                                        " cycles/um exceeds grid Nyquist " + std::to_string(grid_nyquist(grid)));
    RadialTable table(cutoff, [&](double rho) { return otf_radial(cfg.na_detection, cfg.wavelength_um, rho); });
    return sample_radial(grid, table, "detection OTF");
}

Filter make_defocused_otf(const OpticsConfig& cfg, const FreqGrid& grid, double dz_um) {
    validate_optics(cfg);
    validate_dims(grid.width, grid.height);
    const double cutoff = cfg.detection_cutoff();
    if (cutoff > grid_nyquist(grid) * (1.0 + 1e-12))
        fail(errc::grid_too_coarse, "detection cutoff " + std::to_string(cutoff) +
                                        " cycles/um exceeds grid Nyquist " + std::to_string(grid_nyquist(grid)));
    RadialTable table(cutoff, [&](double rho) {
        return defocused_otf_radial(cfg.na_detection, cfg.wavelength_um, dz_um, rho);
    });
    return sample_radial(grid, table, "detection OTF, defocus " + std::to_string(dz_um) + " um");
}

Image simulate_frame(const SampleStack& sample, const Image& pattern, const OpticsConfig& cfg) {
    validate_optics(cfg);
    require_darkfield(cfg);
    if (sample.planes.empty())
        fail(errc::bad_spec, "sample has no planes");
    for (const auto& plane : sample.planes)
        if (!same_grid(plane.density, pattern))
            fail(errc::grid_mismatch, "sample plane grid does not match pattern grid");

    const FreqGrid grid = grid_for_image(pattern.width, pattern.height, pattern.pixel_pitch);
    return simulate_frame_prepared(sample, pattern, cfg, prepare_planes(sample, cfg, grid));
}

RawStack simulate_stack(const SampleStack& sample, const PatternSet& patterns, const OpticsConfig& cfg) {
    validate_optics(cfg);
    require_darkfield(cfg);
    validate_pattern_spec(patterns.spec);
    if (sample.planes.empty())
        fail(errc::bad_spec, "sample has no planes");
    for (const auto& plane : sample.planes)
        if (plane.density.width != patterns.width || plane.density.height != patterns.height ||
            std::abs(plane.density.pixel_pitch - patterns.pixel_pitch) > 1e-12 * patterns.pixel_pitch)
            fail(errc::grid_mismatch, "sample plane grid does not match pattern grid");
    const double p = patterns.spec.sample_frequency();
    const DarkfieldReport df = validate_darkfield(cfg);
    if (p > df.max_fringe_frequency * (1.0 + 1e-12))
        fail(errc::freq_aliased, "fringe frequency " + std::to_string(p) +
                                     " cycles/um exceeds the illumination aperture limit " +
                                     std::to_string(df.max_fringe_frequency));

    const FreqGrid grid = grid_for_image(patterns.width, patterns.height, patterns.pixel_pitch);
    const auto filters = prepare_planes(sample, cfg, grid);

    RawStack stack;
    stack.manifest.width = patterns.width;
    stack.manifest.height = patterns.height;
    stack.manifest.pixel_pitch = patterns.pixel_pitch;
    stack.manifest.pattern = patterns.spec;
    stack.manifest.optics = cfg;
    stack.manifest.provenance.type = Provenance::kind::simulated;
    stack.manifest.provenance.seed = cfg.noise.seed;

    for (std::size_t oi = 0; oi < patterns.n_orientations(); ++oi) {
        for (std::size_t pi = 0; pi < patterns.n_phases(); ++pi) {
            OpticsConfig frame_cfg = cfg;
            frame_cfg.noise.seed = frame_seed(cfg.noise.seed, oi, pi);
            Image frame = simulate_frame_prepared(sample, patterns.frame(oi, pi), frame_cfg, filters);
            // Detector depth matches the 32-bit on-disk raster, so a written
            // stack reloads bit for bit.
            for (double& v : frame.data)
                v = static_cast<double>(static_cast<float>(v));
            stack.frames.push_back(std::move(frame));
        }
    }
    return stack;
}

} // namespace sldf
