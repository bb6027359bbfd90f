#include "sldf/fft.hpp"

#include <fftw3.h>

#include <atomic>
#include <cmath>
#include <mutex>

namespace sldf {

namespace {

std::atomic<std::uint64_t> g_imag_warnings{0};

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// For even dimensions the centering swap is its own inverse.
inline std::size_t swapped_index(int ix, int iy, int w, int h) {
    const int sx = (ix + w / 2) % w;
    const int sy = (iy + h / 2) % h;
    return static_cast<std::size_t>(sy) * w + sx;
}

struct PlanBuffer {
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;

    PlanBuffer(int w, int h, int sign) {
        buf = fftw_alloc_complex(static_cast<std::size_t>(w) * h);
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE);
    }

    ~PlanBuffer() {
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fftw_destroy_plan(plan);
        }
        fftw_free(buf);
    }

    PlanBuffer(const PlanBuffer&) = delete;
    PlanBuffer& operator=(const PlanBuffer&) = delete;
};

} // namespace

Spectrum forward_fft(const Image& img) {
    validate_dims(img.width, img.height);
    if (!(img.pixel_pitch > 0.0))
        fail(errc::bad_spec, "pixel pitch must be positive");
    const int w = img.width, h = img.height;
    const std::size_t n = img.size();

    PlanBuffer pb(w, h, FFTW_FORWARD);
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
            const std::size_t j = swapped_index(ix, iy, w, h);
            pb.buf[j][0] = img.at(ix, iy);
            pb.buf[j][1] = 0.0;
        }
    fftw_execute(pb.plan);

    Spectrum out(w, h, 1.0 / (w * img.pixel_pitch), 1.0 / (h * img.pixel_pitch));
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
            const std::size_t j = swapped_index(ix, iy, w, h);
            out.at(ix, iy) = {pb.buf[j][0] * norm, pb.buf[j][1] * norm};
        }
    return out;
}

Image inverse_fft(const Spectrum& spec) {
    validate_dims(spec.width, spec.height);
    const int w = spec.width, h = spec.height;
    const std::size_t n = spec.size();
    const double pitch = spec.pixel_pitch();
    if (std::abs(1.0 / (h * spec.freq_step_y) - pitch) > 1e-9 * pitch)
        fail(errc::grid_mismatch, "spectrum frequency steps imply non-square pixels");

    PlanBuffer pb(w, h, FFTW_BACKWARD);
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
            const std::size_t j = swapped_index(ix, iy, w, h);
            const auto& z = spec.at(ix, iy);
            pb.buf[j][0] = z.real();
            pb.buf[j][1] = z.imag();
        }
    fftw_execute(pb.plan);

    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    double total_energy = 0.0, imag_energy = 0.0, max_mag = 0.0, max_imag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double re = pb.buf[j][0] * norm;
        const double im = pb.buf[j][1] * norm;
        total_energy += re * re + im * im;
        imag_energy += im * im;
        max_mag = std::max(max_mag, std::hypot(re, im));
        max_imag = std::max(max_imag, std::abs(im));
    }
    if (total_energy > 0.0 && imag_energy > 1e-6 * total_energy)
        fail(errc::imag_residue, "discarded imaginary energy " + std::to_string(imag_energy / total_energy) +
                                     " of total exceeds 1e-6");
    if (max_mag > 0.0 && max_imag > 1e-9 * max_mag)
        g_imag_warnings.fetch_add(1, std::memory_order_relaxed);

    Image out(w, h, pitch);
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
            out.at(ix, iy) = pb.buf[swapped_index(ix, iy, w, h)][0] * norm;
    return out;
}

Spectrum apply_filter(const Spectrum& spec, const Filter& filter) {
    if (!same_grid(spec, filter))
        fail(errc::grid_mismatch, "filter grid does not match spectrum grid");
    Spectrum out = spec;
    for (std::size_t j = 0; j < out.data.size(); ++j)
        out.data[j] *= filter.data[j];
    return out;
}

std::uint64_t imag_residue_warnings() noexcept {
    return g_imag_warnings.load(std::memory_order_relaxed);
}

void centered_fft(std::vector<std::complex<double>>& data, int width, int height, bool forward) {
    validate_dims(width, height);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (data.size() != n)
        fail(errc::bad_dims, "complex raster size does not match dimensions");

    PlanBuffer pb(width, height, forward ? FFTW_FORWARD : FFTW_BACKWARD);
    for (int iy = 0; iy < height; ++iy)
        for (int ix = 0; ix < width; ++ix) {
            const std::size_t j = swapped_index(ix, iy, width, height);
            const auto& z = data[static_cast<std::size_t>(iy) * width + ix];
            pb.buf[j][0] = z.real();
            pb.buf[j][1] = z.imag();
        }
    fftw_execute(pb.plan);

    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (int iy = 0; iy < height; ++iy)
        for (int ix = 0; ix < width; ++ix) {
            const std::size_t j = swapped_index(ix, iy, width, height);
            data[static_cast<std::size_t>(iy) * width + ix] = {pb.buf[j][0] * norm, pb.buf[j][1] * norm};
        }
}

} // namespace sldf
