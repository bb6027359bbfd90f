#pragma once

#include <complex>
#include <string>
#include <vector>

#include "sldf/error.hpp"

namespace sldf {

/// Real-valued raster sampled on a square-pixel grid. Pixel (ix, iy) sits at
/// physical position ((ix - width/2) * pixel_pitch, (iy - height/2) * pixel_pitch)
/// in micrometers: the origin is the center pixel. Dimensions must be even and
/// at least 8 so that every grid has an exact center bin.
struct Image {
    int width = 0;
    int height = 0;
    double pixel_pitch = 0.0; // micrometers per pixel
    std::vector<double> data; // row-major, height rows of width samples

    Image() = default;
    Image(int w, int h, double pitch, double fill = 0.0);

    double& at(int ix, int iy) { return data[static_cast<std::size_t>(iy) * width + ix]; }
    double at(int ix, int iy) const { return data[static_cast<std::size_t>(iy) * width + ix]; }

    double x_um(int ix) const { return (ix - width / 2) * pixel_pitch; }
    double y_um(int iy) const { return (iy - height / 2) * pixel_pitch; }

    std::size_t size() const { return data.size(); }
};

/// Frequency-domain counterpart of Image. DC sits at bin (width/2, height/2);
/// bin (ix, iy) carries frequency ((ix - width/2) * freq_step_x,
/// (iy - height/2) * freq_step_y) in cycles per micrometer.
struct Spectrum {
    int width = 0;
    int height = 0;
    double freq_step_x = 0.0; // cycles/um per bin
    double freq_step_y = 0.0;
    std::vector<std::complex<double>> data;

    Spectrum() = default;
    Spectrum(int w, int h, double fsx, double fsy);

    std::complex<double>& at(int ix, int iy) { return data[static_cast<std::size_t>(iy) * width + ix]; }
    const std::complex<double>& at(int ix, int iy) const { return data[static_cast<std::size_t>(iy) * width + ix]; }

    double fx(int ix) const { return (ix - width / 2) * freq_step_x; }
    double fy(int iy) const { return (iy - height / 2) * freq_step_y; }

    /// Pixel pitch of the real-space raster this spectrum transforms back to.
    double pixel_pitch() const { return 1.0 / (width * freq_step_x); }

    std::size_t size() const { return data.size(); }
};

/// Complex gain table on the same layout as Spectrum. Physical transfer
/// functions keep |gain| <= 1.
struct Filter {
    int width = 0;
    int height = 0;
    double freq_step_x = 0.0;
    double freq_step_y = 0.0;
    std::vector<std::complex<double>> data;
    std::string label;

    Filter() = default;
    Filter(int w, int h, double fsx, double fsy, std::string name = {});

    std::complex<double>& at(int ix, int iy) { return data[static_cast<std::size_t>(iy) * width + ix]; }
    const std::complex<double>& at(int ix, int iy) const { return data[static_cast<std::size_t>(iy) * width + ix]; }

    double fx(int ix) const { return (ix - width / 2) * freq_step_x; }
    double fy(int iy) const { return (iy - height / 2) * freq_step_y; }
};

/// Throws errc::bad_dims unless both dimensions are even and >= 8.
void validate_dims(int width, int height);

bool same_grid(const Image& a, const Image& b);
bool same_grid(const Spectrum& a, const Spectrum& b);
bool same_grid(const Spectrum& a, const Filter& b);

/// Center-preserving zero pad: the center bin of the input lands on the center
/// bin of the output. Target must be even, >= 8, and not smaller than the input.
Image pad_to(const Image& img, int width, int height);

/// Center-preserving crop, the exact inverse of pad_to.
Image crop_to(const Image& img, int width, int height);

} // namespace sldf
