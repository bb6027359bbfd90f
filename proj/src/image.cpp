#include "sldf/image.hpp"

#include <cmath>
#include <cstdlib>

namespace sldf {

namespace {

bool close(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace

void validate_dims(int width, int height) {
    if (width < 8 || height < 8)
        fail(errc::bad_dims, "raster must be at least 8x8, got " + std::to_string(width) + "x" + std::to_string(height));
    if (width % 2 != 0 || height % 2 != 0)
        fail(errc::bad_dims, "raster dimensions must be even, got " + std::to_string(width) + "x" + std::to_string(height));
}

Image::Image(int w, int h, double pitch, double fill) : width(w), height(h), pixel_pitch(pitch) {
    validate_dims(w, h);
    if (!(pitch > 0.0))
        fail(errc::bad_spec, "pixel pitch must be positive");
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

Spectrum::Spectrum(int w, int h, double fsx, double fsy) : width(w), height(h), freq_step_x(fsx), freq_step_y(fsy) {
    validate_dims(w, h);
    if (!(fsx > 0.0) || !(fsy > 0.0))
        fail(errc::bad_spec, "frequency step must be positive");
    data.assign(static_cast<std::size_t>(w) * h, {0.0, 0.0});
}

Filter::Filter(int w, int h, double fsx, double fsy, std::string name)
    : width(w), height(h), freq_step_x(fsx), freq_step_y(fsy), label(std::move(name)) {
    validate_dims(w, h);
    if (!(fsx > 0.0) || !(fsy > 0.0))
        fail(errc::bad_spec, "frequency step must be positive");
    data.assign(static_cast<std::size_t>(w) * h, {0.0, 0.0});
}

bool same_grid(const Image& a, const Image& b) {
    return a.width == b.width && a.height == b.height && close(a.pixel_pitch, b.pixel_pitch);
}

bool same_grid(const Spectrum& a, const Spectrum& b) {
    return a.width == b.width && a.height == b.height &&
           close(a.freq_step_x, b.freq_step_x) && close(a.freq_step_y, b.freq_step_y);
}

bool same_grid(const Spectrum& a, const Filter& b) {
    return a.width == b.width && a.height == b.height &&
           close(a.freq_step_x, b.freq_step_x) && close(a.freq_step_y, b.freq_step_y);
}

Image pad_to(const Image& img, int width, int height) {
    validate_dims(img.width, img.height);
    validate_dims(width, height);
    if (width < img.width || height < img.height)
        fail(errc::bad_dims, "pad target smaller than source");
    Image out(width, height, img.pixel_pitch);
    const int ox = width / 2 - img.width / 2;
    const int oy = height / 2 - img.height / 2;
    for (int iy = 0; iy < img.height; ++iy)
        for (int ix = 0; ix < img.width; ++ix)
            out.at(ix + ox, iy + oy) = img.at(ix, iy);
    return out;
}

Image crop_to(const Image& img, int width, int height) {
    validate_dims(img.width, img.height);
    validate_dims(width, height);
    if (width > img.width || height > img.height)
        fail(errc::bad_dims, "crop target larger than source");
    Image out(width, height, img.pixel_pitch);
    const int ox = img.width / 2 - width / 2;
    const int oy = img.height / 2 - height / 2;
    for (int iy = 0; iy < height; ++iy)
        for (int ix = 0; ix < width; ++ix)
            out.at(ix, iy) = img.at(ix + ox, iy + oy);
    return out;
}

} // namespace sldf
