#pragma once

#include <cstdint>

#include "sldf/image.hpp"

namespace sldf {

/// Unitary DFT of a real raster, returned DC-centered. Parseval holds with
/// factor 1: sum |image|^2 == sum |spectrum|^2. The spatial origin is the
/// center pixel, so a centered delta transforms to a constant, zero-phase
/// spectrum.
Spectrum forward_fft(const Image& img);

/// Unitary inverse of forward_fft. The imaginary part of the result is
/// discarded; if it carries more than 1e-6 of the total energy the call fails
/// with errc::imag_residue, and any residue above 1e-9 of the peak magnitude
/// bumps imag_residue_warnings().
Image inverse_fft(const Spectrum& spec);

/// Pointwise product of a spectrum with a gain table on the same grid.
Spectrum apply_filter(const Spectrum& spec, const Filter& filter);

/// Process-wide count of inverse transforms that silently dropped a small
/// (sub-threshold) imaginary residue.
std::uint64_t imag_residue_warnings() noexcept;

/// In-place unitary DFT of a complex raster with the same centered layout as
/// forward_fft/inverse_fft. Building block for operations that cannot round
/// trip through a real raster (sub-pixel shifts, correlation maps).
void centered_fft(std::vector<std::complex<double>>& data, int width, int height, bool forward);

} // namespace sldf
