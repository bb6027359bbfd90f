#pragma once

#include <stdexcept>
#include <string>

namespace sldf {

/// Failure categories surfaced by the library. Processing commands map these
/// onto process exit codes, so the set is part of the public contract.
enum class errc {
    bad_dims,          // image/spectrum dimensions unusable (odd, too small, mismatched)
    grid_mismatch,     // two rasters disagree on size or sample spacing
    imag_residue,      // inverse transform discarded non-negligible imaginary energy
    grid_too_coarse,   // frequency grid cannot hold the optical passband
    not_darkfield,     // illumination/detection apertures do not form a dark field
    freq_aliased,      // requested fringe frequency above the grid Nyquist
    bad_magnification, // non-positive projector-to-sample magnification
    singular_phases,   // phase set gives an uninvertible mixing matrix
    no_peak,           // correlation peak not found / not significant
    support_overflow,  // shifted spectral support does not fit the target grid
    partial_protocol,  // stack does not carry exactly three phases per orientation
    layout_overflow,   // synthetic target does not fit the requested grid
    out_of_bounds,     // sample coordinates outside the image
    bad_spec,          // parameter outside its documented range
    io_error,          // file missing, unreadable, or malformed
};

const char* to_string(errc code) noexcept;

class error : public std::runtime_error {
public:
    error(errc code, const std::string& message);
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] void fail(errc code, const std::string& message);

} // namespace sldf
