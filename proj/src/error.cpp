#include "sldf/error.hpp"

namespace sldf {

const char* to_string(errc code) noexcept {
    switch (code) {
        case errc::bad_dims: return "BAD_DIMS";
        case errc::grid_mismatch: return "GRID_MISMATCH";
        case errc::imag_residue: return "IMAG_RESIDUE";
        case errc::grid_too_coarse: return "GRID_TOO_COARSE";
        case errc::not_darkfield: return "NOT_DARKFIELD";
        case errc::freq_aliased: return "FREQ_ALIASED";
        case errc::bad_magnification: return "BAD_MAGNIFICATION";
        case errc::singular_phases: return "SINGULAR_PHASES";
        case errc::no_peak: return "NO_PEAK";
        case errc::support_overflow: return "SUPPORT_OVERFLOW";
        case errc::partial_protocol: return "PARTIAL_PROTOCOL";
        case errc::layout_overflow: return "LAYOUT_OVERFLOW";
        case errc::out_of_bounds: return "OUT_OF_BOUNDS";
        case errc::bad_spec: return "BAD_SPEC";
        case errc::io_error: return "IO_ERROR";
    }
    return "UNKNOWN";
}

error::error(errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(errc code, const std::string& message) {
    throw error(code, message);
}

} // namespace sldf
