#pragma once

#include "sldf/image.hpp"
#include "sldf/stack.hpp"

namespace sldf {

/// How per-orientation sectioned images are merged into one output.
enum class combine_mode {
    single, // first orientation only
    mean,   // pixelwise average over orientations
    max,    // pixelwise maximum over orientations
};

combine_mode combine_mode_from_string(const std::string& name);
std::string to_string(combine_mode mode);

/// Square-law demodulation of one three-phase set:
///   sqrt((f0-f1)^2 + (f1-f2)^2 + (f2-f0)^2).
/// For frames A*(1 + m*cos(phi0 + k*2pi/3)) this is the constant
/// (3/sqrt(2))*A*m, so in-focus (modulated) structure survives and any
/// phase-independent background cancels exactly.
Image section_three(const Image& f0, const Image& f1, const Image& f2);

/// Sections every orientation of a three-phase stack and combines them; in
/// single mode only `orientation` is sectioned. Throws errc::partial_protocol
/// unless the stack has exactly three phases, errc::out_of_bounds for a bad
/// orientation index.
Image section_stack(const RawStack& stack, combine_mode mode = combine_mode::mean,
                    std::size_t orientation = 0);

} // namespace sldf
