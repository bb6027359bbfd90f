#include "sldf/stack.hpp"

namespace sldf {

void validate_stack(const RawStack& stack) {
    // Field checks only: a stack may legitimately hold a partial protocol
    // (e.g. read back from disk); operations that need three phases say so.
    validate_pattern_fields(stack.manifest.pattern);
    validate_optics(stack.manifest.optics);
    validate_dims(stack.manifest.width, stack.manifest.height);
    const std::size_t expected = stack.n_orientations() * stack.n_phases();
    if (stack.frames.size() != expected)
        fail(errc::partial_protocol, "stack holds " + std::to_string(stack.frames.size()) + " frames, protocol needs " +
                                         std::to_string(expected));
    for (const auto& frame : stack.frames) {
        if (frame.width != stack.manifest.width || frame.height != stack.manifest.height)
            fail(errc::grid_mismatch, "frame dimensions disagree with manifest");
        if (std::abs(frame.pixel_pitch - stack.manifest.pixel_pitch) > 1e-12 * stack.manifest.pixel_pitch)
            fail(errc::grid_mismatch, "frame pixel pitch disagrees with manifest");
    }
}

} // namespace sldf
