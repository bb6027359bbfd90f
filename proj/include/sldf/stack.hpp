#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sldf/image.hpp"
#include "sldf/optics.hpp"
#include "sldf/patterns.hpp"

namespace sldf {

struct Provenance {
    enum class kind { simulated, ingested };
    kind type = kind::simulated;
    std::uint64_t seed = 0;  // simulated stacks
    std::string source;      // ingested stacks
};

/// Everything needed to interpret a stack of raw frames: grid geometry, the
/// illumination protocol, the acquisition optics, and where the data came from.
struct StackManifest {
    int format_version = 1;
    int width = 0;
    int height = 0;
    double pixel_pitch = 0.0;
    PatternSpec pattern;
    OpticsConfig optics;
    Provenance provenance;
};

/// Raw acquisition: one frame per (orientation, phase), orientation-major.
struct RawStack {
    StackManifest manifest;
    std::vector<Image> frames;

    std::size_t n_orientations() const { return manifest.pattern.orientations_deg.size(); }
    std::size_t n_phases() const { return manifest.pattern.phases_deg.size(); }
    const Image& frame(std::size_t oi, std::size_t pi) const { return frames[oi * n_phases() + pi]; }
    Image& frame(std::size_t oi, std::size_t pi) { return frames[oi * n_phases() + pi]; }
};

/// Sanity checks frame count and per-frame grids against the manifest.
void validate_stack(const RawStack& stack);

} // namespace sldf
