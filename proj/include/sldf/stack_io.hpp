#pragma once

#include <string>

#include "sldf/image.hpp"
#include "sldf/optics.hpp"
#include "sldf/stack.hpp"

namespace sldf {

/// On-disk raster: 16-byte magic ("SLDFIMG1" padded with NUL), u32 width,
/// u32 height, f64 pixel pitch (all little endian), then float32 samples in
/// row-major order. Saving quantizes to float32; a save/load round trip of
/// already-quantized data is bit exact.
void save_raster(const Image& img, const std::string& path);
Image load_raster(const std::string& path);

/// Quantizes samples to the float32 depth used on disk, in place.
void quantize_to_storage(Image& img);

/// Canonical frame file name within a stack directory.
std::string frame_filename(std::size_t orientation_index, std::size_t phase_index);

/// Serialized manifest: JSON with sorted keys, so equal manifests produce
/// byte-identical files.
std::string manifest_to_json(const StackManifest& manifest);
StackManifest manifest_from_json(const std::string& text);

/// Stack directory: `manifest` plus one raster per (orientation, phase).
void save_stack(const RawStack& stack, const std::string& dir);

/// Throws errc::partial_protocol when frames promised by the manifest are
/// missing, errc::grid_mismatch when a frame disagrees with the manifest grid,
/// errc::io_error on malformed files.
RawStack load_stack(const std::string& dir);

/// Sample directory: `sample` (JSON listing planes and their defocus) plus one
/// raster per plane.
void save_sample(const SampleStack& sample, const std::string& dir);
SampleStack load_sample(const std::string& dir);

/// 16-bit PGM export (P5, big-endian samples), linearly rescaled so that
/// [min, max] maps onto [0, 65535]. Returns the scale actually used.
struct Pgm16Scale {
    double min = 0.0;
    double max = 0.0;
};
Pgm16Scale save_pgm16(const Image& img, const std::string& path);

} // namespace sldf
