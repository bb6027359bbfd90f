#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sldf/error.hpp"
#include "sldf/stack.hpp"
#include "sldf/stack_io.hpp"

#include "test_util.hpp"

using namespace sldf;
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

StackManifest example_manifest() {
    StackManifest m;
    m.width = 32;
    m.height = 32;
    m.pixel_pitch = 0.1;
    m.pattern.orientations_deg = {0.0, 45.0, 90.0, 135.0};
    m.pattern.phases_deg = {0.0, 120.0, 240.0};
    m.pattern.freq_dmd_cycles_per_mm = 65.4545454545;
    m.pattern.magnification_dmd_to_sample = 0.05;
    m.pattern.modulation_depth = 0.9;
    m.pattern.mean_level = 1.5;
    m.optics.na_detection = 0.4;
    m.optics.na_illumination_inner = 0.5;
    m.optics.na_illumination_outer = 0.75;
    m.optics.wavelength_um = 0.55;
    m.optics.mode = imaging_mode::reflectance;
    m.optics.noise.read_noise_sigma = 0.01;
    m.optics.noise.photon_scale = 1000.0;
    m.optics.noise.seed = 1234567890123ull;
    m.provenance.type = Provenance::kind::simulated;
    m.provenance.seed = 42;
    return m;
}

RawStack tiny_stack(std::uint64_t seed) {
    RawStack stack;
    stack.manifest = example_manifest();
    stack.manifest.width = 16;
    stack.manifest.height = 16;
    stack.manifest.pattern.orientations_deg = {0.0, 90.0};
    const std::size_t frames = 2 * 3;
    for (std::size_t i = 0; i < frames; ++i) {
        Image f = test_util::random_image(16, 16, 0.1, seed + i);
        quantize_to_storage(f);
        stack.frames.push_back(std::move(f));
    }
    return stack;
}

} // namespace

TEST_CASE("raster byte layout is frozen") {
    const std::string dir = test_util::scratch_dir("raster_layout");
    Image img(8, 8, 0.25);
    for (int i = 0; i < 64; ++i)
        img.data[i] = i / 4.0;
    const std::string path = dir + "/img.raster";
    save_raster(img, path);

    auto bytes = read_bytes(path);
    REQUIRE(bytes.size() == 16 + 4 + 4 + 8 + 64 * 4); // 288
    const unsigned char magic[16] = {'S', 'L', 'D', 'F', 'I', 'M', 'G', '1', 0, 0, 0, 0, 0, 0, 0, 0};
    CHECK(std::memcmp(bytes.data(), magic, 16) == 0);
    // u32 little endian dimensions.
    CHECK(bytes[16] == 8);
    CHECK(bytes[17] == 0);
    CHECK(bytes[18] == 0);
    CHECK(bytes[19] == 0);
    CHECK(bytes[20] == 8);
    // f64 little endian pitch 0.25 = 0x3FD0000000000000.
    const unsigned char pitch[8] = {0, 0, 0, 0, 0, 0, 0xD0, 0x3F};
    CHECK(std::memcmp(bytes.data() + 24, pitch, 8) == 0);
    // First samples: 0.0f then 0.25f (0x3E800000), little endian.
    const unsigned char first[8] = {0, 0, 0, 0, 0, 0, 0x80, 0x3E};
    CHECK(std::memcmp(bytes.data() + 32, first, 8) == 0);
}

TEST_CASE("raster save/load round trips bit for bit") {
    const std::string dir = test_util::scratch_dir("raster_roundtrip");
    Image img = test_util::random_image(32, 16, 0.15, 77);
    quantize_to_storage(img);
    const std::string path = dir + "/img.raster";
    save_raster(img, path);
    Image back = load_raster(path);
    CHECK(back.width == 32);
    CHECK(back.height == 16);
    CHECK(back.pixel_pitch == img.pixel_pitch);
    CHECK(back.data == img.data);

    // Saving the loaded copy reproduces the file exactly.
    const std::string path2 = dir + "/img2.raster";
    save_raster(back, path2);
    CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("quantization to storage depth is idempotent") {
    Image img = test_util::random_image(16, 16, 0.1, 5);
    quantize_to_storage(img);
    Image once = img;
    quantize_to_storage(img);
    CHECK(img.data == once.data);
    for (double v : img.data)
        CHECK(v == static_cast<double>(static_cast<float>(v)));
}

TEST_CASE("malformed rasters are rejected") {
    const std::string dir = test_util::scratch_dir("raster_bad");
    CHECK_THROWS_AS(load_raster(dir + "/missing.raster"), error);

    Image img(8, 8, 0.25, 1.0);
    const std::string path = dir + "/img.raster";
    save_raster(img, path);

    auto bytes = read_bytes(path);
    {
        std::ofstream out(dir + "/truncated.raster", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size() - 5);
    }
    try {
        load_raster(dir + "/truncated.raster");
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::io_error);
    }

    bytes[0] = 'X';
    {
        std::ofstream out(dir + "/badmagic.raster", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    CHECK_THROWS_AS(load_raster(dir + "/badmagic.raster"), error);
}

TEST_CASE("manifest JSON round trips every field") {
    StackManifest m = example_manifest();
    const std::string text = manifest_to_json(m);
    StackManifest back = manifest_from_json(text);

    CHECK(back.format_version == 1);
    CHECK(back.width == m.width);
    CHECK(back.height == m.height);
    CHECK(back.pixel_pitch == m.pixel_pitch);
    CHECK(back.pattern.orientations_deg == m.pattern.orientations_deg);
    CHECK(back.pattern.phases_deg == m.pattern.phases_deg);
    CHECK(back.pattern.freq_dmd_cycles_per_mm == m.pattern.freq_dmd_cycles_per_mm);
    CHECK(back.pattern.magnification_dmd_to_sample == m.pattern.magnification_dmd_to_sample);
    CHECK(back.pattern.modulation_depth == m.pattern.modulation_depth);
    CHECK(back.pattern.mean_level == m.pattern.mean_level);
    CHECK(back.optics.na_detection == m.optics.na_detection);
    CHECK(back.optics.na_illumination_inner == m.optics.na_illumination_inner);
    CHECK(back.optics.na_illumination_outer == m.optics.na_illumination_outer);
    CHECK(back.optics.wavelength_um == m.optics.wavelength_um);
    CHECK(back.optics.mode == imaging_mode::reflectance);
    CHECK(back.optics.noise.read_noise_sigma == m.optics.noise.read_noise_sigma);
    CHECK(back.optics.noise.photon_scale == m.optics.noise.photon_scale);
    CHECK(back.optics.noise.seed == m.optics.noise.seed);
    CHECK(back.provenance.type == m.provenance.type);
    CHECK(back.provenance.seed == m.provenance.seed);

    // Serialization is deterministic: same manifest, same bytes.
    CHECK(manifest_to_json(back) == text);
}

TEST_CASE("manifest parsing rejects bad input") {
    CHECK_THROWS_AS(manifest_from_json("not json at all"), error);
    CHECK_THROWS_AS(manifest_from_json("{}"), error);

    StackManifest m = example_manifest();
    std::string text = manifest_to_json(m);
    const auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    std::string wrong = text;
    wrong.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 2");
    try {
        manifest_from_json(wrong);
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::io_error);
    }
}

TEST_CASE("stack directories round trip") {
    const std::string dir = test_util::scratch_dir("stack_roundtrip");
    RawStack stack = tiny_stack(100);
    save_stack(stack, dir);

    CHECK(fs::exists(dir + "/manifest"));
    for (std::size_t oi = 0; oi < 2; ++oi)
        for (std::size_t pi = 0; pi < 3; ++pi)
            CHECK(fs::exists(dir + "/" + frame_filename(oi, pi)));

    RawStack back = load_stack(dir);
    CHECK(back.frames.size() == stack.frames.size());
    for (std::size_t i = 0; i < stack.frames.size(); ++i)
        CHECK(back.frames[i].data == stack.frames[i].data);
    CHECK(manifest_to_json(back.manifest) == manifest_to_json(stack.manifest));
}

TEST_CASE("missing frames surface as an incomplete protocol") {
    const std::string dir = test_util::scratch_dir("stack_missing");
    RawStack stack = tiny_stack(200);
    save_stack(stack, dir);
    fs::remove(dir + "/" + frame_filename(1, 2));
    try {
        load_stack(dir);
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::partial_protocol);
    }
}

TEST_CASE("frames that disagree with the manifest grid are rejected") {
    const std::string dir = test_util::scratch_dir("stack_badgrid");
    RawStack stack = tiny_stack(300);
    save_stack(stack, dir);
    save_raster(Image(32, 32, 0.1, 0.0), dir + "/" + frame_filename(0, 0));
    try {
        load_stack(dir);
        FAIL("expected throw");
    } catch (const error& e) {
        CHECK(e.code() == errc::grid_mismatch);
    }
}

TEST_CASE("sample directories round trip") {
    const std::string dir = test_util::scratch_dir("sample_roundtrip");
    SampleStack sample;
    Image a = test_util::random_image(16, 16, 0.2, 400);
    Image b = test_util::random_image(16, 16, 0.2, 401);
    quantize_to_storage(a);
    quantize_to_storage(b);
    sample.planes.push_back({a, 0.0});
    sample.planes.push_back({b, 3.5});
    save_sample(sample, dir);

    SampleStack back = load_sample(dir);
    REQUIRE(back.planes.size() == 2);
    CHECK(back.planes[0].density.data == a.data);
    CHECK(back.planes[1].density.data == b.data);
    CHECK(back.planes[0].defocus_um == 0.0);
    CHECK(back.planes[1].defocus_um == 3.5);

    CHECK_THROWS_AS(load_sample(dir + "/nonexistent"), error);

    SampleStack empty;
    CHECK_THROWS_AS(save_sample(empty, dir), error);
}

TEST_CASE("16-bit PGM export writes a portable grayscale file") {
    const std::string dir = test_util::scratch_dir("pgm");
    Image img(8, 8, 0.1, 0.0);
    img.at(0, 0) = -2.0;
    img.at(7, 7) = 6.0;
    const std::string path = dir + "/img.pgm";
    Pgm16Scale scale = save_pgm16(img, path);
    CHECK(scale.min == -2.0);
    CHECK(scale.max == 6.0);

    auto bytes = read_bytes(path);
    const std::string header = "P5\n8 8\n65535\n";
    REQUIRE(bytes.size() == header.size() + 64 * 2);
    CHECK(std::memcmp(bytes.data(), header.data(), header.size()) == 0);
    // Big-endian samples: min -> 0, max -> 65535, zero -> 16384 (2/8 of range).
    const unsigned char* px = bytes.data() + header.size();
    CHECK(px[0] == 0x00); // first pixel is the minimum
    CHECK(px[1] == 0x00);
    CHECK(px[126] == 0xFF); // last pixel is the maximum
    CHECK(px[127] == 0xFF);
    const int zero_px = px[2] * 256 + px[3];
    CHECK(std::abs(zero_px - 16384) <= 1);

    // A flat image maps to zeros rather than dividing by zero.
    Image flat(8, 8, 0.1, 3.0);
    Pgm16Scale s2 = save_pgm16(flat, dir + "/flat.pgm");
    CHECK(s2.min == 3.0);
    CHECK(s2.max == 3.0);
    auto flat_bytes = read_bytes(dir + "/flat.pgm");
    for (std::size_t i = header.size(); i < flat_bytes.size(); ++i)
        CHECK(flat_bytes[i] == 0);
}
