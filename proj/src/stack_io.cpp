#include "sldf/stack_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace sldf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kMagic[16] = {'S', 'L', 'D', 'F', 'I', 'M', 'G', '1', 0, 0, 0, 0, 0, 0, 0, 0};
constexpr std::size_t kHeaderBytes = sizeof(kMagic) + 4 + 4 + 8;

void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(errc::io_error, "cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof())
        fail(errc::io_error, "read failed for " + path);
    return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(errc::io_error, "cannot create " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good())
        fail(errc::io_error, "write failed for " + path);
}

std::string mode_name(imaging_mode mode) {
    return mode == imaging_mode::transmission ? "transmission" : "reflectance";
}

imaging_mode mode_from_name(const std::string& name) {
    if (name == "transmission")
        return imaging_mode::transmission;
    if (name == "reflectance")
        return imaging_mode::reflectance;
    fail(errc::io_error, "unknown imaging mode '" + name + "'");
}

} // namespace

void quantize_to_storage(Image& img) {
    for (double& v : img.data)
        v = static_cast<double>(static_cast<float>(v));
}

void save_raster(const Image& img, const std::string& path) {
    validate_dims(img.width, img.height);
    std::string bytes;
    bytes.reserve(kHeaderBytes + 4 * img.data.size());
    bytes.append(kMagic, sizeof(kMagic));
    put_u32le(bytes, static_cast<std::uint32_t>(img.width));
    put_u32le(bytes, static_cast<std::uint32_t>(img.height));
    put_u64le(bytes, std::bit_cast<std::uint64_t>(img.pixel_pitch));
    for (double v : img.data)
        put_u32le(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    write_file(path, bytes);
}

Image load_raster(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        fail(errc::io_error, path + " is not a raster file");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + sizeof(kMagic);
    const std::uint32_t w = get_u32le(p);
    const std::uint32_t h = get_u32le(p + 4);
    const double pitch = std::bit_cast<double>(get_u64le(p + 8));
    if (w > 1u << 20 || h > 1u << 20)
        fail(errc::io_error, path + " header is implausible");
    const std::size_t expected = kHeaderBytes + 4ull * w * h;
    if (bytes.size() != expected)
        fail(errc::io_error, path + " is truncated or padded (" + std::to_string(bytes.size()) + " bytes, expected " +
                                 std::to_string(expected) + ")");
    Image img(static_cast<int>(w), static_cast<int>(h), pitch, 0.0);
    const auto* q = p + 16;
    for (std::size_t j = 0; j < img.data.size(); ++j)
        img.data[j] = static_cast<double>(std::bit_cast<float>(get_u32le(q + 4 * j)));
    return img;
}

std::string frame_filename(std::size_t orientation_index, std::size_t phase_index) {
    return "frame_o" + std::to_string(orientation_index) + "_p" + std::to_string(phase_index) + ".raster";
}

std::string manifest_to_json(const StackManifest& m) {
    json j;
    j["format_version"] = m.format_version;
    j["width"] = m.width;
    j["height"] = m.height;
    j["pixel_pitch"] = m.pixel_pitch;
    j["pattern"] = {{"orientations_deg", m.pattern.orientations_deg},
                    {"phases_deg", m.pattern.phases_deg},
                    {"freq_dmd_cycles_per_mm", m.pattern.freq_dmd_cycles_per_mm},
                    {"magnification_dmd_to_sample", m.pattern.magnification_dmd_to_sample},
                    {"modulation_depth", m.pattern.modulation_depth},
                    {"mean_level", m.pattern.mean_level}};
    j["optics"] = {{"na_detection", m.optics.na_detection},
                   {"na_illumination_inner", m.optics.na_illumination_inner},
                   {"na_illumination_outer", m.optics.na_illumination_outer},
                   {"wavelength_um", m.optics.wavelength_um},
                   {"mode", mode_name(m.optics.mode)},
                   {"noise",
                    {{"read_noise_sigma", m.optics.noise.read_noise_sigma},
                     {"photon_scale", m.optics.noise.photon_scale},
                     {"seed", m.optics.noise.seed}}}};
    j["provenance"] = {{"kind", m.provenance.type == Provenance::kind::simulated ? "simulated" : "ingested"},
                       {"seed", m.provenance.seed},
                       {"source", m.provenance.source}};
    return j.dump(2) + "\n";
}

StackManifest manifest_from_json(const std::string& text) {
    StackManifest m;
    try {
        const json j = json::parse(text);
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != 1)
            fail(errc::io_error, "unsupported manifest format_version " + std::to_string(m.format_version));
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.pixel_pitch = j.at("pixel_pitch").get<double>();
        const json& p = j.at("pattern");
        m.pattern.orientations_deg = p.at("orientations_deg").get<std::vector<double>>();
        m.pattern.phases_deg = p.at("phases_deg").get<std::vector<double>>();
        m.pattern.freq_dmd_cycles_per_mm = p.at("freq_dmd_cycles_per_mm").get<double>();
        m.pattern.magnification_dmd_to_sample = p.at("magnification_dmd_to_sample").get<double>();
        m.pattern.modulation_depth = p.at("modulation_depth").get<double>();
        m.pattern.mean_level = p.at("mean_level").get<double>();
        const json& o = j.at("optics");
        m.optics.na_detection = o.at("na_detection").get<double>();
        m.optics.na_illumination_inner = o.at("na_illumination_inner").get<double>();
        m.optics.na_illumination_outer = o.at("na_illumination_outer").get<double>();
        m.optics.wavelength_um = o.at("wavelength_um").get<double>();
        m.optics.mode = mode_from_name(o.at("mode").get<std::string>());
        const json& n = o.at("noise");
        m.optics.noise.read_noise_sigma = n.at("read_noise_sigma").get<double>();
        m.optics.noise.photon_scale = n.at("photon_scale").get<double>();
        m.optics.noise.seed = n.at("seed").get<std::uint64_t>();
        const json& pv = j.at("provenance");
        const std::string kind = pv.at("kind").get<std::string>();
        if (kind == "simulated")
            m.provenance.type = Provenance::kind::simulated;
        else if (kind == "ingested")
            m.provenance.type = Provenance::kind::ingested;
        else
            fail(errc::io_error, "unknown provenance kind '" + kind + "'");
        m.provenance.seed = pv.at("seed").get<std::uint64_t>();
        m.provenance.source = pv.at("source").get<std::string>();
    } catch (const json::exception& e) {
        fail(errc::io_error, std::string("manifest parse failed: ") + e.what());
    }
    return m;
}

void save_stack(const RawStack& stack, const std::string& dir) {
    validate_stack(stack);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        fail(errc::io_error, "cannot create directory " + dir);
    write_file((fs::path(dir) / "manifest").string(), manifest_to_json(stack.manifest));
    for (std::size_t oi = 0; oi < stack.n_orientations(); ++oi)
        for (std::size_t pi = 0; pi < stack.n_phases(); ++pi)
            save_raster(stack.frame(oi, pi), (fs::path(dir) / frame_filename(oi, pi)).string());
}

RawStack load_stack(const std::string& dir) {
    RawStack stack;
    stack.manifest = manifest_from_json(read_file((fs::path(dir) / "manifest").string()));
    for (std::size_t oi = 0; oi < stack.n_orientations(); ++oi)
        for (std::size_t pi = 0; pi < stack.n_phases(); ++pi) {
            const fs::path path = fs::path(dir) / frame_filename(oi, pi);
            if (!fs::exists(path))
                fail(errc::partial_protocol, "stack is missing " + frame_filename(oi, pi));
            stack.frames.push_back(load_raster(path.string()));
        }
    validate_stack(stack);
    return stack;
}

void save_sample(const SampleStack& sample, const std::string& dir) {
    if (sample.planes.empty())
        fail(errc::bad_spec, "sample has no planes");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        fail(errc::io_error, "cannot create directory " + dir);
    json planes = json::array();
    for (std::size_t i = 0; i < sample.planes.size(); ++i) {
        const std::string name = "plane_" + std::to_string(i) + ".raster";
        save_raster(sample.planes[i].density, (fs::path(dir) / name).string());
        planes.push_back({{"defocus_um", sample.planes[i].defocus_um}, {"file", name}});
    }
    json j;
    j["format_version"] = 1;
    j["planes"] = planes;
    write_file((fs::path(dir) / "sample").string(), j.dump(2) + "\n");
}

SampleStack load_sample(const std::string& dir) {
    SampleStack sample;
    try {
        const json j = json::parse(read_file((fs::path(dir) / "sample").string()));
        if (j.at("format_version").get<int>() != 1)
            fail(errc::io_error, "unsupported sample format_version");
        for (const json& pj : j.at("planes")) {
            SamplePlane plane;
            plane.defocus_um = pj.at("defocus_um").get<double>();
            plane.density = load_raster((fs::path(dir) / pj.at("file").get<std::string>()).string());
            sample.planes.push_back(std::move(plane));
        }
    } catch (const json::exception& e) {
        fail(errc::io_error, std::string("sample manifest parse failed: ") + e.what());
    }
    if (sample.planes.empty())
        fail(errc::io_error, "sample lists no planes");
    for (const auto& plane : sample.planes)
        if (!same_grid(plane.density, sample.planes.front().density))
            fail(errc::grid_mismatch, "sample planes live on different grids");
    return sample;
}

Pgm16Scale save_pgm16(const Image& img, const std::string& path) {
    Pgm16Scale scale;
    scale.min = *std::min_element(img.data.begin(), img.data.end());
    scale.max = *std::max_element(img.data.begin(), img.data.end());
    const double span = scale.max - scale.min;
    std::string bytes = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
    bytes.reserve(bytes.size() + 2 * img.data.size());
    for (double v : img.data) {
        const double t = span > 0.0 ? (v - scale.min) / span : 0.0;
        const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
        bytes.push_back(static_cast<char>(q >> 8)); // big-endian per PGM convention
        bytes.push_back(static_cast<char>(q & 0xff));
    }
    write_file(path, bytes);
    return scale;
}

} // namespace sldf
