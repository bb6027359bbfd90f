// Command-line front end: generate-target, simulate, reconstruct, section,
// metrics. Exit codes: 0 success, 2 usage/config, 3 physics validation,
// 4 processing failure.

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sldf/error.hpp"
#include "sldf/eval.hpp"
#include "sldf/fft.hpp"
#include "sldf/image.hpp"
#include "sldf/optics.hpp"
#include "sldf/patterns.hpp"
#include "sldf/recon.hpp"
#include "sldf/sectioning.hpp"
#include "sldf/stack.hpp"
#include "sldf/stack_io.hpp"

namespace {

using namespace sldf;
namespace fs = std::filesystem;
using nlohmann::json;

// Which phase of a command an error escaped from; input errors are config
// problems (exit 2), later ones are processing failures (exit 4).
enum class run_stage { parse, load_inputs, process, write_outputs };

run_stage g_stage = run_stage::parse;
const char* stage_name(run_stage s) {
    switch (s) {
        case run_stage::parse: return "argument parsing";
        case run_stage::load_inputs: return "input loading";
        case run_stage::process: return "processing";
        case run_stage::write_outputs: return "output writing";
    }
    return "unknown";
}

int exit_code_for(const error& e) {
    switch (e.code()) {
        case errc::not_darkfield:
            return 3;
        case errc::bad_spec:
        case errc::bad_dims:
        case errc::bad_magnification:
        case errc::layout_overflow:
        case errc::out_of_bounds:
            return 2;
        default:
            return g_stage == run_stage::load_inputs || g_stage == run_stage::parse ? 2 : 4;
    }
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct Report {
    std::vector<std::pair<std::string, std::string>> rows;

    void add(const std::string& key, const std::string& value) { rows.emplace_back(key, value); }
    void add(const std::string& key, double value) { rows.emplace_back(key, fmt(value)); }
    void add(const std::string& key, int value) { rows.emplace_back(key, std::to_string(value)); }
    void add(const std::string& key, std::size_t value) { rows.emplace_back(key, std::to_string(value)); }

    std::string text() const {
        std::string out;
        for (const auto& [k, v] : rows)
            out += k + " = " + v + "\n";
        return out;
    }
};

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(errc::io_error, "cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(errc::io_error, "cannot create " + path);
    out << text;
    if (!out.good())
        fail(errc::io_error, "write failed for " + path);
}

// Copies the input stack manifest and appends this command's parameters to its
// processing chain, preserving any entries already present.
void echo_manifest(const std::string& stack_dir, const std::string& out_dir, json entry) {
    json j;
    try {
        j = json::parse(read_text_file((fs::path(stack_dir) / "manifest").string()));
    } catch (const json::exception& e) {
        fail(errc::io_error, std::string("manifest parse failed: ") + e.what());
    }
    if (!j.contains("processing") || !j["processing"].is_array())
        j["processing"] = json::array();
    j["processing"].push_back(std::move(entry));
    write_text_file((fs::path(out_dir) / "manifest").string(), j.dump(2) + "\n");
}

void make_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        fail(errc::io_error, "cannot create directory " + dir);
}

apodization_kind apodization_from_string(const std::string& name) {
    if (name == "triangle")
        return apodization_kind::triangle;
    if (name == "raised-cosine")
        return apodization_kind::raised_cosine;
    if (name == "none")
        return apodization_kind::none;
    fail(errc::bad_spec, "unknown apodization '" + name + "' (expected triangle, raised-cosine, or none)");
}

std::array<double, 2> parse_pair(const std::vector<double>& v, const char* what) {
    if (v.size() != 2)
        fail(errc::bad_spec, std::string(what) + " needs exactly two comma-separated numbers");
    return {v[0], v[1]};
}

struct Segment {
    std::array<double, 2> from;
    std::array<double, 2> to;
};

Segment parse_segment(const std::vector<double>& v, const char* what) {
    if (v.size() != 4)
        fail(errc::bad_spec, std::string(what) + " needs x0,y0,x1,y1");
    return {{v[0], v[1]}, {v[2], v[3]}};
}

void emit_report(const Report& report, const std::string& out_dir) {
    const std::string text = report.text();
    if (!out_dir.empty())
        write_text_file((fs::path(out_dir) / "report").string(), text);
    std::fputs(text.c_str(), stdout);
}

void export_raster(const Image& img, const std::string& out_dir, const std::string& stem, bool pgm,
                   Report& report) {
    save_raster(img, (fs::path(out_dir) / (stem + ".raster")).string());
    if (pgm) {
        const Pgm16Scale scale = save_pgm16(img, (fs::path(out_dir) / (stem + ".pgm")).string());
        report.add(stem + "_pgm_min", scale.min);
        report.add(stem + "_pgm_max", scale.max);
    }
}

// ---------------------------------------------------------------------------
// generate-target
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string kind;
    std::string out;
    int width = 256;
    int height = 256;
    double pitch_um = 0.1;
    double amplitude = 1.0;
    double margin_um = 2.0;
    // bars
    std::vector<double> freqs;
    int bars = 5;
    double bar_length_um = 4.0;
    double group_gap_um = 2.0;
    // ring
    double radius_um = 0.0;
    double thickness_um = 0.0;
    std::vector<double> center_um = {0.0, 0.0};
    // two-plane
    double in_radius_um = 2.0;
    std::vector<double> in_center_um = {0.0, 0.0};
    double in_amplitude = 1.0;
    double out_radius_um = 8.0;
    std::vector<double> out_center_um = {0.0, 0.0};
    double out_amplitude = 1.0;
    double defocus_um = 3.0;
    double mask_dilation_um = 1.0;
};

void run_generate(const GenerateArgs& a) {
    g_stage = run_stage::process;
    Report report;
    report.add("command", std::string("generate-target"));
    report.add("kind", a.kind);
    report.add("width", a.width);
    report.add("height", a.height);
    report.add("pixel_pitch_um", a.pitch_um);

    SampleStack sample;
    if (a.kind == "bars") {
        if (a.freqs.empty())
            fail(errc::bad_spec, "bars target needs --freqs");
        BarTargetSpec spec;
        spec.width = a.width;
        spec.height = a.height;
        spec.pixel_pitch = a.pitch_um;
        spec.frequencies = a.freqs;
        spec.bars = a.bars;
        spec.bar_length_um = a.bar_length_um;
        spec.group_gap_um = a.group_gap_um;
        spec.margin_um = a.margin_um;
        spec.amplitude = a.amplitude;
        BarTarget target = gen_bars(spec);
        for (std::size_t g = 0; g < target.groups.size(); ++g) {
            const auto& layout = target.groups[g];
            const std::string prefix = "group_" + std::to_string(g) + "_";
            report.add(prefix + "frequency_cyc_per_um", layout.frequency);
            report.add(prefix + "period_um", layout.period_um);
            report.add(prefix + "x_center_um", layout.x_center_um);
            report.add(prefix + "y_center_um", layout.y_center_um);
            report.add(prefix + "width_um", layout.width_um);
            report.add(prefix + "height_um", layout.height_um);
        }
        sample.planes.push_back({std::move(target.density), 0.0});
    } else if (a.kind == "ring") {
        if (!(a.radius_um > 0.0) || !(a.thickness_um > 0.0))
            fail(errc::bad_spec, "ring target needs --radius-um and --thickness-um");
        RingTargetSpec spec;
        spec.width = a.width;
        spec.height = a.height;
        spec.pixel_pitch = a.pitch_um;
        spec.radius_um = a.radius_um;
        spec.thickness_um = a.thickness_um;
        spec.center_um = parse_pair(a.center_um, "--center-um");
        spec.amplitude = a.amplitude;
        spec.margin_um = a.margin_um;
        sample.planes.push_back({gen_ring(spec), 0.0});
        report.add("radius_um", a.radius_um);
        report.add("thickness_um", a.thickness_um);
    } else if (a.kind == "two-plane") {
        TwoPlaneSpec spec;
        spec.width = a.width;
        spec.height = a.height;
        spec.pixel_pitch = a.pitch_um;
        spec.in_focus = {parse_pair(a.in_center_um, "--in-center-um"), a.in_radius_um, a.in_amplitude};
        spec.out_of_focus = {parse_pair(a.out_center_um, "--out-center-um"), a.out_radius_um, a.out_amplitude};
        spec.defocus_um = a.defocus_um;
        spec.mask_dilation_um = a.mask_dilation_um;
        spec.margin_um = a.margin_um;
        sample = gen_two_plane(spec).stack;
        report.add("defocus_um", a.defocus_um);
    } else {
        fail(errc::bad_spec, "unknown target kind '" + a.kind + "' (expected bars, ring, or two-plane)");
    }

    g_stage = run_stage::write_outputs;
    save_sample(sample, a.out);
    report.add("planes", sample.planes.size());
    emit_report(report, a.out);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string sample;
    std::string out;
    std::vector<double> orientations = {0.0, 45.0, 90.0, 135.0};
    std::vector<double> phases = {0.0, 120.0, 240.0};
    double freq_dmd = 0.0;
    double magnification = 1.0;
    double modulation = 1.0;
    double mean_level = 1.0;
    double na_detection = 0.4;
    double na_ill_inner = 0.5;
    double na_ill_outer = 0.75;
    double wavelength_um = 0.55;
    std::string mode = "transmission";
    double read_noise = 0.0;
    double photon_scale = 0.0;
    std::uint64_t seed = 0;
};

void run_simulate(const SimulateArgs& a) {
    g_stage = run_stage::load_inputs;
    const SampleStack sample = load_sample(a.sample);

    g_stage = run_stage::process;
    PatternSpec pattern;
    pattern.orientations_deg = a.orientations;
    pattern.phases_deg = a.phases;
    pattern.freq_dmd_cycles_per_mm = a.freq_dmd;
    pattern.magnification_dmd_to_sample = a.magnification;
    pattern.modulation_depth = a.modulation;
    pattern.mean_level = a.mean_level;

    OpticsConfig cfg;
    cfg.na_detection = a.na_detection;
    cfg.na_illumination_inner = a.na_ill_inner;
    cfg.na_illumination_outer = a.na_ill_outer;
    cfg.wavelength_um = a.wavelength_um;
    cfg.mode = a.mode == "reflectance" ? imaging_mode::reflectance : imaging_mode::transmission;
    if (a.mode != "transmission" && a.mode != "reflectance")
        fail(errc::bad_spec, "unknown imaging mode '" + a.mode + "'");
    cfg.noise.read_noise_sigma = a.read_noise;
    cfg.noise.photon_scale = a.photon_scale;
    cfg.noise.seed = a.seed;

    const Image& proto = sample.planes.front().density;
    const PatternSet patterns = make_pattern_set(pattern, proto.width, proto.height, proto.pixel_pitch);
    const RawStack stack = simulate_stack(sample, patterns, cfg);

    g_stage = run_stage::write_outputs;
    save_stack(stack, a.out);

    Report report;
    report.add("command", std::string("simulate"));
    report.add("frames", stack.frames.size());
    report.add("orientations", stack.n_orientations());
    report.add("phases", stack.n_phases());
    report.add("fringe_frequency_cyc_per_um", pattern.sample_frequency());
    report.add("detection_cutoff_cyc_per_um", cfg.detection_cutoff());
    report.add("max_fringe_frequency_cyc_per_um", validate_darkfield(cfg).max_fringe_frequency);
    report.add("seed", std::to_string(a.seed));
    emit_report(report, a.out);
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

struct ReconstructArgs {
    std::string stack;
    std::string out;
    double wiener_w = 0.05;
    std::string apodization = "triangle";
    std::string params = "auto";
    int upsample = 2;
    bool pgm = false;
    bool deconvolve_conventional = false;
};

void run_reconstruct(const ReconstructArgs& a) {
    ReconParams params;
    params.wiener_w = a.wiener_w;
    params.apodization = apodization_from_string(a.apodization);
    params.upsample_factor = a.upsample;
    if (a.params != "auto" && a.params != "manifest" && a.params != "estimate")
        fail(errc::bad_spec,
             "unknown parameter source '" + a.params + "' (expected manifest, estimate, or auto)");
    validate_recon_params(params);

    g_stage = run_stage::load_inputs;
    const RawStack stack = load_stack(a.stack);

    // Simulated stacks carry exact pattern parameters in their manifest;
    // ingested stacks default to estimating them from the data.
    std::string source = a.params;
    if (source == "auto")
        source = stack.manifest.provenance.type == Provenance::kind::ingested ? "estimate" : "manifest";
    params.source = source == "estimate" ? parameter_source::estimate : parameter_source::manifest;

    g_stage = run_stage::process;
    const ReconResult result = reconstruct(stack, params);
    const Image conventional = conventional_image(stack);

    Report report;
    report.add("command", std::string("reconstruct"));
    report.add("params", source);
    report.add("wiener_w", a.wiener_w);
    report.add("apodization", a.apodization);
    report.add("upsample", a.upsample);
    report.add("enhanced_width", result.enhanced.width);
    report.add("enhanced_height", result.enhanced.height);
    report.add("enhanced_pixel_pitch_um", result.enhanced.pixel_pitch);
    for (std::size_t oi = 0; oi < result.per_orientation.size(); ++oi) {
        const FringeEstimate& est = result.per_orientation[oi];
        const std::string prefix = "orientation_" + std::to_string(oi) + "_";
        report.add(prefix + "p_x_cyc_per_um", est.p_vector[0]);
        report.add(prefix + "p_y_cyc_per_um", est.p_vector[1]);
        report.add(prefix + "phase0_deg", est.phase0_rad * 180.0 / 3.14159265358979323846);
        report.add(prefix + "modulation", est.modulation);
        report.add(prefix + "peak_ratio", est.peak_ratio);
    }

    g_stage = run_stage::write_outputs;
    make_out_dir(a.out);
    export_raster(result.enhanced, a.out, "enhanced", a.pgm, report);
    export_raster(conventional, a.out, "conventional", a.pgm, report);
    if (a.deconvolve_conventional) {
        const Image deconv = wiener_deconvolve(conventional, stack.manifest.optics, a.wiener_w);
        export_raster(deconv, a.out, "conventional_deconvolved", a.pgm, report);
    }
    echo_manifest(a.stack, a.out,
                  {{"command", "reconstruct"},
                   {"params", source},
                   {"wiener_w", a.wiener_w},
                   {"apodization", a.apodization},
                   {"upsample", a.upsample}});
    emit_report(report, a.out);
}

// ---------------------------------------------------------------------------
// section
// ---------------------------------------------------------------------------

struct SectionArgs {
    std::string stack;
    std::string out;
    std::string combine = "mean";
    std::size_t orientation = 0;
    bool pgm = false;
};

void run_section(const SectionArgs& a) {
    const combine_mode mode = combine_mode_from_string(a.combine);

    g_stage = run_stage::load_inputs;
    const RawStack stack = load_stack(a.stack);

    g_stage = run_stage::process;
    const Image sectioned = section_stack(stack, mode, a.orientation);
    const Image conventional = conventional_image(stack);

    Report report;
    report.add("command", std::string("section"));
    report.add("combine", a.combine);
    report.add("orientation", a.orientation);
    report.add("frames", stack.frames.size());

    g_stage = run_stage::write_outputs;
    make_out_dir(a.out);
    export_raster(sectioned, a.out, "sectioned", a.pgm, report);
    export_raster(conventional, a.out, "conventional", a.pgm, report);
    echo_manifest(a.stack, a.out,
                  {{"command", "section"}, {"combine", a.combine}, {"orientation", a.orientation}});
    emit_report(report, a.out);
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string image;
    std::vector<std::string> compare;
    bool cutoff = false;
    double noise_floor = 1e-3;
    std::vector<double> profile_seg;
    std::vector<double> contrast_seg;
    std::vector<double> fwhm_seg;
    std::string fwhm_mode_name = "peak";
    int n_samples = 256;
    double total_scale = 0.0; // unused placeholder for future flags
};

void metrics_for_image(const Image& img, const std::string& suffix, const MetricsArgs& a, Report& report) {
    if (a.cutoff) {
        const Spectrum spec = forward_fft(img);
        report.add("effective_cutoff_cyc_per_um" + suffix, effective_cutoff(spec, a.noise_floor));
    }
    if (!a.contrast_seg.empty()) {
        const Segment seg = parse_segment(a.contrast_seg, "--contrast");
        const ProfileMeasurement prof = profile(img, seg.from, seg.to, a.n_samples);
        report.add("contrast" + suffix, michelson_contrast(prof.values));
    }
    if (!a.fwhm_seg.empty()) {
        const Segment seg = parse_segment(a.fwhm_seg, "--fwhm");
        const ProfileMeasurement prof = profile(img, seg.from, seg.to, a.n_samples);
        const fwhm_mode mode = a.fwhm_mode_name == "edge" ? fwhm_mode::edge : fwhm_mode::peak;
        if (a.fwhm_mode_name != "edge" && a.fwhm_mode_name != "peak")
            fail(errc::bad_spec, "unknown fwhm mode '" + a.fwhm_mode_name + "'");
        report.add("fwhm_um" + suffix, fwhm(prof, mode));
    }
}

void run_metrics(const MetricsArgs& a) {
    if (!a.compare.empty() && a.compare.size() != 2)
        fail(errc::bad_spec, "--compare needs exactly two images");
    if (a.compare.empty() && a.image.empty())
        fail(errc::bad_spec, "metrics needs an image (positional) or --compare a b");
    if (!a.compare.empty() && !a.image.empty())
        fail(errc::bad_spec, "give either one positional image or --compare, not both");
    if (!a.cutoff && a.profile_seg.empty() && a.contrast_seg.empty() && a.fwhm_seg.empty())
        fail(errc::bad_spec, "no metric requested (use --cutoff, --profile, --contrast, or --fwhm)");
    if (!a.profile_seg.empty() && !a.compare.empty())
        fail(errc::bad_spec, "--profile tables are only available for a single image");
    if (a.n_samples < 2)
        fail(errc::bad_spec, "--n must be at least 2");

    Report report;
    report.add("command", std::string("metrics"));

    if (a.compare.empty()) {
        g_stage = run_stage::load_inputs;
        const Image img = load_raster(a.image);
        g_stage = run_stage::process;
        metrics_for_image(img, "", a, report);
        if (!a.profile_seg.empty()) {
            const Segment seg = parse_segment(a.profile_seg, "--profile");
            const ProfileMeasurement prof = profile(img, seg.from, seg.to, a.n_samples);
            for (std::size_t i = 0; i < prof.values.size(); ++i)
                report.add("profile_" + std::to_string(i), fmt(prof.positions_um[i]) + " " + fmt(prof.values[i]));
        }
    } else {
        g_stage = run_stage::load_inputs;
        const Image img_a = load_raster(a.compare[0]);
        const Image img_b = load_raster(a.compare[1]);
        g_stage = run_stage::process;
        metrics_for_image(img_a, "_a", a, report);
        metrics_for_image(img_b, "_b", a, report);
        // Ratios b/a for every numeric metric present on both sides.
        Report ratios;
        for (const auto& [key, value] : report.rows) {
            if (key.size() > 2 && key.substr(key.size() - 2) == "_a") {
                const std::string base = key.substr(0, key.size() - 2);
                for (const auto& [key2, value2] : report.rows)
                    if (key2 == base + "_b") {
                        const double va = std::stod(value);
                        const double vb = std::stod(value2);
                        if (va != 0.0)
                            ratios.add(base + "_ratio", vb / va);
                    }
            }
        }
        for (auto& row : ratios.rows)
            report.rows.push_back(std::move(row));
    }

    g_stage = run_stage::write_outputs;
    emit_report(report, "");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"structured-light dark-field microscopy: simulation, reconstruction, sectioning"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("generate-target", "render a synthetic sample");
    cmd_gen->add_option("kind", gen.kind, "target kind: bars, ring, or two-plane")->required();
    cmd_gen->add_option("--out", gen.out, "output sample directory")->required();
    cmd_gen->add_option("--width", gen.width);
    cmd_gen->add_option("--height", gen.height);
    cmd_gen->add_option("--pitch-um", gen.pitch_um);
    cmd_gen->add_option("--amplitude", gen.amplitude);
    cmd_gen->add_option("--margin-um", gen.margin_um);
    cmd_gen->add_option("--freqs", gen.freqs, "bar frequencies, cycles/um")->delimiter(',');
    cmd_gen->add_option("--bars", gen.bars);
    cmd_gen->add_option("--bar-length-um", gen.bar_length_um);
    cmd_gen->add_option("--group-gap-um", gen.group_gap_um);
    cmd_gen->add_option("--radius-um", gen.radius_um);
    cmd_gen->add_option("--thickness-um", gen.thickness_um);
    cmd_gen->add_option("--center-um", gen.center_um)->delimiter(',');
    cmd_gen->add_option("--in-radius-um", gen.in_radius_um);
    cmd_gen->add_option("--in-center-um", gen.in_center_um)->delimiter(',');
    cmd_gen->add_option("--in-amplitude", gen.in_amplitude);
    cmd_gen->add_option("--out-radius-um", gen.out_radius_um);
    cmd_gen->add_option("--out-center-um", gen.out_center_um)->delimiter(',');
    cmd_gen->add_option("--out-amplitude", gen.out_amplitude);
    cmd_gen->add_option("--defocus-um", gen.defocus_um);
    cmd_gen->add_option("--mask-dilation-um", gen.mask_dilation_um);
    cmd_gen->callback([&] { run_generate(gen); });

    SimulateArgs sim;
    CLI::App* cmd_sim = app.add_subcommand("simulate", "render a fringe-illuminated acquisition stack");
    cmd_sim->add_option("--sample", sim.sample, "sample directory")->required();
    cmd_sim->add_option("--out", sim.out, "output stack directory")->required();
    cmd_sim->add_option("--orientations", sim.orientations, "fringe orientations, degrees")->delimiter(',');
    cmd_sim->add_option("--phases", sim.phases, "fringe phases, degrees")->delimiter(',');
    cmd_sim->add_option("--freq-dmd", sim.freq_dmd, "projector grating frequency, cycles/mm")->required();
    cmd_sim->add_option("--magnification", sim.magnification, "projector-to-sample magnification");
    cmd_sim->add_option("--modulation", sim.modulation);
    cmd_sim->add_option("--mean-level", sim.mean_level);
    cmd_sim->add_option("--na-detection", sim.na_detection);
    cmd_sim->add_option("--na-ill-inner", sim.na_ill_inner);
    cmd_sim->add_option("--na-ill-outer", sim.na_ill_outer);
    cmd_sim->add_option("--wavelength-um", sim.wavelength_um);
    cmd_sim->add_option("--mode", sim.mode, "transmission or reflectance");
    cmd_sim->add_option("--read-noise", sim.read_noise);
    cmd_sim->add_option("--photon-scale", sim.photon_scale);
    cmd_sim->add_option("--seed", sim.seed);
    cmd_sim->callback([&] { run_simulate(sim); });

    ReconstructArgs rec;
    CLI::App* cmd_rec = app.add_subcommand("reconstruct", "resolution-enhanced reconstruction");
    cmd_rec->add_option("--stack", rec.stack, "input stack directory")->required();
    cmd_rec->add_option("--out", rec.out, "output directory")->required();
    cmd_rec->add_option("--wiener-w", rec.wiener_w);
    cmd_rec->add_option("--apodization", rec.apodization, "triangle, raised-cosine, or none");
    cmd_rec->add_option("--params", rec.params,
                        "manifest, estimate, or auto (manifest for simulated stacks, "
                        "estimate for ingested ones)");
    cmd_rec->add_option("--upsample", rec.upsample);
    cmd_rec->add_flag("--pgm", rec.pgm, "also export 16-bit PGM previews");
    cmd_rec->add_flag("--deconvolve-conventional", rec.deconvolve_conventional,
                      "also write a Wiener-deconvolved conventional image");
    cmd_rec->callback([&] { run_reconstruct(rec); });

    SectionArgs sec;
    CLI::App* cmd_sec = app.add_subcommand("section", "optical sectioning by square-law demodulation");
    cmd_sec->add_option("--stack", sec.stack, "input stack directory")->required();
    cmd_sec->add_option("--out", sec.out, "output directory")->required();
    cmd_sec->add_option("--combine", sec.combine, "single, mean, or max");
    cmd_sec->add_option("--orientation", sec.orientation, "orientation index for --combine single");
    cmd_sec->add_flag("--pgm", sec.pgm, "also export 16-bit PGM previews");
    cmd_sec->callback([&] { run_section(sec); });

    MetricsArgs met;
    CLI::App* cmd_met = app.add_subcommand("metrics", "image measurements as key = value lines");
    cmd_met->add_option("image", met.image, "raster image to measure");
    cmd_met->add_option("--compare", met.compare, "two images: metrics for both plus ratios")->expected(2);
    cmd_met->add_flag("--cutoff", met.cutoff, "effective spectral cutoff");
    cmd_met->add_option("--noise-floor", met.noise_floor);
    cmd_met->add_option("--profile", met.profile_seg, "x0,y0,x1,y1 (um): emit a profile table")->delimiter(',');
    cmd_met->add_option("--contrast", met.contrast_seg, "x0,y0,x1,y1 (um): Michelson contrast")->delimiter(',');
    cmd_met->add_option("--fwhm", met.fwhm_seg, "x0,y0,x1,y1 (um): FWHM along the segment")->delimiter(',');
    cmd_met->add_option("--fwhm-mode", met.fwhm_mode_name, "peak or edge");
    cmd_met->add_option("--n", met.n_samples, "profile sample count");
    cmd_met->callback([&] { run_metrics(met); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const error& e) {
        std::cerr << "error during " << stage_name(g_stage) << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error during " << stage_name(g_stage) << ": " << e.what() << "\n";
        return 4;
    }
    return 0;
}
