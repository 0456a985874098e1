#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "pfl/analysis.hpp"
#include "pfl/cli.hpp"
#include "pfl/error.hpp"
#include "pfl/report.hpp"
#include "pfl/scenario.hpp"

namespace pfl::cli {

namespace fs = std::filesystem;
using report::Json;

namespace {

struct Options {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string frame;
    bool cross_check = false;
    std::optional<std::size_t> ions;
};

// Written files are staged next to their target and renamed into place.
class Outputs {
public:
    explicit Outputs(const fs::path& dir) : dir_(dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    void text(const std::string& name, const std::string& content) {
        stage(name, [&](const fs::path& tmp) {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            f << content;
            f.close();
            if (!f) throw Error(ErrorKind::io, "cannot write " + tmp.string());
        });
    }

    void stream(const std::string& name, const std::function<void(std::ostream&)>& writer) {
        std::ostringstream s;
        writer(s);
        text(name, s.str());
    }

    void file(const std::string& name, const std::function<void(const std::string&)>& writer) {
        stage(name, [&](const fs::path& tmp) { writer(tmp.string()); });
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    void stage(const std::string& name, const std::function<void(const fs::path&)>& write) {
        const fs::path target = dir_ / name;
        const fs::path tmp = dir_ / ("." + name + ".tmp" + std::to_string(::getpid()));
        try {
            write(tmp);
            fs::rename(tmp, target);
        } catch (...) {
            std::error_code ignore;
            fs::remove(tmp, ignore);
            throw;
        }
        written_.push_back(target.string());
    }

    fs::path dir_;
    std::vector<std::string> written_;
};

scenario::Scenario load_scenario(const Options& o) {
    auto s = scenario::load(o.scenario);
    if (o.seed) s.seed = *o.seed;
    return s;
}

Json provenance(const scenario::Scenario& s) {
    Json j;
    j["tool_version"] = tool_version;
    j["schema_version"] = s.schema_version;
    j["scenario_hash"] = report::hex64(s.hash);
    j["seed"] = s.seed;
    return j;
}

imaging::CcdFrame read_frame(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open frame " + path);
    try {
        return imaging::read_frame_csv(in);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

void cmd_design(const Options& o, Outputs& files) {
    const auto s = load_scenario(o);
    const auto spec = scenario::make_zoneplate(s);
    files.stream("mask.csv", [&](std::ostream& f) { design::write_mask_csv(f, spec); });
    files.text("lens.json", report::dump(report::zoneplate(spec)));
    Json g = report::geometry(spec);
    g["provenance"] = provenance(s);
    files.text("geometry.json", report::dump(g));
}

void cmd_psf(const Options& o, Outputs& files) {
    const auto s = load_scenario(o);
    const auto spec = scenario::make_zoneplate(s);
    const double r_max = s.imaging.psf_r_max;
    const std::size_t n_r = s.imaging.psf_samples;
    const double pitch = r_max / static_cast<double>(n_r - 1);

    auto intensity = [](const std::vector<optics::Complex>& a) {
        std::vector<double> v(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) v[i] = std::norm(a[i]);
        return v;
    };
    const auto lens = optics::focal_amplitude_radial(scenario::make_pupil(s, spec), spec.focal_length,
                                                     r_max, n_r, o.threads);
    const auto ideal = optics::focal_amplitude_radial(
        optics::ideal_pupil(spec.design_wavelength, spec.focal_length, spec.aperture_radius()),
        spec.focal_length, r_max, n_r, o.threads);
    const auto psf = optics::Psf::radial(intensity(lens), pitch);
    const auto ideal_psf = optics::Psf::radial(intensity(ideal), pitch);

    std::vector<double> positions(s.analysis.knife_edge_samples);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = -s.analysis.knife_edge_range +
                       2.0 * s.analysis.knife_edge_range * static_cast<double>(i) /
                           static_cast<double>(positions.size() - 1);
    }
    const auto scan = optics::knife_edge_scan(psf, optics::Axis::x, positions);

    const double na = design::numerical_aperture(spec.focal_length, spec.aperture_diameter);
    Json summary;
    summary["pupil"] = s.imaging.ideal_pupil ? "ideal" : "binary";
    summary["fwhm_m"] = optics::fwhm(psf);
    summary["ideal_fwhm_m"] = optics::fwhm(ideal_psf);
    summary["airy_fwhm_m"] = optics::airy_fwhm(spec.design_wavelength, na);
    summary["fwhm_over_airy"] = optics::fwhm(psf) / optics::airy_fwhm(spec.design_wavelength, na);
    summary["fwhm_over_ideal"] = optics::fwhm(psf) / optics::fwhm(ideal_psf);
    summary["peak_intensity_over_ideal"] = std::norm(lens.front()) / std::norm(ideal.front());
    summary["numerical_aperture"] = na;
    summary["plane"] = "object (focal plane of the lens)";
    summary["sample_pitch_m"] = pitch;
    summary["normalization"] = "2 pi * integral of I(r) r dr = 1 over the piecewise-linear profile";
    summary["provenance"] = provenance(s);

    files.stream("psf.csv", [&](std::ostream& f) { optics::write_psf_csv(f, psf); });
    files.stream("psf_ideal.csv", [&](std::ostream& f) { optics::write_psf_csv(f, ideal_psf); });
    files.stream("knife_edge.csv", [&](std::ostream& f) { optics::write_knife_edge_csv(f, scan); });

    if (o.cross_check) {
        optics::EngineComparisonConfig cfg;
        cfg.wavelength = spec.design_wavelength;
        const auto cmp = optics::compare_focal_engines(cfg);
        Json c;
        c["wavelength_m"] = cfg.wavelength;
        c["focal_length_m"] = cfg.focal_length;
        c["aperture_radius_m"] = cfg.aperture_radius;
        c["grid"] = cfg.grid;
        c["pitch_m"] = cfg.pitch;
        c["compare_radius_m"] = cfg.compare_radius;
        c["samples"] = cmp.samples;
        c["rms_difference"] = cmp.rms_difference;
        c["max_difference"] = cmp.max_difference;
        c["radial_fwhm_m"] = cmp.radial_fwhm;
        c["cartesian_fwhm_m"] = cmp.cartesian_fwhm;
        c["normalization"] = "intensities scaled to unit peak before differencing";
        summary["engine_cross_check"] = c;
    }
    files.text("psf_summary.json", report::dump(summary));
}

void cmd_simulate(const Options& o, Outputs& files) {
    auto s = load_scenario(o);
    if (o.ions) {
        if (*o.ions == 0) throw Error(ErrorKind::invalid_input, "--ions must be >= 1");
        s.scene.n_ions = *o.ions;
        s.scene.positions.reset();
    }
    const auto system = scenario::make_imaging_system(s, o.threads);
    const auto scene = scenario::make_scene(s);
    imaging::RenderOptions ro;
    ro.noise = s.render.noise;
    ro.threads = o.threads;
    const auto frame = imaging::render_frame(system, scene, s.ccd, s.render.exposure,
                                             s.render.photon_rate, s.seed, ro);

    Json meta = provenance(s);
    meta["exposure_s"] = frame.exposure;
    meta["photon_rate_per_s"] = s.render.photon_rate;
    meta["noise"] = s.render.noise;
    meta["width_px"] = frame.width;
    meta["height_px"] = frame.height;
    meta["magnification"] = system.magnification;
    meta["collection_fraction"] = system.collection_fraction;
    meta["saturation_warning"] = frame.saturation_warning;
    Json ions = Json::array();
    for (const auto& p : scene.positions) {
        const auto [px, py] = imaging::pixel_position(p, system.magnification, s.ccd);
        ions.push_back({{"object_m", {p[0], p[1], p[2]}}, {"pixel", {px, py}}});
    }
    meta["ions"] = ions;
    meta["motion_rms_m"] = {scene.motion_rms[0], scene.motion_rms[1], scene.motion_rms[2]};

    files.file("frame.png", [&](const std::string& path) { imaging::write_frame_png(path, frame); });
    files.stream("frame.csv", [&](std::ostream& f) { imaging::write_frame_csv(f, frame); });
    files.text("frame.json", report::dump(meta));
}

void cmd_fit(const Options& o, Outputs& files, bool& converged) {
    const auto s = load_scenario(o);
    const auto frame = read_frame(o.frame);
    const auto fit = analysis::fit_single_spot(frame, s.analysis.detection, s.analysis.fit);
    converged = fit.converged;
    Json j = report::fit(fit, converged ? analysis::object_plane_fwhm(fit, s.imaging.magnification,
                                                                      s.ccd.pixel_pitch,
                                                                      s.imaging.magnification_uncertainty)
                                        : analysis::ObjectPlaneFwhm{});
    j["magnification"] = s.imaging.magnification;
    j["pixel_pitch_m"] = s.ccd.pixel_pitch;
    j["frame"] = fs::path(o.frame).filename().string();
    j["provenance"] = provenance(s);
    files.text("fit.json", report::dump(j));
}

void cmd_calibrate(const Options& o, Outputs& files, bool& converged) {
    const auto s = load_scenario(o);
    const auto frame = read_frame(o.frame);
    analysis::CalibrationOptions opt;
    opt.detection = s.analysis.detection;
    opt.shared_sigma = s.analysis.shared_sigma;
    opt.fit = s.analysis.fit;
    const auto cal = analysis::calibrate_magnification(frame, scenario::make_trap(s), s.ccd, opt);
    converged = cal.converged;
    Json j = report::calibration(cal);
    j["pixel_pitch_m"] = s.ccd.pixel_pitch;
    j["frame"] = fs::path(o.frame).filename().string();
    j["provenance"] = provenance(s);
    files.text("calibration.json", report::dump(j));
}

std::string error_json(const std::string& kind, const std::string& message, int code) {
    Json j;
    j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    return j.dump();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Imaging of trapped ions through a binary phase Fresnel lens", "pflsim"};
    app.set_version_flag("--version", std::string("pflsim ") + tool_version + " (scenario schema " +
                                          scenario::schema_version + ")");
    app.require_subcommand(1);

    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output directory")->required();
        sub->add_option("--seed", o.seed, "Override the scenario seed");
        sub->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
            ->check(CLI::Range(1u, 1024u));
    };
    auto* design = app.add_subcommand("design", "Zone layout, mask CSV and lens geometry report");
    auto* psf = app.add_subcommand("psf", "Focal PSF, FWHM summary and knife-edge scan");
    auto* simulate = app.add_subcommand("simulate", "Render a synthetic CCD frame");
    auto* fit = app.add_subcommand("fit", "Gaussian fit of the brightest spot in a frame");
    auto* calibrate = app.add_subcommand("calibrate", "Magnification from a two-ion frame");
    for (auto* sub : {design, psf, simulate, fit, calibrate}) common(sub);
    psf->add_flag("--cross-check", o.cross_check, "Also compare the radial and 2-D engines");
    simulate->add_option("--ions", o.ions, "Override scene.n_ions");
    for (auto* sub : {fit, calibrate}) {
        sub->add_option("--frame", o.frame, "Frame CSV")->required()->check(CLI::ExistingFile);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what(), validation_error) << '\n';
        return validation_error;
    }

    try {
        Outputs files(o.out);
        bool converged = true;
        std::string name;
        if (*design) {
            name = "design";
            cmd_design(o, files);
        } else if (*psf) {
            name = "psf";
            cmd_psf(o, files);
        } else if (*simulate) {
            name = "simulate";
            cmd_simulate(o, files);
        } else if (*fit) {
            name = "fit";
            cmd_fit(o, files, converged);
        } else {
            name = "calibrate";
            cmd_calibrate(o, files, converged);
        }
        if (!converged) {
            err << error_json("convergence", name + ": fit did not converge (report written)",
                              non_convergence)
                << '\n';
            return non_convergence;
        }
        Json summary;
        summary["command"] = name;
        summary["outputs"] = files.written();
        out << summary.dump() << '\n';
        return success;
    } catch (const Error& e) {
        const int code = e.kind() == ErrorKind::convergence ? non_convergence : validation_error;
        err << error_json(to_string(e.kind()), e.what(), code) << '\n';
        return code;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what(), internal_error) << '\n';
        return internal_error;
    }
}

}  // namespace pfl::cli
