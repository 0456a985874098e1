#include "pfl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pfl/error.hpp"

namespace pfl::scenario {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
    throw Error(ErrorKind::schema, field + ": " + what);
}

enum class Sign { any, positive, non_negative };

// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Block {
public:
    Block(const json& parent, const std::string& key, const std::string& path)
        : path_(path.empty() ? key : path + "." + key) {
        const auto it = parent.find(key);
        if (it == parent.end()) schema_error(path_, "required block missing");
        if (!it->is_object()) schema_error(path_, "expected an object");
        obj_ = &*it;
    }

    bool has(const std::string& key) const { return obj_->contains(key); }

    double number(const std::string& key, Sign sign = Sign::positive) {
        const json& v = get(key);
        if (!v.is_number()) schema_error(field(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) schema_error(field(key), "must be finite");
        if (sign == Sign::positive && !(x > 0.0)) schema_error(field(key), "must be > 0");
        if (sign == Sign::non_negative && x < 0.0) schema_error(field(key), "must be >= 0");
        return x;
    }
    double number(const std::string& key, double fallback, Sign sign) {
        return has(key) ? number(key, sign) : fallback;
    }

    std::uint64_t integer(const std::string& key, std::uint64_t minimum = 0) {
        const json& v = get(key);
        if (!v.is_number_integer()) schema_error(field(key), "expected an integer");
        if (v.is_number_unsigned() ? false : v.get<std::int64_t>() < 0) {
            schema_error(field(key), "must be >= 0");
        }
        const auto x = v.get<std::uint64_t>();
        if (x < minimum) schema_error(field(key), "must be >= " + std::to_string(minimum));
        return x;
    }
    std::uint64_t integer(const std::string& key, std::uint64_t fallback, std::uint64_t minimum) {
        return has(key) ? integer(key, minimum) : fallback;
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = get(key);
        if (!v.is_boolean()) schema_error(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::set<std::string>& allowed,
                     const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = get(key);
        if (!v.is_string()) schema_error(field(key), "expected a string");
        auto s = v.get<std::string>();
        if (!allowed.count(s)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            schema_error(field(key), "must be one of " + list);
        }
        return s;
    }

    std::vector<double> numbers(const std::string& key, std::size_t exact_size = 0) {
        const json& v = get(key);
        if (!v.is_array()) schema_error(field(key), "expected an array of numbers");
        if (exact_size && v.size() != exact_size) {
            schema_error(field(key), "expected " + std::to_string(exact_size) + " entries");
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) schema_error(field(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    trap::Vec3 vec3(const std::string& key, Sign sign) {
        const auto v = numbers(key, 3);
        for (double x : v) {
            if (sign == Sign::non_negative && x < 0.0) schema_error(field(key), "entries must be >= 0");
        }
        return {v[0], v[1], v[2]};
    }

    // Every key must have been consumed.
    void finish() const {
        for (const auto& [key, value] : obj_->items()) {
            if (!seen_.count(key)) schema_error(field(key), "unknown key");
        }
    }

    const std::string& path() const { return path_; }
    std::string field(const std::string& key) const { return path_ + "." + key; }

private:
    const json& get(const std::string& key) {
        const auto it = obj_->find(key);
        if (it == obj_->end()) schema_error(field(key), "required field missing");
        seen_.insert(key);
        return *it;
    }

    std::string path_;
    const json* obj_ = nullptr;
    std::set<std::string> seen_;
};

void read_lens(Block b, LensBlock& lens) {
    lens.design_wavelength = b.number("wavelength_m");
    lens.focal_length = b.number("focal_length_m");
    lens.aperture_diameter = b.number("aperture_diameter_m");
    if (b.has("substrate_index")) lens.substrate_index = b.number("substrate_index");
    lens.parity = b.text("parity", {"center_clear", "center_etched"}, "center_clear") == "center_etched"
                      ? design::ZoneParity::center_etched
                      : design::ZoneParity::center_clear;
    lens.grid_snap = b.number("grid_snap_m", 0.0, Sign::non_negative);
    lens.samples_per_zone = b.integer("samples_per_zone", 4, 4);
    b.finish();
}

void read_trap(Block b, TrapBlock& t) {
    t.ion_mass_u = b.number("ion_mass_u");
    t.axial_frequency = b.number("axial_frequency_hz");
    t.axial_frequency_uncertainty = b.number("axial_frequency_uncertainty_hz", 0.0, Sign::non_negative);
    t.radial_frequency = b.number("radial_frequency_hz");
    if (b.has("temperature_k")) t.temperature = b.number("temperature_k", Sign::non_negative);
    t.natural_linewidth = b.number("natural_linewidth_hz", t.natural_linewidth, Sign::positive);
    t.drive_voltage = b.number("drive_voltage_v", 0.0, Sign::non_negative);
    t.drive_frequency = b.number("drive_frequency_hz");
    b.finish();
}

void read_scene(Block b, SceneBlock& s) {
    s.n_ions = b.integer("n_ions", 1);
    if (b.has("positions_m")) {
        s.positions = b.numbers("positions_m");
        if (s.positions->size() != s.n_ions) {
            schema_error(b.field("positions_m"), "length must equal n_ions");
        }
    }
    if (b.has("motion_rms_m")) s.motion_rms = b.vec3("motion_rms_m", Sign::non_negative);
    if (b.has("displacement_m")) s.displacement = b.vec3("displacement_m", Sign::any);
    b.finish();
}

void read_imaging(Block b, ImagingBlock& im) {
    im.magnification = b.number("magnification");
    im.magnification_uncertainty = b.number("magnification_uncertainty", 0.0, Sign::non_negative);
    im.transmission = b.number("transmission", 1.0, Sign::positive);
    if (im.transmission > 1.0) schema_error(b.field("transmission"), "must be <= 1");
    im.psf_r_max = b.number("psf_r_max_m", im.psf_r_max, Sign::positive);
    im.psf_samples = b.integer("psf_samples", im.psf_samples, 3);
    im.ideal_pupil = b.text("pupil", {"binary", "ideal"}, "binary") == "ideal";
    b.finish();
}

void read_ccd(Block b, imaging::CcdModel& c) {
    c.pixel_pitch = b.number("pixel_pitch_m", c.pixel_pitch, Sign::positive);
    c.width = b.integer("width_px", c.width, 1);
    c.height = b.integer("height_px", c.height, 1);
    c.quantum_efficiency = b.number("quantum_efficiency", c.quantum_efficiency, Sign::positive);
    if (c.quantum_efficiency > 1.0) schema_error(b.field("quantum_efficiency"), "must be <= 1");
    c.read_noise = b.number("read_noise_e", c.read_noise, Sign::non_negative);
    c.dark_rate = b.number("dark_rate_e_per_s", c.dark_rate, Sign::non_negative);
    c.background_rate = b.number("background_rate_e_per_s", c.background_rate, Sign::non_negative);
    c.gain = b.number("gain_e_per_count", c.gain, Sign::positive);
    const auto sat = b.integer("saturation_counts", static_cast<std::uint64_t>(c.saturation), 1);
    if (sat > 2147483647ULL) schema_error(b.field("saturation_counts"), "must fit in 31 bits");
    c.saturation = static_cast<std::int32_t>(sat);
    c.temperature_c = b.number("temperature_c", c.temperature_c, Sign::any);
    b.finish();
}

void read_render(Block b, RenderBlock& r) {
    r.exposure = b.number("exposure_s");
    r.photon_rate = b.number("photon_rate_per_s", Sign::non_negative);
    r.noise = b.boolean("noise", true);
    b.finish();
}

void read_analysis(Block b, AnalysisBlock& a) {
    auto& d = a.detection;
    d.smoothing_sigma = b.number("smoothing_sigma_px", d.smoothing_sigma, Sign::positive);
    d.min_separation = b.integer("min_separation_px", d.min_separation, 1);
    d.relative_threshold = b.number("relative_threshold", d.relative_threshold, Sign::positive);
    d.noise_threshold = b.number("noise_threshold", d.noise_threshold, Sign::non_negative);
    a.shared_sigma = b.boolean("shared_sigma", a.shared_sigma);
    a.fit.max_iterations = b.integer("max_iterations", a.fit.max_iterations, 1);
    a.fit.step_tolerance = b.number("step_tolerance", a.fit.step_tolerance, Sign::positive);
    a.knife_edge_range = b.number("knife_edge_range_m", a.knife_edge_range, Sign::positive);
    a.knife_edge_samples = b.integer("knife_edge_samples", a.knife_edge_samples, 2);
    b.finish();
}

}  // namespace

Scenario parse(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) schema_error("scenario", "top level must be an object");

    Scenario s;
    const auto version = doc.find("schema_version");
    if (version == doc.end()) schema_error("schema_version", "required field missing");
    if (!version->is_string()) schema_error("schema_version", "expected a string");
    s.schema_version = version->get<std::string>();
    const std::string ours = schema_version;
    const auto major = [](const std::string& v) { return v.substr(0, v.find('.')); };
    if (major(s.schema_version) != major(ours)) {
        schema_error("schema_version", "major version " + major(s.schema_version) +
                                           " is not supported (expected " + ours + ")");
    }

    static const std::set<std::string> top = {"schema_version", "description", "seed", "lens", "trap",
                                              "scene", "imaging", "ccd", "render", "analysis"};
    for (const auto& [key, value] : doc.items()) {
        if (!top.count(key)) schema_error(key, "unknown key");
    }
    if (doc.contains("description") && !doc["description"].is_string()) {
        schema_error("description", "expected a string");
    }
    const auto seed = doc.find("seed");
    if (seed == doc.end()) schema_error("seed", "required field missing");
    if (!seed->is_number_unsigned()) schema_error("seed", "expected a non-negative integer");
    s.seed = seed->get<std::uint64_t>();

    read_lens(Block(doc, "lens", ""), s.lens);
    read_trap(Block(doc, "trap", ""), s.trap);
    read_scene(Block(doc, "scene", ""), s.scene);
    read_imaging(Block(doc, "imaging", ""), s.imaging);
    read_ccd(Block(doc, "ccd", ""), s.ccd);
    read_render(Block(doc, "render", ""), s.render);
    if (doc.contains("analysis")) read_analysis(Block(doc, "analysis", ""), s.analysis);

    s.hash = fnv1a(doc.dump());
    return s;
}

Scenario load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open scenario " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

design::ZonePlateSpec make_zoneplate(const Scenario& s) {
    design::DesignOptions opt;
    opt.parity = s.lens.parity;
    opt.grid_snap = s.lens.grid_snap;
    const double index = s.lens.substrate_index ? *s.lens.substrate_index
                                                : design::fused_silica_index(s.lens.design_wavelength);
    return design::design_zoneplate(s.lens.design_wavelength, s.lens.focal_length,
                                    s.lens.aperture_diameter, index, opt);
}

trap::TrapParams make_trap(const Scenario& s) {
    trap::TrapParams p;
    p.ion_mass = trap::atomic_mass_to_kg(s.trap.ion_mass_u);
    p.axial_frequency = s.trap.axial_frequency;
    p.axial_frequency_uncertainty = s.trap.axial_frequency_uncertainty;
    p.radial_frequency = s.trap.radial_frequency;
    p.temperature = s.trap.temperature
                        ? *s.trap.temperature
                        : trap::doppler_temperature(2.0 * M_PI * s.trap.natural_linewidth);
    p.drive_voltage = s.trap.drive_voltage;
    p.drive_angular_frequency = 2.0 * M_PI * s.trap.drive_frequency;
    p.validate();
    return p;
}

trap::IonScene make_scene(const Scenario& s) {
    const auto params = make_trap(s);
    trap::Vec3 motion;
    if (s.scene.motion_rms) {
        motion = *s.scene.motion_rms;
    } else {
        // x lies along the weak (needle) axis, y and z feel the radial confinement.
        motion = {trap::thermal_rms(params.temperature, params.ion_mass, params.axial_frequency),
                  trap::thermal_rms(params.temperature, params.ion_mass, params.radial_frequency),
                  trap::thermal_rms(params.temperature, params.ion_mass, params.radial_frequency)};
    }
    trap::IonScene scene;
    if (s.scene.positions) {
        for (double x : *s.scene.positions) scene.positions.push_back({x, 0.0, 0.0});
        scene.motion_rms = motion;
        scene.emission_wavelength = s.lens.design_wavelength;
    } else {
        scene = trap::linear_crystal(s.scene.n_ions, params, motion, s.lens.design_wavelength);
    }
    scene = imaging::displace_scene(scene, s.scene.displacement);
    scene.validate();
    return scene;
}

optics::RadialPupil make_pupil(const Scenario& s, const design::ZonePlateSpec& spec) {
    if (s.imaging.ideal_pupil) {
        return optics::ideal_pupil(spec.design_wavelength, spec.focal_length, spec.aperture_radius());
    }
    return optics::pupil_from_zoneplate(spec, s.lens.samples_per_zone);
}

imaging::ImagingSystem make_imaging_system(const Scenario& s, unsigned threads) {
    const auto spec = make_zoneplate(s);
    const auto pupil = make_pupil(s, spec);
    const auto geometry = design::lens_geometry(spec.focal_length, spec.aperture_diameter);
    const double efficiency = s.imaging.ideal_pupil ? 1.0 : optics::binary_grating_efficiency(1);

    imaging::ImagingSystem system{
        s.imaging.magnification, s.imaging.magnification_uncertainty,
        optics::focal_field_radial(pupil, spec.focal_length, s.imaging.psf_r_max,
                                   s.imaging.psf_samples, threads),
        geometry.solid_angle_fraction * efficiency * s.imaging.transmission};
    system.validate();
    return system;
}

}  // namespace pfl::scenario
