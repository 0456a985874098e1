#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pfl/analysis.hpp"
#include "pfl/design.hpp"
#include "pfl/imaging.hpp"
#include "pfl/optics.hpp"
#include "pfl/trap.hpp"

// Scenario files: schema-checked JSON describing one end-to-end imaging setup.
namespace pfl::scenario {

inline constexpr const char* schema_version = "1.0";

struct LensBlock {
    double design_wavelength = 0.0;  // m
    double focal_length = 0.0;       // m
    double aperture_diameter = 0.0;  // m
    std::optional<double> substrate_index;  // default: fused-silica Sellmeier
    design::ZoneParity parity = design::ZoneParity::center_clear;
    double grid_snap = 0.0;  // m, 0 = none
    std::size_t samples_per_zone = 4;
};

struct TrapBlock {
    double ion_mass_u = 0.0;
    double axial_frequency = 0.0;  // Hz
    double axial_frequency_uncertainty = 0.0;
    double radial_frequency = 0.0;
    std::optional<double> temperature;  // K, default: Doppler limit
    double natural_linewidth = 19.6e6;  // Hz (Gamma / 2 pi), external atomic data
    double drive_voltage = 0.0;
    double drive_frequency = 0.0;  // Hz
};

struct SceneBlock {
    std::size_t n_ions = 1;
    /// Explicit object-plane ion x positions; overrides the equilibrium crystal.
    std::optional<std::vector<double>> positions;
    std::optional<trap::Vec3> motion_rms;  // default: thermal motion at the trap temperature
    trap::Vec3 displacement{0.0, 0.0, 0.0};
};

struct ImagingBlock {
    double magnification = 0.0;
    double magnification_uncertainty = 0.0;
    double transmission = 1.0;
    double psf_r_max = 2e-6;  // m, object plane
    std::size_t psf_samples = 401;
    bool ideal_pupil = false;
};

struct RenderBlock {
    double exposure = 1.0;     // s
    double photon_rate = 0.0;  // photons/s scattered per ion into 4 pi
    bool noise = true;
};

struct AnalysisBlock {
    analysis::DetectionOptions detection;
    bool shared_sigma = true;
    analysis::FitOptions fit;
    double knife_edge_range = 1e-6;  // m, scan spans [-range, range]
    std::size_t knife_edge_samples = 201;
};

struct Scenario {
    std::string schema_version;
    std::uint64_t seed = 0;
    LensBlock lens;
    TrapBlock trap;
    SceneBlock scene;
    ImagingBlock imaging;
    imaging::CcdModel ccd;
    RenderBlock render;
    AnalysisBlock analysis;
    /// FNV-1a of the canonical (sorted-key) JSON text of the input document.
    std::uint64_t hash = 0;
};

/// Parses and validates a scenario document. Throws schema errors naming the field
/// ("trap.axial_frequency_hz: ...") and parse errors for malformed JSON.
Scenario parse(const std::string& text);
Scenario load(const std::filesystem::path& path);

design::ZonePlateSpec make_zoneplate(const Scenario& s);
trap::TrapParams make_trap(const Scenario& s);
/// Ion positions from the equilibrium crystal (or scene.positions), shifted by displacement.
trap::IonScene make_scene(const Scenario& s);
optics::RadialPupil make_pupil(const Scenario& s, const design::ZonePlateSpec& spec);
/// Focal PSF (object plane) plus collection fraction for the scenario's lens.
imaging::ImagingSystem make_imaging_system(const Scenario& s, unsigned threads = 1);

}  // namespace pfl::scenario
