#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pfl/optics.hpp"
#include "pfl/trap.hpp"

// Synthetic camera frames of an ion scene: optical PSF, motion blur,
// magnification, pixel integration and detector noise.
namespace pfl::imaging {

struct ImagingSystem {
    double magnification = 0.0;
    double magnification_uncertainty = 0.0;
    optics::Psf psf;  // object- or image-plane referenced, see psf.plane()
    /// solid-angle fraction x first-order efficiency x transmission
    double collection_fraction = 0.0;

    void validate() const;
};

/// Detector model. Defaults other than geometry are assumptions, not measured values.
struct CcdModel {
    double pixel_pitch = 13e-6;  // m
    std::size_t width = 512;
    std::size_t height = 512;
    double quantum_efficiency = 0.35;
    double read_noise = 10.0;      // e- RMS
    double dark_rate = 0.0;        // e-/s per pixel
    double background_rate = 0.0;  // e-/s per pixel, stray light from other orders
    double gain = 1.0;             // e- per count
    std::int32_t saturation = 65535;
    double temperature_c = -30.0;  // descriptive

    void validate() const;
};

struct PixelRect {
    std::size_t x = 0;  // first column
    std::size_t y = 0;  // first row
    std::size_t width = 0;
    std::size_t height = 0;

    std::size_t size() const noexcept { return width * height; }
};

/// Integer camera frame, row-major. Pixel (col j, row i) is centred on (j, i).
struct CcdFrame {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::int32_t> counts;
    /// Expected counts before noise; empty for frames read from disk.
    std::vector<double> expected;
    double exposure = 0.0;
    std::uint64_t seed = 0;
    bool saturation_warning = false;
    std::string provenance;

    std::int32_t at(std::size_t col, std::size_t row) const { return counts[row * width + col]; }
    PixelRect full() const noexcept { return {0, 0, width, height}; }
};

struct RenderOptions {
    bool noise = true;
    unsigned threads = 1;
};

/// Optical PSF convolved with the per-axis Gaussian motion blur, then mapped to the
/// image plane by the magnification. Blur below half a sample pitch is treated as a delta.
optics::Psf effective_image_psf(const ImagingSystem& system, const trap::IonScene& scene);

/// Image-plane position (m) of object point (x, y), relative to the frame centre.
inline double image_coordinate(double object, double magnification) { return object * magnification; }

/// Renders a full CCD frame. The object-plane origin maps to the frame centre
/// ((width-1)/2, (height-1)/2); the z coordinate of the ions is ignored (in focus).
CcdFrame render_frame(const ImagingSystem& system, const trap::IonScene& scene,
                      const CcdModel& ccd, double exposure, double photon_rate, std::uint64_t seed,
                      const RenderOptions& options = {});

/// Pixel coordinate of an object-plane point in a rendered frame.
std::pair<double, double> pixel_position(const trap::Vec3& object, double magnification,
                                         const CcdModel& ccd);

trap::IonScene displace_scene(const trap::IonScene& scene, const trap::Vec3& delta);

void write_frame_csv(std::ostream& out, const CcdFrame& frame);
/// Reads rows of comma-separated integers. Throws parse errors naming line and column.
CcdFrame read_frame_csv(std::istream& in);
/// 16-bit grayscale PNG; counts above 65535 are clipped.
void write_frame_png(const std::string& path, const CcdFrame& frame);

}  // namespace pfl::imaging
