#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "pfl/design.hpp"

// Scalar diffraction: pupils, point-spread functions and the two propagation
// engines (1-D radial diffraction integral, 2-D angular spectrum).
namespace pfl::optics {

using Complex = std::complex<double>;

enum class Axis { x, y };

/// Circularly symmetric pupil made of annular cells with constant complex
/// transmission. Cell i spans [edges[i], edges[i+1]).
struct RadialPupil {
    std::vector<double> edges;  // m, edges.front() == 0
    std::vector<Complex> transmission;
    double wavelength = 0.0;  // m
    /// Focal length of an analytic thin-lens phase exp(-ik(sqrt(r^2+f^2) - f))
    /// applied on top of the cells; 0 means none.
    double lens_focal_length = 0.0;

    std::size_t cell_count() const noexcept { return transmission.size(); }
    double aperture_radius() const noexcept { return edges.empty() ? 0.0 : edges.back(); }

    /// Checks the type invariants; throws invalid_parameter.
    void validate() const;
};

/// Binary 0/pi pupil with `samples_per_zone` cells per zone. Cell edges fall on the
/// zone boundaries and split each zone into equal optical-path steps.
RadialPupil pupil_from_zoneplate(const design::ZonePlateSpec& spec, std::size_t samples_per_zone);

/// Aberration-free reference lens: unit amplitude inside `aperture_radius`,
/// perfect converging phase to `focal_length`.
RadialPupil ideal_pupil(double wavelength, double focal_length, double aperture_radius,
                        std::size_t cells = 256);

/// Square N x N complex field. Sample (row i, col j) sits at
/// x = (j - N/2) pitch, y = (i - N/2) pitch, so the optical axis is a sample.
struct ScalarField {
    std::size_t n = 0;
    double pitch = 0.0;       // m
    double wavelength = 0.0;  // m
    std::vector<Complex> samples;

    ScalarField() = default;
    ScalarField(std::size_t n, double pitch, double wavelength);

    Complex& at(std::size_t row, std::size_t col) { return samples[row * n + col]; }
    const Complex& at(std::size_t row, std::size_t col) const { return samples[row * n + col]; }
    double coordinate(std::size_t index) const noexcept {
        return (static_cast<double>(index) - static_cast<double>(n / 2)) * pitch;
    }
    /// sum |u|^2 pitch^2
    double power() const;
};

enum class PsfGeometry { radial, cartesian };
enum class ReferencePlane { object, image };

/// Normalized intensity distribution. Radial samples sit at r_i = i pitch;
/// Cartesian samples follow the ScalarField layout with side length size().
class Psf {
public:
    /// Normalizes so the integral of the piecewise-linear profile over the disk is 1.
    static Psf radial(std::vector<double> intensity, double pitch,
                      ReferencePlane plane = ReferencePlane::object);
    /// Normalizes so sum * pitch^2 = 1.
    static Psf cartesian(std::vector<double> intensity, std::size_t side, double pitch,
                         ReferencePlane plane = ReferencePlane::object);

    PsfGeometry geometry() const noexcept { return geometry_; }
    ReferencePlane plane() const noexcept { return plane_; }
    double pitch() const noexcept { return pitch_; }
    std::size_t size() const noexcept { return size_; }
    std::span<const double> intensity() const noexcept { return intensity_; }

    /// Largest |x| or r covered by the samples.
    double extent() const noexcept;
    /// Interpolated intensity at (x, y); zero outside the sampled support.
    double value(double x, double y) const noexcept;
    double integral() const;
    /// Same samples, lengths multiplied by `factor` (intensity rescaled to stay normalized).
    Psf scaled(double factor, ReferencePlane plane) const;

private:
    Psf() = default;

    PsfGeometry geometry_ = PsfGeometry::radial;
    ReferencePlane plane_ = ReferencePlane::object;
    double pitch_ = 0.0;
    std::size_t size_ = 0;
    std::vector<double> intensity_;
};

/// Complex focal amplitude on r_i = i r_max / (n_r - 1) for a unit plane wave
/// through `pupil`, propagated a distance z. Uses the zero-order Hankel form of the
/// Rayleigh-Sommerfeld integral, integrated cell by cell with adaptive Gauss-Legendre.
std::vector<Complex> focal_amplitude_radial(const RadialPupil& pupil, double z, double r_max,
                                            std::size_t n_r, unsigned threads = 1);

/// Normalized radial intensity from focal_amplitude_radial.
Psf focal_field_radial(const RadialPupil& pupil, double z, double r_max, std::size_t n_r,
                       unsigned threads = 1);

/// Band-limited angular-spectrum propagation over z (negative z back-propagates).
/// Evanescent components are dropped.
ScalarField angular_spectrum_propagate(const ScalarField& field, double z);

/// Anti-aliased circular aperture with an ideal converging-lens phase.
ScalarField ideal_lens_field(double wavelength, double focal_length, double aperture_radius,
                             std::size_t n, double pitch);

struct KnifeEdgeSample {
    double position = 0.0;     // m
    double transmitted = 0.0;  // fraction of total power beyond the edge
};

/// Fraction of the PSF power in the half plane {axis > position} for each position.
std::vector<KnifeEdgeSample> knife_edge_scan(const Psf& psf, Axis axis,
                                             std::span<const double> positions);

/// Power fraction in diffraction order m of an ideal 50/50 binary pi grating.
double binary_grating_efficiency(int order) noexcept;

/// Full width at half maximum. Radial: twice the first half-max radius.
/// Cartesian: width of the cut through the peak along `axis`.
double fwhm(const Psf& psf, Axis axis = Axis::x);

/// Scalar Airy-disk FWHM, 0.5145 lambda / NA.
double airy_fwhm(double wavelength, double numerical_aperture);

struct EngineComparison {
    double rms_difference = 0.0;  // peak-normalized intensities
    double max_difference = 0.0;
    std::size_t samples = 0;
    double radial_fwhm = 0.0;
    double cartesian_fwhm = 0.0;
};

struct EngineComparisonConfig {
    double wavelength = 369.5e-9;
    double focal_length = 100e-6;
    double aperture_radius = 20e-6;
    std::size_t grid = 1024;
    double pitch = 0.1e-6;
    double compare_radius = 3e-6;
};

/// Focuses an ideal lens with both engines and compares the focal-plane intensity
/// along the x and y axes.
EngineComparison compare_focal_engines(const EngineComparisonConfig& config);

void write_psf_csv(std::ostream& out, const Psf& psf);
void write_knife_edge_csv(std::ostream& out, std::span<const KnifeEdgeSample> scan);

}  // namespace pfl::optics
