#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

// Binary phase Fresnel lens layout: zone radii, etch depth and the
// collection geometry implied by focal length and clear aperture.
namespace pfl::design {

/// Which zones carry the pi phase step. Zones are numbered from 1 at the centre.
enum class ZoneParity {
    center_clear,   ///< zone 1 unetched, even-numbered zones etched
    center_etched,  ///< zone 1 etched, odd-numbered zones etched
};

struct ZonePlateSpec {
    double design_wavelength = 0.0;  // m
    double focal_length = 0.0;       // m
    double aperture_diameter = 0.0;  // m
    /// Outer radius r_n of zone n, n = 1..N (m). Only radii inside the aperture.
    std::vector<double> zone_boundaries;
    double etch_depth = 0.0;  // m
    double substrate_index = 0.0;
    ZoneParity parity = ZoneParity::center_clear;
    double grid_snap = 0.0;  // m, 0 = unquantized

    double aperture_radius() const noexcept { return 0.5 * aperture_diameter; }
    std::size_t zone_count() const noexcept { return zone_boundaries.size(); }

    /// Phase (0 or pi) of zone n (1-based). Zone N+1 is the partial ring up to the aperture edge.
    double zone_phase(std::size_t n) const noexcept;
};

struct LensGeometry {
    double numerical_aperture = 0.0;
    double f_number = 0.0;
    double solid_angle_fraction = 0.0;
    /// d/2f, the small-angle value that overstates the aperture.
    double paraxial_numerical_aperture = 0.0;
};

struct DesignOptions {
    ZoneParity parity = ZoneParity::center_clear;
    /// Round each boundary to a multiple of this pitch (m); 0 disables.
    double grid_snap = 0.0;
};

/// Fused-silica refractive index from the three-term Sellmeier dispersion model
/// (Malitson coefficients). Valid roughly 0.21-3.7 um.
double fused_silica_index(double wavelength);

/// r_n = sqrt(n lambda f + n^2 lambda^2 / 4): the radius where the path to focus
/// exceeds f by n half waves.
double zone_radius(std::size_t n, double wavelength, double focal_length);

/// Number of full zones whose outer radius fits inside `aperture_radius`.
std::size_t zone_count_within(double aperture_radius, double wavelength, double focal_length);

ZonePlateSpec design_zoneplate(double wavelength, double focal_length, double aperture_diameter,
                               double substrate_index, const DesignOptions& options = {});

/// Same, with the substrate index taken from the fused-silica dispersion model.
ZonePlateSpec design_zoneplate(double wavelength, double focal_length, double aperture_diameter,
                               const DesignOptions& options = {});

/// sin(arctan(d / 2f)).
double numerical_aperture(double focal_length, double aperture_diameter);

/// Fraction of the full 4 pi sphere inside the collection cone: (1 - cos theta) / 2.
double solid_angle_fraction(double numerical_aperture);

/// Depth giving a pi phase step in transmission: lambda / (2 (n - 1)).
double pi_etch_depth(double wavelength, double substrate_index);

LensGeometry lens_geometry(double focal_length, double aperture_diameter);

/// Rows `n,inner_radius_m,outer_radius_m,phase_rad`, including the partial outer ring.
void write_mask_csv(std::ostream& out, const ZonePlateSpec& spec);

}  // namespace pfl::design
