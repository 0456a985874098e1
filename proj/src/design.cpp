#include "pfl/design.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "pfl/constants.hpp"
#include "pfl/error.hpp"

namespace pfl::design {

namespace {

void require_index(double substrate_index) {
    if (!std::isfinite(substrate_index)) {
        throw Error(ErrorKind::invalid_parameter, "substrate_index must be finite");
    }
    if (substrate_index <= 1.0) {
        throw Error(ErrorKind::no_phase_contrast,
                    "substrate_index must exceed 1 for a phase step to exist");
    }
}

}  // namespace

double ZonePlateSpec::zone_phase(std::size_t n) const noexcept {
    const bool even = (n % 2) == 0;
    const bool etched = parity == ZoneParity::center_clear ? even : !even;
    return etched ? constants::pi : 0.0;
}

double fused_silica_index(double wavelength) {
    require_positive(wavelength, "wavelength");
    const double um2 = (wavelength * 1e6) * (wavelength * 1e6);
    constexpr double b[3] = {0.6961663, 0.4079426, 0.8974794};
    constexpr double c[3] = {0.0684043, 0.1162414, 9.896161};
    double n2 = 1.0;
    for (int i = 0; i < 3; ++i) {
        n2 += b[i] * um2 / (um2 - c[i] * c[i]);
    }
    return std::sqrt(n2);
}

double zone_radius(std::size_t n, double wavelength, double focal_length) {
    const double nd = static_cast<double>(n);
    return std::sqrt(nd * wavelength * focal_length + nd * nd * wavelength * wavelength / 4.0);
}

std::size_t zone_count_within(double aperture_radius, double wavelength, double focal_length) {
    // Inverse of the design law: n = 2 (sqrt(f^2 + R^2) - f) / lambda.
    const double path = std::hypot(focal_length, aperture_radius) - focal_length;
    auto n = static_cast<std::size_t>(std::floor(2.0 * path / wavelength));
    // Guard the floor against rounding at an exact boundary.
    while (n > 0 && zone_radius(n, wavelength, focal_length) > aperture_radius) --n;
    while (zone_radius(n + 1, wavelength, focal_length) <= aperture_radius) ++n;
    return n;
}

ZonePlateSpec design_zoneplate(double wavelength, double focal_length, double aperture_diameter,
                               double substrate_index, const DesignOptions& options) {
    require_positive(wavelength, "wavelength");
    require_positive(focal_length, "focal_length");
    require_positive(aperture_diameter, "aperture_diameter");
    require_index(substrate_index);
    if (!std::isfinite(options.grid_snap) || options.grid_snap < 0.0) {
        throw Error(ErrorKind::invalid_parameter, "grid_snap must be finite and >= 0");
    }

    const double radius = 0.5 * aperture_diameter;
    if (zone_radius(1, wavelength, focal_length) > radius) {
        throw Error(ErrorKind::invalid_parameter, "aperture is smaller than the first zone");
    }

    ZonePlateSpec spec;
    spec.design_wavelength = wavelength;
    spec.focal_length = focal_length;
    spec.aperture_diameter = aperture_diameter;
    spec.substrate_index = substrate_index;
    spec.etch_depth = pi_etch_depth(wavelength, substrate_index);
    spec.parity = options.parity;
    spec.grid_snap = options.grid_snap;

    const std::size_t count = zone_count_within(radius, wavelength, focal_length);
    spec.zone_boundaries.reserve(count);
    for (std::size_t n = 1; n <= count; ++n) {
        double r = zone_radius(n, wavelength, focal_length);
        if (options.grid_snap > 0.0) {
            r = std::round(r / options.grid_snap) * options.grid_snap;
            // Snapping can merge neighbouring boundaries or push one past the edge.
            if (r > radius) break;
            if (!spec.zone_boundaries.empty() && r <= spec.zone_boundaries.back()) continue;
            if (r <= 0.0) continue;
        }
        spec.zone_boundaries.push_back(r);
    }
    return spec;
}

ZonePlateSpec design_zoneplate(double wavelength, double focal_length, double aperture_diameter,
                               const DesignOptions& options) {
    return design_zoneplate(wavelength, focal_length, aperture_diameter,
                            fused_silica_index(wavelength), options);
}

double numerical_aperture(double focal_length, double aperture_diameter) {
    require_finite(focal_length, "focal_length");
    require_finite(aperture_diameter, "aperture_diameter");
    require_positive(focal_length, "focal_length");
    if (aperture_diameter < 0.0) {
        throw Error(ErrorKind::invalid_parameter, "aperture_diameter must be >= 0");
    }
    const double half = 0.5 * aperture_diameter;
    return half / std::hypot(half, focal_length);
}

double solid_angle_fraction(double na) {
    if (!std::isfinite(na) || na < 0.0 || na > 1.0) {
        throw Error(ErrorKind::invalid_parameter, "numerical aperture must lie in [0, 1]");
    }
    return 0.5 * (1.0 - std::sqrt(1.0 - na * na));
}

double pi_etch_depth(double wavelength, double substrate_index) {
    require_positive(wavelength, "wavelength");
    require_index(substrate_index);
    return wavelength / (2.0 * (substrate_index - 1.0));
}

LensGeometry lens_geometry(double focal_length, double aperture_diameter) {
    LensGeometry g;
    g.numerical_aperture = numerical_aperture(focal_length, aperture_diameter);
    g.f_number = focal_length / aperture_diameter;
    g.solid_angle_fraction = solid_angle_fraction(g.numerical_aperture);
    g.paraxial_numerical_aperture = aperture_diameter / (2.0 * focal_length);
    return g;
}

void write_mask_csv(std::ostream& out, const ZonePlateSpec& spec) {
    out << "n,inner_radius_m,outer_radius_m,phase_rad\n";
    char line[160];
    double inner = 0.0;
    const std::size_t count = spec.zone_count();
    for (std::size_t n = 1; n <= count + 1; ++n) {
        const double outer = n <= count ? spec.zone_boundaries[n - 1] : spec.aperture_radius();
        if (outer <= inner) break;
        std::snprintf(line, sizeof line, "%zu,%.16e,%.16e,%.16e\n", n, inner, outer,
                      spec.zone_phase(n));
        out << line;
        inner = outer;
    }
}

}  // namespace pfl::design
