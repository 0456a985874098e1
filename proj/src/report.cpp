#include "pfl/report.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>

namespace pfl::report {

namespace {

void emit(std::string& out, const Json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) out += ",\n";
            first = false;
            out += inner + Json(key).dump() + ": ";
            emit(out, value, indent + 1);
        }
        out += "\n" + pad + "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // Flat numeric arrays stay on one line.
        const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
        out += flat ? "[" : "[\n";
        bool first = true;
        for (const auto& value : j) {
            if (!first) out += flat ? ", " : ",\n";
            first = false;
            if (!flat) out += inner;
            emit(out, value, indent + 1);
        }
        out += flat ? "]" : "\n" + pad + "]";
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            out += "null";
            return;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.16e", v);
        out += buf;
        return;
    }
    default:
        out += j.dump();
    }
}

}  // namespace

std::string dump(const Json& j) {
    std::string out;
    emit(out, j, 0);
    out += '\n';
    return out;
}

std::string hex64(std::uint64_t value) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

Json zoneplate(const design::ZonePlateSpec& spec) {
    Json j;
    j["design_wavelength_m"] = spec.design_wavelength;
    j["focal_length_m"] = spec.focal_length;
    j["aperture_diameter_m"] = spec.aperture_diameter;
    j["etch_depth_m"] = spec.etch_depth;
    j["substrate_index"] = spec.substrate_index;
    j["parity"] = spec.parity == design::ZoneParity::center_clear ? "center_clear" : "center_etched";
    j["grid_snap_m"] = spec.grid_snap;
    j["zone_count"] = spec.zone_count();
    j["zone_boundaries_m"] = spec.zone_boundaries;
    return j;
}

Json geometry(const design::ZonePlateSpec& spec) {
    const auto g = design::lens_geometry(spec.focal_length, spec.aperture_diameter);
    Json j;
    j["numerical_aperture"] = g.numerical_aperture;
    j["paraxial_numerical_aperture"] = g.paraxial_numerical_aperture;
    j["f_number"] = g.f_number;
    j["solid_angle_fraction"] = g.solid_angle_fraction;
    j["zone_count"] = spec.zone_count();
    j["etch_depth_m"] = spec.etch_depth;
    j["substrate_index"] = spec.substrate_index;
    const auto n = spec.zone_count();
    j["outer_zone_width_m"] = n >= 2 ? spec.zone_boundaries[n - 1] - spec.zone_boundaries[n - 2]
                                     : spec.zone_boundaries.front();
    return j;
}

Json gaussian(const analysis::GaussianParams& p) {
    Json j;
    j["amplitude"] = p.amplitude;
    j["center_x_px"] = p.center_x;
    j["center_y_px"] = p.center_y;
    j["sigma_x_px"] = p.sigma_x;
    j["sigma_y_px"] = p.sigma_y;
    j["offset"] = p.offset;
    return j;
}

Json fit(const analysis::GaussianFitResult& f, const analysis::ObjectPlaneFwhm& object) {
    static const char* names[] = {"amplitude", "center_x_px", "center_y_px",
                                  "sigma_x_px", "sigma_y_px", "offset"};
    Json unc;
    for (std::size_t i = 0; i < analysis::GaussianParams::count; ++i) unc[names[i]] = f.uncertainty(i);
    Json cov = Json::array();
    for (std::size_t i = 0; i < 6; ++i) {
        Json row = Json::array();
        for (std::size_t k = 0; k < 6; ++k) row.push_back(f.covariance[i * 6 + k]);
        cov.push_back(row);
    }
    Json j;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["parameters"] = gaussian(f.params);
    j["uncertainties"] = unc;
    j["covariance_order"] = Json(std::vector<std::string>(std::begin(names), std::end(names)));
    j["covariance"] = cov;
    j["reduced_chi2"] = f.reduced_chi2;
    j["fwhm_px"] = {{"x", f.fwhm_x()}, {"y", f.fwhm_y()},
                    {"x_uncertainty", f.fwhm_x_uncertainty()}, {"y_uncertainty", f.fwhm_y_uncertainty()}};
    j["fwhm_object_nm"] = {{"x", object.fwhm_x * 1e9}, {"y", object.fwhm_y * 1e9},
                           {"x_uncertainty", object.fwhm_x_uncertainty * 1e9},
                           {"y_uncertainty", object.fwhm_y_uncertainty * 1e9}};
    j["uncertainty_method"] = "covariance of weighted least squares, scaled by reduced chi2; "
                              "magnification uncertainty added in quadrature";
    return j;
}

Json calibration(const analysis::CalibrationResult& c) {
    Json j;
    j["converged"] = c.converged;
    j["magnification"] = c.magnification;
    j["magnification_uncertainty"] = c.magnification_uncertainty;
    j["pixel_separation_px"] = c.pixel_separation;
    j["pixel_separation_uncertainty_px"] = c.pixel_separation_uncertainty;
    j["predicted_spacing_m"] = c.predicted_spacing;
    j["predicted_spacing_uncertainty_m"] = c.predicted_spacing_uncertainty;
    j["spots"] = {gaussian(c.spots[0]), gaussian(c.spots[1])};
    j["reduced_chi2"] = c.reduced_chi2;
    return j;
}

}  // namespace pfl::report
