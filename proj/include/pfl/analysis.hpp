#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "pfl/imaging.hpp"
#include "pfl/trap.hpp"

// Measurement chain on camera frames: Gaussian spot fits, object-plane FWHM,
// two-ion magnification calibration and the displacement cross-check.
namespace pfl::analysis {

/// Axis-aligned elliptical Gaussian plus constant offset, in pixel units.
struct GaussianParams {
    double amplitude = 0.0;
    double center_x = 0.0;
    double center_y = 0.0;
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double offset = 0.0;

    static constexpr std::size_t count = 6;
    std::array<double, count> to_array() const noexcept;
    static GaussianParams from_array(const std::array<double, count>& a) noexcept;
};

namespace param {
enum : std::size_t { amplitude = 0, center_x, center_y, sigma_x, sigma_y, offset };
}

double gaussian_model(const GaussianParams& p, double x, double y) noexcept;
/// Analytic derivatives of gaussian_model in param:: order.
std::array<double, GaussianParams::count> gaussian_jacobian(const GaussianParams& p, double x,
                                                            double y) noexcept;

struct GaussianFitResult {
    GaussianParams params;
    std::array<double, 36> covariance{};  // row-major, param:: order
    double reduced_chi2 = 0.0;
    bool converged = false;
    std::size_t iterations = 0;

    double uncertainty(std::size_t index) const;
    double fwhm_x() const noexcept;
    double fwhm_y() const noexcept;
    double fwhm_x_uncertainty() const;
    double fwhm_y_uncertainty() const;
};

struct FitOptions {
    std::size_t max_iterations = 200;
    double step_tolerance = 1e-10;
};

/// Moment-based start point: offset from the ROI median, centroid and second moments
/// of the background-subtracted counts.
GaussianParams moment_estimate(const imaging::CcdFrame& frame, const imaging::PixelRect& roi);

/// Weighted (1 / max(counts, 1)) Levenberg-Marquardt fit over `roi`. A non-converged
/// fit is returned with converged = false. Covariance is scaled by reduced chi^2.
GaussianFitResult fit_gaussian_2d(const imaging::CcdFrame& frame, const imaging::PixelRect& roi,
                                  const std::optional<GaussianParams>& init = std::nullopt,
                                  const FitOptions& options = {});

struct ObjectPlaneFwhm {
    double fwhm_x = 0.0;  // m
    double fwhm_y = 0.0;  // m
    double fwhm_x_uncertainty = 0.0;
    double fwhm_y_uncertainty = 0.0;
};

/// FWHM referred back through the magnification. Uncertainty combines the fit and
/// magnification uncertainties in quadrature.
ObjectPlaneFwhm object_plane_fwhm(const GaussianFitResult& fit, double magnification,
                                  double pixel_pitch, double magnification_uncertainty = 0.0);

struct DetectionOptions {
    double smoothing_sigma = 1.5;     // px
    std::size_t min_separation = 3;   // px, non-maximum suppression radius
    double relative_threshold = 0.25; // of the brightest smoothed peak above background
    double noise_threshold = 5.0;     // in smoothed-noise sigmas
};

struct Spot {
    double x = 0.0;
    double y = 0.0;
    double height = 0.0;  // smoothed value above background
};

/// Local maxima of the smoothed frame above threshold, brightest first.
std::vector<Spot> detect_spots(const imaging::CcdFrame& frame, const DetectionOptions& options = {});

/// Finds the brightest spot and fits it in a window sized from its moments.
GaussianFitResult fit_single_spot(const imaging::CcdFrame& frame,
                                  const DetectionOptions& detection = {},
                                  const FitOptions& options = {});

struct CalibrationOptions {
    DetectionOptions detection;
    bool shared_sigma = true;
    FitOptions fit;
};

struct CalibrationResult {
    double magnification = 0.0;
    double magnification_uncertainty = 0.0;
    double pixel_separation = 0.0;
    double pixel_separation_uncertainty = 0.0;
    double predicted_spacing = 0.0;  // m
    double predicted_spacing_uncertainty = 0.0;
    std::array<GaussianParams, 2> spots{};  // left to right
    double reduced_chi2 = 0.0;
    bool converged = false;
};

/// Magnification from the pixel separation of two ions and their Coulomb spacing.
CalibrationResult calibrate_magnification(const imaging::CcdFrame& frame,
                                          const trap::TrapParams& trap,
                                          const imaging::CcdModel& ccd,
                                          const CalibrationOptions& options = {});

/// |centroid shift * pitch / M - displacement| / displacement.
double displacement_crosscheck(const imaging::CcdFrame& before, const imaging::CcdFrame& after,
                               double physical_displacement, double magnification,
                               const imaging::CcdModel& ccd,
                               const DetectionOptions& detection = {});

}  // namespace pfl::analysis
