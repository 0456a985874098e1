#include "pfl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "least_squares.hpp"
#include "pfl/constants.hpp"
#include "pfl/error.hpp"
#include "quadrature.hpp"

namespace pfl::analysis {

using imaging::CcdFrame;
using imaging::PixelRect;

namespace {

void require_roi(const CcdFrame& frame, const PixelRect& roi, std::size_t parameters) {
    if (roi.width == 0 || roi.height == 0 || roi.x + roi.width > frame.width ||
        roi.y + roi.height > frame.height) {
        throw Error(ErrorKind::invalid_input, "ROI lies outside the frame");
    }
    if (roi.size() < 10 * parameters) {
        throw Error(ErrorKind::invalid_input, "ROI needs at least 10 pixels per fit parameter");
    }
}

struct RoiData {
    std::vector<double> x;
    std::vector<double> y;
    Eigen::VectorXd counts;
    Eigen::VectorXd weights;
};

RoiData gather(const CcdFrame& frame, const PixelRect& roi) {
    RoiData d;
    const std::size_t n = roi.size();
    d.x.resize(n);
    d.y.resize(n);
    d.counts.resize(static_cast<Eigen::Index>(n));
    d.weights.resize(static_cast<Eigen::Index>(n));
    std::size_t k = 0;
    double lo = frame.at(roi.x, roi.y);
    double hi = lo;
    for (std::size_t row = roi.y; row < roi.y + roi.height; ++row) {
        for (std::size_t col = roi.x; col < roi.x + roi.width; ++col, ++k) {
            const double c = frame.at(col, row);
            d.x[k] = static_cast<double>(col);
            d.y[k] = static_cast<double>(row);
            d.counts[static_cast<Eigen::Index>(k)] = c;
            d.weights[static_cast<Eigen::Index>(k)] = 1.0 / std::max(c, 1.0);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    if (hi == lo) throw Error(ErrorKind::flat_field, "ROI has zero variance");
    return d;
}

// Several Gaussians sharing one offset and optionally one pair of widths.
// Layout: per spot (A, x0, y0[, sx, sy]), then shared (sx, sy) if shared, then offset.
struct MultiGaussian {
    std::size_t spots;
    bool shared;

    std::size_t per_spot() const { return shared ? 3 : 5; }
    std::size_t size() const { return spots * per_spot() + (shared ? 2 : 0) + 1; }
    std::size_t sigma_index(std::size_t s) const {
        return shared ? spots * 3 : s * 5 + 3;
    }

    void evaluate(const RoiData& d, const Eigen::VectorXd& p, Eigen::VectorXd& model,
                  Eigen::MatrixXd* jac) const {
        const std::size_t n = d.x.size();
        const auto off = static_cast<Eigen::Index>(size() - 1);
        model.setConstant(static_cast<Eigen::Index>(n), p[off]);
        if (jac) {
            jac->setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(size()));
            jac->col(off).setOnes();
        }
        for (std::size_t s = 0; s < spots; ++s) {
            const auto base = static_cast<Eigen::Index>(s * per_spot());
            const auto si = static_cast<Eigen::Index>(sigma_index(s));
            GaussianParams g{p[base], p[base + 1], p[base + 2], p[si], p[si + 1], 0.0};
            for (std::size_t k = 0; k < n; ++k) {
                const auto row = static_cast<Eigen::Index>(k);
                model[row] += gaussian_model(g, d.x[k], d.y[k]);
                if (!jac) continue;
                const auto grad = gaussian_jacobian(g, d.x[k], d.y[k]);
                (*jac)(row, base) += grad[param::amplitude];
                (*jac)(row, base + 1) += grad[param::center_x];
                (*jac)(row, base + 2) += grad[param::center_y];
                (*jac)(row, si) += grad[param::sigma_x];
                (*jac)(row, si + 1) += grad[param::sigma_y];
            }
        }
    }

    bool admissible(const Eigen::VectorXd& p) const {
        for (std::size_t s = 0; s < spots; ++s) {
            const auto si = static_cast<Eigen::Index>(sigma_index(s));
            if (!(p[si] > 0.0) || !(p[si + 1] > 0.0)) return false;
        }
        return true;
    }
};

detail::LeastSquaresResult run_fit(const RoiData& data, const MultiGaussian& model,
                                   const Eigen::VectorXd& start, const FitOptions& options) {
    detail::LeastSquaresProblem problem;
    problem.data = data.counts;
    problem.weights = data.weights;
    problem.evaluate = [&](const Eigen::VectorXd& p, Eigen::VectorXd& m, Eigen::MatrixXd* j) {
        model.evaluate(data, p, m, j);
    };
    problem.admissible = [&](const Eigen::VectorXd& p) { return model.admissible(p); };

    // Parameter scales from the start point: widths for positions, amplitude for offset.
    problem.scale.resize(start.size());
    double max_amp = 0.0;
    for (std::size_t s = 0; s < model.spots; ++s) {
        max_amp = std::max(max_amp, std::abs(start[static_cast<Eigen::Index>(s * model.per_spot())]));
    }
    for (std::size_t s = 0; s < model.spots; ++s) {
        const auto base = static_cast<Eigen::Index>(s * model.per_spot());
        const auto si = static_cast<Eigen::Index>(model.sigma_index(s));
        problem.scale[base] = std::abs(start[base]);
        problem.scale[base + 1] = start[si];
        problem.scale[base + 2] = start[si + 1];
        problem.scale[si] = start[si];
        problem.scale[si + 1] = start[si + 1];
    }
    problem.scale[start.size() - 1] = std::max(max_amp, 1.0);

    detail::LeastSquaresOptions lso;
    lso.max_iterations = options.max_iterations;
    lso.step_tolerance = options.step_tolerance;
    return detail::levenberg_marquardt(problem, start, lso);
}

std::vector<double> smooth(const CcdFrame& frame, double sigma) {
    const std::size_t w = frame.width;
    const std::size_t h = frame.height;
    std::vector<double> img(frame.counts.begin(), frame.counts.end());
    if (sigma <= 0.0) return img;
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double total = 0.0;
    for (std::ptrdiff_t i = -half; i <= half; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + half)] = v;
        total += v;
    }
    for (double& v : kernel) v /= total;

    // Edge samples are clamped so the background level is preserved at the border.
    auto pass = [&](const std::vector<double>& in, bool horizontal) {
        std::vector<double> out(in.size());
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                double s = 0.0;
                for (std::ptrdiff_t k = -half; k <= half; ++k) {
                    if (horizontal) {
                        const auto cc = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(c) + k, 0,
                                                                   static_cast<std::ptrdiff_t>(w) - 1);
                        s += kernel[static_cast<std::size_t>(k + half)] * in[r * w + static_cast<std::size_t>(cc)];
                    } else {
                        const auto rr = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(r) + k, 0,
                                                                   static_cast<std::ptrdiff_t>(h) - 1);
                        s += kernel[static_cast<std::size_t>(k + half)] * in[static_cast<std::size_t>(rr) * w + c];
                    }
                }
                out[r * w + c] = s;
            }
        }
        return out;
    };
    return pass(pass(img, true), false);
}

PixelRect window_around(const CcdFrame& frame, double x, double y, double half_width) {
    const auto hw = static_cast<std::ptrdiff_t>(std::ceil(half_width));
    const auto cx = static_cast<std::ptrdiff_t>(std::lround(x));
    const auto cy = static_cast<std::ptrdiff_t>(std::lround(y));
    const auto x0 = std::clamp<std::ptrdiff_t>(cx - hw, 0, static_cast<std::ptrdiff_t>(frame.width) - 1);
    const auto y0 = std::clamp<std::ptrdiff_t>(cy - hw, 0, static_cast<std::ptrdiff_t>(frame.height) - 1);
    const auto x1 = std::clamp<std::ptrdiff_t>(cx + hw, 0, static_cast<std::ptrdiff_t>(frame.width) - 1);
    const auto y1 = std::clamp<std::ptrdiff_t>(cy + hw, 0, static_cast<std::ptrdiff_t>(frame.height) - 1);
    return {static_cast<std::size_t>(x0), static_cast<std::size_t>(y0),
            static_cast<std::size_t>(x1 - x0 + 1), static_cast<std::size_t>(y1 - y0 + 1)};
}

}  // namespace

std::array<double, GaussianParams::count> GaussianParams::to_array() const noexcept {
    return {amplitude, center_x, center_y, sigma_x, sigma_y, offset};
}

GaussianParams GaussianParams::from_array(const std::array<double, count>& a) noexcept {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

double gaussian_model(const GaussianParams& p, double x, double y) noexcept {
    const double u = (x - p.center_x) / p.sigma_x;
    const double v = (y - p.center_y) / p.sigma_y;
    return p.amplitude * std::exp(-0.5 * (u * u + v * v)) + p.offset;
}

std::array<double, GaussianParams::count> gaussian_jacobian(const GaussianParams& p, double x,
                                                            double y) noexcept {
    const double dx = x - p.center_x;
    const double dy = y - p.center_y;
    const double sx2 = p.sigma_x * p.sigma_x;
    const double sy2 = p.sigma_y * p.sigma_y;
    const double e = std::exp(-0.5 * (dx * dx / sx2 + dy * dy / sy2));
    const double ae = p.amplitude * e;
    return {e,
            ae * dx / sx2,
            ae * dy / sy2,
            ae * dx * dx / (sx2 * p.sigma_x),
            ae * dy * dy / (sy2 * p.sigma_y),
            1.0};
}

double GaussianFitResult::uncertainty(std::size_t index) const {
    return std::sqrt(std::max(covariance[index * GaussianParams::count + index], 0.0));
}

double GaussianFitResult::fwhm_x() const noexcept { return constants::fwhm_per_sigma * params.sigma_x; }
double GaussianFitResult::fwhm_y() const noexcept { return constants::fwhm_per_sigma * params.sigma_y; }
double GaussianFitResult::fwhm_x_uncertainty() const {
    return constants::fwhm_per_sigma * uncertainty(param::sigma_x);
}
double GaussianFitResult::fwhm_y_uncertainty() const {
    return constants::fwhm_per_sigma * uncertainty(param::sigma_y);
}

GaussianParams moment_estimate(const CcdFrame& frame, const PixelRect& roi) {
    const RoiData d = gather(frame, roi);
    std::vector<double> values(d.counts.data(), d.counts.data() + d.counts.size());
    const double background = detail::median(values);
    double peak = 0.0;
    for (double v : values) peak = std::max(peak, v - background);

    // Moments of the pixels clearly above background.
    const double floor_level = 0.1 * peak;
    double s0 = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double v = values[k] - background;
        if (v <= floor_level) continue;
        s0 += v;
        sx += v * d.x[k];
        sy += v * d.y[k];
    }
    GaussianParams p;
    p.offset = background;
    p.amplitude = peak;
    if (s0 <= 0.0) {
        p.center_x = static_cast<double>(roi.x) + 0.5 * static_cast<double>(roi.width - 1);
        p.center_y = static_cast<double>(roi.y) + 0.5 * static_cast<double>(roi.height - 1);
        p.sigma_x = p.sigma_y = 1.0;
        return p;
    }
    p.center_x = sx / s0;
    p.center_y = sy / s0;
    double sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double v = values[k] - background;
        if (v <= floor_level) continue;
        sxx += v * (d.x[k] - p.center_x) * (d.x[k] - p.center_x);
        syy += v * (d.y[k] - p.center_y) * (d.y[k] - p.center_y);
    }
    // Truncating at 10% of peak drops the wings; 1.3 roughly undoes the shrinkage.
    p.sigma_x = std::max(1.3 * std::sqrt(sxx / s0), 0.5);
    p.sigma_y = std::max(1.3 * std::sqrt(syy / s0), 0.5);
    return p;
}

GaussianFitResult fit_gaussian_2d(const CcdFrame& frame, const PixelRect& roi,
                                  const std::optional<GaussianParams>& init,
                                  const FitOptions& options) {
    // Sized for the elliptical model with its (fixed) tilt counted: 7 parameters.
    require_roi(frame, roi, GaussianParams::count + 1);
    const RoiData data = gather(frame, roi);
    const GaussianParams start = init ? *init : moment_estimate(frame, roi);
    if (!(start.sigma_x > 0.0) || !(start.sigma_y > 0.0)) {
        throw Error(ErrorKind::invalid_input, "initial widths must be positive");
    }
    const auto a = start.to_array();
    const Eigen::VectorXd p0 = Eigen::Map<const Eigen::VectorXd>(a.data(), 6);
    const auto fit = run_fit(data, MultiGaussian{1, true}, p0, options);

    GaussianFitResult result;
    std::array<double, 6> out{};
    for (std::size_t i = 0; i < 6; ++i) out[i] = fit.parameters[static_cast<Eigen::Index>(i)];
    result.params = GaussianParams::from_array(out);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            result.covariance[i * 6 + j] =
                fit.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    result.reduced_chi2 = fit.reduced_chi2;
    result.converged = fit.converged;
    result.iterations = fit.iterations;
    return result;
}

ObjectPlaneFwhm object_plane_fwhm(const GaussianFitResult& fit, double magnification,
                                  double pixel_pitch, double magnification_uncertainty) {
    if (!fit.converged) throw Error(ErrorKind::invalid_input, "fit did not converge");
    require_positive(magnification, "magnification");
    require_positive(pixel_pitch, "pixel_pitch");
    const double scale = pixel_pitch / magnification;
    const double rel_m = magnification_uncertainty / magnification;
    ObjectPlaneFwhm out;
    out.fwhm_x = fit.fwhm_x() * scale;
    out.fwhm_y = fit.fwhm_y() * scale;
    out.fwhm_x_uncertainty = std::hypot(fit.fwhm_x_uncertainty() * scale, out.fwhm_x * rel_m);
    out.fwhm_y_uncertainty = std::hypot(fit.fwhm_y_uncertainty() * scale, out.fwhm_y * rel_m);
    return out;
}

std::vector<Spot> detect_spots(const CcdFrame& frame, const DetectionOptions& options) {
    if (frame.width == 0 || frame.height == 0) throw Error(ErrorKind::invalid_input, "empty frame");
    const std::size_t w = frame.width;
    const std::size_t h = frame.height;
    const auto smoothed = smooth(frame, options.smoothing_sigma);

    const double background = detail::median(smoothed);
    std::vector<double> raw(frame.counts.begin(), frame.counts.end());
    const double raw_median = detail::median(raw);
    for (double& v : raw) v = std::abs(v - raw_median);
    double noise = 1.4826 * detail::median(raw);
    if (options.smoothing_sigma > 0.0) noise /= 2.0 * std::sqrt(constants::pi) * options.smoothing_sigma;
    const double peak = *std::max_element(smoothed.begin(), smoothed.end()) - background;
    if (!(peak > 0.0)) return {};
    const double threshold =
        background + std::max(options.noise_threshold * noise, options.relative_threshold * peak);

    const auto r = static_cast<std::ptrdiff_t>(options.min_separation);
    std::vector<Spot> spots;
    for (std::size_t row = 0; row < h; ++row) {
        for (std::size_t col = 0; col < w; ++col) {
            const double v = smoothed[row * w + col];
            if (v <= threshold) continue;
            bool is_max = true;
            for (std::ptrdiff_t dy = -r; dy <= r && is_max; ++dy) {
                for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const auto yy = static_cast<std::ptrdiff_t>(row) + dy;
                    const auto xx = static_cast<std::ptrdiff_t>(col) + dx;
                    if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(h) ||
                        xx >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    const double other = smoothed[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)];
                    // Plateaus: the first pixel in raster order wins.
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (other > v || (earlier && other == v)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) {
                spots.push_back({static_cast<double>(col), static_cast<double>(row), v - background});
            }
        }
    }
    std::stable_sort(spots.begin(), spots.end(),
                     [](const Spot& a, const Spot& b) { return a.height > b.height; });
    return spots;
}

GaussianFitResult fit_single_spot(const CcdFrame& frame, const DetectionOptions& detection,
                                  const FitOptions& options) {
    const auto spots = detect_spots(frame, detection);
    if (spots.empty()) throw Error(ErrorKind::spot_count, "no spot found in frame");
    const Spot& s = spots.front();
    const GaussianParams guess = moment_estimate(frame, window_around(frame, s.x, s.y, 32.0));
    const double half = std::clamp(5.0 * std::max(guess.sigma_x, guess.sigma_y), 8.0, 64.0);
    const PixelRect roi = window_around(frame, s.x, s.y, half);
    return fit_gaussian_2d(frame, roi, std::nullopt, options);
}

CalibrationResult calibrate_magnification(const CcdFrame& frame, const trap::TrapParams& trap,
                                          const imaging::CcdModel& ccd,
                                          const CalibrationOptions& options) {
    require_positive(ccd.pixel_pitch, "pixel_pitch");
    auto spots = detect_spots(frame, options.detection);
    if (spots.size() != 2) {
        throw Error(ErrorKind::spot_count,
                    "expected two spots, found " + std::to_string(spots.size()));
    }
    std::sort(spots.begin(), spots.end(), [](const Spot& a, const Spot& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    const double sep_guess = std::hypot(spots[1].x - spots[0].x, spots[1].y - spots[0].y);

    std::array<GaussianParams, 2> guess;
    for (std::size_t s = 0; s < 2; ++s) {
        const double half = std::clamp(0.5 * sep_guess - 1.0, 3.0, 30.0);
        guess[s] = moment_estimate(frame, window_around(frame, spots[s].x, spots[s].y, half));
    }
    const double sigma_guess = std::max({guess[0].sigma_x, guess[0].sigma_y, guess[1].sigma_x,
                                         guess[1].sigma_y});
    const double pad = std::clamp(4.0 * sigma_guess, 5.0, 60.0);
    const double x0 = std::max(0.0, std::min(spots[0].x, spots[1].x) - pad);
    const double y0 = std::max(0.0, std::min(spots[0].y, spots[1].y) - pad);
    const double x1 = std::min(static_cast<double>(frame.width - 1), std::max(spots[0].x, spots[1].x) + pad);
    const double y1 = std::min(static_cast<double>(frame.height - 1), std::max(spots[0].y, spots[1].y) + pad);
    const PixelRect roi{static_cast<std::size_t>(x0), static_cast<std::size_t>(y0),
                        static_cast<std::size_t>(x1 - x0) + 1, static_cast<std::size_t>(y1 - y0) + 1};

    const MultiGaussian model{2, options.shared_sigma};
    require_roi(frame, roi, model.size());
    const RoiData data = gather(frame, roi);

    Eigen::VectorXd start(static_cast<Eigen::Index>(model.size()));
    for (std::size_t s = 0; s < 2; ++s) {
        const auto base = static_cast<Eigen::Index>(s * model.per_spot());
        start[base] = guess[s].amplitude;
        start[base + 1] = guess[s].center_x;
        start[base + 2] = guess[s].center_y;
        const auto si = static_cast<Eigen::Index>(model.sigma_index(s));
        start[si] = options.shared_sigma ? 0.5 * (guess[0].sigma_x + guess[1].sigma_x) : guess[s].sigma_x;
        start[si + 1] = options.shared_sigma ? 0.5 * (guess[0].sigma_y + guess[1].sigma_y) : guess[s].sigma_y;
    }
    start[start.size() - 1] = 0.5 * (guess[0].offset + guess[1].offset);

    const auto fit = run_fit(data, model, start, options.fit);

    CalibrationResult result;
    result.converged = fit.converged;
    result.reduced_chi2 = fit.reduced_chi2;
    const auto& p = fit.parameters;
    const auto off = p[p.size() - 1];
    for (std::size_t s = 0; s < 2; ++s) {
        const auto base = static_cast<Eigen::Index>(s * model.per_spot());
        const auto si = static_cast<Eigen::Index>(model.sigma_index(s));
        result.spots[s] = {p[base], p[base + 1], p[base + 2], p[si], p[si + 1], off};
    }

    const auto ix0 = static_cast<Eigen::Index>(1);
    const auto ix1 = static_cast<Eigen::Index>(model.per_spot() + 1);
    const double dx = p[ix1] - p[ix0];
    const double dy = p[ix1 + 1] - p[ix0 + 1];
    const double sep = std::hypot(dx, dy);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.size());
    grad[ix0] = -dx / sep;
    grad[ix0 + 1] = -dy / sep;
    grad[ix1] = dx / sep;
    grad[ix1 + 1] = dy / sep;
    const double sep_var = grad.dot(fit.covariance * grad);

    double widest = 0.0;
    for (const auto& g : result.spots) widest = std::max({widest, g.sigma_x, g.sigma_y});
    const double fwhm_px = constants::fwhm_per_sigma * widest;
    if (sep < 2.0 * fwhm_px) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "spots %.2f px apart overlap (FWHM %.2f px)", sep, fwhm_px);
        throw Error(ErrorKind::unresolvable, msg);
    }

    result.pixel_separation = sep;
    result.pixel_separation_uncertainty = std::sqrt(std::max(sep_var, 0.0));
    result.predicted_spacing = trap::ion_spacing(trap);
    const double spacing_rel = trap::ion_spacing_relative_uncertainty(trap);
    result.predicted_spacing_uncertainty = spacing_rel * result.predicted_spacing;
    result.magnification = sep * ccd.pixel_pitch / result.predicted_spacing;
    result.magnification_uncertainty =
        result.magnification * std::hypot(result.pixel_separation_uncertainty / sep, spacing_rel);
    return result;
}

double displacement_crosscheck(const CcdFrame& before, const CcdFrame& after,
                               double physical_displacement, double magnification,
                               const imaging::CcdModel& ccd, const DetectionOptions& detection) {
    require_finite(physical_displacement, "physical_displacement");
    if (physical_displacement == 0.0) {
        throw Error(ErrorKind::divide_by_zero, "physical displacement is zero");
    }
    require_positive(magnification, "magnification");
    const auto a = fit_single_spot(before, detection);
    const auto b = fit_single_spot(after, detection);
    if (!a.converged || !b.converged) {
        throw ConvergenceError("spot fit did not converge", 0.0);
    }
    const double shift_px = std::hypot(b.params.center_x - a.params.center_x,
                                       b.params.center_y - a.params.center_y);
    const double measured = shift_px * ccd.pixel_pitch / magnification;
    const double physical = std::abs(physical_displacement);
    return std::abs(measured - physical) / physical;
}

}  // namespace pfl::analysis
