#include "pfl/optics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "pfl/constants.hpp"
#include "pfl/error.hpp"
#include "pfl/parallel.hpp"
#include "quadrature.hpp"

namespace pfl::optics {

using constants::pi;

namespace {

double lens_path(double r, double focal_length) {
    return focal_length > 0.0 ? std::hypot(r, focal_length) - focal_length : 0.0;
}

// Integral of 2 pi r I(r) over [a, a+h] for I linear from ia to ib.
double ring_integral(double a, double h, double ia, double ib) {
    return 2.0 * pi * h * (ia * a + 0.5 * (ia * h + (ib - ia) * a) + (ib - ia) * h / 3.0);
}

double radial_integral(std::span<const double> intensity, double pitch) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < intensity.size(); ++i) {
        total += ring_integral(static_cast<double>(i) * pitch, pitch, intensity[i], intensity[i + 1]);
    }
    return total;
}

void require_nonnegative_finite(std::span<const double> intensity) {
    for (double v : intensity) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorKind::invalid_parameter, "PSF intensity must be finite and >= 0");
        }
    }
}

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* plan) const { fftw_destroy_plan(plan); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

void fft2d_inplace(std::vector<Complex>& data, std::size_t n, int sign) {
    auto* buffer = reinterpret_cast<fftw_complex*>(data.data());
    FftwPlan plan(fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buffer, buffer, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED));
    if (!plan) throw Error(ErrorKind::invalid_parameter, "FFTW could not plan the transform");
    fftw_execute(plan.get());
}

// Column index range of samples along one axis, for half-max search.
double crossing(double x0, double y0, double x1, double y1, double level) {
    if (y1 == y0) return x0;
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
}

}  // namespace

void RadialPupil::validate() const {
    require_positive(wavelength, "pupil wavelength");
    if (edges.size() < 2 || transmission.size() + 1 != edges.size()) {
        throw Error(ErrorKind::invalid_parameter, "pupil needs at least one cell");
    }
    if (edges.front() != 0.0) {
        throw Error(ErrorKind::invalid_parameter, "pupil radii must start at 0");
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1]) || !std::isfinite(edges[i])) {
            throw Error(ErrorKind::invalid_parameter, "pupil radii must be strictly increasing");
        }
    }
    for (const Complex& t : transmission) {
        if (!std::isfinite(t.real()) || !std::isfinite(t.imag()) || std::abs(t) > 1.0 + 1e-12) {
            throw Error(ErrorKind::invalid_parameter, "pupil transmission must satisfy |t| <= 1");
        }
    }
    if (lens_focal_length < 0.0 || !std::isfinite(lens_focal_length)) {
        throw Error(ErrorKind::invalid_parameter, "lens focal length must be >= 0");
    }
}

RadialPupil pupil_from_zoneplate(const design::ZonePlateSpec& spec, std::size_t samples_per_zone) {
    if (spec.zone_boundaries.empty()) {
        throw Error(ErrorKind::invalid_parameter, "zone plate has no zones");
    }
    if (samples_per_zone < 4) {
        throw Error(ErrorKind::invalid_parameter, "samples_per_zone must be >= 4");
    }
    const double f = spec.focal_length;
    const double aperture = spec.aperture_radius();

    RadialPupil pupil;
    pupil.wavelength = spec.design_wavelength;
    pupil.edges.push_back(0.0);

    auto add_zone = [&](double inner, double outer, double phase) {
        const Complex t = std::polar(1.0, phase);
        const double path_in = std::hypot(inner, f);
        const double path_out = std::hypot(outer, f);
        for (std::size_t s = 1; s <= samples_per_zone; ++s) {
            double edge = outer;
            if (s < samples_per_zone) {
                const double path = path_in + (path_out - path_in) * static_cast<double>(s) /
                                                  static_cast<double>(samples_per_zone);
                edge = std::sqrt(std::max(path * path - f * f, 0.0));
            }
            if (edge <= pupil.edges.back()) continue;
            pupil.edges.push_back(edge);
            pupil.transmission.push_back(t);
        }
    };

    double inner = 0.0;
    for (std::size_t n = 1; n <= spec.zone_count(); ++n) {
        const double outer = spec.zone_boundaries[n - 1];
        add_zone(inner, outer, spec.zone_phase(n));
        inner = outer;
    }
    if (aperture > inner) add_zone(inner, aperture, spec.zone_phase(spec.zone_count() + 1));
    return pupil;
}

RadialPupil ideal_pupil(double wavelength, double focal_length, double aperture_radius,
                        std::size_t cells) {
    require_positive(wavelength, "wavelength");
    require_positive(focal_length, "focal_length");
    require_positive(aperture_radius, "aperture_radius");
    if (cells == 0) throw Error(ErrorKind::invalid_parameter, "cells must be > 0");
    RadialPupil pupil;
    pupil.wavelength = wavelength;
    pupil.lens_focal_length = focal_length;
    pupil.edges.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) {
        pupil.edges[i] = aperture_radius * static_cast<double>(i) / static_cast<double>(cells);
    }
    pupil.transmission.assign(cells, Complex(1.0, 0.0));
    return pupil;
}

ScalarField::ScalarField(std::size_t n_, double pitch_, double wavelength_)
    : n(n_), pitch(pitch_), wavelength(wavelength_), samples(n_ * n_) {}

double ScalarField::power() const {
    double total = 0.0;
    for (const Complex& u : samples) total += std::norm(u);
    return total * pitch * pitch;
}

Psf Psf::radial(std::vector<double> intensity, double pitch, ReferencePlane plane) {
    require_positive(pitch, "PSF pitch");
    if (intensity.size() < 2) throw Error(ErrorKind::invalid_parameter, "PSF needs >= 2 samples");
    require_nonnegative_finite(intensity);
    const double total = radial_integral(intensity, pitch);
    if (!(total > 0.0)) throw Error(ErrorKind::invalid_parameter, "PSF carries no power");
    for (double& v : intensity) v /= total;
    Psf psf;
    psf.geometry_ = PsfGeometry::radial;
    psf.plane_ = plane;
    psf.pitch_ = pitch;
    psf.size_ = intensity.size();
    psf.intensity_ = std::move(intensity);
    return psf;
}

Psf Psf::cartesian(std::vector<double> intensity, std::size_t side, double pitch,
                   ReferencePlane plane) {
    require_positive(pitch, "PSF pitch");
    if (side < 2 || intensity.size() != side * side) {
        throw Error(ErrorKind::invalid_parameter, "Cartesian PSF must be square with side >= 2");
    }
    require_nonnegative_finite(intensity);
    double total = 0.0;
    for (double v : intensity) total += v;
    total *= pitch * pitch;
    if (!(total > 0.0)) throw Error(ErrorKind::invalid_parameter, "PSF carries no power");
    for (double& v : intensity) v /= total;
    Psf psf;
    psf.geometry_ = PsfGeometry::cartesian;
    psf.plane_ = plane;
    psf.pitch_ = pitch;
    psf.size_ = side;
    psf.intensity_ = std::move(intensity);
    return psf;
}

double Psf::extent() const noexcept {
    if (geometry_ == PsfGeometry::radial) return static_cast<double>(size_ - 1) * pitch_;
    return static_cast<double>(size_ / 2) * pitch_;
}

double Psf::value(double x, double y) const noexcept {
    if (geometry_ == PsfGeometry::radial) {
        const double u = std::hypot(x, y) / pitch_;
        const auto i = static_cast<std::size_t>(u);
        if (i + 1 >= size_) return i + 1 == size_ && u == static_cast<double>(i) ? intensity_[i] : 0.0;
        const double t = u - static_cast<double>(i);
        return intensity_[i] + t * (intensity_[i + 1] - intensity_[i]);
    }
    const double half = static_cast<double>(size_ / 2);
    const double u = x / pitch_ + half;
    const double v = y / pitch_ + half;
    const double last = static_cast<double>(size_ - 1);
    if (u < 0.0 || v < 0.0 || u > last || v > last) return 0.0;
    const auto j = std::min(static_cast<std::size_t>(u), size_ - 2);
    const auto i = std::min(static_cast<std::size_t>(v), size_ - 2);
    const double tx = u - static_cast<double>(j);
    const double ty = v - static_cast<double>(i);
    const double* row0 = &intensity_[i * size_];
    const double* row1 = row0 + size_;
    return (1.0 - ty) * ((1.0 - tx) * row0[j] + tx * row0[j + 1]) +
           ty * ((1.0 - tx) * row1[j] + tx * row1[j + 1]);
}

double Psf::integral() const {
    if (geometry_ == PsfGeometry::radial) return radial_integral(intensity_, pitch_);
    double total = 0.0;
    for (double v : intensity_) total += v;
    return total * pitch_ * pitch_;
}

Psf Psf::scaled(double factor, ReferencePlane plane) const {
    require_positive(factor, "scale factor");
    Psf out = *this;
    out.pitch_ = pitch_ * factor;
    out.plane_ = plane;
    const double inv = 1.0 / (factor * factor);
    for (double& v : out.intensity_) v *= inv;
    return out;
}

std::vector<Complex> focal_amplitude_radial(const RadialPupil& pupil, double z, double r_max,
                                            std::size_t n_r, unsigned threads) {
    pupil.validate();
    require_positive(z, "z");
    require_positive(r_max, "r_max");
    if (n_r < 2) throw Error(ErrorKind::invalid_parameter, "n_r must be >= 2");

    const double k = 2.0 * pi / pupil.wavelength;
    const double f_lens = pupil.lens_focal_length;
    const auto& rule = detail::gauss_legendre(4);

    // Node data that does not depend on the observation radius.
    std::vector<Complex> weight;
    std::vector<double> sine;      // r / L
    std::vector<double> inv_path;  // 1 / (2 L)
    const std::size_t cells = pupil.cell_count();
    weight.reserve(cells * 4);
    sine.reserve(cells * 4);
    inv_path.reserve(cells * 4);

    for (std::size_t c = 0; c < cells; ++c) {
        const Complex t = pupil.transmission[c];
        if (t == Complex(0.0, 0.0)) continue;
        const double a = pupil.edges[c];
        const double b = pupil.edges[c + 1];
        const double la = std::hypot(a, z);
        const double lb = std::hypot(b, z);
        const double kernel_phase =
            k * std::abs((lb - la) - (lens_path(b, f_lens) - lens_path(a, f_lens)));
        if (kernel_phase > 0.5 * pi * (1.0 + 1e-9)) {
            char msg[160];
            std::snprintf(msg, sizeof msg,
                          "pupil undersampled: kernel phase %.3f rad across cell %zu exceeds pi/2",
                          kernel_phase, c);
            throw Error(ErrorKind::aliasing, msg);
        }
        const double bessel_phase = k * r_max * std::abs(b / lb - a / la);
        const auto panels =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((kernel_phase + bessel_phase) / (0.25 * pi))));
        const double width = (b - a) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const double lo = a + width * static_cast<double>(p);
            const double mid = lo + 0.5 * width;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double r = mid + 0.5 * width * rule.nodes[q];
                const double path = std::hypot(r, z);
                const double phase = k * (path - lens_path(r, f_lens));
                const double amplitude = 0.5 * width * rule.weights[q] * r * z / (path * path);
                weight.push_back(t * std::polar(amplitude, phase));
                sine.push_back(r / path);
                inv_path.push_back(0.5 / path);
            }
        }
    }

    const double max_sine = sine.empty() ? 0.0 : *std::max_element(sine.begin(), sine.end());
    const detail::BesselJ0Table j0(k * r_max * max_sine + 1.0);
    const double step = r_max / static_cast<double>(n_r - 1);
    // (1 / i lambda) * 2 pi from the azimuthal integral.
    const Complex prefactor(0.0, -k);

    std::vector<Complex> amplitude(n_r);
    parallel_for(n_r, threads, [&](std::size_t i) {
        const double rho = step * static_cast<double>(i);
        const double krho = k * rho;
        const double krho2 = k * rho * rho;
        Complex sum(0.0, 0.0);
        for (std::size_t j = 0; j < weight.size(); ++j) {
            const double phase = krho2 * inv_path[j];
            sum += weight[j] * j0(krho * sine[j]) * Complex(std::cos(phase), std::sin(phase));
        }
        amplitude[i] = prefactor * sum;
    });
    return amplitude;
}

Psf focal_field_radial(const RadialPupil& pupil, double z, double r_max, std::size_t n_r,
                       unsigned threads) {
    const auto amplitude = focal_amplitude_radial(pupil, z, r_max, n_r, threads);
    std::vector<double> intensity(amplitude.size());
    std::transform(amplitude.begin(), amplitude.end(), intensity.begin(),
                   [](const Complex& u) { return std::norm(u); });
    return Psf::radial(std::move(intensity), r_max / static_cast<double>(n_r - 1));
}

ScalarField angular_spectrum_propagate(const ScalarField& field, double z) {
    if (field.n < 2 || field.samples.size() != field.n * field.n) {
        throw Error(ErrorKind::invalid_parameter, "field must be square with N >= 2");
    }
    require_positive(field.pitch, "field pitch");
    require_positive(field.wavelength, "field wavelength");
    require_finite(z, "z");
    for (const Complex& u : field.samples) {
        if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) {
            throw Error(ErrorKind::invalid_parameter, "field contains non-finite samples");
        }
    }
    if (z == 0.0) return field;

    const std::size_t n = field.n;
    ScalarField out = field;
    fft2d_inplace(out.samples, n, FFTW_FORWARD);

    const double df = 1.0 / (static_cast<double>(n) * field.pitch);
    const double inv_lambda2 = 1.0 / (field.wavelength * field.wavelength);
    const double scale = 1.0 / static_cast<double>(n * n);
    auto frequency = [&](std::size_t i) {
        const auto signed_index = i < (n + 1) / 2 ? static_cast<double>(i)
                                                  : static_cast<double>(i) - static_cast<double>(n);
        return signed_index * df;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double fy = frequency(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double fx = frequency(j);
            const double kz2 = inv_lambda2 - fx * fx - fy * fy;
            Complex& u = out.samples[i * n + j];
            if (kz2 <= 0.0) {
                u = Complex(0.0, 0.0);
            } else {
                u *= std::polar(scale, 2.0 * pi * z * std::sqrt(kz2));
            }
        }
    }
    fft2d_inplace(out.samples, n, FFTW_BACKWARD);
    return out;
}

ScalarField ideal_lens_field(double wavelength, double focal_length, double aperture_radius,
                             std::size_t n, double pitch) {
    require_positive(wavelength, "wavelength");
    require_positive(focal_length, "focal_length");
    require_positive(aperture_radius, "aperture_radius");
    require_positive(pitch, "pitch");
    if (n < 2) throw Error(ErrorKind::invalid_parameter, "grid must be >= 2");
    ScalarField field(n, pitch, wavelength);
    const double k = 2.0 * pi / wavelength;
    constexpr int sub = 16;
    const double half_diag = pitch * std::sqrt(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = field.coordinate(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double x = field.coordinate(j);
            const double r = std::hypot(x, y);
            double fill = 0.0;
            if (r + half_diag <= aperture_radius) {
                fill = 1.0;
            } else if (r - half_diag < aperture_radius) {
                int inside = 0;
                for (int a = 0; a < sub; ++a) {
                    for (int b = 0; b < sub; ++b) {
                        const double sx = x + pitch * ((a + 0.5) / sub - 0.5);
                        const double sy = y + pitch * ((b + 0.5) / sub - 0.5);
                        if (std::hypot(sx, sy) < aperture_radius) ++inside;
                    }
                }
                fill = static_cast<double>(inside) / (sub * sub);
            }
            if (fill > 0.0) field.at(i, j) = std::polar(fill, -k * lens_path(r, focal_length));
        }
    }
    return field;
}

std::vector<KnifeEdgeSample> knife_edge_scan(const Psf& psf, Axis axis,
                                             std::span<const double> positions) {
    if (positions.empty()) throw Error(ErrorKind::invalid_parameter, "no knife-edge positions");
    for (double p : positions) require_finite(p, "knife-edge position");
    std::vector<KnifeEdgeSample> scan;
    scan.reserve(positions.size());
    const auto data = psf.intensity();
    const double h = psf.pitch();

    if (psf.geometry() == PsfGeometry::radial) {
        const auto& rule = detail::gauss_legendre(8);
        // Integral over [a, b] of I(r) * 2 r * arccos(x0 / r), I linear on the sample interval.
        auto segment = [&](double a, double b, double r0, double i0, double i1, double x0) {
            double s = 0.0;
            const double mid = 0.5 * (a + b);
            const double half = 0.5 * (b - a);
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double r = mid + half * rule.nodes[q];
                const double value = i0 + (i1 - i0) * (r - r0) / h;
                const double c = r > 0.0 ? std::clamp(x0 / r, -1.0, 1.0) : 0.0;
                s += rule.weights[q] * value * 2.0 * r * std::acos(c);
            }
            return s * half;
        };
        auto transmitted = [&](double x0) {
            double total = 0.0;
            const double kink = std::abs(x0);
            for (std::size_t i = 0; i + 1 < data.size(); ++i) {
                const double a = static_cast<double>(i) * h;
                const double b = a + h;
                if (x0 >= b) continue;  // edge beyond this ring entirely
                if (kink > a && kink < b) {
                    total += segment(a, kink, a, data[i], data[i + 1], x0);
                    total += segment(kink, b, a, data[i], data[i + 1], x0);
                } else {
                    total += segment(a, b, a, data[i], data[i + 1], x0);
                }
            }
            return total;
        };
        const double clear = transmitted(-psf.extent() - h);
        for (double x0 : positions) {
            scan.push_back({x0, std::clamp(transmitted(x0) / clear, 0.0, 1.0)});
        }
        return scan;
    }

    const std::size_t n = psf.size();
    std::vector<double> profile(n, 0.0);  // power per column (axis x) or row (axis y)
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            profile[axis == Axis::x ? j : i] += data[i * n + j];
        }
    }
    double total = 0.0;
    for (double p : profile) total += p;
    const double half = static_cast<double>(n / 2);
    for (double x0 : positions) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double centre = (static_cast<double>(j) - half) * h;
            const double frac = std::clamp((centre + 0.5 * h - x0) / h, 0.0, 1.0);
            sum += frac * profile[j];
        }
        scan.push_back({x0, total > 0.0 ? sum / total : 0.0});
    }
    return scan;
}

double binary_grating_efficiency(int order) noexcept {
    if (order % 2 == 0) return 0.0;
    const double m = static_cast<double>(order);
    return 4.0 / (m * m * pi * pi);
}

double fwhm(const Psf& psf, Axis axis) {
    const auto data = psf.intensity();
    const double h = psf.pitch();
    if (psf.geometry() == PsfGeometry::radial) {
        const auto peak_it = std::max_element(data.begin(), data.end());
        const double level = 0.5 * *peak_it;
        for (auto i = static_cast<std::size_t>(peak_it - data.begin()); i + 1 < data.size(); ++i) {
            if (data[i] >= level && data[i + 1] < level) {
                const double r = crossing(static_cast<double>(i) * h, data[i],
                                          static_cast<double>(i + 1) * h, data[i + 1], level);
                return 2.0 * r;
            }
        }
        throw Error(ErrorKind::invalid_parameter, "PSF does not fall to half maximum");
    }
    const std::size_t n = psf.size();
    const auto peak = static_cast<std::size_t>(std::max_element(data.begin(), data.end()) - data.begin());
    const std::size_t pi_row = peak / n;
    const std::size_t pj = peak % n;
    auto sample = [&](std::size_t idx) {
        return axis == Axis::x ? data[pi_row * n + idx] : data[idx * n + pj];
    };
    const std::size_t centre = axis == Axis::x ? pj : pi_row;
    const double level = 0.5 * data[peak];
    double right = -1.0;
    for (std::size_t i = centre; i + 1 < n; ++i) {
        if (sample(i) >= level && sample(i + 1) < level) {
            right = crossing(static_cast<double>(i), sample(i), static_cast<double>(i + 1),
                             sample(i + 1), level);
            break;
        }
    }
    double left = -1.0;
    for (std::size_t i = centre; i > 0; --i) {
        if (sample(i) >= level && sample(i - 1) < level) {
            left = crossing(static_cast<double>(i), sample(i), static_cast<double>(i - 1),
                            sample(i - 1), level);
            break;
        }
    }
    if (left < 0.0 || right < 0.0) {
        throw Error(ErrorKind::invalid_parameter, "PSF does not fall to half maximum");
    }
    return (right - left) * h;
}

double airy_fwhm(double wavelength, double numerical_aperture) {
    require_positive(wavelength, "wavelength");
    require_positive(numerical_aperture, "numerical_aperture");
    // 2 x_half / (k NA) with (2 J1(x)/x)^2 = 1/2 at x_half = 1.616339948...
    return 2.0 * 1.6163399480 * wavelength / (2.0 * pi * numerical_aperture);
}

EngineComparison compare_focal_engines(const EngineComparisonConfig& config) {
    const auto field = ideal_lens_field(config.wavelength, config.focal_length,
                                        config.aperture_radius, config.grid, config.pitch);
    const auto focal = angular_spectrum_propagate(field, config.focal_length);

    const std::size_t n_r = 601;
    const auto radial = focal_field_radial(
        ideal_pupil(config.wavelength, config.focal_length, config.aperture_radius, 1024),
        config.focal_length, config.compare_radius, n_r);

    const std::size_t c = config.grid / 2;
    const double centre_2d = std::norm(focal.at(c, c));
    const double centre_radial = radial.value(0.0, 0.0);

    EngineComparison result;
    double sum_sq = 0.0;
    for (std::size_t idx = 0; idx < config.grid; ++idx) {
        const double x = focal.coordinate(idx);
        if (std::abs(x) > config.compare_radius) continue;
        const double reference = radial.value(x, 0.0) / centre_radial;
        for (const Complex& u : {focal.at(c, idx), focal.at(idx, c)}) {
            const double d = std::norm(u) / centre_2d - reference;
            sum_sq += d * d;
            result.max_difference = std::max(result.max_difference, std::abs(d));
            ++result.samples;
        }
    }
    result.rms_difference = std::sqrt(sum_sq / static_cast<double>(result.samples));

    std::vector<double> intensity(focal.samples.size());
    std::transform(focal.samples.begin(), focal.samples.end(), intensity.begin(),
                   [](const Complex& u) { return std::norm(u); });
    result.cartesian_fwhm =
        fwhm(Psf::cartesian(std::move(intensity), config.grid, config.pitch), Axis::x);
    result.radial_fwhm = fwhm(radial);
    return result;
}

void write_psf_csv(std::ostream& out, const Psf& psf) {
    char line[96];
    const auto data = psf.intensity();
    if (psf.geometry() == PsfGeometry::radial) {
        out << "r_m,intensity\n";
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::snprintf(line, sizeof line, "%.16e,%.16e\n",
                          static_cast<double>(i) * psf.pitch(), data[i]);
            out << line;
        }
        return;
    }
    std::snprintf(line, sizeof line, "# n=%zu pitch_m=%.16e row-major\n", psf.size(), psf.pitch());
    out << line << "intensity\n";
    for (double v : data) {
        std::snprintf(line, sizeof line, "%.16e\n", v);
        out << line;
    }
}

void write_knife_edge_csv(std::ostream& out, std::span<const KnifeEdgeSample> scan) {
    out << "position_m,transmitted_fraction\n";
    char line[96];
    for (const auto& s : scan) {
        std::snprintf(line, sizeof line, "%.16e,%.16e\n", s.position, s.transmitted);
        out << line;
    }
}

}  // namespace pfl::optics
