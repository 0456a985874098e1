#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "pfl/design.hpp"
#include "pfl/error.hpp"
#include "pfl/optics.hpp"

using namespace pfl;
using namespace pfl::optics;

namespace {

constexpr double lambda = 369.5e-9;
constexpr double focal = 3e-3;
constexpr double diameter = 5e-3;

// Half-maximum of the Airy pattern [2 J1(v)/v]^2, found by bisection on std::cyl_bessel_j.
double airy_half_max_argument() {
    auto airy = [](double v) {
        const double a = 2.0 * std::cyl_bessel_j(1.0, v) / v;
        return a * a - 0.5;
    };
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (airy(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Psf gaussian_psf(double sigma, std::size_t n, double pitch) {
    std::vector<double> v(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = (static_cast<double>(j) - static_cast<double>(n / 2)) * pitch;
            const double y = (static_cast<double>(i) - static_cast<double>(n / 2)) * pitch;
            v[i * n + j] = std::exp(-(x * x + y * y) / (2 * sigma * sigma));
        }
    }
    return Psf::cartesian(std::move(v), n, pitch);
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::io;
}

struct NominalLens {
    design::ZonePlateSpec spec = design::design_zoneplate(lambda, focal, diameter);
    RadialPupil binary = pupil_from_zoneplate(spec, 4);
    RadialPupil ideal = ideal_pupil(lambda, focal, spec.aperture_radius());
};

const NominalLens& nominal_lens() {
    static const NominalLens lens;
    return lens;
}

}  // namespace

TEST_CASE("Airy FWHM") {
    const double v = airy_half_max_argument();
    CHECK(v == doctest::Approx(1.6163399483107032).epsilon(1e-10));
    CHECK(airy_fwhm(lambda, 0.5) == doctest::Approx(2.0 * v * lambda / (2.0 * M_PI * 0.5)).epsilon(1e-9));
    // Oracle script value at the nominal NA.
    CHECK(airy_fwhm(lambda, design::numerical_aperture(focal, diameter)) ==
          doctest::Approx(2.969560583640416e-07).epsilon(1e-9));
    CHECK_THROWS_AS(airy_fwhm(lambda, 0.0), Error);
}

TEST_CASE("ideal lens focal spot matches the Airy estimate") {
    const auto& lens = nominal_lens();
    const auto psf = focal_field_radial(lens.ideal, focal, 2e-6, 401);
    const double airy = airy_fwhm(lambda, design::numerical_aperture(focal, diameter));
    CHECK(std::abs(fwhm(psf) / airy - 1.0) < 0.05);
    CHECK(psf.integral() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("binary lens focuses like the ideal lens with reduced efficiency") {
    const auto& lens = nominal_lens();
    const auto binary = focal_amplitude_radial(lens.binary, focal, 2e-6, 401);
    const auto ideal = focal_amplitude_radial(lens.ideal, focal, 2e-6, 401);
    const double ratio = std::norm(binary[0]) / std::norm(ideal[0]);
    CHECK(ratio == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(0.01));

    const auto pb = focal_field_radial(lens.binary, focal, 2e-6, 401);
    const auto pi = focal_field_radial(lens.ideal, focal, 2e-6, 401);
    CHECK(std::abs(fwhm(pb) / fwhm(pi) - 1.0) < 0.05);
}

TEST_CASE("zone parity only flips the global phase") {
    const auto spec = design::design_zoneplate(lambda, 100e-6, 40e-6);
    design::DesignOptions opt;
    opt.parity = design::ZoneParity::center_etched;
    const auto flipped = design::design_zoneplate(lambda, 100e-6, 40e-6, opt);
    const auto a = focal_amplitude_radial(pupil_from_zoneplate(spec, 8), 100e-6, 2e-6, 101);
    const auto b = focal_amplitude_radial(pupil_from_zoneplate(flipped, 8), 100e-6, 2e-6, 101);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::norm(a[i]) == doctest::Approx(std::norm(b[i])).epsilon(1e-10));
    }
}

TEST_CASE("radial and Cartesian engines agree") {
    const auto cmp = compare_focal_engines({});
    CHECK(cmp.samples > 0);
    CHECK(cmp.rms_difference < 0.01);
    CHECK(std::abs(cmp.radial_fwhm / cmp.cartesian_fwhm - 1.0) < 0.01);
}

TEST_CASE("radial engine refuses under-resolved pupils") {
    auto pupil = pupil_from_zoneplate(design::design_zoneplate(lambda, focal, diameter), 4);
    pupil.lens_focal_length = 0.0;
    pupil.edges = {0.0, 2.5e-3};
    pupil.transmission = {Complex(1.0)};
    CHECK(kind_of([&] { focal_amplitude_radial(pupil, focal, 2e-6, 11); }) == ErrorKind::aliasing);
    CHECK(kind_of([&] { pupil_from_zoneplate(design::design_zoneplate(lambda, focal, diameter), 2); }) ==
          ErrorKind::invalid_parameter);
    CHECK(kind_of([&] { focal_amplitude_radial(nominal_lens().ideal, -1.0, 2e-6, 11); }) ==
          ErrorKind::invalid_parameter);
}

TEST_CASE("angular spectrum: zero distance is the identity") {
    const auto field = ideal_lens_field(lambda, 100e-6, 10e-6, 128, 0.2e-6);
    const auto same = angular_spectrum_propagate(field, 0.0);
    for (std::size_t i = 0; i < field.samples.size(); ++i) {
        CHECK(same.samples[i] == field.samples[i]);
    }
}

TEST_CASE("angular spectrum conserves power and composes") {
    ScalarField field(128, 0.25e-6, lambda);
    // Smooth Gaussian beam: no evanescent content, nothing lost to the band limit.
    for (std::size_t i = 0; i < field.n; ++i) {
        for (std::size_t j = 0; j < field.n; ++j) {
            const double x = field.coordinate(j), y = field.coordinate(i);
            field.at(i, j) = std::exp(-(x * x + y * y) / (2 * 2e-6 * 2e-6)) *
                             std::polar(1.0, 1e5 * x);
        }
    }
    const double p0 = field.power();
    const auto a = angular_spectrum_propagate(field, 5e-6);
    CHECK(a.power() == doctest::Approx(p0).epsilon(1e-9));
    const auto ab = angular_spectrum_propagate(a, 3e-6);
    const auto direct = angular_spectrum_propagate(field, 8e-6);
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < field.samples.size(); ++i) {
        diff += std::norm(ab.samples[i] - direct.samples[i]);
        norm += std::norm(direct.samples[i]);
    }
    CHECK(std::sqrt(diff / norm) < 1e-9);
    const auto back = angular_spectrum_propagate(a, -5e-6);
    diff = 0.0;
    for (std::size_t i = 0; i < field.samples.size(); ++i) diff += std::norm(back.samples[i] - field.samples[i]);
    CHECK(std::sqrt(diff / (p0 / (field.pitch * field.pitch))) < 1e-9);
}

TEST_CASE("angular spectrum drops evanescent components") {
    ScalarField field(64, lambda / 4.0, lambda);
    // Checkerboard: spatial frequency far beyond 1/lambda.
    for (std::size_t i = 0; i < field.n; ++i) {
        for (std::size_t j = 0; j < field.n; ++j) field.at(i, j) = ((i + j) % 2) ? 1.0 : -1.0;
    }
    const auto out = angular_spectrum_propagate(field, 1e-6);
    CHECK(out.power() < 1e-20);
}

TEST_CASE("knife edge of a Gaussian") {
    const double sigma = 0.2e-6;
    const auto psf = gaussian_psf(sigma, 256, 0.01e-6);
    const std::vector<double> pos{-10 * sigma, 0.0, 10 * sigma};
    const auto scan = knife_edge_scan(psf, Axis::x, pos);
    CHECK(scan[0].transmitted == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(scan[1].transmitted == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(scan[2].transmitted == doctest::Approx(0.0).epsilon(1e-9));

    // 10-90 width of the error-function edge, frozen from the oracle script.
    auto at = [&](double x) {
        const std::vector<double> p{x};
        return knife_edge_scan(psf, Axis::x, p)[0].transmitted;
    };
    auto crossing = [&](double level) {
        double lo = -5 * sigma, hi = 5 * sigma;
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            (at(mid) > level ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double width = crossing(0.1) - crossing(0.9);
    CHECK(width / sigma == doctest::Approx(2.5631031310892009).epsilon(1e-3));
}

TEST_CASE("knife edge is monotone for radial PSFs") {
    const auto psf = focal_field_radial(nominal_lens().ideal, focal, 2e-6, 401);
    std::vector<double> pos;
    for (int i = -200; i <= 200; ++i) pos.push_back(i * 10e-9);
    const auto scan = knife_edge_scan(psf, Axis::y, pos);
    for (std::size_t i = 1; i < scan.size(); ++i) {
        CHECK(scan[i].transmitted <= scan[i - 1].transmitted + 1e-12);
    }
    CHECK(scan[200].transmitted == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(scan.front().transmitted == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(scan.back().transmitted == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("binary grating efficiencies") {
    CHECK(binary_grating_efficiency(0) == 0.0);
    CHECK(binary_grating_efficiency(1) == doctest::Approx(0.40528473456935109).epsilon(1e-12));
    CHECK(binary_grating_efficiency(-1) == binary_grating_efficiency(1));
    CHECK(binary_grating_efficiency(2) == 0.0);
    CHECK(binary_grating_efficiency(3) == doctest::Approx(0.045031637174372343).epsilon(1e-12));
    double total = 0.0;
    for (int m = -20001; m <= 20001; ++m) total += binary_grating_efficiency(m);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("PSF normalization and scaling") {
    auto psf = gaussian_psf(0.15e-6, 64, 0.02e-6);
    CHECK(psf.integral() == doctest::Approx(1.0).epsilon(1e-12));
    const auto big = psf.scaled(615.0, ReferencePlane::image);
    CHECK(big.plane() == ReferencePlane::image);
    CHECK(big.integral() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fwhm(big) == doctest::Approx(615.0 * fwhm(psf)).epsilon(1e-9));
    CHECK(fwhm(psf) == doctest::Approx(0.15e-6 * 2.3548200450309493).epsilon(2e-3));

    std::vector<double> r(50);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::exp(-0.1 * static_cast<double>(i));
    const auto radial = Psf::radial(r, 1e-8);
    CHECK(radial.integral() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(radial.value(0, 0) > radial.value(1e-8, 0));
    CHECK(radial.value(1, 0) == 0.0);
    CHECK_THROWS_AS(Psf::radial({0.0, 0.0}, 1e-8), Error);
    CHECK_THROWS_AS(Psf::cartesian({1.0, 1.0, 1.0}, 2, 1e-8), Error);
}

TEST_CASE("PSF CSV round trip format") {
    std::vector<double> r{1.0, 0.5, 0.0};
    const auto psf = Psf::radial(r, 1e-7);
    std::ostringstream out;
    write_psf_csv(out, psf);
    CHECK(out.str().rfind("r_m,intensity\n", 0) == 0);
    std::ostringstream ke;
    const std::vector<KnifeEdgeSample> scan{{0.0, 0.5}};
    write_knife_edge_csv(ke, scan);
    CHECK(ke.str().rfind("position_m,transmitted_fraction\n", 0) == 0);
}
