#include "doctest.h"

#include <cmath>
#include <random>

#include "pfl/analysis.hpp"
#include "pfl/design.hpp"
#include "pfl/error.hpp"
#include "pfl/optics.hpp"

using namespace pfl;
using namespace pfl::analysis;
using imaging::CcdFrame;

namespace {

CcdFrame synthetic(const GaussianParams& p, std::size_t w, std::size_t h, std::uint64_t seed = 0,
                   bool noise = false) {
    CcdFrame f;
    f.width = w;
    f.height = h;
    f.counts.resize(w * h);
    std::mt19937_64 rng(seed);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const double mu = gaussian_model(p, static_cast<double>(c), static_cast<double>(r));
            f.counts[r * w + c] = noise ? static_cast<std::int32_t>(std::poisson_distribution<int>(mu)(rng))
                                        : static_cast<std::int32_t>(std::lround(mu));
        }
    }
    return f;
}

optics::Psf gaussian_psf(double sigma, std::size_t n, double pitch) {
    std::vector<double> v(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = (static_cast<double>(j) - static_cast<double>(n / 2)) * pitch;
            const double y = (static_cast<double>(i) - static_cast<double>(n / 2)) * pitch;
            v[i * n + j] = std::exp(-(x * x + y * y) / (2 * sigma * sigma));
        }
    }
    return optics::Psf::cartesian(std::move(v), n, pitch);
}

trap::TrapParams nominal_trap() {
    trap::TrapParams p;
    p.ion_mass = trap::atomic_mass_to_kg(174.0);
    p.axial_frequency = 882e3;
    p.axial_frequency_uncertainty = 2e3;
    p.radial_frequency = 1.6e6;
    p.drive_angular_frequency = 2.0 * M_PI * 20e6;
    return p;
}

imaging::CcdModel small_ccd(std::size_t side) {
    imaging::CcdModel c;
    c.width = side;
    c.height = side;
    return c;
}

const GaussianParams reference{1000.0, 20.3, 18.7, 3.1, 2.4, 50.0};

}  // namespace

TEST_CASE("Gaussian Jacobian matches central differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 40.0);
    const auto base = reference.to_array();
    for (int k = 0; k < 100; ++k) {
        const double x = u(rng), y = u(rng);
        const auto jac = gaussian_jacobian(reference, x, y);
        for (std::size_t i = 0; i < GaussianParams::count; ++i) {
            auto hi = base, lo = base;
            const double h = 1e-6 * std::max(1.0, std::abs(base[i]));
            hi[i] += h;
            lo[i] -= h;
            const double fd = (gaussian_model(GaussianParams::from_array(hi), x, y) -
                               gaussian_model(GaussianParams::from_array(lo), x, y)) /
                              (2 * h);
            // Differences of a model with offset 50 carry ~1e-10 of rounding.
            CHECK(std::abs(jac[i] - fd) <= 1e-6 * std::abs(fd) + 1e-8);
        }
    }
}

TEST_CASE("fit recovers a noiseless Gaussian") {
    // Fractional counts would be rounded away, so fit the model itself via a large amplitude.
    GaussianParams p = reference;
    p.amplitude = 1e7;
    p.offset = 5e5;
    const auto frame = synthetic(p, 40, 40);
    const auto fit = fit_gaussian_2d(frame, frame.full());
    REQUIRE(fit.converged);
    CHECK(fit.params.center_x == doctest::Approx(p.center_x).epsilon(1e-6));
    CHECK(fit.params.center_y == doctest::Approx(p.center_y).epsilon(1e-6));
    CHECK(fit.params.sigma_x == doctest::Approx(p.sigma_x).epsilon(1e-6));
    CHECK(fit.params.sigma_y == doctest::Approx(p.sigma_y).epsilon(1e-6));
    CHECK(fit.fwhm_x() == doctest::Approx(2.3548200450309493 * fit.params.sigma_x));
}

TEST_CASE("fit is idempotent") {
    const auto frame = synthetic(reference, 40, 40, 17, true);
    const auto first = fit_gaussian_2d(frame, frame.full());
    REQUIRE(first.converged);
    const auto second = fit_gaussian_2d(frame, frame.full(), first.params);
    REQUIRE(second.converged);
    const auto a = first.params.to_array(), b = second.params.to_array();
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
    }
}

TEST_CASE("fitted widths are unbiased and uncertainties are honest") {
    const int trials = 200;
    double sum = 0.0, sum2 = 0.0, reported = 0.0, chi2 = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto frame = synthetic(reference, 40, 40, 1000 + static_cast<std::uint64_t>(t), true);
        const auto fit = fit_gaussian_2d(frame, frame.full());
        REQUIRE(fit.converged);
        sum += fit.fwhm_x();
        sum2 += fit.fwhm_x() * fit.fwhm_x();
        reported += fit.fwhm_x_uncertainty();
        chi2 += fit.reduced_chi2;
    }
    const double mean = sum / trials;
    const double sd = std::sqrt((sum2 - trials * mean * mean) / (trials - 1));
    const double truth = 2.3548200450309493 * reference.sigma_x;
    CHECK(std::abs(mean - truth) < 4.0 * sd / std::sqrt(trials) + 1e-3 * truth);
    CHECK(reported / trials == doctest::Approx(sd).epsilon(0.2));
    CHECK(chi2 / trials == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("fit error cases") {
    CcdFrame flat;
    flat.width = flat.height = 20;
    flat.counts.assign(400, 7);
    try {
        fit_gaussian_2d(flat, flat.full());
        FAIL("expected flat_field");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::flat_field);
    }
    const auto frame = synthetic(reference, 40, 40);
    CHECK_THROWS_AS(fit_gaussian_2d(frame, {0, 0, 5, 5}), Error);
    CHECK_THROWS_AS(fit_gaussian_2d(frame, {30, 30, 20, 20}), Error);
    FitOptions starved;
    starved.max_iterations = 1;
    GaussianParams far = reference;
    far.sigma_x = 9.0;
    far.center_x = 25.0;
    const auto fit = fit_gaussian_2d(synthetic(reference, 40, 40, 2, true), {0, 0, 40, 40}, far, starved);
    CHECK_FALSE(fit.converged);
}

TEST_CASE("object-plane FWHM") {
    GaussianFitResult fit;
    fit.params = reference;
    fit.converged = true;
    fit.covariance[param::sigma_x * 6 + param::sigma_x] = 0.01;
    fit.covariance[param::sigma_y * 6 + param::sigma_y] = 0.04;
    const auto obj = object_plane_fwhm(fit, 615.0, 13e-6, 9.0);
    CHECK(obj.fwhm_x == doctest::Approx(fit.fwhm_x() * 13e-6 / 615.0));
    const double rel = std::hypot(0.1 / reference.sigma_x, 9.0 / 615.0);
    CHECK(obj.fwhm_x_uncertainty == doctest::Approx(obj.fwhm_x * rel));
    const double rel_y = std::hypot(0.2 / reference.sigma_y, 9.0 / 615.0);
    CHECK(obj.fwhm_y_uncertainty == doctest::Approx(obj.fwhm_y * rel_y));
    CHECK_THROWS_AS(object_plane_fwhm(fit, 0.0, 13e-6), Error);
}

TEST_CASE("spot detection") {
    GaussianParams a = reference, b = reference;
    b.center_x = 50.0;
    b.amplitude = 600.0;
    auto frame = synthetic(a, 70, 40);
    const auto second = synthetic(b, 70, 40);
    for (std::size_t i = 0; i < frame.counts.size(); ++i) frame.counts[i] += second.counts[i] - 50;
    const auto spots = detect_spots(frame);
    REQUIRE(spots.size() == 2);
    CHECK(spots[0].x == doctest::Approx(20.3).epsilon(0.05));
    CHECK(spots[1].x == doctest::Approx(50.0).epsilon(0.05));
    CHECK(spots[0].height > spots[1].height);
}

TEST_CASE("two-ion magnification calibration") {
    const auto trap = nominal_trap();
    const double m_true = 615.0;
    imaging::ImagingSystem system{m_true, 9.0, gaussian_psf(0.18e-6, 256, 0.02e-6), 0.05};
    const auto scene = trap::linear_crystal(2, trap, {15e-9, 15e-9, 15e-9}, 369.5e-9);
    const auto ccd = small_ccd(512);
    const auto frame = imaging::render_frame(system, scene, ccd, 1.0, 2e7, 11);
    const auto cal = calibrate_magnification(frame, trap, ccd);
    REQUIRE(cal.converged);
    CHECK(std::abs(cal.magnification / m_true - 1.0) < 0.01);
    CHECK(cal.predicted_spacing == doctest::Approx(trap::ion_spacing(trap)));
    CHECK(cal.magnification_uncertainty > 0.0);
    CHECK(cal.spots[0].center_x < cal.spots[1].center_x);

    const auto single = imaging::render_frame(system, trap::linear_crystal(1, trap, {}, 369.5e-9), ccd, 1.0, 2e7, 11);
    try {
        calibrate_magnification(single, trap, ccd);
        FAIL("expected spot_count");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::spot_count);
    }
}

TEST_CASE("calibration refuses unresolved ions") {
    // Two detectable maxima 12 px apart, but each spot is ~8 px FWHM.
    GaussianParams a = reference, b = reference;
    a.center_x = 20.0;
    b.center_x = 32.0;
    a.sigma_x = b.sigma_x = a.sigma_y = b.sigma_y = 3.5;
    auto frame = synthetic(a, 56, 40);
    const auto second = synthetic(b, 56, 40);
    for (std::size_t i = 0; i < frame.counts.size(); ++i) frame.counts[i] += second.counts[i] - 50;
    REQUIRE(detect_spots(frame).size() == 2);
    try {
        calibrate_magnification(frame, nominal_trap(), small_ccd(56));
        FAIL("expected unresolvable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unresolvable);
    }
}

TEST_CASE("displacement cross-check") {
    imaging::ImagingSystem system{615.0, 9.0, gaussian_psf(0.18e-6, 256, 0.02e-6), 0.05};
    trap::IonScene scene;
    scene.positions = {{0, 0, 0}};
    scene.emission_wavelength = 369.5e-9;
    const auto ccd = small_ccd(256);
    const auto before = imaging::render_frame(system, scene, ccd, 1.0, 2e7, 1);
    const auto after = imaging::render_frame(system, imaging::displace_scene(scene, {1e-6, 0, 0}), ccd, 1.0, 2e7, 2);
    CHECK(displacement_crosscheck(before, after, 1e-6, 615.0, ccd) < 0.05);
    try {
        displacement_crosscheck(before, after, 0.0, 615.0, ccd);
        FAIL("expected divide_by_zero");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::divide_by_zero);
    }
}

TEST_CASE("Gaussian fit of the diffraction-limited spot is biased narrow") {
    // Airy-like focal spot from the radial engine, imaged noiselessly at M = 615.
    const auto spec = design::design_zoneplate(369.5e-9, 3e-3, 5e-3);
    const auto psf = optics::focal_field_radial(optics::pupil_from_zoneplate(spec, 4), 3e-3, 2e-6, 401);
    imaging::ImagingSystem system{615.0, 0.0, psf, 0.047};
    trap::IonScene scene;
    scene.positions = {{0, 0, 0}};
    scene.emission_wavelength = 369.5e-9;
    imaging::RenderOptions ro;
    ro.noise = false;
    const auto ccd = small_ccd(256);
    const auto frame = imaging::render_frame(system, scene, ccd, 1.0, 2e7, 1, ro);
    const auto fit = fit_single_spot(frame);
    REQUIRE(fit.converged);
    const auto obj = object_plane_fwhm(fit, 615.0, ccd.pixel_pitch);
    const double optical = optics::fwhm(psf);
    const double bias = obj.fwhm_x / optical - 1.0;
    MESSAGE("fitted " << obj.fwhm_x * 1e9 << " nm vs optical " << optical * 1e9 << " nm, bias "
                      << bias * 100 << " %");
    // Poisson weights let the dark rings pull the Gaussian inward.
    CHECK(bias < 0.0);
    CHECK(bias > -0.2);
    CHECK(obj.fwhm_x == doctest::Approx(obj.fwhm_y).epsilon(1e-6));
}
