#include "pfl/trap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "pfl/constants.hpp"
#include "pfl/error.hpp"

namespace pfl::trap {

using constants::pi;

void TrapParams::validate() const {
    require_positive(ion_mass, "ion_mass");
    require_positive(axial_frequency, "axial_frequency");
    require_positive(radial_frequency, "radial_frequency");
    require_finite(temperature, "temperature");
    if (temperature < 0.0) throw Error(ErrorKind::invalid_parameter, "temperature must be >= 0");
    if (!std::isfinite(axial_frequency_uncertainty) || axial_frequency_uncertainty < 0.0) {
        throw Error(ErrorKind::invalid_parameter, "axial_frequency_uncertainty must be >= 0");
    }
    require_positive(drive_angular_frequency, "drive_angular_frequency");
    const double drive_hz = drive_angular_frequency / (2.0 * pi);
    if (drive_hz <= 5.0 * std::max(axial_frequency, radial_frequency)) {
        throw Error(ErrorKind::invalid_parameter,
                    "drive frequency must exceed 5x the secular frequencies");
    }
}

double atomic_mass_to_kg(double mass_u) noexcept { return mass_u * constants::atomic_mass_unit; }

double ion_spacing(double ion_mass, double frequency) {
    require_positive(ion_mass, "ion_mass");
    require_positive(frequency, "frequency");
    const double e2 = constants::elementary_charge * constants::elementary_charge;
    return std::cbrt(e2 / (8.0 * pi * pi * pi * constants::vacuum_permittivity * ion_mass *
                           frequency * frequency));
}

double ion_spacing(const TrapParams& params) {
    return ion_spacing(params.ion_mass, params.axial_frequency);
}

double ion_spacing_relative_uncertainty(const TrapParams& params) {
    require_positive(params.axial_frequency, "axial_frequency");
    return (2.0 / 3.0) * params.axial_frequency_uncertainty / params.axial_frequency;
}

double length_scale(double ion_mass, double frequency) {
    require_positive(ion_mass, "ion_mass");
    require_positive(frequency, "frequency");
    const double omega = 2.0 * pi * frequency;
    const double e2 = constants::elementary_charge * constants::elementary_charge;
    return std::cbrt(e2 / (4.0 * pi * constants::vacuum_permittivity * ion_mass * omega * omega));
}

namespace {

// Gradient of V(u) = sum u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|.
double gradient(const std::vector<double>& u, std::vector<double>& g) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double gi = u[i];
        for (std::size_t j = 0; j < u.size(); ++j) {
            if (j == i) continue;
            const double d = u[i] - u[j];
            gi -= std::copysign(1.0 / (d * d), d);
        }
        g[i] = gi;
        norm2 += gi * gi;
    }
    return std::sqrt(norm2);
}

}  // namespace

std::vector<double> equilibrium_positions_scaled(std::size_t n_ions,
                                                 const EquilibriumOptions& options) {
    if (n_ions == 0) throw Error(ErrorKind::invalid_parameter, "n_ions must be >= 1");
    std::vector<double> u(n_ions, 0.0);
    if (n_ions == 1) return u;

    // Start from the empirical large-N spacing estimate 2.018 / n^0.559.
    const double spacing = 2.018 / std::pow(static_cast<double>(n_ions), 0.559);
    for (std::size_t i = 0; i < n_ions; ++i) {
        u[i] = (static_cast<double>(i) - 0.5 * static_cast<double>(n_ions - 1)) * spacing;
    }

    // Damped Newton. V is convex on the ordered domain, so the Hessian is positive definite
    // and the step is accepted once it keeps the ordering and lowers the gradient norm.
    std::vector<double> g(n_ions);
    std::vector<double> trial(n_ions);
    std::vector<double> trial_g(n_ions);
    double gnorm = gradient(u, g);
    for (std::size_t iter = 0; iter < options.max_iterations && gnorm >= options.gradient_tolerance;
         ++iter) {
        const auto n = static_cast<Eigen::Index>(n_ions);
        Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = std::abs(u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(j)]);
                const double c = 2.0 / (d * d * d);
                h(i, i) += c;
                h(i, j) = -c;
            }
        }
        const Eigen::VectorXd delta =
            h.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(g.data(), n));
        double step = 1.0;
        bool accepted = false;
        for (int k = 0; k < 60 && !accepted; ++k, step *= 0.5) {
            for (std::size_t i = 0; i < n_ions; ++i) {
                trial[i] = u[i] - step * delta(static_cast<Eigen::Index>(i));
            }
            if (!std::is_sorted(trial.begin(), trial.end()) ||
                std::adjacent_find(trial.begin(), trial.end()) != trial.end()) {
                continue;
            }
            accepted = gradient(trial, trial_g) < gnorm;
        }
        if (!accepted) break;
        u.swap(trial);
        gnorm = gradient(u, g);
    }
    if (gnorm >= options.gradient_tolerance) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "equilibrium search stopped with gradient norm %.3e", gnorm);
        throw ConvergenceError(msg, gnorm);
    }
    double mean = 0.0;
    for (double x : u) mean += x;
    mean /= static_cast<double>(n_ions);
    for (double& x : u) x -= mean;
    std::sort(u.begin(), u.end());
    return u;
}

std::vector<double> equilibrium_positions(std::size_t n_ions, const TrapParams& params,
                                          const EquilibriumOptions& options) {
    const double scale = length_scale(params.ion_mass, params.axial_frequency);
    auto u = equilibrium_positions_scaled(n_ions, options);
    for (double& x : u) x *= scale;
    return u;
}

double thermal_rms(double temperature, double ion_mass, double frequency) {
    require_finite(temperature, "temperature");
    if (temperature < 0.0) throw Error(ErrorKind::invalid_parameter, "temperature must be >= 0");
    require_positive(ion_mass, "ion_mass");
    require_positive(frequency, "frequency");
    const double omega = 2.0 * pi * frequency;
    return std::sqrt(constants::boltzmann * temperature / (ion_mass * omega * omega));
}

double doppler_temperature(double linewidth) {
    require_positive(linewidth, "linewidth");
    return constants::reduced_planck * linewidth / (2.0 * constants::boltzmann);
}

void IonScene::validate() const {
    require_positive(emission_wavelength, "emission_wavelength");
    for (double s : motion_rms) {
        if (!std::isfinite(s) || s < 0.0) {
            throw Error(ErrorKind::invalid_parameter, "motion_rms must be finite and >= 0");
        }
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (double c : positions[i]) require_finite(c, "ion position");
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            if (positions[i] == positions[j]) {
                throw Error(ErrorKind::invalid_parameter, "ion positions must be distinct");
            }
        }
    }
}

IonScene linear_crystal(std::size_t n_ions, const TrapParams& params, const Vec3& motion_rms,
                        double emission_wavelength) {
    IonScene scene;
    for (double x : equilibrium_positions(n_ions, params)) scene.positions.push_back({x, 0.0, 0.0});
    scene.motion_rms = motion_rms;
    scene.emission_wavelength = emission_wavelength;
    scene.validate();
    return scene;
}

}  // namespace pfl::trap
