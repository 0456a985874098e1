#pragma once

#include <array>
#include <cstddef>
#include <vector>

// Trapped-ion observables: two-ion Coulomb spacing, N-ion axial equilibrium,
// thermal excursion at a given temperature.
namespace pfl::trap {

struct TrapParams {
    double ion_mass = 0.0;                      // kg
    double axial_frequency = 0.0;               // Hz, along the needle axis
    double axial_frequency_uncertainty = 0.0;   // Hz, 1 sigma
    double radial_frequency = 0.0;              // Hz
    double temperature = 0.0;                   // K
    double drive_voltage = 0.0;                 // V, descriptive
    double drive_angular_frequency = 0.0;       // rad/s, descriptive

    /// Throws invalid_parameter when an invariant does not hold.
    void validate() const;
};

double atomic_mass_to_kg(double mass_u) noexcept;

/// (e^2 / (8 pi^3 eps0 M nu^2))^(1/3): equilibrium separation of two ions in a
/// harmonic well of frequency nu.
double ion_spacing(double ion_mass, double frequency);
double ion_spacing(const TrapParams& params);

/// Relative 1-sigma uncertainty of ion_spacing from the axial-frequency uncertainty.
double ion_spacing_relative_uncertainty(const TrapParams& params);

struct EquilibriumOptions {
    double gradient_tolerance = 1e-12;  // dimensionless units
    std::size_t max_iterations = 100000;
};

/// Axial equilibrium of n ions (harmonic + Coulomb), sorted, centred on the trap
/// minimum, in metres. Throws ConvergenceError with the final gradient norm.
std::vector<double> equilibrium_positions(std::size_t n_ions, const TrapParams& params,
                                          const EquilibriumOptions& options = {});

/// Same in units of the length scale (e^2 / (4 pi eps0 M omega^2))^(1/3).
std::vector<double> equilibrium_positions_scaled(std::size_t n_ions,
                                                 const EquilibriumOptions& options = {});

/// (e^2 / (4 pi eps0 M omega^2))^(1/3)
double length_scale(double ion_mass, double frequency);

/// Classical RMS excursion sqrt(k_B T / (M (2 pi nu)^2)).
double thermal_rms(double temperature, double ion_mass, double frequency);

/// Doppler cooling limit hbar Gamma / (2 k_B) for natural linewidth Gamma (rad/s).
double doppler_temperature(double linewidth);

using Vec3 = std::array<double, 3>;

/// Ions in the object plane. x runs along the needle (weak) axis, y vertical,
/// z along the optical axis.
struct IonScene {
    std::vector<Vec3> positions;       // m
    Vec3 motion_rms{0.0, 0.0, 0.0};    // m, per axis
    double emission_wavelength = 0.0;  // m

    void validate() const;
};

/// Ions on the x axis at the equilibrium positions of `params`.
IonScene linear_crystal(std::size_t n_ions, const TrapParams& params, const Vec3& motion_rms,
                        double emission_wavelength);

}  // namespace pfl::trap
