#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkr {

/// Invalid user-supplied configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Propagation or fit failure. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system or data-file format failure. Maps to CLI exit code 4.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduced Planck constant, J s (CODATA 2018, exact in SI).
inline constexpr double kHbarSI = 1.054571817e-34;
/// Cesium-133 atomic mass, kg.
inline constexpr double kCesiumMass = 132.905451961 * 1.66053906660e-27;
/// Cesium D2 line wavelength, m.
inline constexpr double kCesiumD2Wavelength = 852.0e-9;

/// Laboratory parameters that fix the effective Planck constant.
struct ExperimentUnits {
    double pulse_period = 0.0;  // T1, seconds
    double wavelength = 0.0;    // lambda_L, meters
    double atom_mass = 0.0;     // M, kilograms
};

/// Physical configuration of the kicked rotor.
///
/// The kick train is K * cos(x + a_n) delta(t - n) with a_n = phases[n mod period],
/// the first delivered kick having index n = 0.
struct SimParams {
    double kick_strength = 0.0;
    double hbar_eff = 1.0;
    std::vector<double> phases{0.0};
    double sigma = 0.0;
    std::uint64_t seed = 0;

    std::size_t period() const noexcept { return phases.size(); }
    double phase(std::uint64_t n) const noexcept { return phases[n % phases.size()]; }
};

/// Period-3 sequence (0, 2pi/3, 0) that breaks parity and supports a
/// single leftward accelerator mode.
std::vector<double> ratchet_phase_sequence();

/// hbar_eff = 4 hbar k_L^2 T1 / M with k_L = 2 pi / lambda_L.
double hbar_eff_from_units(const ExperimentUnits& units);

/// Thermal-cloud width used by the experiment, in dimensionless momentum.
inline double default_sigma(double hbar_eff) { return 1.65 * hbar_eff; }

/// Checks every SimParams invariant and folds phases into [0, 2pi).
/// Throws ConfigError naming the offending field.
SimParams validate(SimParams params);

/// Convenience constructor; sigma defaults to 1.65 * hbar_eff.
SimParams make_params(double kick_strength, double hbar_eff, std::vector<double> phases,
                      std::optional<double> sigma = std::nullopt, std::uint64_t seed = 0);

}  // namespace qkr
