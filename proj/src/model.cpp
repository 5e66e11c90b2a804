#include "qkr/model.hpp"

#include <cmath>

namespace qkr {

std::vector<double> ratchet_phase_sequence() {
    return {0.0, kTwoPi / 3.0, 0.0};
}

double hbar_eff_from_units(const ExperimentUnits& units) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(units.pulse_period)) throw ConfigError("units.T1 must be a positive number of seconds");
    if (!positive(units.wavelength)) throw ConfigError("units.lambda_L must be a positive number of meters");
    if (!positive(units.atom_mass)) throw ConfigError("units.M_atom must be a positive number of kilograms");

    const double k_laser = kTwoPi / units.wavelength;
    return 4.0 * kHbarSI * k_laser * k_laser * units.pulse_period / units.atom_mass;
}

SimParams validate(SimParams params) {
    if (!std::isfinite(params.kick_strength) || params.kick_strength < 0.0)
        throw ConfigError("kick_strength must be finite and >= 0");
    if (!std::isfinite(params.hbar_eff) || params.hbar_eff <= 0.0)
        throw ConfigError("hbar_eff must be finite and > 0");
    if (!std::isfinite(params.sigma) || params.sigma < 0.0)
        throw ConfigError("sigma must be finite and >= 0");
    if (params.phases.empty())
        throw ConfigError("phases must contain at least one entry");
    for (double& a : params.phases) {
        if (!std::isfinite(a)) throw ConfigError("phases must be finite");
        a = std::fmod(a, kTwoPi);
        if (a < 0.0) a += kTwoPi;
        if (a >= kTwoPi) a = 0.0;
    }
    return params;
}

SimParams make_params(double kick_strength, double hbar_eff, std::vector<double> phases,
                      std::optional<double> sigma, std::uint64_t seed) {
    SimParams p;
    p.kick_strength = kick_strength;
    p.hbar_eff = hbar_eff;
    p.phases = std::move(phases);
    p.sigma = sigma.value_or(default_sigma(hbar_eff));
    p.seed = seed;
    return validate(std::move(p));
}

}  // namespace qkr
