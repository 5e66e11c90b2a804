#pragma once

#include "qkr/distribution.hpp"
#include "qkr/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>

namespace qkr {

template <typename Scalar>
struct PhasePoint {
    Scalar x{};
    Scalar p{};
};

/// One period of the phase-shifted standard map: impulse K sin(x + a_n),
/// then free flight over unit time.
template <typename Scalar>
PhasePoint<Scalar> kick_map_step(const PhasePoint<Scalar>& pt, const SimParams& params, std::uint64_t n) {
    using std::sin;
    const Scalar p = pt.p + Scalar(params.kick_strength) * sin(pt.x + Scalar(params.phase(n)));
    return {pt.x + p, p};
}

/// Jacobian d(x', p') / d(x, p) of kick_map_step; determinant is exactly 1.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> kick_map_jacobian(const PhasePoint<Scalar>& pt, const SimParams& params,
                                              std::uint64_t n) {
    using std::cos;
    const Scalar c = Scalar(params.kick_strength) * cos(pt.x + Scalar(params.phase(n)));
    Eigen::Matrix<Scalar, 2, 2> j;
    j << Scalar(1) + c, Scalar(1),
         c,             Scalar(1);
    return j;
}

/// Points evolved under the map. Momenta stay unfolded so directed transport is visible.
struct ClassicalEnsemble {
    Eigen::ArrayXd x;
    Eigen::ArrayXd p;
    std::uint64_t n_kicks_applied = 0;

    Eigen::Index size() const noexcept { return x.size(); }
    PhasePoint<double> point(Eigen::Index i) const { return {x(i), p(i)}; }
};

/// x0 uniform on [0, 2pi), p0 ~ N(0, sigma). Deterministic in `seed` and
/// independent of thread count.
ClassicalEnsemble sample_initial_ensemble(std::size_t count, const SimParams& params, std::uint64_t seed);
inline ClassicalEnsemble sample_initial_ensemble(std::size_t count, const SimParams& params) {
    return sample_initial_ensemble(count, params, params.seed);
}

/// Applies kicks n_kicks_applied ... n_kicks_applied + n_kicks - 1.
ClassicalEnsemble evolve(ClassicalEnsemble ensemble, const SimParams& params, std::uint64_t n_kicks,
                         std::size_t threads = 1);

/// Counts of (x mod 2pi, p mod 2pi) over a bins_x by bins_p partition of the folded cell.
struct PhasePortrait {
    Eigen::Index bins_x = 0;
    Eigen::Index bins_p = 0;
    Eigen::Array<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> counts;  // (ix, ip)

    std::uint64_t total() const { return counts.sum(); }
    PhasePortrait& operator+=(const PhasePortrait& other);
};

PhasePortrait folded_phase_portrait(const ClassicalEnsemble& ensemble, Eigen::Index bins_x, Eigen::Index bins_p);

/// Normalized momentum density; points beyond the grid go to underflow/overflow.
MomentumDistribution momentum_histogram(const ClassicalEnsemble& ensemble, const MomentumGrid& grid);

/// Center of the accelerator island: map^3(q) = q - (0, 2pi) with x taken mod 2pi.
struct AcceleratorOrbit {
    PhasePoint<double> center;
    double residual = 0.0;
    int iterations = 0;
    bool stable = false;  // elliptic: |trace of the 3-step Jacobian| < 2
};

/// Composition of `steps` map steps starting at kick index `first_kick`.
PhasePoint<double> iterate_map(PhasePoint<double> pt, const SimParams& params, std::uint64_t first_kick,
                               std::uint64_t steps);

/// Newton search for the translating period-3 orbit, seeded from a
/// seeds_per_axis x seeds_per_axis grid over [0, 2pi)^2. Elliptic roots are
/// preferred over hyperbolic ones. Returns nullopt when no seed converges below
/// `tolerance`.
std::optional<AcceleratorOrbit> find_accelerator_orbit(const SimParams& params, std::uint64_t first_kick = 0,
                                                       int seeds_per_axis = 32, double tolerance = 1e-10);

}  // namespace qkr
