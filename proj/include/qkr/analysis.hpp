#pragma once

#include "qkr/distribution.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qkr {

/// Observable sampled at increasing kick counts.
struct TimeSeries {
    std::vector<std::uint64_t> kicks;
    std::vector<double> values;

    void push(std::uint64_t n, double v);
    std::size_t size() const noexcept { return kicks.size(); }
    /// Throws NumericalError unless lengths match and kicks strictly increase.
    void check() const;
};

struct FitWindow {
    double lo = 0.0;
    double hi = 0.0;
};

struct FitResult {
    double estimate = 0.0;
    double std_error = 0.0;
    FitWindow window;
    double residual_norm = 0.0;
    std::size_t n_points = 0;
};

struct Moments {
    double mean = 0.0;    // <p>
    double energy = 0.0;  // <p^2>
};

/// Trapezoid-rule <p> and <p^2>.
Moments moments(const MomentumDistribution& dist);

/// Integral of p^2 Pi(p) over grid points with p > 0, using full-grid trapezoid
/// weights so that right_energy + left_energy == moments().energy.
double right_energy(const MomentumDistribution& dist);
/// Same over p < 0.
double left_energy(const MomentumDistribution& dist);

/// Least-squares slope of log(value) against log(n) over n in [window.lo, window.hi].
/// Throws NumericalError on nonpositive values or fewer than two points in the window.
FitResult fit_power_law(const TimeSeries& series, FitWindow window);

struct Peak {
    double location = 0.0;
    double population = 0.0;
    double halfwidth = 0.0;
};

/// Argmax of the density within 2pi of the ballistic position -2 pi n / 3, and the
/// probability in the bins whose centers lie within `halfwidth` of it.
Peak track_peak(const MomentumDistribution& dist, std::uint64_t n, double halfwidth);

/// A = 1/2 * integral |Pi(p) - Pi(-p)| dp, in [0, 1]. Non-symmetric grids are
/// mirrored by linear interpolation.
double asymmetry(const MomentumDistribution& dist);

/// Universal localized momentum density with localization length xi.
double gogolin_density(double p, double xi);
/// log of gogolin_density, finite far into the tails where the density underflows.
double gogolin_log_density(double p, double xi);

struct GogolinFitOptions {
    double p_window = 250.0;  // fit |p| <= p_window
    double p_exclude = 5.0;   // skip |p| < p_exclude
    double xi_min = 0.5;
    double xi_max = 5000.0;
};

/// Golden-section search in log(xi) minimizing sum (log Pi - log Pi_loc)^2.
/// Throws NumericalError with diagnostics if the minimum sits on the search bracket.
FitResult fit_gogolin(const MomentumDistribution& dist, const GogolinFitOptions& options = {});

/// Momentum below which `quantile` of the p > 0 mass lies.
double front_position(const MomentumDistribution& dist, double quantile = 0.99);

/// Power-law exponent of front_position over the given distributions (at least three,
/// distinct n_kicks). For anomalous diffusion it is expected near zeta / 2.
FitResult front_exponent_check(std::span<const MomentumDistribution> dists, double quantile = 0.99);

}  // namespace qkr
