#include "qkr/analysis.hpp"

#include "qkr/model.hpp"
#include "qkr/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace qkr {

void TimeSeries::push(std::uint64_t n, double v) {
    kicks.push_back(n);
    values.push_back(v);
}

void TimeSeries::check() const {
    if (kicks.size() != values.size()) throw NumericalError("time series lengths differ");
    for (std::size_t i = 1; i < kicks.size(); ++i)
        if (kicks[i] <= kicks[i - 1]) throw NumericalError("time series kicks must strictly increase");
}

Moments moments(const MomentumDistribution& dist) {
    const Eigen::ArrayXd p = dist.momenta();
    return {trapezoid(p * dist.density, dist.grid.spacing), trapezoid(p * p * dist.density, dist.grid.spacing)};
}

namespace {

double directional_energy(const MomentumDistribution& dist, bool right) {
    const Eigen::ArrayXd p = dist.momenta();
    const Eigen::ArrayXd w = trapezoid_weights(dist.grid.size, dist.grid.spacing);
    const Eigen::ArrayXd side = right ? Eigen::ArrayXd((p > 0.0).cast<double>()) : Eigen::ArrayXd((p < 0.0).cast<double>());
    return (w * side * p * p * dist.density).sum();
}

}  // namespace

double right_energy(const MomentumDistribution& dist) { return directional_energy(dist, true); }
double left_energy(const MomentumDistribution& dist) { return directional_energy(dist, false); }

FitResult fit_power_law(const TimeSeries& series, FitWindow window) {
    series.check();
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto n = static_cast<double>(series.kicks[i]);
        if (n < window.lo || n > window.hi) continue;
        if (!(series.values[i] > 0.0) || n <= 0.0)
            throw NumericalError("power-law fit needs positive values; got " + std::to_string(series.values[i]) +
                                 " at n = " + std::to_string(series.kicks[i]));
        lx.push_back(std::log(n));
        ly.push_back(std::log(series.values[i]));
    }
    if (lx.size() < 2) throw NumericalError("power-law fit window holds fewer than two points");

    const Eigen::Map<const Eigen::ArrayXd> x(lx.data(), static_cast<Eigen::Index>(lx.size()));
    const Eigen::Map<const Eigen::ArrayXd> y(ly.data(), static_cast<Eigen::Index>(ly.size()));
    const double xm = x.mean();
    const double ym = y.mean();
    const double sxx = (x - xm).square().sum();
    if (!(sxx > 0.0)) throw NumericalError("power-law fit window has a single distinct n");
    const double slope = ((x - xm) * (y - ym)).sum() / sxx;
    const double ssr = (y - ym - slope * (x - xm)).square().sum();

    FitResult r;
    r.estimate = slope;
    r.n_points = lx.size();
    r.std_error = lx.size() > 2 ? std::sqrt(ssr / static_cast<double>(lx.size() - 2) / sxx) : 0.0;
    r.window = window;
    r.residual_norm = std::sqrt(ssr);
    return r;
}

Peak track_peak(const MomentumDistribution& dist, std::uint64_t n, double halfwidth) {
    if (!(halfwidth > 0.0)) throw ConfigError("peak window half-width must be > 0");
    const double ballistic = -kTwoPi * static_cast<double>(n) / 3.0;
    const Eigen::ArrayXd p = dist.momenta();
    Eigen::Index best = -1;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (std::abs(p(k) - ballistic) > kTwoPi) continue;
        if (best < 0 || dist.density(k) > dist.density(best)) best = k;
    }
    if (best < 0)
        throw NumericalError("no grid point within 2pi of the ballistic position " + std::to_string(ballistic));
    Peak peak;
    peak.location = p(best);
    peak.halfwidth = halfwidth;
    const Eigen::ArrayXd inside = ((p - peak.location).abs() <= halfwidth + 1e-12).cast<double>();
    peak.population = (inside * dist.density).sum() * dist.grid.spacing;
    return peak;
}

double asymmetry(const MomentumDistribution& dist) {
    const Eigen::ArrayXd& rho = dist.density;
    Eigen::ArrayXd mirrored;
    if (dist.grid.is_symmetric()) {
        mirrored = rho.reverse();
    } else {
        const Eigen::ArrayXd p = dist.momenta();
        mirrored.resize(rho.size());
        for (Eigen::Index k = 0; k < rho.size(); ++k) {
            const double u = (-p(k) - dist.grid.origin) / dist.grid.spacing;
            const double f = std::floor(u);
            const auto i = static_cast<Eigen::Index>(f);
            const double t = u - f;
            auto at = [&](Eigen::Index j) { return j >= 0 && j < rho.size() ? rho(j) : 0.0; };
            mirrored(k) = (1.0 - t) * at(i) + t * at(i + 1);
        }
    }
    return 0.5 * trapezoid((rho - mirrored).abs(), dist.grid.spacing);
}

namespace {

constexpr double kPi = std::numbers::pi;

// eta (1 + eta^2)^2 e^{-eta^2 s} tanh(pi eta / 2) sech^2(pi eta / 2); the
// e^{-s} factor and the pi^2 / (32 xi) prefactor are applied by the caller.
double gogolin_kernel(double eta, double s) {
    const double e = std::exp(-kPi * eta);
    const double tanh_half = (1.0 - e) / (1.0 + e);
    const double sech2_half = 4.0 * e / ((1.0 + e) * (1.0 + e));
    const double q = 1.0 + eta * eta;
    return eta * q * q * std::exp(-eta * eta * s) * tanh_half * sech2_half;
}

// Integral of gogolin_kernel over eta in [0, inf), truncated where the kernel
// drops below 1e-16 of its running maximum.
double gogolin_reduced_integral(double s) {
    const double step = 0.25 / std::sqrt(1.0 + s);
    double peak = 0.0;
    double eta = step;
    for (;; eta += step) {
        const double v = gogolin_kernel(eta, s);
        peak = std::max(peak, v);
        if (v < 1e-16 * peak && eta > 1.0 / std::sqrt(1.0 + s)) break;
        if (eta > 200.0) break;
    }
    return integrate_adaptive([s](double t) { return gogolin_kernel(t, s); }, 0.0, eta, 1e-13).value;
}

}  // namespace

double gogolin_log_density(double p, double xi) {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw ConfigError("localization length xi must be > 0");
    const double s = std::abs(p) / (4.0 * xi);
    return std::log(kPi * kPi / (32.0 * xi)) - s + std::log(gogolin_reduced_integral(s));
}

double gogolin_density(double p, double xi) { return std::exp(gogolin_log_density(p, xi)); }

FitResult fit_gogolin(const MomentumDistribution& dist, const GogolinFitOptions& options) {
    if (!(options.xi_min > 0.0) || !(options.xi_max > options.xi_min))
        throw ConfigError("gogolin fit needs 0 < xi_min < xi_max");
    const Eigen::ArrayXd p = dist.momenta();
    std::vector<double> ps, logs;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double a = std::abs(p(k));
        if (a < options.p_exclude || a > options.p_window) continue;
        if (!(dist.density(k) > 0.0))
            throw NumericalError("density is not positive at p = " + std::to_string(p(k)) +
                                 " inside the gogolin fit window");
        ps.push_back(p(k));
        logs.push_back(std::log(dist.density(k)));
    }
    if (ps.size() < 2) throw NumericalError("gogolin fit window holds fewer than two points");

    auto residuals = [&](double xi) {
        Eigen::ArrayXd r(static_cast<Eigen::Index>(ps.size()));
        for (std::size_t i = 0; i < ps.size(); ++i) r(static_cast<Eigen::Index>(i)) = logs[i] - gogolin_log_density(ps[i], xi);
        return r;
    };
    auto objective = [&](double u) { return residuals(std::exp(u)).square().sum(); };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double lo0 = std::log(options.xi_min);
    const double hi0 = std::log(options.xi_max);
    double lo = lo0;
    double hi = hi0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = objective(c);
    double fd = objective(d);
    while (hi - lo > 1e-9) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }
    const double u = 0.5 * (lo + hi);
    const double xi = std::exp(u);
    if (u - lo0 < 1e-3 * (hi0 - lo0) || hi0 - u < 1e-3 * (hi0 - lo0)) {
        std::ostringstream msg;
        msg << "gogolin fit minimum not bracketed: xi = " << xi << " at the edge of [" << options.xi_min << ", "
            << options.xi_max << "]; objective(xi_min) = " << objective(lo0) << ", objective(xi) = " << objective(u)
            << ", objective(xi_max) = " << objective(hi0);
        throw NumericalError(msg.str());
    }

    const Eigen::ArrayXd r = residuals(xi);
    const double ssr = r.square().sum();
    const double h = 1e-4 * xi;
    const Eigen::ArrayXd jac = (residuals(xi - h) - residuals(xi + h)) / (2.0 * h);
    const double dof = static_cast<double>(std::max<std::size_t>(ps.size(), 2) - 1);

    FitResult fit;
    fit.estimate = xi;
    fit.std_error = std::sqrt(ssr / dof / jac.square().sum());
    fit.window = {options.p_exclude, options.p_window};
    fit.residual_norm = std::sqrt(ssr);
    fit.n_points = ps.size();
    return fit;
}

double front_position(const MomentumDistribution& dist, double quantile) {
    if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("front quantile must lie in (0, 1)");
    const Eigen::ArrayXd p = dist.momenta();
    const double h = dist.grid.spacing;
    double total = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (p(k) > 0.0) total += dist.density(k) * h;
    if (!(total > 0.0)) throw NumericalError("no probability at p > 0 to locate a front");
    const double target = quantile * total;
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (!(p(k) > 0.0)) continue;
        const double mass = dist.density(k) * h;
        if (cumulative + mass >= target && mass > 0.0) {
            const double lower = std::max(0.0, p(k) - 0.5 * h);
            const double upper = p(k) + 0.5 * h;
            return lower + (target - cumulative) / mass * (upper - lower);
        }
        cumulative += mass;
    }
    return dist.grid.back() + 0.5 * h;
}

FitResult front_exponent_check(std::span<const MomentumDistribution> dists, double quantile) {
    if (dists.size() < 3) throw NumericalError("front exponent needs distributions at three or more times");
    std::vector<const MomentumDistribution*> sorted;
    for (const auto& d : dists) sorted.push_back(&d);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->n_kicks < b->n_kicks; });
    TimeSeries fronts;
    for (const auto* d : sorted) fronts.push(d->n_kicks, front_position(*d, quantile));
    return fit_power_law(fronts, {static_cast<double>(fronts.kicks.front()), static_cast<double>(fronts.kicks.back())});
}

}  // namespace qkr
