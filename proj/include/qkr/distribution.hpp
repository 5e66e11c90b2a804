#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace qkr {

/// Uniform momentum grid: point k sits at origin + k * spacing, k in [0, size).
/// Each point owns the bin [p - spacing/2, p + spacing/2).
struct MomentumGrid {
    double origin = 0.0;
    double spacing = 1.0;
    Eigen::Index size = 0;

    /// Grid k * spacing for |k * spacing| <= p_max, symmetric about 0.
    static MomentumGrid symmetric(double p_max, double spacing);

    double at(Eigen::Index k) const noexcept { return origin + static_cast<double>(k) * spacing; }
    double back() const noexcept { return at(size - 1); }
    Eigen::ArrayXd values() const {
        return Eigen::ArrayXd::LinSpaced(size, origin, back());
    }
    /// Index of the bin containing p, or nullopt when p is outside every bin.
    std::optional<Eigen::Index> bin_of(double p) const noexcept;
    /// True when point k and point size-1-k are mirror images about p = 0.
    bool is_symmetric(double tol = 1e-9) const noexcept;

    bool operator==(const MomentumGrid&) const = default;
};

/// Trapezoid-rule integral of samples f spaced by h.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::ArrayBase<Derived>& f, double h) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = f.size();
    if (n == 0) return Scalar(0);
    if (n == 1) return Scalar(0);
    return h * (f.sum() - Scalar(0.5) * (f(0) + f(n - 1)));
}

/// Trapezoid weights for a grid of n points; sum(w * f) equals trapezoid(f, h).
inline Eigen::ArrayXd trapezoid_weights(Eigen::Index n, double h) {
    Eigen::ArrayXd w = Eigen::ArrayXd::Constant(n, h);
    if (n >= 2) {
        w(0) *= 0.5;
        w(n - 1) *= 0.5;
    } else if (n == 1) {
        w(0) = 0.0;
    }
    return w;
}

/// Binned momentum density Pi(p, n).
///
/// `density` integrates to one by the trapezoid rule over `grid`. Mass that fell
/// outside the grid before normalization is reported as a fraction of the total
/// in `underflow` / `overflow`.
struct MomentumDistribution {
    MomentumGrid grid;
    Eigen::ArrayXd density;
    std::uint64_t n_kicks = 0;
    std::uint64_t n_samples = 0;
    double underflow = 0.0;
    double overflow = 0.0;

    Eigen::ArrayXd momenta() const { return grid.values(); }
    double integral() const { return trapezoid(density, grid.spacing); }
};

/// Turns per-bin probability mass into a trapezoid-normalized density.
/// `lost_low` / `lost_high` are masses that fell outside the grid, in the same units as `mass`.
MomentumDistribution distribution_from_mass(const MomentumGrid& grid, const Eigen::ArrayXd& mass,
                                            double lost_low, double lost_high,
                                            std::uint64_t n_kicks, std::uint64_t n_samples);

/// Integral of |a - b| over a shared grid.
double l1_distance(const MomentumDistribution& a, const MomentumDistribution& b);

}  // namespace qkr
