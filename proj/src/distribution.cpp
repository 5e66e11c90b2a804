#include "qkr/distribution.hpp"

#include "qkr/model.hpp"

#include <cmath>

namespace qkr {

MomentumGrid MomentumGrid::symmetric(double p_max, double spacing) {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ConfigError("grid spacing must be > 0");
    if (!(p_max >= 0.0) || !std::isfinite(p_max)) throw ConfigError("grid p_max must be >= 0");
    const auto half = static_cast<Eigen::Index>(std::floor(p_max / spacing + 1e-9));
    return MomentumGrid{-static_cast<double>(half) * spacing, spacing, 2 * half + 1};
}

std::optional<Eigen::Index> MomentumGrid::bin_of(double p) const noexcept {
    const double k = std::floor((p - origin) / spacing + 0.5);
    if (!(k >= 0.0) || k >= static_cast<double>(size)) return std::nullopt;
    return static_cast<Eigen::Index>(k);
}

bool MomentumGrid::is_symmetric(double tol) const noexcept {
    return size > 0 && std::abs(origin + back()) <= tol * std::max(1.0, std::abs(origin));
}

MomentumDistribution distribution_from_mass(const MomentumGrid& grid, const Eigen::ArrayXd& mass,
                                            double lost_low, double lost_high,
                                            std::uint64_t n_kicks, std::uint64_t n_samples) {
    if (mass.size() != grid.size) throw NumericalError("mass vector does not match grid size");
    MomentumDistribution d;
    d.grid = grid;
    d.n_kicks = n_kicks;
    d.n_samples = n_samples;
    const double inside = mass.sum();
    const double total = inside + lost_low + lost_high;
    if (!(total > 0.0)) throw NumericalError("distribution has no mass");
    d.underflow = lost_low / total;
    d.overflow = lost_high / total;

    d.density = mass / grid.spacing;
    const double norm = trapezoid(d.density, grid.spacing);
    if (!(norm > 0.0)) throw NumericalError("distribution has no mass inside the grid interior");
    d.density /= norm;
    return d;
}

double l1_distance(const MomentumDistribution& a, const MomentumDistribution& b) {
    if (!(a.grid == b.grid)) throw NumericalError("l1_distance requires identical grids");
    return trapezoid((a.density - b.density).abs(), a.grid.spacing);
}

}  // namespace qkr
