#include "qkr/classical.hpp"

#include "qkr/parallel.hpp"

#include <random>

namespace qkr {

namespace {

constexpr Eigen::Index kChunk = 4096;

Eigen::Index chunk_count(Eigen::Index n) { return (n + kChunk - 1) / kChunk; }

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a >= kTwoPi ? 0.0 : a;
}

double wrap_signed(double a) {
    a = wrap_angle(a + std::numbers::pi);
    return a - std::numbers::pi;
}

}  // namespace

ClassicalEnsemble sample_initial_ensemble(std::size_t count, const SimParams& params, std::uint64_t seed) {
    if (count == 0) throw ConfigError("classical ensemble needs at least one point");
    const auto n = static_cast<Eigen::Index>(count);
    ClassicalEnsemble e;
    e.x.resize(n);
    e.p.resize(n);
    for (Eigen::Index c = 0; c < chunk_count(n); ++c) {
        auto rng = stream_engine(seed, static_cast<std::uint64_t>(c));
        std::uniform_real_distribution<double> angle(0.0, kTwoPi);
        std::normal_distribution<double> gauss(0.0, params.sigma > 0.0 ? params.sigma : 1.0);
        const Eigen::Index end = std::min(n, (c + 1) * kChunk);
        for (Eigen::Index i = c * kChunk; i < end; ++i) {
            e.x(i) = angle(rng);
            e.p(i) = params.sigma > 0.0 ? gauss(rng) : 0.0;
        }
    }
    return e;
}

ClassicalEnsemble evolve(ClassicalEnsemble ensemble, const SimParams& params, std::uint64_t n_kicks,
                         std::size_t threads) {
    if (n_kicks == 0) return ensemble;
    const Eigen::Index n = ensemble.size();
    const double K = params.kick_strength;
    const std::uint64_t first = ensemble.n_kicks_applied;
    parallel_for(static_cast<std::size_t>(chunk_count(n)), threads, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
        const Eigen::Index len = std::min(kChunk, n - begin);
        auto xs = ensemble.x.segment(begin, len);
        auto ps = ensemble.p.segment(begin, len);
        for (std::uint64_t k = first; k < first + n_kicks; ++k) {
            ps += K * (xs + params.phase(k)).sin();
            xs += ps;
        }
    });
    ensemble.n_kicks_applied += n_kicks;
    if (!ensemble.p.allFinite() || !ensemble.x.allFinite())
        throw NumericalError("classical ensemble produced non-finite coordinates");
    return ensemble;
}

PhasePortrait& PhasePortrait::operator+=(const PhasePortrait& other) {
    if (bins_x != other.bins_x || bins_p != other.bins_p)
        throw NumericalError("cannot superpose portraits with different binning");
    counts += other.counts;
    return *this;
}

PhasePortrait folded_phase_portrait(const ClassicalEnsemble& ensemble, Eigen::Index bins_x, Eigen::Index bins_p) {
    if (bins_x < 1 || bins_p < 1) throw ConfigError("portrait needs at least one bin per axis");
    PhasePortrait portrait{bins_x, bins_p, {}};
    portrait.counts.setZero(bins_x, bins_p);
    for (Eigen::Index i = 0; i < ensemble.size(); ++i) {
        const auto ix = std::min(bins_x - 1, static_cast<Eigen::Index>(wrap_angle(ensemble.x(i)) / kTwoPi * bins_x));
        const auto ip = std::min(bins_p - 1, static_cast<Eigen::Index>(wrap_angle(ensemble.p(i)) / kTwoPi * bins_p));
        ++portrait.counts(ix, ip);
    }
    return portrait;
}

MomentumDistribution momentum_histogram(const ClassicalEnsemble& ensemble, const MomentumGrid& grid) {
    Eigen::ArrayXd mass = Eigen::ArrayXd::Zero(grid.size);
    double low = 0.0;
    double high = 0.0;
    for (Eigen::Index i = 0; i < ensemble.size(); ++i) {
        const double p = ensemble.p(i);
        if (auto k = grid.bin_of(p)) {
            mass(*k) += 1.0;
        } else if (p < grid.origin) {
            low += 1.0;
        } else {
            high += 1.0;
        }
    }
    return distribution_from_mass(grid, mass, low, high, ensemble.n_kicks_applied,
                                  static_cast<std::uint64_t>(ensemble.size()));
}

PhasePoint<double> iterate_map(PhasePoint<double> pt, const SimParams& params, std::uint64_t first_kick,
                               std::uint64_t steps) {
    for (std::uint64_t k = 0; k < steps; ++k) pt = kick_map_step(pt, params, first_kick + k);
    return pt;
}

std::optional<AcceleratorOrbit> find_accelerator_orbit(const SimParams& params, std::uint64_t first_kick,
                                                       int seeds_per_axis, double tolerance) {
    constexpr std::uint64_t period = 3;
    constexpr int kMaxIterations = 60;

    // F(q) = map^period(q) - q + (0, 2pi), x component wrapped into (-pi, pi].
    auto residual = [&](const PhasePoint<double>& q, Eigen::Matrix2d* jac) {
        PhasePoint<double> r = q;
        Eigen::Matrix2d j = Eigen::Matrix2d::Identity();
        for (std::uint64_t k = 0; k < period; ++k) {
            j = kick_map_jacobian(r, params, first_kick + k) * j;
            r = kick_map_step(r, params, first_kick + k);
        }
        if (jac) *jac = j - Eigen::Matrix2d::Identity();
        return Eigen::Vector2d(wrap_signed(r.x - q.x), r.p - q.p + kTwoPi);
    };

    std::optional<AcceleratorOrbit> best;
    for (int sx = 0; sx < seeds_per_axis; ++sx) {
        for (int sp = 0; sp < seeds_per_axis; ++sp) {
            PhasePoint<double> q{kTwoPi * (sx + 0.5) / seeds_per_axis, kTwoPi * (sp + 0.5) / seeds_per_axis};
            Eigen::Matrix2d jac;
            for (int it = 1; it <= kMaxIterations; ++it) {
                const Eigen::Vector2d f = residual(q, &jac);
                if (!f.allFinite()) break;
                if (f.norm() < tolerance) {
                    const double trace = (jac + Eigen::Matrix2d::Identity()).trace();
                    AcceleratorOrbit orbit{{wrap_angle(q.x), q.p}, f.norm(), it, std::abs(trace) < 2.0};
                    if (!best || (orbit.stable && !best->stable) ||
                        (orbit.stable == best->stable && orbit.residual < best->residual))
                        best = orbit;
                    break;
                }
                const double det = jac.determinant();
                if (std::abs(det) < 1e-14) break;
                const Eigen::Vector2d dq = jac.inverse() * f;
                q.x -= dq(0);
                q.p -= dq(1);
                if (std::abs(q.p) > 1e3) break;
            }
            if (best && best->stable) return best;
        }
    }
    return best;
}

}  // namespace qkr
