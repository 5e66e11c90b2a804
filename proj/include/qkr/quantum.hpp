#pragma once

#include "qkr/distribution.hpp"
#include "qkr/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace qkr {

/// Wavefunction of one Bloch vector on the momentum lattice (m + beta) * hbar_eff.
/// Slot k of `amplitudes` holds lattice index m = k - size/2, so the window is
/// m in [-size/2, size/2).
struct QuantumState {
    double beta = 0.0;
    double hbar_eff = 1.0;
    Eigen::VectorXcd amplitudes;

    Eigen::Index size() const noexcept { return amplitudes.size(); }
    Eigen::Index lattice_index(Eigen::Index k) const noexcept { return k - size() / 2; }
    double momentum(Eigen::Index k) const noexcept {
        return (static_cast<double>(lattice_index(k)) + beta) * hbar_eff;
    }
    Eigen::ArrayXd momenta() const;
    Eigen::ArrayXd density() const { return amplitudes.array().abs2(); }
    double norm() const { return amplitudes.squaredNorm(); }
    /// Probability held in the outer 5% of slots on each side of the window.
    double edge_probability() const;
};

/// Number of slots on each side counted by edge_probability().
inline Eigen::Index edge_band(Eigen::Index size) { return std::max<Eigen::Index>(1, size / 20); }

/// Plane wave of momentum p0: beta = frac(p0 / hbar_eff), unit amplitude at the
/// lattice index with (m0 + beta) * hbar_eff = p0. Throws ConfigError if that
/// index is not inside the window, away from its edge band.
QuantumState initial_state(double p0, const SimParams& params, Eigen::Index size);

/// Starting lattice size: the smallest power of two whose half-window
/// hbar_eff * size / 2 exceeds max(2 pi n / 3, 10 sigma) + 16 hbar_eff.
Eigen::Index grid_size_for(const SimParams& params, std::uint64_t n_kicks, double sigma);

/// Same state on a lattice twice as large, amplitudes re-embedded at the center.
QuantumState grow(const QuantumState& state);

/// Kick phases exp(-i K cos(x_j + a) / hbar_eff) / size on x_j = 2 pi j / size,
/// one row per distinct entry of the phase sequence.
struct KickTable {
    Eigen::Index size = 0;
    std::vector<Eigen::VectorXcd> factors;  // indexed by n mod period
};
std::shared_ptr<const KickTable> make_kick_table(const SimParams& params, Eigen::Index size);

/// Split-step Floquet operator for one Bloch vector and lattice size: kick in the
/// position representation, then free flight exp(-i p^2 / (2 hbar_eff)).
/// Holds its own FFT-aligned work buffer; not shareable between threads.
class FloquetPropagator {
public:
    FloquetPropagator(const SimParams& params, double beta, Eigen::Index size,
                      std::shared_ptr<const KickTable> kicks = nullptr);
    ~FloquetPropagator();
    FloquetPropagator(const FloquetPropagator&) = delete;
    FloquetPropagator& operator=(const FloquetPropagator&) = delete;

    Eigen::Index size() const noexcept { return size_; }
    void load(const Eigen::VectorXcd& amplitudes);
    void store(Eigen::VectorXcd& amplitudes) const;
    Eigen::Map<const Eigen::VectorXcd> amplitudes() const;
    /// Applies the Floquet operator of kick index n to the buffered state.
    void step(std::uint64_t n);

private:
    Eigen::Index size_;
    std::shared_ptr<const KickTable> kicks_;
    Eigen::VectorXcd free_flight_;
    std::complex<double>* buffer_;
    void* forward_;
    void* backward_;
};

/// One Floquet period of kick index n.
QuantumState floquet_step(QuantumState state, const SimParams& params, std::uint64_t n);

struct PropagationOptions {
    double leakage_tolerance = 1e-8;
    Eigen::Index max_size = Eigen::Index(1) << 20;
    bool adaptive = true;
};

/// Called at each recorded time with the current state.
using RecordCallback = std::function<void(std::uint64_t n_kicks, const QuantumState& state)>;

struct PropagationStats {
    QuantumState final_state;
    std::vector<Eigen::Index> size_history;  // initial size followed by each growth
    double max_norm_drift = 0.0;
};

/// Applies kicks 0 .. n_kicks-1, calling on_record after the kick counts listed in
/// record_at (sorted, each <= n_kicks; 0 records the initial state). When the edge
/// band holds more than leakage_tolerance the lattice is doubled; exceeding max_size
/// or producing non-finite amplitudes throws NumericalError.
PropagationStats propagate(QuantumState state, const SimParams& params, std::uint64_t n_kicks,
                           std::span<const std::uint64_t> record_at, const RecordCallback& on_record,
                           const PropagationOptions& options = {});

/// Density |psi_m|^2 and lattice momenta at one recorded time.
struct Snapshot {
    std::uint64_t n_kicks = 0;
    Eigen::ArrayXd momenta;
    Eigen::ArrayXd density;
};

std::vector<Snapshot> propagate(QuantumState state, const SimParams& params, std::uint64_t n_kicks,
                                std::span<const std::uint64_t> record_at,
                                const PropagationOptions& options = {});

struct MonteCarloOptions {
    std::size_t threads = 1;
    /// Fixed-size sample blocks folded in block order: bitwise identical results
    /// for any thread count. Otherwise each thread sums a contiguous range.
    bool reproducible_reduction = true;
    /// Kick horizon used to size the starting lattice; growth covers the rest.
    std::uint64_t start_horizon = 64;
    PropagationOptions propagation;
};

struct MonteCarloResult {
    std::vector<MomentumDistribution> distributions;  // one per recorded time
    std::vector<double> mean;      // sample-averaged lattice <p>
    std::vector<double> energy;    // sample-averaged lattice <p^2>
    std::map<Eigen::Index, std::size_t> final_sizes;  // lattice size -> sample count
    Eigen::Index initial_size = 0;
    double max_norm_drift = 0.0;
};

/// Incoherent average over n_samples plane waves with p0 ~ N(0, sigma). Sample s
/// draws p0 from the stream (params.seed, s). Lattice densities are deposited into
/// the bin of `grid` containing each lattice momentum.
MonteCarloResult monte_carlo_distribution(const SimParams& params, std::size_t n_samples, std::uint64_t n_kicks,
                                          std::span<const std::uint64_t> record_at, const MomentumGrid& grid,
                                          const MonteCarloOptions& options = {});

/// p0 drawn for Monte Carlo sample `index`.
double sample_initial_momentum(const SimParams& params, std::uint64_t index);

}  // namespace qkr
