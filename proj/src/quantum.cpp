#include "qkr/quantum.hpp"

#include "qkr/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <optional>
#include <random>
#include <string>

namespace qkr {

namespace {

using cd = std::complex<double>;

// fftw planning is not thread-safe; execution with new-array functions is.
// Plans use FFTW_ESTIMATE so the chosen algorithm, and therefore every bit of
// the output, does not depend on timing.
struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.forward);
            fftw_destroy_plan(p.backward);
        }
    }

    PlanPair get(Eigen::Index n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        auto* scratch = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n)));
        PlanPair p;
        p.forward = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, FFTW_FORWARD, FFTW_ESTIMATE);
        p.backward = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_free(scratch);
        if (!p.forward || !p.backward) throw NumericalError("FFT planning failed for size " + std::to_string(n));
        plans_.emplace(n, p);
        return p;
    }

private:
    std::mutex mutex_;
    std::map<Eigen::Index, PlanPair> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

Eigen::Index next_pow2(Eigen::Index n) {
    return static_cast<Eigen::Index>(std::bit_ceil(static_cast<std::uint64_t>(std::max<Eigen::Index>(n, 2))));
}

void check_size(Eigen::Index size) {
    if (size < 2 || size % 2 != 0) throw ConfigError("lattice size must be even and >= 2");
}

}  // namespace

Eigen::ArrayXd QuantumState::momenta() const {
    const Eigen::Index n = size();
    return (Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) - static_cast<double>(n / 2) + beta) *
           hbar_eff;
}

double QuantumState::edge_probability() const {
    const Eigen::Index band = std::min(edge_band(size()), size() / 2);
    return amplitudes.head(band).squaredNorm() + amplitudes.tail(band).squaredNorm();
}

QuantumState initial_state(double p0, const SimParams& params, Eigen::Index size) {
    check_size(size);
    if (!std::isfinite(p0)) throw ConfigError("initial momentum must be finite");
    const double r = p0 / params.hbar_eff;
    const double m0 = std::floor(r);
    QuantumState s;
    s.hbar_eff = params.hbar_eff;
    s.beta = r - m0;
    if (s.beta >= 1.0) s.beta = 0.0;
    const double slot = m0 + static_cast<double>(size / 2);
    const auto band = static_cast<double>(edge_band(size));
    if (!(slot >= band && slot < static_cast<double>(size) - band))
        throw ConfigError("initial momentum " + std::to_string(p0) + " lies outside the lattice window of size " +
                          std::to_string(size));
    s.amplitudes = Eigen::VectorXcd::Zero(size);
    s.amplitudes(static_cast<Eigen::Index>(slot)) = 1.0;
    return s;
}

Eigen::Index grid_size_for(const SimParams& params, std::uint64_t n_kicks, double sigma) {
    const double ballistic = kTwoPi * static_cast<double>(n_kicks) / 3.0;
    const double window = std::max(ballistic, 10.0 * sigma) + 16.0 * params.hbar_eff;
    const auto half = static_cast<Eigen::Index>(std::floor(window / params.hbar_eff)) + 1;
    return next_pow2(2 * half);
}

QuantumState grow(const QuantumState& state) {
    QuantumState g;
    g.beta = state.beta;
    g.hbar_eff = state.hbar_eff;
    const Eigen::Index n = state.size();
    g.amplitudes = Eigen::VectorXcd::Zero(2 * n);
    g.amplitudes.segment(n / 2, n) = state.amplitudes;
    return g;
}

std::shared_ptr<const KickTable> make_kick_table(const SimParams& params, Eigen::Index size) {
    check_size(size);
    auto table = std::make_shared<KickTable>();
    table->size = size;
    const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(size, 0.0, static_cast<double>(size - 1)) *
                             (kTwoPi / static_cast<double>(size));
    const double scale = 1.0 / static_cast<double>(size);
    const double strength = params.kick_strength / params.hbar_eff;
    table->factors.reserve(params.period());
    for (std::size_t i = 0; i < params.period(); ++i) {
        const Eigen::ArrayXd phase = -strength * (x + params.phases[i]).cos();
        Eigen::VectorXcd f(size);
        for (Eigen::Index j = 0; j < size; ++j) f(j) = std::polar(scale, phase(j));
        table->factors.push_back(std::move(f));
    }
    return table;
}

FloquetPropagator::FloquetPropagator(const SimParams& params, double beta, Eigen::Index size,
                                     std::shared_ptr<const KickTable> kicks)
    : size_(size), kicks_(std::move(kicks)) {
    check_size(size);
    if (!kicks_) kicks_ = make_kick_table(params, size);
    if (kicks_->size != size) throw NumericalError("kick table size does not match propagator size");

    free_flight_.resize(size);
    for (Eigen::Index k = 0; k < size; ++k) {
        const double m = static_cast<double>(k - size / 2) + beta;
        free_flight_(k) = std::polar(1.0, -0.5 * m * m * params.hbar_eff);
    }

    const PlanPair plans = plan_cache().get(size);
    forward_ = plans.forward;
    backward_ = plans.backward;
    buffer_ = reinterpret_cast<cd*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(size)));
    if (!buffer_) throw std::bad_alloc();
    std::fill(buffer_, buffer_ + size, cd{});
}

FloquetPropagator::~FloquetPropagator() { fftw_free(buffer_); }

void FloquetPropagator::load(const Eigen::VectorXcd& amplitudes) {
    if (amplitudes.size() != size_) throw NumericalError("state size does not match propagator size");
    std::copy(amplitudes.data(), amplitudes.data() + size_, buffer_);
}

void FloquetPropagator::store(Eigen::VectorXcd& amplitudes) const {
    amplitudes = Eigen::Map<const Eigen::VectorXcd>(buffer_, size_);
}

Eigen::Map<const Eigen::VectorXcd> FloquetPropagator::amplitudes() const {
    return Eigen::Map<const Eigen::VectorXcd>(buffer_, size_);
}

void FloquetPropagator::step(std::uint64_t n) {
    auto* data = reinterpret_cast<fftw_complex*>(buffer_);
    Eigen::Map<Eigen::VectorXcd> psi(buffer_, size_);
    // Slot k carries an extra (-1)^j in position space; it cancels between the two transforms.
    fftw_execute_dft(static_cast<fftw_plan>(backward_), data, data);
    psi.array() *= kicks_->factors[n % kicks_->factors.size()].array();
    fftw_execute_dft(static_cast<fftw_plan>(forward_), data, data);
    psi.array() *= free_flight_.array();
}

QuantumState floquet_step(QuantumState state, const SimParams& params, std::uint64_t n) {
    FloquetPropagator prop(params, state.beta, state.size());
    prop.load(state.amplitudes);
    prop.step(n);
    prop.store(state.amplitudes);
    return state;
}

namespace {

using KickTableProvider = std::function<std::shared_ptr<const KickTable>(Eigen::Index)>;

PropagationStats propagate_with(QuantumState state, const SimParams& params, std::uint64_t n_kicks,
                                std::span<const std::uint64_t> record_at, const RecordCallback& on_record,
                                const PropagationOptions& options, const KickTableProvider& tables) {
    if (!std::is_sorted(record_at.begin(), record_at.end()))
        throw ConfigError("record times must be sorted");
    if (!record_at.empty() && record_at.back() > n_kicks)
        throw ConfigError("record time exceeds the number of kicks");

    PropagationStats stats;
    stats.size_history.push_back(state.size());
    auto next_record = record_at.begin();

    auto track_norm = [&](double norm) {
        if (!std::isfinite(norm)) throw NumericalError("propagation produced non-finite amplitudes");
        stats.max_norm_drift = std::max(stats.max_norm_drift, std::abs(norm - 1.0));
    };
    auto emit = [&](std::uint64_t n) {
        while (next_record != record_at.end() && *next_record == n) {
            track_norm(state.norm());
            if (on_record) on_record(n, state);
            ++next_record;
        }
    };

    emit(0);
    auto make = [&](Eigen::Index size) {
        return std::make_unique<FloquetPropagator>(params, state.beta, size, tables ? tables(size) : nullptr);
    };
    auto prop = make(state.size());
    prop->load(state.amplitudes);
    for (std::uint64_t n = 0; n < n_kicks; ++n) {
        prop->step(n);
        const auto psi = prop->amplitudes();
        const Eigen::Index band = std::min(edge_band(psi.size()), psi.size() / 2);
        const double edge = psi.head(band).squaredNorm() + psi.tail(band).squaredNorm();
        if (!std::isfinite(edge)) throw NumericalError("propagation produced non-finite amplitudes");
        if (options.adaptive && edge > options.leakage_tolerance) {
            if (2 * prop->size() > options.max_size)
                throw NumericalError("lattice size cap " + std::to_string(options.max_size) +
                                     " exceeded at kick " + std::to_string(n + 1));
            prop->store(state.amplitudes);
            state = grow(state);
            stats.size_history.push_back(state.size());
            prop = make(state.size());
            prop->load(state.amplitudes);
        }
        const bool recording = next_record != record_at.end() && *next_record == n + 1;
        if (recording || n + 1 == n_kicks || (n + 1) % 1024 == 0) {
            prop->store(state.amplitudes);
            track_norm(state.norm());
        }
        if (recording) emit(n + 1);
    }
    prop->store(state.amplitudes);
    stats.final_state = std::move(state);
    return stats;
}

}  // namespace

PropagationStats propagate(QuantumState state, const SimParams& params, std::uint64_t n_kicks,
                           std::span<const std::uint64_t> record_at, const RecordCallback& on_record,
                           const PropagationOptions& options) {
    return propagate_with(std::move(state), params, n_kicks, record_at, on_record, options, nullptr);
}

std::vector<Snapshot> propagate(QuantumState state, const SimParams& params, std::uint64_t n_kicks,
                                std::span<const std::uint64_t> record_at, const PropagationOptions& options) {
    std::vector<Snapshot> out;
    propagate(std::move(state), params, n_kicks, record_at,
              [&](std::uint64_t n, const QuantumState& s) { out.push_back({n, s.momenta(), s.density()}); },
              options);
    return out;
}

double sample_initial_momentum(const SimParams& params, std::uint64_t index) {
    if (params.sigma <= 0.0) return 0.0;
    auto rng = stream_engine(params.seed, index);
    std::normal_distribution<double> gauss(0.0, params.sigma);
    return gauss(rng);
}

namespace {

// Per-record running sums for a slice of samples.
struct Accumulator {
    std::vector<Eigen::ArrayXd> mass;
    std::vector<double> low, high, mean, energy;
    double max_norm_drift = 0.0;
    std::map<Eigen::Index, std::size_t> final_sizes;

    Accumulator(std::size_t records, Eigen::Index bins)
        : mass(records, Eigen::ArrayXd::Zero(bins)), low(records, 0.0), high(records, 0.0),
          mean(records, 0.0), energy(records, 0.0) {}

    Accumulator& operator+=(const Accumulator& o) {
        for (std::size_t r = 0; r < mass.size(); ++r) {
            mass[r] += o.mass[r];
            low[r] += o.low[r];
            high[r] += o.high[r];
            mean[r] += o.mean[r];
            energy[r] += o.energy[r];
        }
        max_norm_drift = std::max(max_norm_drift, o.max_norm_drift);
        for (const auto& [size, count] : o.final_sizes) final_sizes[size] += count;
        return *this;
    }
};

class KickTableCache {
public:
    explicit KickTableCache(const SimParams& params) : params_(params) {}
    std::shared_ptr<const KickTable> get(Eigen::Index size) {
        std::lock_guard lock(mutex_);
        auto& slot = tables_[size];
        if (!slot) slot = make_kick_table(params_, size);
        return slot;
    }

private:
    const SimParams& params_;
    std::mutex mutex_;
    std::map<Eigen::Index, std::shared_ptr<const KickTable>> tables_;
};

}  // namespace

MonteCarloResult monte_carlo_distribution(const SimParams& params, std::size_t n_samples, std::uint64_t n_kicks,
                                          std::span<const std::uint64_t> record_at, const MomentumGrid& grid,
                                          const MonteCarloOptions& options) {
    if (n_samples == 0) throw ConfigError("quantum run needs at least one sample");
    if (!std::is_sorted(record_at.begin(), record_at.end()) ||
        std::adjacent_find(record_at.begin(), record_at.end()) != record_at.end())
        throw ConfigError("record times must be strictly increasing");
    if (!record_at.empty() && record_at.back() > n_kicks)
        throw ConfigError("record time exceeds the number of kicks");
    if (grid.size < 1) throw ConfigError("output grid is empty");

    const std::size_t records = record_at.size();
    const Eigen::Index start_size = grid_size_for(params, std::min(n_kicks, options.start_horizon), params.sigma);
    KickTableCache kick_tables(params);

    // Runs one sample and adds its densities into acc.
    auto run_sample = [&](std::size_t s, Accumulator& acc) {
        const double p0 = sample_initial_momentum(params, s);
        Eigen::Index size = start_size;
        while (std::abs(p0) / params.hbar_eff + 1.0 >= static_cast<double>(size / 2 - edge_band(size)))
            size *= 2;
        QuantumState state = initial_state(p0, params, size);
        std::size_t r = 0;
        auto deposit = [&](std::uint64_t, const QuantumState& st) {
            auto& mass = acc.mass[r];
            double m1 = 0.0;
            double m2 = 0.0;
            for (Eigen::Index k = 0; k < st.size(); ++k) {
                const double w = std::norm(st.amplitudes(k));
                const double p = st.momentum(k);
                m1 += w * p;
                m2 += w * p * p;
                if (auto b = grid.bin_of(p)) {
                    mass(*b) += w;
                } else if (p < grid.origin) {
                    acc.low[r] += w;
                } else {
                    acc.high[r] += w;
                }
            }
            acc.mean[r] += m1;
            acc.energy[r] += m2;
            ++r;
        };

        const auto stats = propagate_with(std::move(state), params, n_kicks, record_at, deposit,
                                          options.propagation,
                                          [&](Eigen::Index n) { return kick_tables.get(n); });
        acc.max_norm_drift = std::max(acc.max_norm_drift, stats.max_norm_drift);
        ++acc.final_sizes[stats.final_state.size()];
    };

    Accumulator total(records, grid.size);
    const std::size_t threads = resolve_threads(options.threads);
    if (options.reproducible_reduction) {
        constexpr std::size_t kBlock = 32;
        const std::size_t blocks = (n_samples + kBlock - 1) / kBlock;
        std::mutex fold_mutex;
        std::size_t next_to_fold = 0;
        std::map<std::size_t, Accumulator> pending;
        parallel_for(blocks, threads, [&](std::size_t b) {
            Accumulator acc(records, grid.size);
            for (std::size_t s = b * kBlock; s < std::min(n_samples, (b + 1) * kBlock); ++s) run_sample(s, acc);
            std::lock_guard lock(fold_mutex);
            pending.emplace(b, std::move(acc));
            for (auto it = pending.find(next_to_fold); it != pending.end(); it = pending.find(next_to_fold)) {
                total += it->second;
                pending.erase(it);
                ++next_to_fold;
            }
        });
    } else {
        const std::size_t slices = std::min(threads, n_samples);
        std::vector<std::optional<Accumulator>> partial(slices);
        parallel_for(slices, slices, [&](std::size_t t) {
            Accumulator acc(records, grid.size);
            const std::size_t begin = n_samples * t / slices;
            const std::size_t end = n_samples * (t + 1) / slices;
            for (std::size_t s = begin; s < end; ++s) run_sample(s, acc);
            partial[t].emplace(std::move(acc));
        });
        for (auto& p : partial) total += *p;
    }

    MonteCarloResult result;
    result.initial_size = start_size;
    result.final_sizes = total.final_sizes;
    result.max_norm_drift = total.max_norm_drift;
    const double inv = 1.0 / static_cast<double>(n_samples);
    for (std::size_t r = 0; r < records; ++r) {
        result.distributions.push_back(distribution_from_mass(grid, total.mass[r], total.low[r], total.high[r],
                                                              record_at[r], n_samples));
        result.mean.push_back(total.mean[r] * inv);
        result.energy.push_back(total.energy[r] * inv);
    }
    return result;
}

}  // namespace qkr
