// simulator.hpp: seeded Born-rule sampling, random states, the six two-qubit
// tomography protocols and the Monte Carlo driver.

#pragma once

#include "raqst/adaptive.hpp"
#include "raqst/estimator.hpp"
#include "raqst/measurements.hpp"
#include "raqst/quantum.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace raqst {

// --------------------------- random numbers ---------------------------------

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Each trial seed is scrambled once so that consecutive seeds start unrelated
// Mersenne Twister streams.
inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

// --------------------------- states -----------------------------------------

inline Ket singlet_ket() {
    Ket psi = Ket::Zero(4);
    psi(1) = 1.0 / std::sqrt(2.0);
    psi(2) = -1.0 / std::sqrt(2.0);
    return psi;
}

inline DensityMatrix singlet() { return DensityMatrix::pure(singlet_ket()); }

// p |Psi-><Psi-| + (1 - p) I/4
inline DensityMatrix werner_state(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("werner_state: p must lie in [0, 1]");
    return DensityMatrix(p * projector(singlet_ket()) + (1.0 - p) * ComplexMatrix::Identity(4, 4) / 4.0);
}

inline Ket random_ket(int dim, Rng& rng) {
    std::normal_distribution<double> normal;
    Ket v(dim);
    do {
        for (int i = 0; i < dim; ++i) v(i) = cdouble(normal(rng), normal(rng));
    } while (v.norm() == 0.0);
    return v.normalized();
}

// Haar unitary: QR of a complex Ginibre matrix with R's diagonal phases removed.
inline ComplexMatrix haar_unitary(int dim, Rng& rng) {
    std::normal_distribution<double> normal;
    ComplexMatrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = cdouble(normal(rng), normal(rng));
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix& r = qr.matrixQR();
    for (int j = 0; j < dim; ++j) {
        const cdouble d = r(j, j);
        if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

inline DensityMatrix random_pure_state(Rng& rng, int dim = 4) { return DensityMatrix::pure(random_ket(dim, rng)); }

// (U1 x U2)|Psi->, U1 and U2 independent Haar qubit unitaries.
inline DensityMatrix random_mes(Rng& rng) {
    const ComplexMatrix u1 = haar_unitary(2, rng);
    const ComplexMatrix u2 = haar_unitary(2, rng);
    return DensityMatrix::pure(kron(u1, u2) * singlet_ket());
}

// Single-qubit reduced state of a two-qubit density matrix.
inline ComplexMatrix partial_trace(const DensityMatrix& rho, int keep) {
    if (rho.dim() != 4) throw DimensionMismatch("partial_trace: two-qubit state required");
    ComplexMatrix out = ComplexMatrix::Zero(2, 2);
    const auto& m = rho.matrix();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int t = 0; t < 2; ++t)
                out(a, b) += keep == 0 ? m(2 * a + t, 2 * b + t) : m(2 * t + a, 2 * t + b);
    return out;
}

// --------------------------- sampling ---------------------------------------

inline constexpr double kNegativeProbabilityTolerance = 1e-12;

// One multinomial draw of n outcomes with probabilities Tr(E_m rho).
inline std::vector<std::int64_t> sample_counts(const DensityMatrix& rho, const Povm& povm, std::int64_t n,
                                               Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_counts: n must be >= 1");
    if (rho.dim() != povm.effects.front().effect.rows())
        throw DimensionMismatch("sample_counts: state and POVM dimensions differ");
    RealVector p = born_probabilities(rho, povm);
    for (Eigen::Index m = 0; m < p.size(); ++m) {
        if (p(m) < -kNegativeProbabilityTolerance)
            throw ModelError("sample_counts: negative outcome probability for " + povm.label);
        p(m) = std::max(p(m), 0.0);
    }

    std::vector<std::int64_t> counts(povm.size(), 0);
    std::int64_t remaining = n;
    double mass = p.sum();
    for (std::size_t m = 0; m + 1 < povm.size() && remaining > 0; ++m) {
        const double pm = p(static_cast<Eigen::Index>(m));
        const double share = mass > 0.0 ? std::clamp(pm / mass, 0.0, 1.0) : 0.0;
        std::binomial_distribution<std::int64_t> draw(remaining, share);
        counts[m] = share > 0.0 ? draw(rng) : 0;
        remaining -= counts[m];
        mass -= pm;
    }
    counts.back() += remaining;
    return counts;
}

// --------------------------- protocols --------------------------------------

enum class ProtocolKind { Cube, Mub, MubHalfHalf, KnownBasis, Raqst1, Raqst2 };

inline const std::vector<ProtocolKind>& all_protocols() {
    static const std::vector<ProtocolKind> all = {ProtocolKind::Cube,       ProtocolKind::Mub,
                                                  ProtocolKind::MubHalfHalf, ProtocolKind::KnownBasis,
                                                  ProtocolKind::Raqst1,     ProtocolKind::Raqst2};
    return all;
}

inline std::string to_string(ProtocolKind p) {
    switch (p) {
    case ProtocolKind::Cube: return "cube";
    case ProtocolKind::Mub: return "mub";
    case ProtocolKind::MubHalfHalf: return "mub_half_half";
    case ProtocolKind::KnownBasis: return "known_basis";
    case ProtocolKind::Raqst1: return "raqst1";
    case ProtocolKind::Raqst2: return "raqst2";
    }
    return "?";
}

inline ProtocolKind parse_protocol(const std::string& name) {
    for (auto p : all_protocols())
        if (to_string(p) == name) return p;
    throw std::invalid_argument("unknown protocol '" + name + "'");
}

// Read-only two-qubit measurement data shared by all trials.
struct TwoQubitToolkit {
    HermitianBasis basis;
    MeasurementCatalog cube;
    MeasurementCatalog mub;
};

inline const TwoQubitToolkit& two_qubit_toolkit() {
    static const TwoQubitToolkit kit = [] {
        HermitianBasis b = build_pauli_basis(2);
        MeasurementCatalog cube = cube_settings(b);
        MeasurementCatalog mub = mub_settings(b);
        return TwoQubitToolkit{std::move(b), std::move(cube), std::move(mub)};
    }();
    return kit;
}

struct TrialConfig {
    ProtocolKind protocol = ProtocolKind::Cube;
    std::int64_t n_copies = 0;
    std::uint64_t seed = 0;
    DensityMatrix true_state = DensityMatrix::maximally_mixed(4);
};

// One adaptive step as emitted in the decision trace.
struct StepDecision {
    int step = 0;
    std::string label;
    double gain = 0.0;
    double p_pred = 0.0;
    std::int64_t copies = 0;
    std::int64_t copies_before = 0;
};

struct TrialResult {
    double infidelity = 0.0;
    DensityMatrix estimate = DensityMatrix::maximally_mixed(4);
    std::vector<std::string> settings_used;
    std::int64_t copies_consumed = 0;
    std::vector<StepDecision> decisions;
};

// n split over k parts as evenly as possible; the first parts take the remainder.
inline std::vector<std::int64_t> split_evenly(std::int64_t n, std::size_t k) {
    if (k == 0) throw std::invalid_argument("split_evenly: no parts");
    const auto kk = static_cast<std::int64_t>(k);
    std::vector<std::int64_t> parts(k, n / kk);
    for (std::int64_t i = 0; i < n % kk; ++i) parts[static_cast<std::size_t>(i)] += 1;
    return parts;
}

namespace detail {

class TrialRun {
public:
    TrialRun(const TrialConfig& cfg, const TwoQubitToolkit& kit)
        : cfg_(cfg), kit_(kit), rng_(make_rng(cfg.seed)) {}

    // Samples `copies` outcomes of `povm` and returns the regression records.
    std::vector<RegressionRecord> measure(const Povm& povm, std::int64_t copies) {
        if (copies <= 0) return {};
        const auto counts = sample_counts(cfg_.true_state, povm, copies, rng_);
        result_.settings_used.push_back(povm.label);
        result_.copies_consumed += copies;
        return records_from_counts(povm, counts);
    }

    std::vector<RegressionRecord> measure_catalog(const MeasurementCatalog& catalog, std::int64_t copies) {
        std::vector<RegressionRecord> all;
        const auto parts = split_evenly(copies, catalog.size());
        for (std::size_t j = 0; j < catalog.size(); ++j) {
            auto r = measure(catalog[j], parts[j]);
            all.insert(all.end(), r.begin(), r.end());
        }
        return all;
    }

    TrialResult finish(const EstimatorState& state) {
        if (result_.copies_consumed != cfg_.n_copies)
            throw std::logic_error("protocol consumed " + std::to_string(result_.copies_consumed) +
                                   " copies instead of " + std::to_string(cfg_.n_copies));
        result_.estimate = current_estimate(state, kit_.basis);
        result_.infidelity = std::clamp(infidelity(cfg_.true_state, result_.estimate), 0.0, 1.0);
        return std::move(result_);
    }

    TrialResult run_static(const MeasurementCatalog& catalog) {
        const auto records = measure_catalog(catalog, cfg_.n_copies);
        return finish(batch_lre(records, 4));
    }

    // Cube measurements on N/2 copies, then a MUB whose first basis is the
    // eigenbasis of `reference(preliminary estimate)` on the rest.
    template <class Reference>
    TrialResult run_half_half(Reference&& reference) {
        const std::int64_t first = cfg_.n_copies / 2;
        auto records = measure_catalog(kit_.cube, first);
        const DensityMatrix preliminary = current_estimate(batch_lre(records, 4), kit_.basis);
        const MeasurementCatalog rotated = rotate_mub_to_basis(reference(preliminary), kit_.basis);
        auto more = measure_catalog(rotated, cfg_.n_copies - first);
        records.insert(records.end(), more.begin(), more.end());
        return finish(batch_lre(records, 4));
    }

    TrialResult run_adaptive(AdaptiveMode mode) {
        const ResourceSchedule sched = resource_schedule(cfg_.n_copies, mode);
        EstimatorState state = batch_lre(measure_catalog(kit_.cube, sched.n_stage1), 4);
        for (std::int64_t step = 0; step < sched.k_steps; ++step) {
            const MeasurementCatalog candidates = build_candidate_set(state.theta_hat, mode, kit_.basis);
            const Selection sel =
                select_next_setting(state.q, state.theta_hat, candidates, sched.n_per_step, 4);
            const Povm& chosen = candidates[sel.setting];
            result_.decisions.push_back(StepDecision{static_cast<int>(step) + 1, chosen.label, sel.gain,
                                                     sel.p_pred, sched.n_per_step, result_.copies_consumed});
            state = absorb(std::move(state), measure(chosen, sched.n_per_step));
        }
        return finish(state);
    }

private:
    const TrialConfig& cfg_;
    const TwoQubitToolkit& kit_;
    Rng rng_;
    TrialResult result_;
};

} // namespace detail

inline TrialResult run_protocol(const TrialConfig& cfg, const TwoQubitToolkit& kit = two_qubit_toolkit()) {
    if (cfg.n_copies < 100) throw std::invalid_argument("run_protocol: n_copies must be >= 100");
    if (cfg.true_state.dim() != 4) throw DimensionMismatch("run_protocol: two-qubit state required");
    detail::TrialRun run(cfg, kit);
    switch (cfg.protocol) {
    case ProtocolKind::Cube: return run.run_static(kit.cube);
    case ProtocolKind::Mub: return run.run_static(kit.mub);
    case ProtocolKind::MubHalfHalf:
        return run.run_half_half([](const DensityMatrix& prelim) { return prelim; });
    case ProtocolKind::KnownBasis:
        // Simulation-only: rotates by the true state's eigenbasis.
        return run.run_half_half([&cfg](const DensityMatrix&) { return cfg.true_state; });
    case ProtocolKind::Raqst1: return run.run_adaptive(AdaptiveMode::Raqst1);
    case ProtocolKind::Raqst2: return run.run_adaptive(AdaptiveMode::Raqst2);
    }
    throw std::logic_error("run_protocol: unhandled protocol");
}

// --------------------------- Monte Carlo ------------------------------------

struct TrialRecord {
    ProtocolKind protocol = ProtocolKind::Cube;
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    double infidelity = 0.0;
    double purity_true = 0.0;
    std::vector<std::string> settings_used;
    std::vector<StepDecision> decisions; // empty for static protocols
};

struct MeanAndError {
    double mean = 0.0;
    double sd_of_mean = 0.0; // sample standard deviation / sqrt(count)
};

// Sums in the given order, so equal inputs give bit-identical outputs.
inline MeanAndError mean_and_sd_of_mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean_and_sd_of_mean: no values");
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

struct MonteCarloPoint {
    ProtocolKind protocol = ProtocolKind::Cube;
    std::int64_t n = 0;
    int reps = 0;
    double mean_infidelity = 0.0;
    double sd_of_mean = 0.0;
    std::vector<TrialRecord> trials; // ordered by trial index
};

// Runs jobs [0, count) on `workers` threads; results land by index.
template <class Job>
void parallel_for(std::size_t count, int workers, Job&& job) {
    const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// Trial r at every N uses seed base_seed + r, so protocols run with the same
// base seed are paired trial by trial.
inline std::vector<MonteCarloPoint> monte_carlo(ProtocolKind protocol, const DensityMatrix& true_state,
                                                const std::vector<std::int64_t>& n_list, int reps,
                                                std::uint64_t base_seed, int workers = 1) {
    if (reps < 1) throw std::invalid_argument("monte_carlo: reps must be >= 1");
    if (n_list.empty()) throw std::invalid_argument("monte_carlo: empty N list");
    const auto& kit = two_qubit_toolkit();
    const double purity_true = purity(true_state);
    const std::size_t per_n = static_cast<std::size_t>(reps);
    std::vector<TrialRecord> records(n_list.size() * per_n);

    parallel_for(records.size(), workers, [&](std::size_t job) {
        const std::size_t ni = job / per_n;
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(job % per_n);
        const TrialConfig cfg{protocol, n_list[ni], seed, true_state};
        TrialResult r = run_protocol(cfg, kit);
        records[job] = TrialRecord{protocol, seed, n_list[ni], r.infidelity, purity_true,
                                   std::move(r.settings_used), std::move(r.decisions)};
    });

    std::vector<MonteCarloPoint> points;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        MonteCarloPoint pt{protocol, n_list[ni], reps, 0.0, 0.0, {}};
        std::vector<double> values;
        for (std::size_t r = 0; r < per_n; ++r) {
            values.push_back(records[ni * per_n + r].infidelity);
            pt.trials.push_back(std::move(records[ni * per_n + r]));
        }
        const auto stats = mean_and_sd_of_mean(values);
        pt.mean_infidelity = stats.mean;
        pt.sd_of_mean = stats.sd_of_mean;
        points.push_back(std::move(pt));
    }
    return points;
}

} // namespace raqst
