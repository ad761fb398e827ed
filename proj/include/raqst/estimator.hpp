// estimator.hpp: weighted linear-regression state estimation.
//
// Each observed outcome frequency p_hat of effect E gives one regression
// equation  p_hat - gamma0/d = theta . gamma + noise  with weight W. The batch
// solve and the recursive rank-one update compute the same ridge-regularized
// weighted least-squares estimate.

#pragma once

#include "raqst/measurements.hpp"
#include "raqst/quantum.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

namespace raqst {

// Ridge term for the batch solve; its inverse scales the prior Q0 when a
// recursion starts from nothing.
inline constexpr double kDefaultRidge = 1e-8;

struct RegressionRecord {
    double gamma0 = 0.0;
    RealVector gamma;
    double p_hat = 0.0;
    std::int64_t n_trials = 0;
    double weight = 0.0;
};

// (theta_hat, Q) with Q = S S^T kept in square-root form; `q` is the product
// refreshed after every change, `factor` is S.
struct EstimatorState {
    int dim = 0;                 // Hilbert-space dimension d
    RealVector theta_hat;        // length d^2 - 1
    RealMatrix q;                // (d^2-1) x (d^2-1), symmetric positive definite
    RealMatrix factor;
    std::int64_t records_absorbed = 0;

    // Q0 = I / ridge, theta0 = 0.
    static EstimatorState prior(int dim, double ridge = kDefaultRidge) {
        if (!(ridge > 0.0)) throw std::invalid_argument("EstimatorState::prior: ridge must be positive");
        const Eigen::Index k = static_cast<Eigen::Index>(dim) * dim - 1;
        return EstimatorState{dim, RealVector::Zero(k), RealMatrix::Identity(k, k) / ridge,
                              RealMatrix::Identity(k, k) / std::sqrt(ridge), 0};
    }

    // Rebuilds the square-root factor of a given Q (e.g. from a checkpoint).
    static EstimatorState from_covariance(int dim, RealVector theta, RealMatrix q,
                                          std::int64_t records_absorbed = 0) {
        const Eigen::Index k = static_cast<Eigen::Index>(dim) * dim - 1;
        if (theta.size() != k || q.rows() != k || q.cols() != k)
            throw DimensionMismatch("EstimatorState: theta/Q sizes do not match dim");
        if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("EstimatorState: Q is not symmetric");
        Eigen::LLT<RealMatrix> llt(q);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("EstimatorState: Q is not positive definite");
        RealMatrix factor = llt.matrixL();
        return EstimatorState{dim, std::move(theta), std::move(q), std::move(factor), records_absorbed};
    }
};

// W = n / (p(1-p)) with p clamped to [1/(2n), 1 - 1/(2n)] so W stays finite.
inline double compute_weight(std::int64_t n_trials, std::int64_t count) {
    if (n_trials < 1 || count < 0 || count > n_trials)
        throw std::invalid_argument("compute_weight: need 0 <= count <= n_trials, n_trials >= 1");
    const double n = static_cast<double>(n_trials);
    const double lo = 1.0 / (2.0 * n);
    const double p = std::clamp(static_cast<double>(count) / n, lo, 1.0 - lo);
    return n / (p * (1.0 - p));
}

inline std::vector<RegressionRecord> records_from_counts(const Povm& povm,
                                                         std::span<const std::int64_t> counts) {
    if (counts.size() != povm.size())
        throw DimensionMismatch("records_from_counts: one count per POVM outcome required");
    std::int64_t n = 0;
    for (auto c : counts) {
        if (c < 0) throw std::invalid_argument("records_from_counts: negative count");
        n += c;
    }
    if (n <= 0) throw std::invalid_argument("records_from_counts: no trials");

    std::vector<RegressionRecord> records;
    records.reserve(counts.size());
    for (std::size_t m = 0; m < counts.size(); ++m) {
        const auto& e = povm.effects[m];
        records.push_back(RegressionRecord{e.gamma0, e.gamma,
                                           static_cast<double>(counts[m]) / static_cast<double>(n), n,
                                           compute_weight(n, counts[m])});
    }
    return records;
}

namespace detail {
inline void check_record(const RegressionRecord& r, Eigen::Index k) {
    if (r.gamma.size() != k) throw DimensionMismatch("regression record has wrong gamma length");
    if (!(r.weight > 0.0) || !std::isfinite(r.weight))
        throw std::invalid_argument("regression record weight must be finite and positive");
}
} // namespace detail

// Weighted least squares (X^T W X + ridge I)^{-1} X^T W Y, solved by QR of the
// stacked system [W^{1/2} X; sqrt(ridge) I] so rank-deficient designs held up
// only by the ridge keep their accuracy. With ridge = 0 a rank-deficient
// design is an error.
inline EstimatorState batch_lre(std::span<const RegressionRecord> records, int dim,
                                double ridge = kDefaultRidge) {
    if (dim < 2) throw std::invalid_argument("batch_lre: dim must be >= 2");
    if (ridge < 0.0) throw std::invalid_argument("batch_lre: ridge must be non-negative");
    const Eigen::Index k = static_cast<Eigen::Index>(dim) * dim - 1;
    const auto rows = static_cast<Eigen::Index>(records.size()) + k;
    RealMatrix design = RealMatrix::Zero(rows, k);
    RealVector target = RealVector::Zero(rows);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(records.size()); ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        detail::check_record(r, k);
        const double sw = std::sqrt(r.weight);
        design.row(i) = sw * r.gamma.transpose();
        target(i) = sw * (r.p_hat - r.gamma0 / dim);
    }
    design.bottomRows(k) = RealMatrix::Identity(k, k) * std::sqrt(ridge);

    if (ridge == 0.0) {
        Eigen::ColPivHouseholderQR<RealMatrix> piv(design);
        if (piv.rank() < k) {
            std::ostringstream msg;
            msg << "batch_lre: design matrix is rank deficient (rank " << piv.rank() << " of " << k
                << "); measurements are not informationally complete";
            throw NumericError(msg.str());
        }
    }

    Eigen::HouseholderQR<RealMatrix> qr(design);
    const RealMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    if ((r.diagonal().array() == 0.0).any()) throw NumericError("batch_lre: singular design");

    EstimatorState s;
    s.dim = dim;
    s.theta_hat = qr.solve(target);
    // Q = (R^T R)^{-1} = R^{-1} R^{-T}, so S = R^{-1}.
    s.factor = r.triangularView<Eigen::Upper>().solve(RealMatrix::Identity(k, k));
    s.q = s.factor * s.factor.transpose();
    s.records_absorbed = static_cast<std::int64_t>(records.size());
    if (!s.theta_hat.allFinite() || !s.q.allFinite())
        throw NumericError("batch_lre: non-finite solution");
    return s;
}

// One rank-one update:
//   a      = (1/W + g^T Q g)^{-1}
//   Q'     = Q - a Q g g^T Q
//   theta' = theta + a Q g (p_hat - gamma0/d - g^T theta)
// Q is carried as S S^T (Potter's square-root form): with f = S^T g the update
// is S' = S - ((1 - c)/|f|^2) (S f) f^T, c = sqrt((1/W) / (1/W + |f|^2)), which
// is the same Q' without the cancellation the direct form suffers when Q is
// far larger than 1/(W |g|^2).
inline EstimatorState recursive_update(const EstimatorState& state, const RegressionRecord& record) {
    detail::check_record(record, state.theta_hat.size());
    const RealVector f = state.factor.transpose() * record.gamma;
    const RealVector qg = state.factor * f;
    const double fsq = f.squaredNorm();
    const double r = 1.0 / record.weight;
    const double a = 1.0 / (r + fsq);
    const double innovation = record.p_hat - record.gamma0 / state.dim - record.gamma.dot(state.theta_hat);

    EstimatorState next;
    next.dim = state.dim;
    next.theta_hat = state.theta_hat + (a * innovation) * qg;
    next.factor = state.factor;
    if (fsq > 0.0) {
        const double c = std::sqrt(r / (r + fsq));
        next.factor.noalias() -= ((1.0 - c) / fsq) * qg * f.transpose();
    }
    next.q = next.factor * next.factor.transpose();
    next.records_absorbed = state.records_absorbed + 1;
    if (!std::isfinite(a) || !next.theta_hat.allFinite() || !next.q.allFinite())
        throw NumericError("recursive_update: non-finite intermediate");
    return next;
}

inline EstimatorState absorb(EstimatorState state, std::span<const RegressionRecord> records) {
    for (const auto& r : records) state = recursive_update(state, r);
    return state;
}

// Physical estimate: projection of I/d + theta . Omega.
inline DensityMatrix current_estimate(const EstimatorState& state, const HermitianBasis& basis) {
    if (state.dim != basis.dim()) throw DimensionMismatch("current_estimate: dimensions differ");
    return project_to_physical(bloch_to_matrix(BlochVector{state.theta_hat}, basis));
}

} // namespace raqst
