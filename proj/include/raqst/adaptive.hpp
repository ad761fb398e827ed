// adaptive.hpp: measurement-setting selection for the two-stage adaptive
// protocols (RAQST1: product measurements only; RAQST2: also the eigenbasis of
// the current estimate).

#pragma once

#include "raqst/estimator.hpp"
#include "raqst/measurements.hpp"
#include "raqst/quantum.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace raqst {

enum class AdaptiveMode { Raqst1, Raqst2 };

inline std::string to_string(AdaptiveMode m) { return m == AdaptiveMode::Raqst1 ? "raqst1" : "raqst2"; }

// Decrease of Tr(Q) when one more effect with coordinates gamma and weight W is
// absorbed: g = |Q gamma|^2 / (1/W + gamma^T Q gamma).
inline double gain(const RealMatrix& q, const RealVector& gamma, double w_pred) {
    if (q.rows() != gamma.size() || q.cols() != gamma.size())
        throw DimensionMismatch("gain: Q and gamma sizes differ");
    if (!(w_pred > 0.0)) throw std::invalid_argument("gain: predicted weight must be positive");
    const RealVector qg = q * gamma;
    const double num = qg.squaredNorm();
    if (num == 0.0) return 0.0;
    return num / (1.0 / w_pred + gamma.dot(qg));
}

inline constexpr double kPredictedProbFloor = 1e-6;

struct PredictedProb {
    double raw;     // gamma0/d + theta . gamma, may leave [0, 1] for unphysical theta
    double clamped; // raw clamped to [0, 1]
};

inline PredictedProb predicted_prob(const RealVector& theta_hat, double gamma0, const RealVector& gamma,
                                    int dim) {
    if (theta_hat.size() != gamma.size()) throw DimensionMismatch("predicted_prob: sizes differ");
    const double raw = gamma0 / dim + theta_hat.dot(gamma);
    return {raw, std::clamp(raw, 0.0, 1.0)};
}

// --------------------------- product-projector search -----------------------

struct ProjectorSearchOptions {
    double tolerance = 1e-10;
    int max_iterations = 1000;
    int random_restarts = 5;
    std::uint64_t seed = 0x5eedULL;
};

struct ProjectorSearchResult {
    Ket psi1;
    Ket psi2;
    double p_min = 0.0;
    // Objective values L_0, L_1, ... for every start; the first start is x0 = y0 = 0.
    std::vector<std::vector<double>> objective_traces;
};

// Two-qubit state written as theta_{4k+j} Tr-coordinates of Omega_k x Omega_j
// with Omega_0 = I/sqrt2 and Omega_{1,2,3} = sigma/sqrt2, arranged as the 4x4
// matrix P with vec(P) = theta (column-major), so P(j, k) = theta_{4k+j} and
// P(0, 0) = 1/2. A product projector with local coordinates (1/sqrt2, x) and
// (1/sqrt2, y) then has probability (1/sqrt2, y)^T P (1/sqrt2, x).
inline Eigen::Matrix4d product_coordinate_matrix(const RealVector& theta_hat) {
    if (theta_hat.size() != 15)
        throw DimensionMismatch("product_coordinate_matrix: two-qubit Bloch vector required");
    Eigen::Matrix4d p;
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j) p(j, k) = (k == 0 && j == 0) ? 0.5 : theta_hat(4 * k + j - 1);
    return p;
}

// Unit Bloch vector r -> qubit ket whose projector is (I + r.sigma)/2.
inline Ket qubit_from_bloch(const Eigen::Vector3d& r) {
    const Eigen::Vector3d u = r.normalized();
    const double polar = std::acos(std::clamp(u.z(), -1.0, 1.0));
    const double azimuth = std::atan2(u.y(), u.x());
    Ket psi(2);
    psi << std::cos(polar / 2.0), std::polar(std::sin(polar / 2.0), azimuth);
    return psi;
}

namespace detail {

struct ProductObjective {
    double half = 0.25;
    Eigen::Vector3d pa; // couples to the first qubit
    Eigen::Vector3d pb; // couples to the second qubit
    Eigen::Matrix3d pd;

    explicit ProductObjective(const Eigen::Matrix4d& p)
        : pa(p.block<1, 3>(0, 1).transpose()), pb(p.block<3, 1>(1, 0)), pd(p.block<3, 3>(1, 1)) {}

    double operator()(const Eigen::Vector3d& x, const Eigen::Vector3d& y) const {
        return 0.25 + y.dot(pb) / std::sqrt(2.0) + pa.dot(x) / std::sqrt(2.0) + y.dot(pd * x);
    }
};

// Minimizer of c . v over |v|^2 = 1/2, keeping `current` when c vanishes.
inline Eigen::Vector3d sphere_minimizer(const Eigen::Vector3d& c, const Eigen::Vector3d& current) {
    const double n = c.norm();
    if (n < 1e-15) {
        if (current.squaredNorm() > 0.0) return current;
        return Eigen::Vector3d(0.0, 0.0, 1.0 / std::sqrt(2.0));
    }
    return -c / (n * std::sqrt(2.0));
}

} // namespace detail

// Minimizes the predicted probability over two-qubit product projectors by
// alternating closed-form updates of the two local Bloch directions (each
// update is the exact minimizer given the other), so the objective sequence
// never increases. Starts from x0 = y0 = 0 plus `random_restarts` uniformly
// random starts; the best end point wins.
inline ProjectorSearchResult min_prob_product_projector(const RealVector& theta_hat,
                                                        const ProjectorSearchOptions& opt = {}) {
    const detail::ProductObjective obj(product_coordinate_matrix(theta_hat));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    auto random_direction = [&]() {
        Eigen::Vector3d v;
        do {
            v = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
        } while (v.norm() < 1e-12);
        return Eigen::Vector3d(v.normalized() * inv_sqrt2);
    };

    ProjectorSearchResult result;
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_x, best_y;

    for (int start = 0; start <= opt.random_restarts; ++start) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        Eigen::Vector3d y = Eigen::Vector3d::Zero();
        if (start > 0) {
            x = random_direction();
            y = random_direction();
        }
        std::vector<double> trace{obj(x, y)};
        for (int it = 0; it < opt.max_iterations; ++it) {
            x = detail::sphere_minimizer(obj.pa * inv_sqrt2 + obj.pd.transpose() * y, x);
            y = detail::sphere_minimizer(obj.pb * inv_sqrt2 + obj.pd * x, y);
            const double l = obj(x, y);
            const double prev = trace.back();
            trace.push_back(l);
            if (l > prev + 1e-12 * std::max(1.0, std::abs(prev)))
                throw std::logic_error("min_prob_product_projector: objective increased");
            if (std::abs(l - prev) < opt.tolerance && it > 0) break;
        }
        if (trace.back() < best) {
            best = trace.back();
            best_x = x;
            best_y = y;
        }
        result.objective_traces.push_back(std::move(trace));
    }

    result.p_min = best;
    result.psi1 = qubit_from_bloch(best_x * std::sqrt(2.0));
    result.psi2 = qubit_from_bloch(best_y * std::sqrt(2.0));
    return result;
}

// --------------------------- candidate sets and selection -------------------

// Cube settings, plus the product POVM completing the minimum-probability
// product projector of the physical estimate, plus (RAQST2) the estimate's
// eigenbasis. Theta-dependent members are rebuilt on every call.
inline MeasurementCatalog build_candidate_set(const RealVector& theta_hat, AdaptiveMode mode,
                                              const HermitianBasis& basis,
                                              const ProjectorSearchOptions& search = {}) {
    require_two_qubits(basis, "build_candidate_set");
    const DensityMatrix estimate = project_to_physical(bloch_to_matrix(BlochVector{theta_hat}, basis));
    const BlochVector physical = state_to_bloch(estimate, basis);

    MeasurementCatalog catalog = cube_settings(basis);
    const auto found = min_prob_product_projector(physical.theta, search);
    catalog.settings.push_back(complete_product_povm(found.psi1, found.psi2, basis, "PMIN"));
    if (mode == AdaptiveMode::Raqst2) catalog.settings.push_back(eigenbasis_povm(estimate, basis, "EIG"));
    return make_catalog(std::move(catalog.settings));
}

struct Selection {
    std::size_t setting = 0; // index into the catalog
    std::size_t effect = 0;  // index of the best effect inside that POVM
    double gain = 0.0;
    double p_pred = 0.0;     // raw predicted probability of the best effect
};

// Scores every effect with gain(Q, gamma, n / (p(1-p))), p the predicted
// probability clamped to [1e-6, 1 - 1e-6]; the POVM holding the best effect wins,
// first in catalog order on ties.
inline Selection select_next_setting(const RealMatrix& q, const RealVector& theta_hat,
                                     const MeasurementCatalog& candidates, std::int64_t n_per_step,
                                     int dim) {
    if (candidates.settings.empty()) throw std::invalid_argument("select_next_setting: no candidates");
    if (n_per_step < 1) throw std::invalid_argument("select_next_setting: n_per_step must be >= 1");
    Selection best;
    bool have = false;
    for (std::size_t s = 0; s < candidates.size(); ++s) {
        const auto& povm = candidates[s];
        for (std::size_t m = 0; m < povm.size(); ++m) {
            const auto& e = povm.effects[m];
            const auto p = predicted_prob(theta_hat, e.gamma0, e.gamma, dim);
            const double pc = std::clamp(p.raw, kPredictedProbFloor, 1.0 - kPredictedProbFloor);
            const double g = gain(q, e.gamma, static_cast<double>(n_per_step) / (pc * (1.0 - pc)));
            if (!have || g > best.gain) {
                best = Selection{s, m, g, p.raw};
                have = true;
            }
        }
    }
    return best;
}

// --------------------------- resource schedule ------------------------------

struct ResourceSchedule {
    std::int64_t n_total = 0;
    std::int64_t n_stage1 = 0;    // includes `remainder`
    std::int64_t k_steps = 0;
    std::int64_t n_per_step = 0;
    std::int64_t remainder = 0;   // copies moved into stage 1 by rounding
    bool degraded = false;        // the K formula gave K <= 0 and K = 1 was used
};

// RAQST1: N1 = N / (1.3 + 0.1 log10 N), K = floor(log10 N - 1)
// RAQST2: N1 = N (0.8 - 0.01 log10 N),   K = floor(1.5 log10 N - 2)
// N1 is floored; N2 = floor((N - N1) / K) and the leftover joins stage 1.
inline ResourceSchedule resource_schedule(std::int64_t n_total, AdaptiveMode mode) {
    if (n_total < 100) throw std::invalid_argument("resource_schedule: n_total must be >= 100");
    const double n = static_cast<double>(n_total);
    const double lg = std::log10(n);
    // Guards floor() against values like 7599.999999999999 for exact products.
    constexpr double slack = 1e-9;
    double stage1 = 0.0, k = 0.0;
    if (mode == AdaptiveMode::Raqst1) {
        stage1 = n / (1.3 + 0.1 * lg);
        k = lg - 1.0;
    } else {
        stage1 = n * (0.8 - 0.01 * lg);
        k = 1.5 * lg - 2.0;
    }
    ResourceSchedule s;
    s.n_total = n_total;
    s.n_stage1 = static_cast<std::int64_t>(std::floor(stage1 + slack));
    s.k_steps = static_cast<std::int64_t>(std::floor(k + slack));
    if (s.k_steps <= 0) {
        s.k_steps = 1;
        s.degraded = true;
    }
    s.n_per_step = (n_total - s.n_stage1) / s.k_steps;
    s.remainder = n_total - s.n_stage1 - s.k_steps * s.n_per_step;
    s.n_stage1 += s.remainder;
    return s;
}

} // namespace raqst
