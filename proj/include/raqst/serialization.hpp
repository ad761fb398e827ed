// serialization.hpp: JSON forms of states, Bloch vectors, catalogs, estimator
// snapshots, trial records and adaptive decisions.

#pragma once

#include "raqst/estimator.hpp"
#include "raqst/measurements.hpp"
#include "raqst/quantum.hpp"
#include "raqst/simulator.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace raqst {

using json = nlohmann::json;

namespace detail {

inline json real_rows(const RealMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline RealMatrix real_matrix_from(const json& rows, Eigen::Index n, const char* what) {
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) + " rows");
    RealMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw std::invalid_argument(std::string(what) + ": ragged row " + std::to_string(i));
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

inline json real_array(const RealVector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline RealVector real_vector_from(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const RealVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace detail

// {dim, re[][], im[][]}
inline json to_json(const ComplexMatrix& m) {
    return json{{"dim", m.rows()}, {"re", detail::real_rows(m.real())}, {"im", detail::real_rows(m.imag())}};
}

inline ComplexMatrix complex_matrix_from_json(const json& j) {
    const Eigen::Index d = j.at("dim").get<Eigen::Index>();
    if (d < 1) throw std::invalid_argument("matrix json: dim must be >= 1");
    ComplexMatrix m(d, d);
    m.real() = detail::real_matrix_from(j.at("re"), d, "matrix json re");
    m.imag() = detail::real_matrix_from(j.at("im"), d, "matrix json im");
    return m;
}

inline json to_json(const DensityMatrix& rho) { return to_json(rho.matrix()); }

inline DensityMatrix density_matrix_from_json(const json& j) { return DensityMatrix(complex_matrix_from_json(j)); }

inline json to_json(const BlochVector& b) { return detail::real_array(b.theta); }

inline BlochVector bloch_from_json(const json& j) { return BlochVector{detail::real_vector_from(j)}; }

inline json to_json(const MeasurementCatalog& catalog) {
    json settings = json::array();
    for (const auto& povm : catalog.settings) {
        json effects = json::array();
        for (const auto& e : povm.effects) effects.push_back(to_json(e.effect));
        settings.push_back(json{{"label", povm.label}, {"effects", std::move(effects)}});
    }
    return json{{"settings", std::move(settings)}};
}

inline MeasurementCatalog catalog_from_json(const json& j, const HermitianBasis& basis) {
    std::vector<Povm> settings;
    for (const auto& s : j.at("settings")) {
        std::vector<ComplexMatrix> effects;
        for (const auto& e : s.at("effects")) effects.push_back(complex_matrix_from_json(e));
        settings.push_back(make_povm(s.at("label").get<std::string>(), effects, basis));
    }
    return make_catalog(std::move(settings));
}

// {dim, theta_hat, q, records_absorbed}
inline json to_json(const EstimatorState& s) {
    return json{{"dim", s.dim},
                {"theta_hat", detail::real_array(s.theta_hat)},
                {"q", detail::real_rows(s.q)},
                {"records_absorbed", s.records_absorbed}};
}

inline EstimatorState estimator_state_from_json(const json& j) {
    const int dim = j.at("dim").get<int>();
    if (dim < 2) throw std::invalid_argument("estimator json: dim must be >= 2");
    RealVector theta = detail::real_vector_from(j.at("theta_hat"));
    RealMatrix q = detail::real_matrix_from(j.at("q"), theta.size(), "estimator json q");
    return EstimatorState::from_covariance(dim, std::move(theta), std::move(q),
                                           j.at("records_absorbed").get<std::int64_t>());
}

// {protocol, seed, n, infidelity, settings_used[]}
inline json to_json(const TrialRecord& r) {
    return json{{"protocol", to_string(r.protocol)},
                {"seed", r.seed},
                {"n", r.n},
                {"infidelity", r.infidelity},
                {"settings_used", r.settings_used}};
}

inline json to_json(const StepDecision& d) {
    return json{{"step", d.step},          {"label", d.label},   {"gain", d.gain},
                {"p_pred", d.p_pred},      {"copies", d.copies}, {"copies_before", d.copies_before}};
}

// One compact JSON object per line.
template <class Range>
std::string json_lines(const Range& items) {
    std::string out;
    for (const auto& item : items) out += to_json(item).dump() + "\n";
    return out;
}

} // namespace raqst
