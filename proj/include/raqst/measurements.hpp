// measurements.hpp: POVMs used by the tomography protocols and their
// coordinates in a Hermitian operator basis.

#pragma once

#include "raqst/quantum.hpp"

#include <array>
#include <set>
#include <string>
#include <vector>

namespace raqst {

// Effect E with gamma0 = Tr E and gamma_k = Tr(E Omega_k), so that
// Tr(E rho) = gamma0 / d + theta . gamma.
struct ParameterizedEffect {
    ComplexMatrix effect;
    double gamma0 = 0.0;
    RealVector gamma;
};

struct Povm {
    std::string label;
    std::vector<ParameterizedEffect> effects;

    std::size_t size() const noexcept { return effects.size(); }
};

struct MeasurementCatalog {
    std::vector<Povm> settings;

    std::size_t size() const noexcept { return settings.size(); }
    const Povm& operator[](std::size_t i) const { return settings[i]; }
};

inline ParameterizedEffect parameterize_effect(const ComplexMatrix& e, const HermitianBasis& basis) {
    if (e.rows() != basis.dim() || e.cols() != basis.dim())
        throw DimensionMismatch("parameterize_effect: effect and basis dimensions differ");
    if (hermiticity_defect(e) > tol::psd)
        throw std::invalid_argument("parameterize_effect: effect is not Hermitian");
    const ComplexMatrix h = hermitian_part(e);
    if (min_eigenvalue(h) < -tol::psd)
        throw std::invalid_argument("parameterize_effect: effect is not positive semidefinite");
    return ParameterizedEffect{h, h.trace().real(), basis_coordinates(h, basis)};
}

inline ComplexMatrix reconstruct_effect(const ParameterizedEffect& pe, const HermitianBasis& basis) {
    const int d = basis.dim();
    ComplexMatrix e = ComplexMatrix::Identity(d, d) * (pe.gamma0 / d);
    for (int k = 0; k < basis.size(); ++k) e += pe.gamma(k) * basis.op(k);
    return e;
}

// Checks the POVM invariants and returns the parameterized measurement.
inline Povm make_povm(std::string label, const std::vector<ComplexMatrix>& effects,
                      const HermitianBasis& basis) {
    if (effects.empty()) throw std::invalid_argument("make_povm: no effects");
    const int d = basis.dim();
    ComplexMatrix total = ComplexMatrix::Zero(d, d);
    Povm povm{std::move(label), {}};
    povm.effects.reserve(effects.size());
    for (const auto& e : effects) {
        povm.effects.push_back(parameterize_effect(e, basis));
        total += e;
    }
    if ((total - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol::psd)
        throw std::invalid_argument("make_povm: effects of " + povm.label + " do not sum to identity");
    return povm;
}

// POVM of rank-one projectors onto the columns of an orthonormal basis.
inline Povm basis_povm(std::string label, const ComplexMatrix& columns, const HermitianBasis& basis) {
    std::vector<ComplexMatrix> effects;
    effects.reserve(static_cast<std::size_t>(columns.cols()));
    for (Eigen::Index k = 0; k < columns.cols(); ++k) effects.push_back(projector(columns.col(k)));
    return make_povm(std::move(label), effects, basis);
}

inline MeasurementCatalog make_catalog(std::vector<Povm> settings) {
    if (settings.empty()) throw std::invalid_argument("MeasurementCatalog: empty");
    std::set<std::string> seen;
    for (const auto& p : settings)
        if (!seen.insert(p.label).second)
            throw std::invalid_argument("MeasurementCatalog: duplicate label " + p.label);
    return MeasurementCatalog{std::move(settings)};
}

// --------------------------- single-qubit helpers ---------------------------

// Eigenvectors (+1, -1) of a Pauli operator.
inline std::array<Ket, 2> pauli_eigenkets(char axis) {
    const double r = 1.0 / std::sqrt(2.0);
    Ket plus(2), minus(2);
    switch (axis) {
    case 'X': plus << r, r; minus << r, -r; break;
    case 'Y': plus << r, cdouble(0, r); minus << r, cdouble(0, -r); break;
    case 'Z': plus << 1, 0; minus << 0, 1; break;
    default: throw std::invalid_argument(std::string("pauli_eigenkets: bad axis ") + axis);
    }
    return {plus, minus};
}

inline Ket orthogonal_qubit(const Ket& psi) {
    Ket perp(2);
    perp << -std::conj(psi(1)), std::conj(psi(0));
    return perp;
}

inline void require_two_qubits(const HermitianBasis& basis, const char* who) {
    if (basis.dim() != 4) throw DimensionMismatch(std::string(who) + ": requires a two-qubit basis");
}

// --------------------------- catalogs ---------------------------------------

// The 9 product Pauli settings; outcomes ordered (++, +-, -+, --).
inline MeasurementCatalog cube_settings(const HermitianBasis& basis) {
    require_two_qubits(basis, "cube_settings");
    static constexpr char kAxes[3] = {'X', 'Y', 'Z'};
    std::vector<Povm> settings;
    for (char a : kAxes) {
        for (char b : kAxes) {
            const auto ea = pauli_eigenkets(a);
            const auto eb = pauli_eigenkets(b);
            std::vector<ComplexMatrix> effects;
            for (const auto& u : ea)
                for (const auto& v : eb) effects.push_back(projector(kron(u, v)));
            settings.push_back(make_povm(std::string{a, b}, effects, basis));
        }
    }
    return make_catalog(std::move(settings));
}

// Columns of the five standard mutually unbiased bases in d = 4: the
// computational basis and the common eigenbases of the four remaining maximal
// commuting Pauli sets. Entries are in {+-1, +-i}/2 after phase fixing.
inline std::vector<ComplexMatrix> standard_mub_vectors() {
    const std::array<std::array<std::string, 2>, 5> generators = {{
        {"ZI", "IZ"}, {"XI", "IX"}, {"YI", "IY"}, {"XY", "YZ"}, {"YX", "ZY"},
    }};
    auto two_qubit = [](const std::string& s) { return kron(pauli(s[0]), pauli(s[1])); };
    std::vector<ComplexMatrix> bases;
    for (const auto& g : generators) {
        // Eigenvalues +-1 +-2 are distinct, so each eigenvector is unique up to phase.
        const ComplexMatrix a = two_qubit(g[0]) + 2.0 * two_qubit(g[1]);
        ComplexMatrix cols = canonical_eigensystem(a).vectors;
        if (bases.empty()) cols = ComplexMatrix::Identity(4, 4);
        bases.push_back(cols);
    }
    return bases;
}

inline MeasurementCatalog mub_catalog_from_vectors(const std::vector<ComplexMatrix>& bases,
                                                   const HermitianBasis& basis,
                                                   const std::string& prefix) {
    std::vector<Povm> settings;
    for (std::size_t j = 0; j < bases.size(); ++j)
        settings.push_back(basis_povm(prefix + std::to_string(j), bases[j], basis));
    return make_catalog(std::move(settings));
}

inline MeasurementCatalog mub_settings(const HermitianBasis& basis) {
    require_two_qubits(basis, "mub_settings");
    return mub_catalog_from_vectors(standard_mub_vectors(), basis, "MUB");
}

// {psi1, psi1_perp} x {psi2, psi2_perp}, outcomes ordered (++, +-, -+, --).
inline Povm complete_product_povm(const Ket& psi1, const Ket& psi2, const HermitianBasis& basis,
                                  std::string label = "PMIN") {
    require_two_qubits(basis, "complete_product_povm");
    if (psi1.size() != 2 || psi2.size() != 2)
        throw DimensionMismatch("complete_product_povm: qubit states required");
    if (psi1.norm() == 0.0 || psi2.norm() == 0.0)
        throw std::invalid_argument("complete_product_povm: zero vector");
    const Ket a = psi1.normalized();
    const Ket b = psi2.normalized();
    const std::array<Ket, 2> first = {a, orthogonal_qubit(a)};
    const std::array<Ket, 2> second = {b, orthogonal_qubit(b)};
    std::vector<ComplexMatrix> effects;
    for (const auto& u : first)
        for (const auto& v : second) effects.push_back(projector(kron(u, v)));
    return make_povm(std::move(label), effects, basis);
}

// Standard MUB with every vector mapped v -> U v, U the canonical eigenvectors
// of rho_hat; the first basis then diagonalizes rho_hat.
inline MeasurementCatalog rotate_mub_to_basis(const DensityMatrix& rho_hat, const HermitianBasis& basis) {
    require_two_qubits(basis, "rotate_mub_to_basis");
    if (rho_hat.dim() != 4) throw DimensionMismatch("rotate_mub_to_basis: d = 4 state required");
    const ComplexMatrix u = canonical_eigensystem(rho_hat.matrix()).vectors;
    std::vector<ComplexMatrix> rotated;
    for (const auto& b : standard_mub_vectors()) rotated.push_back(u * b);
    return mub_catalog_from_vectors(rotated, basis, "RMUB");
}

inline Povm eigenbasis_povm(const DensityMatrix& rho_hat, const HermitianBasis& basis,
                            std::string label = "EIG") {
    if (rho_hat.dim() != basis.dim()) throw DimensionMismatch("eigenbasis_povm: dimensions differ");
    if (rho_hat.dim() < 2) throw std::invalid_argument("eigenbasis_povm: d >= 2 required");
    return basis_povm(std::move(label), canonical_eigensystem(rho_hat.matrix()).vectors, basis);
}

// Born probabilities Tr(E_m rho).
inline RealVector born_probabilities(const DensityMatrix& rho, const Povm& povm) {
    RealVector p(static_cast<Eigen::Index>(povm.size()));
    for (std::size_t m = 0; m < povm.size(); ++m)
        p(static_cast<Eigen::Index>(m)) = trace_product(povm.effects[m].effect, rho.matrix());
    return p;
}

} // namespace raqst
