// quantum.hpp: dense operators, Pauli bases, Bloch parameterization, fidelity
// metrics and projection of Hermitian unit-trace matrices onto density matrices.

#pragma once

#include "raqst/errors.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <optional>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace raqst {

using cdouble = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double psd = 1e-10;
// Inputs to projection may drift this far from Hermitian/unit trace.
inline constexpr double projection_input = 1e-8;
} // namespace tol

// --------------------------- small operators --------------------------------

inline ComplexMatrix pauli(char label) {
    ComplexMatrix m(2, 2);
    switch (label) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cdouble(0, -1), cdouble(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument(std::string("pauli: unknown label ") + label);
    }
    return m;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix k = Eigen::kroneckerProduct(a, b);
    return k;
}

inline Ket kron(const Ket& a, const Ket& b) {
    Ket k = Eigen::kroneckerProduct(a, b);
    return k;
}

inline ComplexMatrix projector(const Ket& psi) { return psi * psi.adjoint(); }

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline double hermiticity_defect(const ComplexMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// Real part of Tr(a b) without forming the product.
inline double trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a.transpose().cwiseProduct(b)).sum().real();
}

inline double min_eigenvalue(const ComplexMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// --------------------------- density matrices -------------------------------

class DensityMatrix {
public:
    // Validates the density-matrix invariants; stores the exactly Hermitian part.
    explicit DensityMatrix(const ComplexMatrix& m) {
        if (m.rows() != m.cols() || m.rows() == 0)
            throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
        if (!m.allFinite())
            throw std::invalid_argument("DensityMatrix: non-finite entries");
        if (hermiticity_defect(m) > tol::hermitian)
            throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
        if (std::abs(m.trace() - cdouble(1.0)) > tol::trace)
            throw std::invalid_argument("DensityMatrix: trace differs from 1");
        mat_ = hermitian_part(m);
        if (min_eigenvalue(mat_) < -tol::psd)
            throw std::invalid_argument("DensityMatrix: matrix has a negative eigenvalue");
    }

    static DensityMatrix maximally_mixed(int dim) {
        return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    static DensityMatrix pure(const Ket& psi) {
        const double n = psi.norm();
        if (n == 0.0) throw std::invalid_argument("DensityMatrix::pure: zero vector");
        return DensityMatrix(projector(psi / n));
    }

    const ComplexMatrix& matrix() const noexcept { return mat_; }
    int dim() const noexcept { return static_cast<int>(mat_.rows()); }

private:
    ComplexMatrix mat_;
};

// --------------------------- operator bases ---------------------------------

// Traceless orthonormal Hermitian operators {Omega_i}, Tr(Omega_i Omega_j) = delta_ij.
class HermitianBasis {
public:
    HermitianBasis(int dim, std::vector<ComplexMatrix> ops, std::vector<std::string> labels)
        : dim_(dim), ops_(std::move(ops)), labels_(std::move(labels)) {
        if (static_cast<long>(ops_.size()) != static_cast<long>(dim) * dim - 1)
            throw DimensionMismatch("HermitianBasis: need d^2-1 operators");
        if (labels_.size() != ops_.size())
            throw DimensionMismatch("HermitianBasis: one label per operator");
    }

    int dim() const noexcept { return dim_; }
    int size() const noexcept { return static_cast<int>(ops_.size()); }
    const ComplexMatrix& op(int i) const { return ops_.at(static_cast<std::size_t>(i)); }
    const std::vector<ComplexMatrix>& ops() const noexcept { return ops_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    int index_of(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) throw std::invalid_argument("HermitianBasis: no operator " + label);
        return static_cast<int>(it - labels_.begin());
    }

private:
    int dim_;
    std::vector<ComplexMatrix> ops_;
    std::vector<std::string> labels_;
};

// Normalized Pauli strings sigma_{a1} x ... x sigma_{an} / 2^{n/2}, labels over
// {I,X,Y,Z}^n in lexicographic order with the all-identity string removed.
inline HermitianBasis build_pauli_basis(int n_qubits) {
    if (n_qubits < 1) throw std::invalid_argument("build_pauli_basis: n_qubits must be >= 1");
    if (n_qubits > 6) throw std::invalid_argument("build_pauli_basis: at most 6 qubits supported");
    static constexpr char kLetters[4] = {'I', 'X', 'Y', 'Z'};
    const int dim = 1 << n_qubits;
    const double norm = std::pow(2.0, -0.5 * n_qubits);
    const long count = 1L << (2 * n_qubits);

    std::vector<ComplexMatrix> ops;
    std::vector<std::string> labels;
    ops.reserve(static_cast<std::size_t>(count - 1));
    for (long code = 1; code < count; ++code) {
        std::string label(static_cast<std::size_t>(n_qubits), 'I');
        ComplexMatrix op = ComplexMatrix::Identity(1, 1);
        for (int q = 0; q < n_qubits; ++q) {
            const int digit = static_cast<int>((code >> (2 * (n_qubits - 1 - q))) & 3);
            label[static_cast<std::size_t>(q)] = kLetters[digit];
            op = kron(op, pauli(kLetters[digit]));
        }
        ops.push_back(op * norm);
        labels.push_back(std::move(label));
    }
    return HermitianBasis(dim, std::move(ops), std::move(labels));
}

// --------------------------- Bloch parameterization -------------------------

struct BlochVector {
    RealVector theta;

    int size() const noexcept { return static_cast<int>(theta.size()); }
};

// Coordinates Re Tr(m Omega_i) of any square matrix in the basis.
inline RealVector basis_coordinates(const ComplexMatrix& m, const HermitianBasis& basis) {
    if (m.rows() != basis.dim() || m.cols() != basis.dim())
        throw DimensionMismatch("basis_coordinates: matrix and basis dimensions differ");
    RealVector c(basis.size());
    for (int i = 0; i < basis.size(); ++i) c(i) = trace_product(m, basis.op(i));
    return c;
}

inline BlochVector state_to_bloch(const DensityMatrix& rho, const HermitianBasis& basis) {
    return BlochVector{basis_coordinates(rho.matrix(), basis)};
}

// I/d + sum theta_i Omega_i. Hermitian with unit trace, but not necessarily PSD.
inline ComplexMatrix bloch_to_matrix(const BlochVector& theta, const HermitianBasis& basis) {
    if (theta.size() != basis.size())
        throw DimensionMismatch("bloch_to_matrix: Bloch vector length does not match basis");
    const int d = basis.dim();
    ComplexMatrix mu = ComplexMatrix::Identity(d, d) / static_cast<double>(d);
    for (int i = 0; i < basis.size(); ++i) mu += theta.theta(i) * basis.op(i);
    return mu;
}

// --------------------------- projection -------------------------------------

// Euclidean projection onto the probability simplex {p >= 0, sum p = 1} by the
// sort-and-threshold rule. Output is in the input's index order.
inline RealVector project_to_simplex(const RealVector& v) {
    const Eigen::Index n = v.size();
    if (n == 0) throw std::invalid_argument("project_to_simplex: empty vector");
    std::vector<double> sorted(v.data(), v.data() + n);
    std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += sorted[static_cast<std::size_t>(k)];
        const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[static_cast<std::size_t>(k)] - t > 0.0) threshold = t;
    }
    return (v.array() - threshold).max(0.0).matrix();
}

// Closest density matrix in Frobenius norm: keep eigenvectors, project the spectrum.
inline DensityMatrix project_to_physical(const ComplexMatrix& mu) {
    if (mu.rows() != mu.cols() || mu.rows() == 0)
        throw std::invalid_argument("project_to_physical: matrix must be square");
    if (!mu.allFinite()) throw NumericError("project_to_physical: non-finite entries");
    if (hermiticity_defect(mu) > tol::projection_input)
        throw std::invalid_argument("project_to_physical: input is not Hermitian");
    if (std::abs(mu.trace() - cdouble(1.0)) > tol::projection_input)
        throw std::invalid_argument("project_to_physical: input trace differs from 1");

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(mu));
    if (es.info() != Eigen::Success) throw NumericError("project_to_physical: eigensolver failed");
    const RealVector lambda = project_to_simplex(es.eigenvalues());
    ComplexMatrix rho = es.eigenvectors() * lambda.cast<cdouble>().asDiagonal() *
                        es.eigenvectors().adjoint();
    // Absorb the O(eps) trace residue of the reconstruction.
    rho = hermitian_part(rho);
    rho /= rho.trace().real();
    return DensityMatrix(rho);
}

// --------------------------- metrics ----------------------------------------

inline ComplexMatrix sqrt_psd(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m));
    const RealVector s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {
// Top eigenvector when the state is rank one to 1e-12.
inline std::optional<Ket> pure_vector(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
    const Eigen::Index top = rho.dim() - 1;
    if (es.eigenvalues()(top) < 1.0 - 1e-12) return std::nullopt;
    return Ket(es.eigenvectors().col(top));
}
} // namespace detail

// F = Tr^2 sqrt(sqrt(rho) sigma sqrt(rho)), clamped to [0, 1]. A rank-one
// argument uses the exact form <psi|sigma|psi>.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) throw DimensionMismatch("fidelity: dimensions differ");
    if (const auto psi = detail::pure_vector(rho))
        return std::clamp((psi->adjoint() * sigma.matrix() * *psi)(0, 0).real(), 0.0, 1.0);
    if (const auto psi = detail::pure_vector(sigma))
        return std::clamp((psi->adjoint() * rho.matrix() * *psi)(0, 0).real(), 0.0, 1.0);
    const ComplexMatrix s = sqrt_psd(rho.matrix());
    const ComplexMatrix inner = hermitian_part(s * sigma.matrix() * s);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(inner, Eigen::EigenvaluesOnly);
    const double root_sum = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(root_sum * root_sum, 0.0, 1.0);
}

inline double infidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    return 1.0 - fidelity(rho, sigma);
}

inline double purity(const DensityMatrix& rho) {
    return trace_product(rho.matrix(), rho.matrix());
}

// D_B^2 = 2 (1 - sqrt F).
inline double bures_distance_sq(const DensityMatrix& rho, const DensityMatrix& sigma) {
    return 2.0 * (1.0 - std::sqrt(fidelity(rho, sigma)));
}

// Eigen-decomposition with eigenvalues in descending order and each eigenvector's
// largest-magnitude component made real positive (first such index on ties).
struct Eigensystem {
    RealVector values;
    ComplexMatrix vectors; // columns
};

inline Eigensystem canonical_eigensystem(const ComplexMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(hermitian));
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    const Eigen::Index n = hermitian.rows();
    Eigensystem out{RealVector(n), ComplexMatrix(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;
        out.values(k) = es.eigenvalues()(src);
        Ket v = es.eigenvectors().col(src);
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            // Small slack keeps the pick stable across equal-magnitude components.
            if (std::abs(v(i)) > best + 1e-12) {
                best = std::abs(v(i));
                arg = i;
            }
        }
        v *= std::conj(v(arg)) / std::abs(v(arg));
        out.vectors.col(k) = v;
    }
    return out;
}

} // namespace raqst
