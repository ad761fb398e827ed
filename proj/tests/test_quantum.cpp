#include "raqst/quantum.hpp"
#include "raqst/simulator.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace raqst;

namespace {

// Brute-force simplex projection: the optimum has support on some set S, with
// x_i = v_i - t on S; enumerate all supports and keep the feasible minimizer.
RealVector simplex_oracle(const RealVector& v) {
    const int n = static_cast<int>(v.size());
    RealVector best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < (1 << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) {
                sum += v(i);
                ++count;
            }
        const double t = (sum - 1.0) / count;
        RealVector x = RealVector::Zero(n);
        bool feasible = true;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) {
                x(i) = v(i) - t;
                if (x(i) < -1e-15) feasible = false;
            }
        if (!feasible) continue;
        const double dist = (x - v).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best = x;
        }
    }
    return best;
}

ComplexMatrix random_hermitian_unit_trace(int d, Rng& rng, double scale = 0.5) {
    std::normal_distribution<double> normal;
    ComplexMatrix g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = cdouble(normal(rng), normal(rng));
    ComplexMatrix h = scale * hermitian_part(g);
    h += ComplexMatrix::Identity(d, d) * ((1.0 - h.trace().real()) / d);
    return h;
}

DensityMatrix random_mixed_state(int d, Rng& rng) {
    std::normal_distribution<double> normal;
    ComplexMatrix g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = cdouble(normal(rng), normal(rng));
    ComplexMatrix rho = g * g.adjoint();
    return DensityMatrix(hermitian_part(rho / rho.trace().real()));
}

} // namespace

TEST(PauliBasis, SingleQubitIsScaledPaulis) {
    const auto b = build_pauli_basis(1);
    ASSERT_EQ(b.size(), 3);
    EXPECT_EQ(b.labels(), (std::vector<std::string>{"X", "Y", "Z"}));
    EXPECT_LT((b.op(0) - pauli('X') / std::sqrt(2.0)).norm(), 1e-15);
    EXPECT_LT((b.op(2) - pauli('Z') / std::sqrt(2.0)).norm(), 1e-15);
}

TEST(PauliBasis, TwoQubitGramMatrixIsIdentity) {
    const auto b = build_pauli_basis(2);
    ASSERT_EQ(b.size(), 15);
    EXPECT_EQ(b.labels().front(), "IX");
    EXPECT_EQ(b.labels().back(), "ZZ");
    for (int i = 0; i < 15; ++i) {
        EXPECT_LT(std::abs(b.op(i).trace()), 1e-12);
        EXPECT_LT(hermiticity_defect(b.op(i)), 1e-15);
        for (int j = 0; j < 15; ++j) {
            cdouble tr = 0.0;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) tr += b.op(i)(r, c) * b.op(j)(c, r);
            EXPECT_NEAR(tr.real(), i == j ? 1.0 : 0.0, 1e-12);
            EXPECT_NEAR(tr.imag(), 0.0, 1e-12);
        }
    }
}

TEST(PauliBasis, RejectsBadQubitCount) {
    EXPECT_THROW(build_pauli_basis(0), std::invalid_argument);
}

TEST(Bloch, MaximallyMixedIsZero) {
    const auto b = build_pauli_basis(2);
    EXPECT_LT(state_to_bloch(DensityMatrix::maximally_mixed(4), b).theta.norm(), 1e-15);
}

TEST(Bloch, SingletCoordinates) {
    const auto b = build_pauli_basis(2);
    const auto theta = state_to_bloch(singlet(), b).theta;
    for (int i = 0; i < 15; ++i) {
        const auto& l = b.labels()[static_cast<std::size_t>(i)];
        const double expected = (l == "XX" || l == "YY" || l == "ZZ") ? -0.5 : 0.0;
        EXPECT_NEAR(theta(i), expected, 1e-12) << l;
    }
}

TEST(Bloch, SingletFromCoordinatesMatchesExplicitMatrix) {
    const auto b = build_pauli_basis(2);
    RealVector theta = RealVector::Zero(15);
    for (const char* l : {"XX", "YY", "ZZ"}) theta(b.index_of(l)) = -0.5;
    const ComplexMatrix explicit_singlet =
        (ComplexMatrix::Identity(4, 4) - kron(pauli('X'), pauli('X')) - kron(pauli('Y'), pauli('Y')) -
         kron(pauli('Z'), pauli('Z'))) /
        4.0;
    EXPECT_LT((bloch_to_matrix(BlochVector{theta}, b) - explicit_singlet).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((explicit_singlet - singlet().matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bloch, RoundTripOnRandomStates) {
    const auto b = build_pauli_basis(2);
    Rng rng = make_rng(11);
    for (int k = 0; k < 100; ++k) {
        const DensityMatrix rho = k % 2 ? random_mixed_state(4, rng) : random_pure_state(rng);
        const ComplexMatrix back = bloch_to_matrix(state_to_bloch(rho, b), b);
        EXPECT_LT((back - rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(back.trace().real(), 1.0, 1e-14);
        EXPECT_LE(state_to_bloch(rho, b).theta.norm(), std::sqrt(3.0 / 4.0) + 1e-12);
    }
}

TEST(Bloch, LengthMismatchThrows) {
    const auto b = build_pauli_basis(2);
    EXPECT_THROW(bloch_to_matrix(BlochVector{RealVector::Zero(3)}, b), DimensionMismatch);
    EXPECT_THROW(state_to_bloch(DensityMatrix::maximally_mixed(2), b), DimensionMismatch);
}

TEST(DensityMatrixType, RejectsInvalidMatrices) {
    ComplexMatrix m = ComplexMatrix::Identity(2, 2);
    EXPECT_THROW(DensityMatrix{m}, std::invalid_argument);
    m = ComplexMatrix::Identity(2, 2) / 2.0;
    m(0, 1) = cdouble(0.1, 0.0);
    EXPECT_THROW(DensityMatrix{m}, std::invalid_argument);
    ComplexMatrix neg(2, 2);
    neg << 1.5, 0, 0, -0.5;
    EXPECT_THROW(DensityMatrix{neg}, std::invalid_argument);
}

TEST(Projection, SimplexExample) {
    RealVector v(4);
    v << 0.6, 0.5, -0.1, 0.0;
    RealVector expected(4);
    expected << 0.55, 0.45, 0.0, 0.0;
    EXPECT_LT((project_to_simplex(v) - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((simplex_oracle(v) - expected).cwiseAbs().maxCoeff(), 1e-15);

    ComplexMatrix mu = ComplexMatrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) mu(i, i) = v(i);
    const DensityMatrix rho = project_to_physical(mu);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(rho.matrix()(i, i).real(), expected(i), 1e-12);
}

TEST(Projection, SimplexMatchesBruteForce) {
    Rng rng = make_rng(3);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 200; ++k) {
        RealVector v(5);
        for (int i = 0; i < 5; ++i) v(i) = normal(rng);
        EXPECT_LT((project_to_simplex(v) - simplex_oracle(v)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Projection, PhysicalInputUnchanged) {
    Rng rng = make_rng(5);
    for (int k = 0; k < 20; ++k) {
        const DensityMatrix rho = random_mixed_state(4, rng);
        EXPECT_LT((project_to_physical(rho.matrix()).matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Projection, IdempotentAndPreservesEigenvectors) {
    Rng rng = make_rng(6);
    for (int k = 0; k < 30; ++k) {
        const ComplexMatrix mu = random_hermitian_unit_trace(4, rng);
        const DensityMatrix rho = project_to_physical(mu);
        EXPECT_GE(min_eigenvalue(rho.matrix()), -1e-12);
        EXPECT_LT((project_to_physical(rho.matrix()).matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
        // Same eigenvectors: the projection commutes with the input.
        EXPECT_LT((mu * rho.matrix() - rho.matrix() * mu).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Projection, NoRandomProbeIsCloser) {
    Rng rng = make_rng(7);
    for (int k = 0; k < 50; ++k) {
        const ComplexMatrix mu = random_hermitian_unit_trace(4, rng);
        const DensityMatrix rho = project_to_physical(mu);
        const double d0 = (rho.matrix() - mu).norm();
        for (int t = 0; t < 40; ++t) {
            const DensityMatrix probe = t % 2 ? random_mixed_state(4, rng) : random_pure_state(rng);
            EXPECT_GE((probe.matrix() - mu).norm(), d0 - 1e-12);
            // Convexity: points between the projection and a probe are no closer.
            const ComplexMatrix mid = 0.9 * rho.matrix() + 0.1 * probe.matrix();
            EXPECT_GE((mid - mu).norm(), d0 - 1e-12);
        }
    }
}

TEST(Projection, RejectsNonHermitianInput) {
    ComplexMatrix mu = ComplexMatrix::Identity(4, 4) / 4.0;
    mu(0, 1) = 1e-6;
    EXPECT_THROW(project_to_physical(mu), std::invalid_argument);
    mu(0, 1) = 0.0;
    mu(0, 0) += 1e-6;
    EXPECT_THROW(project_to_physical(mu), std::invalid_argument);
}

TEST(Metrics, FidelityExamples) {
    const DensityMatrix mm = DensityMatrix::maximally_mixed(4);
    EXPECT_NEAR(fidelity(singlet(), mm), 0.25, 1e-12);
    EXPECT_NEAR(infidelity(singlet(), mm), 0.75, 1e-12);
    Ket zero(2), one(2);
    zero << 1, 0;
    one << 0, 1;
    EXPECT_NEAR(fidelity(DensityMatrix::pure(zero), DensityMatrix::pure(one)), 0.0, 1e-15);
    Rng rng = make_rng(8);
    for (int k = 0; k < 20; ++k) {
        const DensityMatrix a = random_mixed_state(4, rng);
        const DensityMatrix b = random_mixed_state(4, rng);
        EXPECT_NEAR(fidelity(a, a), 1.0, 1e-9);
        EXPECT_NEAR(fidelity(a, b), fidelity(b, a), 1e-9);
        if ((a.matrix() - b.matrix()).norm() > 1e-4) {
            EXPECT_LT(fidelity(a, b), 1.0 - 1e-9);
        }
    }
}

TEST(Metrics, PureStateFidelityIsOverlap) {
    Rng rng = make_rng(9);
    for (int k = 0; k < 20; ++k) {
        const Ket psi = random_ket(4, rng);
        const DensityMatrix sigma = random_mixed_state(4, rng);
        const double overlap = (psi.adjoint() * sigma.matrix() * psi)(0, 0).real();
        EXPECT_NEAR(fidelity(DensityMatrix::pure(psi), sigma), overlap, 1e-9);
    }
}

TEST(Metrics, Purity) {
    EXPECT_NEAR(purity(DensityMatrix::maximally_mixed(4)), 0.25, 1e-15);
    EXPECT_NEAR(purity(singlet()), 1.0, 1e-12);
    EXPECT_NEAR(purity(werner_state(0.997)), 0.9955, 5e-5);
}

TEST(Metrics, BuresRelation) {
    const DensityMatrix s = singlet();
    EXPECT_NEAR(bures_distance_sq(s, s), 0.0, 1e-7);
    Ket zero(2), one(2);
    zero << 1, 0;
    one << 0, 1;
    EXPECT_NEAR(bures_distance_sq(DensityMatrix::pure(zero), DensityMatrix::pure(one)), 2.0, 1e-15);
    Rng rng = make_rng(10);
    for (int k = 0; k < 20; ++k) {
        const DensityMatrix a = random_mixed_state(4, rng);
        const DensityMatrix b = random_mixed_state(4, rng);
        const double db2 = bures_distance_sq(a, b);
        EXPECT_NEAR(1.0 - fidelity(a, b), db2 - db2 * db2 / 4.0, 1e-10);
    }
}

TEST(Eigensystem, CanonicalOrderAndPhase) {
    Rng rng = make_rng(12);
    for (int k = 0; k < 20; ++k) {
        const DensityMatrix rho = random_mixed_state(4, rng);
        const auto es = canonical_eigensystem(rho.matrix());
        for (int i = 0; i + 1 < 4; ++i) EXPECT_GE(es.values(i), es.values(i + 1));
        for (int i = 0; i < 4; ++i) {
            Eigen::Index arg;
            es.vectors.col(i).cwiseAbs().maxCoeff(&arg);
            EXPECT_NEAR(es.vectors(arg, i).imag(), 0.0, 1e-14);
            EXPECT_GT(es.vectors(arg, i).real(), 0.0);
        }
        const ComplexMatrix back =
            es.vectors * es.values.cast<cdouble>().asDiagonal() * es.vectors.adjoint();
        EXPECT_LT((back - rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    }
}
