#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "support/test_support.hpp"
#include "supmech/quantum.hpp"

using namespace supmech;
using namespace supmech::testing;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("quantum_bracket of sigma_x and sigma_y is -2 sigma_z") {
    // Oracle: direct 2x2 matrix products.
    // sigma_x sigma_y = i sigma_z, sigma_y sigma_x = -i sigma_z, so
    // (i/hbar)(sx sy - sy sx) = (i)(2i sigma_z) = -2 sigma_z at hbar = 1.
    const auto bracket = quantum_bracket(QuantumOperator(pauli_x()), QuantumOperator(pauli_y()), 1.0);
    CHECK(max_abs(bracket.matrix() - Matrix(-2.0 * pauli_z())) < 1e-14);
}

TEST_CASE("quantum_bracket vanishes on identical and identity arguments") {
    const QuantumOperator a{pauli_x()};
    CHECK(max_abs(quantum_bracket(a, a, 1.0).matrix()) == 0.0);
    const QuantumOperator eye{Matrix::Identity(2, 2)};
    CHECK(max_abs(quantum_bracket(eye, QuantumOperator(pauli_y()), 1.0).matrix()) == 0.0);
}

TEST_CASE("quantum_bracket rejects mismatched dimensions") {
    CHECK_THROWS_AS(quantum_bracket(QuantumOperator(pauli_x()),
                                    QuantumOperator(Matrix::Identity(3, 3)), 1.0),
                    DimensionMismatch);
}

TEST_CASE("quantum_bracket is Hermitian on Hermitian inputs and scales with 1/hbar") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const QuantumOperator a{random_hermitian(rng, 3)};
        const QuantumOperator b{random_hermitian(rng, 3)};
        const Matrix at_one = quantum_bracket(a, b, 1.0).matrix();
        CHECK(max_abs(at_one - at_one.adjoint()) < 1e-13);
        const Matrix at_half = quantum_bracket(a, b, 0.5).matrix();
        CHECK(max_abs(at_half - 2.0 * at_one) < 1e-12);
    }
}

TEST_CASE("quantum bracket axioms on random Hermitian triples") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + trial % 3;
        const Matrix a = random_hermitian(rng, d);
        const Matrix b = random_hermitian(rng, d);
        const Matrix c = random_hermitian(rng, d);
        const double scale = max_abs(a) * max_abs(b) * std::max(1.0, max_abs(c));
        const auto br = [](const Matrix& x, const Matrix& y) {
            return quantum_bracket(QuantumOperator(x), QuantumOperator(y), 1.0).matrix();
        };

        // Antisymmetry and bilinearity.
        CHECK(max_abs(br(a, b) + br(b, a)) < 1e-10 * scale);
        CHECK(max_abs(br(a + 2.0 * b, c) - br(a, c) - 2.0 * br(b, c)) < 1e-10 * scale);

        // Leibniz: {a, bc} = {a,b}c + b{a,c}.
        const Matrix bc = b * c;
        CHECK(max_abs(br(a, bc) - (br(a, b) * c + b * br(a, c))) < 1e-10 * scale);

        // Jacobi.
        const Matrix jacobi = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b));
        CHECK(max_abs(jacobi) < 1e-10 * scale);
    }
}

TEST_CASE("eigendecompose of sigma_z gives the standard basis") {
    const SpectralData data = eigendecompose(QuantumObservable(pauli_z()));
    CHECK(data.eigenvalues(0) == doctest::Approx(-1.0));
    CHECK(data.eigenvalues(1) == doctest::Approx(1.0));
    CHECK(std::abs(data.eigenvectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(data.eigenvectors(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("eigendecompose of sigma_x matches the characteristic-polynomial oracle") {
    // Oracle: lambda^2 - tr(sigma_x) lambda + det(sigma_x) = lambda^2 - 1,
    // so lambda = -1, +1 with eigenvectors (1, -1)/sqrt(2) and (1, 1)/sqrt(2).
    const SpectralData data = eigendecompose(QuantumObservable(pauli_x()));
    CHECK(data.eigenvalues(0) == doctest::Approx(-1.0));
    CHECK(data.eigenvalues(1) == doctest::Approx(1.0));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(max_abs(data.eigenvectors.col(0) -
                  Eigen::Vector2cd(inv_sqrt2, -inv_sqrt2).cast<Complex>()) < 1e-12);
    CHECK(max_abs(data.eigenvectors.col(1) -
                  Eigen::Vector2cd(inv_sqrt2, inv_sqrt2).cast<Complex>()) < 1e-12);
}

TEST_CASE("eigendecompose satisfies the spectral invariants on random observables") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 25; ++trial) {
        const int d = 2 + trial % 4;
        const Matrix f = random_hermitian(rng, d);
        SpectralData data;
        try {
            data = eigendecompose(QuantumObservable(f));
        } catch (const DegenerateSpectrum&) {
            continue;  // random ties are legitimate rejections
        }
        for (int j = 0; j < d; ++j) {
            CHECK(max_abs(f * data.eigenvectors.col(j) -
                          data.eigenvalues(j) * data.eigenvectors.col(j)) < 1e-10);
        }
        CHECK(max_abs(data.eigenvectors.adjoint() * data.eigenvectors - Matrix::Identity(d, d)) <
              1e-10);
    }
}

TEST_CASE("eigendecompose rejects degenerate spectra") {
    CHECK_THROWS_AS(eigendecompose(QuantumObservable(2.0 * Matrix::Identity(2, 2))),
                    DegenerateSpectrum);
}

TEST_CASE("expectation values") {
    Matrix ket0 = Matrix::Zero(2, 2);
    ket0(0, 0) = 1.0;
    CHECK(expectation(QuantumState(ket0), QuantumObservable(pauli_z())) == doctest::Approx(1.0));

    CHECK(expectation(QuantumState(0.5 * Matrix::Identity(2, 2)), QuantumObservable(pauli_x())) ==
          doctest::Approx(0.0));

    // psi = (sqrt(0.3), sqrt(0.7)): <sigma_z> = 0.3 - 0.7 = -0.4.
    Eigen::Vector2cd psi(std::sqrt(0.3), std::sqrt(0.7));
    CHECK(expectation(QuantumState(Matrix(psi * psi.adjoint())), QuantumObservable(pauli_z())) ==
          doctest::Approx(-0.4).epsilon(1e-12));
}

TEST_CASE("evolve_quantum is the identity for H = 0 and fixes eigenstates") {
    std::mt19937 rng(17);
    const Matrix rho = random_density(rng, 2);
    const QuantumState evolved =
        evolve_quantum(QuantumState(rho), QuantumObservable(Matrix::Zero(2, 2)), 3.7, 1.0);
    CHECK(max_abs(evolved.matrix() - rho) < 1e-12);

    Matrix ket0 = Matrix::Zero(2, 2);
    ket0(0, 0) = 1.0;
    const QuantumState stationary =
        evolve_quantum(QuantumState(ket0), QuantumObservable(pauli_z()), 2.1, 1.0);
    CHECK(max_abs(stationary.matrix() - ket0) < 1e-10);
}

TEST_CASE("evolve_quantum precession matches the matrix-exponential oracle") {
    // |+x> under H = sigma_z: the Bloch vector precesses in the x-y plane.
    Eigen::Vector2cd plus_x(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    const QuantumState initial{Matrix(plus_x * plus_x.adjoint())};
    const QuantumObservable h{pauli_z()};

    for (double t : {0.3, 0.7, 1.9}) {
        const QuantumState evolved = evolve_quantum(initial, h, t, 1.0);
        const double sx = expectation(evolved, QuantumObservable(pauli_x()));
        const double sy = expectation(evolved, QuantumObservable(pauli_y()));
        CHECK(sx * sx + sy * sy == doctest::Approx(1.0).epsilon(1e-10));

        // Oracle: U = exp(-i H t) applied directly.
        Matrix u(2, 2);
        u << std::exp(Complex(0, -t)), 0, 0, std::exp(Complex(0, t));
        const Matrix expected = u * initial.matrix() * u.adjoint();
        CHECK(max_abs(evolved.matrix() - expected) < 1e-12);
        CHECK(sx == doctest::Approx(std::cos(2.0 * t)).epsilon(1e-10));
    }
}

TEST_CASE("evolve_quantum preserves trace, positivity and purity") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + trial % 3;
        const Matrix rho = random_density(rng, d);
        const Matrix h = random_hermitian(rng, d);
        const QuantumState evolved =
            evolve_quantum(QuantumState(rho), QuantumObservable(h), 1.3, 0.7);
        CHECK(std::abs(evolved.matrix().trace().real() - 1.0) < 1e-10);
        const double purity_before = (rho * rho).trace().real();
        const double purity_after = (evolved.matrix() * evolved.matrix()).trace().real();
        CHECK(purity_after == doctest::Approx(purity_before).epsilon(1e-10));
        Eigen::SelfAdjointEigenSolver<Matrix> solver(evolved.matrix(), Eigen::EigenvaluesOnly);
        CHECK(solver.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("type invariants reject bad inputs") {
    Matrix non_hermitian(2, 2);
    non_hermitian << 0, 1, 0, 0;
    CHECK_THROWS_AS(QuantumObservable{non_hermitian}, InvariantViolation);

    CHECK_THROWS_AS(QuantumState{Matrix(2.0 * Matrix::Identity(2, 2))}, InvariantViolation);

    Matrix negative = Matrix::Zero(2, 2);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(QuantumState{negative}, InvariantViolation);

    Matrix with_nan = Matrix::Zero(2, 2);
    with_nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(QuantumOperator{with_nan}, InvariantViolation);
}
