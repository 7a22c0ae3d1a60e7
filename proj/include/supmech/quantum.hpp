#pragma once

#include <Eigen/Dense>
#include <complex>

#include "supmech/errors.hpp"

namespace supmech {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Maximum Hermiticity defect tolerated when constructing observables and states.
inline constexpr double kHermitianTol = 1e-12;

/// Square complex matrix with finite entries. Element of the operator algebra.
class QuantumOperator {
public:
    explicit QuantumOperator(Matrix entries);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& matrix() const { return entries_; }

private:
    Matrix entries_;
};

/// Hermitian operator. Inputs outside the Hermiticity tolerance are rejected,
/// not symmetrized, so that configuration errors surface early.
class QuantumObservable {
public:
    explicit QuantumObservable(Matrix entries);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& matrix() const { return entries_; }

private:
    Matrix entries_;
};

/// Density matrix: Hermitian, positive semidefinite up to -1e-10, unit trace.
class QuantumState {
public:
    explicit QuantumState(Matrix rho);

    int dim() const { return static_cast<int>(rho_.rows()); }
    const Matrix& matrix() const { return rho_; }

private:
    Matrix rho_;
};

/// Eigenvalues in ascending order with orthonormal eigenvector columns.
/// Column phases are fixed (largest-magnitude component real positive) so that
/// repeated decompositions are bit-stable.
struct SpectralData {
    Eigen::VectorXd eigenvalues;
    Matrix eigenvectors;

    int dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Quantum Poisson bracket (-i*hbar)^(-1) (AB - BA).
QuantumOperator quantum_bracket(const QuantumOperator& a, const QuantumOperator& b, double hbar);

/// Spectral decomposition of a Hermitian observable. Throws DegenerateSpectrum
/// when any eigenvalue gap falls below degeneracy_tol relative to the spectral
/// range; the measurement setup requires a nondegenerate spectrum.
SpectralData eigendecompose(const QuantumObservable& f, double degeneracy_tol = 1e-8);

/// Expectation value trace(rho * a).
double expectation(const QuantumState& state, const QuantumObservable& a);

/// Exact unitary evolution of a state over time t, by spectral decomposition
/// of the Hamiltonian. Preserves trace, Hermiticity, positivity and purity.
QuantumState evolve_quantum(const QuantumState& state, const QuantumObservable& hamiltonian,
                            double t, double hbar);

}  // namespace supmech
