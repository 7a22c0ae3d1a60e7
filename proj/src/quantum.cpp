#include "supmech/quantum.hpp"

#include <cmath>
#include <string>

namespace supmech {

namespace {

void require_square_finite(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw DimensionMismatch(std::string(what) + ": matrix must be square and nonempty");
    }
    if (!m.allFinite()) {
        throw InvariantViolation(std::string(what) + ": entries must be finite");
    }
}

double hermiticity_defect(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows()) {
        throw DimensionMismatch(std::string(what) + ": dimensions " + std::to_string(a.rows()) +
                                " and " + std::to_string(b.rows()) + " differ");
    }
}

}  // namespace

QuantumOperator::QuantumOperator(Matrix entries) : entries_(std::move(entries)) {
    require_square_finite(entries_, "QuantumOperator");
}

QuantumObservable::QuantumObservable(Matrix entries) : entries_(std::move(entries)) {
    require_square_finite(entries_, "QuantumObservable");
    const double defect = hermiticity_defect(entries_);
    if (defect > kHermitianTol) {
        throw InvariantViolation("QuantumObservable: Hermiticity defect " +
                                 std::to_string(defect) + " exceeds tolerance");
    }
}

QuantumState::QuantumState(Matrix rho) : rho_(std::move(rho)) {
    require_square_finite(rho_, "QuantumState");
    if (hermiticity_defect(rho_) > kHermitianTol) {
        throw InvariantViolation("QuantumState: density matrix must be Hermitian");
    }
    const double trace_defect = std::abs(rho_.trace() - Complex(1.0, 0.0));
    if (trace_defect > 1e-10) {
        throw InvariantViolation("QuantumState: trace deviates from 1 by " +
                                 std::to_string(trace_defect));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(rho_, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-10) {
        throw InvariantViolation("QuantumState: negative eigenvalue " +
                                 std::to_string(solver.eigenvalues().minCoeff()));
    }
}

QuantumOperator quantum_bracket(const QuantumOperator& a, const QuantumOperator& b, double hbar) {
    require_same_dim(a.matrix(), b.matrix(), "quantum_bracket");
    if (!(hbar > 0.0)) {
        throw InvariantViolation("quantum_bracket: hbar must be positive");
    }
    // (-i hbar)^(-1) = i / hbar
    const Complex factor(0.0, 1.0 / hbar);
    return QuantumOperator(factor * (a.matrix() * b.matrix() - b.matrix() * a.matrix()));
}

SpectralData eigendecompose(const QuantumObservable& f, double degeneracy_tol) {
    if (!(degeneracy_tol > 0.0)) {
        throw InvariantViolation("eigendecompose: degeneracy_tol must be positive");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(f.matrix());
    SpectralData data{solver.eigenvalues(), solver.eigenvectors()};

    const int d = data.dim();
    if (d >= 2) {
        const double range = data.eigenvalues(d - 1) - data.eigenvalues(0);
        const double gap_tol = degeneracy_tol * range;
        for (int j = 0; j + 1 < d; ++j) {
            const double gap = data.eigenvalues(j + 1) - data.eigenvalues(j);
            if (!(gap > gap_tol)) {
                throw DegenerateSpectrum("eigendecompose: eigenvalue gap " + std::to_string(gap) +
                                         " between levels " + std::to_string(j) + " and " +
                                         std::to_string(j + 1) + " is below tolerance");
            }
        }
    }

    // Deterministic phase: largest-magnitude component real positive.
    for (int j = 0; j < d; ++j) {
        int arg_max = 0;
        double best = 0.0;
        for (int i = 0; i < d; ++i) {
            const double mag = std::abs(data.eigenvectors(i, j));
            if (mag > best + 1e-14) {
                best = mag;
                arg_max = i;
            }
        }
        const Complex pivot = data.eigenvectors(arg_max, j);
        if (std::abs(pivot) > 0.0) {
            data.eigenvectors.col(j) *= std::conj(pivot) / std::abs(pivot);
        }
    }
    return data;
}

double expectation(const QuantumState& state, const QuantumObservable& a) {
    require_same_dim(state.matrix(), a.matrix(), "expectation");
    return (state.matrix() * a.matrix()).trace().real();
}

QuantumState evolve_quantum(const QuantumState& state, const QuantumObservable& hamiltonian,
                            double t, double hbar) {
    require_same_dim(state.matrix(), hamiltonian.matrix(), "evolve_quantum");
    if (!(hbar > 0.0)) {
        throw InvariantViolation("evolve_quantum: hbar must be positive");
    }
    if (!std::isfinite(t)) {
        throw InvariantViolation("evolve_quantum: time must be finite");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hamiltonian.matrix());
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();

    Eigen::VectorXcd phases(values.size());
    for (int j = 0; j < values.size(); ++j) {
        phases(j) = std::exp(Complex(0.0, -values(j) * t / hbar));
    }
    const Matrix u = vectors * phases.asDiagonal() * vectors.adjoint();
    return QuantumState(u * state.matrix() * u.adjoint());
}

}  // namespace supmech
