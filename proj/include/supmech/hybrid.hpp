#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "supmech/phase_space.hpp"
#include "supmech/quantum.hpp"

namespace supmech {

/// Hermitian-matrix-valued function on the phase-space grid: the concrete
/// representation of finite sums sum_i A_i (x) f_i of the composite algebra.
/// Storage is one contiguous block, cell-major with column-major d x d blocks.
class HybridObservable {
public:
    /// Validating constructor: every cell matrix must be Hermitian to 1e-12.
    HybridObservable(PhaseSpaceGrid grid, int dim, std::vector<Complex> data);

    static HybridObservable zero(const PhaseSpaceGrid& grid, int dim);
    /// Internal factory for results that are Hermitian by construction.
    static HybridObservable unchecked(PhaseSpaceGrid grid, int dim, std::vector<Complex> data);

    const PhaseSpaceGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    const std::vector<Complex>& data() const { return data_; }
    Eigen::Map<const Matrix> cell(std::size_t c) const {
        return Eigen::Map<const Matrix>(data_.data() + c * dim_ * dim_, dim_, dim_);
    }

private:
    HybridObservable(PhaseSpaceGrid grid, int dim, std::vector<Complex> data, bool validate);

    PhaseSpaceGrid grid_;
    int dim_;
    std::vector<Complex> data_;
};

HybridObservable operator+(const HybridObservable& a, const HybridObservable& b);
HybridObservable operator-(const HybridObservable& a, const HybridObservable& b);
HybridObservable operator*(double s, const HybridObservable& a);

/// Positive-matrix-valued density on the grid with unit trace-integral:
/// the representation of composite (S1 + S2) states.
class HybridState {
public:
    /// Validating constructor: cellwise Hermitian, eigenvalues >= -1e-10,
    /// trace-integral within 1e-8 of 1.
    HybridState(PhaseSpaceGrid grid, int dim, std::vector<Complex> data);

    /// Internal factory for evolution outputs; positivity drift is diagnosed
    /// separately rather than rejected here.
    static HybridState unchecked(PhaseSpaceGrid grid, int dim, std::vector<Complex> data);

    /// Convex mixture of states on a common grid.
    static HybridState mixture(const std::vector<HybridState>& states,
                               const std::vector<double>& weights);

    const PhaseSpaceGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    const std::vector<Complex>& data() const { return data_; }
    Eigen::Map<const Matrix> cell(std::size_t c) const {
        return Eigen::Map<const Matrix>(data_.data() + c * dim_ * dim_, dim_, dim_);
    }

    /// Integral of the cellwise trace over the grid (1 for a valid state).
    double trace_integral() const;

private:
    HybridState(PhaseSpaceGrid grid, int dim, std::vector<Complex> data, bool validate);

    PhaseSpaceGrid grid_;
    int dim_;
    std::vector<Complex> data_;
};

/// Composite Hamiltonian H1 (x) I + I (x) H2 + sum_i F_i (x) G_i together with
/// its realization as a matrix-valued field.
class CompositeHamiltonian {
public:
    using Interaction = std::pair<QuantumObservable, GridFunction>;

    CompositeHamiltonian(PhaseSpaceGrid grid, int dim, std::optional<QuantumObservable> h1,
                         std::optional<GridFunction> h2, std::vector<Interaction> interactions);

    const PhaseSpaceGrid& grid() const { return realization_.grid(); }
    int dim() const { return realization_.dim(); }
    const std::optional<QuantumObservable>& quantum_part() const { return h1_; }
    const std::optional<GridFunction>& classical_part() const { return h2_; }
    const std::vector<Interaction>& interactions() const { return interactions_; }
    const HybridObservable& realization() const { return realization_; }

private:
    std::optional<QuantumObservable> h1_;
    std::optional<GridFunction> h2_;
    std::vector<Interaction> interactions_;
    HybridObservable realization_;
};

/// A (x) f as the field f(u) * A.
HybridObservable embed(const QuantumObservable& a, const GridFunction& f);

/// Product state phi1 x phi2 as the field density(u) * rho.
HybridState product_state(const QuantumState& phi1, const ClassicalState& phi2);

/// Expectation pairing: integral of trace(state(u) * observable(u)) dGamma.
double expect(const HybridState& phi, const HybridObservable& o);

/// Tensor-product Poisson bracket, evaluated pointwise:
///   (-i hbar)^(-1) [X(u), Y(u)]
///   + (1/2) sum_ab omega^{ab} {d_a X(u), d_b Y(u)}_anticommutator
/// with derivatives by the phase-space stencils. Restricted to purely
/// classical (purely quantum) factors it reduces to the classical (quantum)
/// bracket.
HybridObservable hybrid_bracket(const HybridObservable& x, const HybridObservable& y, double hbar);

CompositeHamiltonian compose_hamiltonian(const PhaseSpaceGrid& grid, int dim,
                                         std::optional<QuantumObservable> h1,
                                         std::optional<GridFunction> h2,
                                         std::vector<CompositeHamiltonian::Interaction> interactions);

/// Subsystem readout: quantum marginal integral(field dGamma) and classical
/// marginal trace(field(u)).
std::pair<QuantumState, ClassicalState> marginals(const HybridState& phi);

/// One row per cell: q, p, then Re/Im of the matrix entries.
void write_csv(std::ostream& out, const HybridState& state);

}  // namespace supmech
