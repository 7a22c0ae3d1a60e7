#pragma once

#include <functional>

#include "supmech/hybrid.hpp"

namespace supmech {

enum class EvolutionMethod {
    /// Explicit RK4 time stepping of the bracket flow.
    GenericStepper,
    /// Exact advection + phase solution in the measured-observable eigenbasis;
    /// valid for Hamiltonians of the form F (x) kappa*p.
    Characteristics,
};

/// Parameters of a finite-time evolution exp[tau D_H].
struct EvolutionSpec {
    CompositeHamiltonian hamiltonian;
    double tau = 0.0;
    int steps = 1;
    double hbar = 1.0;
    EvolutionMethod method = EvolutionMethod::GenericStepper;
    /// Dump a snapshot every `snapshot_stride` steps when a callback is given
    /// to evolve_state (0 disables).
    int snapshot_stride = 0;
};

/// Conservation and positivity diagnostics of a state evolution run.
struct EvolutionDiagnostics {
    double trace_integral_drift = 0.0;
    double min_cell_eigenvalue = 0.0;
    double boundary_mass = 0.0;
};

using SnapshotCallback = std::function<void(int step, const HybridState&)>;

/// Heisenberg picture: integrates dO/dt = {H, O} with classical RK4 over
/// spec.steps steps. Requires the CFL-style bound
/// (max advection speed) * (tau/steps) <= 0.5 * cell spacing.
HybridObservable evolve_observable(const HybridObservable& o, const EvolutionSpec& spec);

/// Liouville picture: the numerical adjoint of evolve_observable under the
/// expect pairing (the generator is the exact matrix transpose of the
/// observable generator, stencil boundaries included), so canonical
/// transformations preserve convex combinations and the total trace-integral
/// exactly up to roundoff. Throws MassLeak when more than 1e-6 of the trace
/// mass reaches the 2-cell boundary collar.
HybridState evolve_state(const HybridState& phi, const EvolutionSpec& spec,
                         EvolutionDiagnostics* diagnostics = nullptr,
                         const SnapshotCallback& on_snapshot = {});

/// Exact solution for H = F (x) K with K = kappa * p, in the F eigenbasis:
/// component rho_jk is advected in q at speed kappa*(lambda_j + lambda_k)/2
/// (shifted resampling with linear interpolation) and multiplied by the
/// unimodular phase exp[-(i/hbar)(lambda_j - lambda_k) kappa p tau]; diagonal
/// components advect without phase. The phase sign is frozen by a regression
/// test against the generic stepper.
HybridState characteristics_propagator(const HybridState& phi, const SpectralData& spectral,
                                       const GridFunction& coupling, const EvolutionSpec& spec,
                                       EvolutionDiagnostics* diagnostics = nullptr);

}  // namespace supmech
