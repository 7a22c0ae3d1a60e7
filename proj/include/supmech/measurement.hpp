#pragma once

#include <string>
#include <vector>

#include "supmech/evolution.hpp"

namespace supmech {

/// Axis-aligned phase-space rectangle.
struct Rect {
    double q_min = 0.0, q_max = 0.0, p_min = 0.0, p_max = 0.0;
};

struct PointerDomainSpec {
    Rect rect;
    double label = 0.0;
};

struct GridGeometry {
    double q_min = -10.0, q_max = 10.0, p_min = -10.0, p_max = 10.0;
    int n_q = 16, n_p = 16;
};

/// Full description of a measurement experiment. Amplitudes are ordered by
/// ascending eigenvalue of the measured observable.
struct ExperimentConfig {
    GridGeometry grid;
    Matrix measured_observable;
    std::vector<Complex> amplitudes;
    double coupling = 0.0;  // K = coupling * p
    std::vector<PointerDomainSpec> pointer_domains;
    bool ready_is_pointer = false;
    Rect initial_support;
    /// Raised-cosine edge width of the ready-state profile, in cells per side
    /// (kept inside the support rectangle; 0 gives a sharp uniform block).
    int initial_ramp_cells = 0;
    int pointer_smoothing_cells = 0;
    double tau = 1.0;
    double hbar = 1.0;
    EvolutionMethod method = EvolutionMethod::Characteristics;
    int steps = 512;
    double degeneracy_tol = 1e-8;
    std::vector<double> sweep_scales;
};

/// One validation finding: the failing field plus a human-readable message.
struct ConfigDiagnostic {
    std::string field;
    std::string message;
    enum class Kind {
        Invariant,
        Degenerate,
        Overlap,
        Geometry,
        ZeroLabel,
        DuplicateLabel,
    } kind = Kind::Invariant;
};

/// All invariant and feasibility findings for a config; empty means valid.
std::vector<ConfigDiagnostic> diagnose_config(const ExperimentConfig& config);

/// A prepared experiment: grid, spectral data of F, pointer machinery, the
/// ready state, the initial product state and the interaction Hamiltonian.
class Experiment {
public:
    Experiment(ExperimentConfig config, PhaseSpaceGrid grid, SpectralData spectral,
               std::vector<Domain> domains, std::vector<double> labels,
               std::vector<int> domain_of_branch, Domain ready, Domain support,
               ClassicalState ready_state, GridFunction coupling, CompositeHamiltonian hamiltonian,
               HybridState initial, PointerObservable pointer);

    const ExperimentConfig& config() const { return config_; }
    const PhaseSpaceGrid& grid() const { return grid_; }
    const SpectralData& spectral() const { return spectral_; }
    int dim() const { return spectral_.dim(); }
    const std::vector<Domain>& pointer_domains() const { return domains_; }
    const std::vector<double>& pointer_labels() const { return labels_; }
    /// Pointer domain hit by branch j under the calibration shift; -1 when the
    /// shift is degenerate (kappa * tau == 0).
    const std::vector<int>& domain_of_branch() const { return domain_of_branch_; }
    const Domain& ready() const { return ready_; }
    const Domain& initial_support() const { return support_; }
    const ClassicalState& ready_state() const { return ready_state_; }
    const GridFunction& coupling() const { return coupling_; }
    const CompositeHamiltonian& hamiltonian() const { return hamiltonian_; }
    const HybridState& initial_state() const { return initial_; }
    const PointerObservable& pointer() const { return pointer_; }

    EvolutionSpec evolution_spec() const;

private:
    ExperimentConfig config_;
    PhaseSpaceGrid grid_;
    SpectralData spectral_;
    std::vector<Domain> domains_;
    std::vector<double> labels_;
    std::vector<int> domain_of_branch_;
    Domain ready_;
    Domain support_;
    ClassicalState ready_state_;
    GridFunction coupling_;
    CompositeHamiltonian hamiltonian_;
    HybridState initial_;
    PointerObservable pointer_;
};

/// Validates the config and assembles the experiment. kappa * tau == 0 is let
/// through the geometric feasibility check so that calibration can report the
/// physical failure (the pointer never moves).
Experiment build_experiment(const ExperimentConfig& config);

struct CalibrationEntry {
    double eigenvalue = 0.0;
    double domain_label = 0.0;
    double pointer_mass = 0.0;
    double fidelity = 0.0;
    bool pass = false;
};

struct CalibrationReport {
    std::vector<CalibrationEntry> entries;
    bool all_pass = false;
};

/// Runs each eigenstate input through the measurement flow and checks the
/// ideal-measurement conditions: pointer mass in the matched domain >= 0.99
/// and quantum-marginal fidelity >= 1 - 1e-6. Throws CalibrationFailure naming
/// the offending branch unless throw_on_failure is false.
CalibrationReport calibrate(const Experiment& experiment, bool throw_on_failure = true);

/// One probe observable A (x) J for the discrepancy functional.
struct Probe {
    std::string name;
    QuantumObservable a;
    PointerObservable j;
};

/// Hermitian basis of the system algebra crossed with the pointer observables
/// (the full pointer sum, each single domain, and the ready-domain indicator).
std::vector<Probe> standard_probe_set(const Experiment& experiment);

struct WEntry {
    std::string probe;
    double value = 0.0;
};

struct MeasurementResult {
    HybridState phi_f;
    HybridState phi_ref;
    std::vector<double> born;         // per pointer domain, config order
    std::vector<double> born_labels;  // matching labels
    double residual_mass = 0.0;
    double eta_over_hbar = 0.0;
    std::vector<WEntry> w_values;
    EvolutionDiagnostics diagnostics;
};

/// Runs the measurement: Phi_f by the configured propagator, the von
/// Neumann-reduced reference assembled directly from its definition, Born
/// weights as pointer-domain masses, the eta criterion, and the discrepancy
/// table over the standard probe set. Precondition: calibration passes.
MeasurementResult run_measurement(const Experiment& experiment, int snapshot_stride = 0,
                                  const SnapshotCallback& on_snapshot = {});

/// W = expect(Phi_f, A (x) J) - expect(Phi_ref, A (x) J). The cross-term
/// functional is never materialized; W comes from the two states directly.
double discrepancy_w(const MeasurementResult& result, const QuantumObservable& a,
                     const PointerObservable& j);

/// eta / hbar with eta = min_{j != k} |lambda_k - lambda_j| * mean|K| * tau,
/// the mean taken over the initial-support cells.
double eta_criterion(const Experiment& experiment);

/// Per-row scaling used by the decoherence sweep: multiplies the coupling and
/// every q-extent (grid, pointer domains, initial support) by `scale`, which
/// keeps the calibration geometry feasible while scaling eta.
ExperimentConfig scaled_config(const ExperimentConfig& config, double scale);

struct SweepRow {
    double scale = 0.0;
    double eta_over_hbar = 0.0;
    double max_abs_w = 0.0;
    /// eta/hbar < 1: phase averaging is weak and |W| = O(1) is expected.
    bool non_classical = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    bool trend_checked = false;
    bool trend_ok = false;
};

/// Runs the measurement at each coupling scale (rows run concurrently, merged
/// by index). When the classical-regime rows span at least a decade in eta,
/// checks that max|W| at the largest eta is <= 0.1x its value at the smallest.
SweepResult decoherence_sweep(const ExperimentConfig& config, const std::vector<double>& scales);

}  // namespace supmech
