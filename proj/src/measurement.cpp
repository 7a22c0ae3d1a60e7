#include "supmech/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <string>

namespace supmech {

namespace {

bool rect_valid(const Rect& r) {
    return std::isfinite(r.q_min) && std::isfinite(r.q_max) && std::isfinite(r.p_min) &&
           std::isfinite(r.p_max) && r.q_max > r.q_min && r.p_max > r.p_min;
}

bool rect_inside(const Rect& r, const GridGeometry& g) {
    return r.q_min >= g.q_min && r.q_max <= g.q_max && r.p_min >= g.p_min && r.p_max <= g.p_max;
}

bool interval_inside(double lo, double hi, double outer_lo, double outer_hi) {
    return lo >= outer_lo && hi <= outer_hi;
}

// Raised-cosine kernel, normalized; shared with the pointer mollifier shape.
std::vector<double> hann_kernel(int w) {
    std::vector<double> k(2 * w + 1);
    double sum = 0.0;
    for (int i = -w; i <= w; ++i) {
        const double v = 1.0 + std::cos(std::numbers::pi * i / (w + 1.0));
        k[i + w] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

// Flat-top profile with raised-cosine edges over n cells: the indicator of the
// inset range [r, n-1-r] convolved with the Hann kernel of half-width r, so
// the support stays inside the n cells.
std::vector<double> tukey_profile(int n, int r) {
    std::vector<double> profile(n, 0.0);
    if (r == 0) {
        std::fill(profile.begin(), profile.end(), 1.0);
        return profile;
    }
    const auto kernel = hann_kernel(r);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int o = -r; o <= r; ++o) {
            const int j = i - o;
            if (j >= r && j <= n - 1 - r) acc += kernel[o + r];
        }
        profile[i] = acc;
    }
    return profile;
}

struct CellRange {
    int first = 0, last = -1;  // inclusive; empty when last < first
    int count() const { return last - first + 1; }
};

CellRange cells_in_interval(double lo, double hi, double origin, double h, int n) {
    CellRange range;
    range.first = n;
    range.last = -1;
    for (int i = 0; i < n; ++i) {
        const double center = origin + (i + 0.5) * h;
        if (center >= lo && center <= hi) {
            range.first = std::min(range.first, i);
            range.last = std::max(range.last, i);
        }
    }
    return range;
}

double domain_trace_mass(const HybridState& state, const Domain& domain) {
    const int d = state.dim();
    const std::size_t m = static_cast<std::size_t>(d) * d;
    double mass = 0.0;
    for (std::size_t c = 0; c < state.grid().cell_count(); ++c) {
        if (!domain.mask()[c]) continue;
        const Complex* blk = state.data().data() + c * m;
        for (int i = 0; i < d; ++i) mass += blk[i * d + i].real();
    }
    return mass * state.grid().cell_volume();
}

Matrix quantum_marginal_matrix(const HybridState& state) {
    Matrix sum = Matrix::Zero(state.dim(), state.dim());
    for (std::size_t c = 0; c < state.grid().cell_count(); ++c) sum += state.cell(c);
    return sum * state.grid().cell_volume();
}

// rho'(q) = rho(q - delta) by shifted resampling with linear interpolation.
GridFunction shift_density_q(const GridFunction& density, double delta) {
    const auto& grid = density.grid();
    const double shift_cells = delta / grid.dq();
    const double floor_shift = std::floor(shift_cells);
    const int whole = static_cast<int>(floor_shift);
    const double frac = shift_cells - floor_shift;
    std::vector<double> out(density.values().size(), 0.0);
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        const int a = iq - whole;
        const int b = a - 1;
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            double v = 0.0;
            if (a >= 0 && a < grid.n_q()) v += (1.0 - frac) * density.at(a, ip);
            if (b >= 0 && b < grid.n_q()) v += frac * density.at(b, ip);
            out[grid.index(iq, ip)] = v;
        }
    }
    return GridFunction(grid, std::move(out));
}

std::string branch_name(int j) { return "branch " + std::to_string(j); }

void map_kind_and_throw(const ConfigDiagnostic& d) {
    const std::string msg = d.field + ": " + d.message;
    switch (d.kind) {
        case ConfigDiagnostic::Kind::Degenerate:
            throw DegenerateSpectrum(msg);
        case ConfigDiagnostic::Kind::Overlap:
            throw OverlappingDomains(msg);
        case ConfigDiagnostic::Kind::Geometry:
            throw GeometryInfeasible(msg);
        case ConfigDiagnostic::Kind::ZeroLabel:
            throw ZeroLabel(msg);
        case ConfigDiagnostic::Kind::DuplicateLabel:
            throw DuplicateLabel(msg);
        case ConfigDiagnostic::Kind::Invariant:
            throw InvariantViolation(msg);
    }
    throw InvariantViolation(msg);
}

// Branch -> pointer-domain assignment by interval arithmetic on the shifted
// initial support. Returns an empty vector when kappa * tau == 0.
std::vector<int> compute_branch_domains(const ExperimentConfig& config,
                                        const Eigen::VectorXd& eigenvalues,
                                        std::vector<ConfigDiagnostic>* diagnostics) {
    std::vector<int> mapping;
    const double kt = config.coupling * config.tau;
    if (kt == 0.0) return mapping;
    const Rect& s = config.initial_support;
    for (int j = 0; j < eigenvalues.size(); ++j) {
        const double delta = config.coupling * eigenvalues(j) * config.tau;
        const double lo = s.q_min + delta;
        const double hi = s.q_max + delta;
        int hit = -1;
        for (std::size_t k = 0; k < config.pointer_domains.size(); ++k) {
            const Rect& r = config.pointer_domains[k].rect;
            if (interval_inside(lo, hi, r.q_min, r.q_max) &&
                interval_inside(s.p_min, s.p_max, r.p_min, r.p_max)) {
                hit = static_cast<int>(k);
                break;
            }
        }
        if (hit < 0) {
            if (diagnostics) {
                diagnostics->push_back({"pointer_domains",
                                        branch_name(j) + " shift " + std::to_string(delta) +
                                            " lands the initial support in no pointer domain",
                                        ConfigDiagnostic::Kind::Geometry});
            }
            mapping.clear();
            return mapping;
        }
        if (std::find(mapping.begin(), mapping.end(), hit) != mapping.end()) {
            if (diagnostics) {
                diagnostics->push_back({"pointer_domains",
                                        branch_name(j) +
                                            " lands in the same domain as an earlier branch",
                                        ConfigDiagnostic::Kind::Geometry});
            }
            mapping.clear();
            return mapping;
        }
        mapping.push_back(hit);
    }
    return mapping;
}

}  // namespace

std::vector<ConfigDiagnostic> diagnose_config(const ExperimentConfig& config) {
    using Kind = ConfigDiagnostic::Kind;
    std::vector<ConfigDiagnostic> out;
    const auto add = [&out](std::string field, std::string message, Kind kind = Kind::Invariant) {
        out.push_back({std::move(field), std::move(message), kind});
    };

    const GridGeometry& g = config.grid;
    bool grid_ok = true;
    if (!(std::isfinite(g.q_min) && std::isfinite(g.q_max) && std::isfinite(g.p_min) &&
          std::isfinite(g.p_max)) ||
        !(g.q_max > g.q_min && g.p_max > g.p_min)) {
        add("grid", "bounds must be finite with q_max > q_min and p_max > p_min");
        grid_ok = false;
    }
    if (g.n_q < 16 || g.n_p < 16) {
        add("grid", "cell counts n_q, n_p must be >= 16");
        grid_ok = false;
    }
    const double dq = grid_ok ? (g.q_max - g.q_min) / g.n_q : 1.0;
    const double dp = grid_ok ? (g.p_max - g.p_min) / g.n_p : 1.0;

    if (!(config.hbar > 0.0) || !std::isfinite(config.hbar)) {
        add("hbar", "must be positive and finite");
    }
    if (!std::isfinite(config.tau) || config.tau < 0.0) {
        add("tau", "must be finite and >= 0");
    }
    if (!std::isfinite(config.coupling)) {
        add("coupling", "must be finite");
    }
    if (config.steps < 1) {
        add("stepper.steps", "must be >= 1");
    }
    if (config.initial_ramp_cells < 0) {
        add("initial_ramp_cells", "must be >= 0");
    }
    if (config.pointer_smoothing_cells < 0) {
        add("pointer_smoothing_cells", "must be >= 0");
    }
    if (!(config.degeneracy_tol > 0.0)) {
        add("degeneracy_tol", "must be positive");
    }
    for (double s : config.sweep_scales) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            add("sweep_scales", "scale factors must be positive and finite");
            break;
        }
    }

    const Matrix& f = config.measured_observable;
    bool f_ok = true;
    if (f.rows() != f.cols() || f.rows() < 2) {
        add("measured_observable", "must be a square matrix of dimension >= 2");
        f_ok = false;
    } else if ((f - f.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
        add("measured_observable", "must be Hermitian to 1e-12");
        f_ok = false;
    }

    Eigen::VectorXd eigenvalues;
    if (f_ok) {
        try {
            SpectralData spectral =
                eigendecompose(QuantumObservable(f), config.degeneracy_tol);
            eigenvalues = spectral.eigenvalues;
        } catch (const DegenerateSpectrum& e) {
            add("measured_observable", e.what(), Kind::Degenerate);
            f_ok = false;
        }
    }

    if (f_ok && static_cast<int>(config.amplitudes.size()) != f.rows()) {
        add("amplitudes", "count must equal the dimension of the measured observable");
    }
    double norm2 = 0.0;
    for (const Complex& c : config.amplitudes) norm2 += std::norm(c);
    if (std::abs(norm2 - 1.0) > 1e-10) {
        add("amplitudes", "squared magnitudes sum to " + std::to_string(norm2) +
                              ", must be 1 within 1e-10");
    }

    if (config.pointer_domains.empty()) {
        add("pointer_domains", "at least one pointer domain is required");
    }
    for (std::size_t j = 0; j < config.pointer_domains.size(); ++j) {
        const auto& spec = config.pointer_domains[j];
        const std::string field = "pointer_domains[" + std::to_string(j) + "]";
        if (!rect_valid(spec.rect)) {
            add(field, "rectangle must be finite and nonempty");
            continue;
        }
        if (grid_ok && !rect_inside(spec.rect, g)) {
            add(field, "rectangle extends outside the grid");
        }
        if (spec.label == 0.0) {
            add(field, "label must be nonzero", Kind::ZeroLabel);
        }
        for (std::size_t k = j + 1; k < config.pointer_domains.size(); ++k) {
            if (spec.label == config.pointer_domains[k].label && spec.label != 0.0) {
                add(field, "label duplicates pointer_domains[" + std::to_string(k) + "]",
                    Kind::DuplicateLabel);
            }
            const Rect& a = spec.rect;
            const Rect& b = config.pointer_domains[k].rect;
            const bool q_overlap = a.q_min <= b.q_max && b.q_min <= a.q_max;
            const bool p_overlap = a.p_min <= b.p_max && b.p_min <= a.p_max;
            if (rect_valid(b) && q_overlap && p_overlap) {
                add(field, "overlaps pointer_domains[" + std::to_string(k) + "]", Kind::Overlap);
            }
        }
    }

    if (!rect_valid(config.initial_support)) {
        add("initial_support", "rectangle must be finite and nonempty");
        return out;
    }
    if (grid_ok && !rect_inside(config.initial_support, g)) {
        add("initial_support", "rectangle extends outside the grid");
    }

    if (grid_ok) {
        const Rect& s = config.initial_support;
        const CellRange qr = cells_in_interval(s.q_min, s.q_max, g.q_min, dq, g.n_q);
        const CellRange pr = cells_in_interval(s.p_min, s.p_max, g.p_min, dp, g.n_p);
        if (qr.count() < 1 || pr.count() < 1) {
            add("initial_support", "contains no cell centers at this resolution");
        } else {
            if (2 * config.initial_ramp_cells + 1 > qr.count() ||
                2 * config.initial_ramp_cells + 1 > pr.count()) {
                add("initial_ramp_cells", "ramp does not fit inside the initial support");
            }
        }

        // Dynamical support must stay clear of the boundary stencils.
        const int margin = config.pointer_smoothing_cells + 2;
        if (s.q_min - g.q_min < margin * dq || g.q_max - s.q_max < margin * dq ||
            s.p_min - g.p_min < margin * dp || g.p_max - s.p_max < margin * dp) {
            add("initial_support",
                "must stay at least " + std::to_string(margin) + " cells from the grid boundary",
                Kind::Geometry);
        }

        const std::size_t first_forbidden = config.ready_is_pointer ? 1 : 0;
        for (std::size_t j = first_forbidden; j < config.pointer_domains.size(); ++j) {
            const Rect& r = config.pointer_domains[j].rect;
            const bool q_overlap = s.q_min <= r.q_max && r.q_min <= s.q_max;
            const bool p_overlap = s.p_min <= r.p_max && r.p_min <= s.p_max;
            if (rect_valid(r) && q_overlap && p_overlap) {
                add("initial_support",
                    "overlaps pointer_domains[" + std::to_string(j) + "]; the ready state must "
                    "live in the ready domain",
                    Kind::Overlap);
            }
        }

        if (f_ok && eigenvalues.size() > 0) {
            std::vector<ConfigDiagnostic> geometry;
            compute_branch_domains(config, eigenvalues, &geometry);
            for (auto& d : geometry) out.push_back(std::move(d));

            // Shifted supports must respect the same boundary margin.
            if (config.coupling * config.tau != 0.0) {
                for (int j = 0; j < eigenvalues.size(); ++j) {
                    const double delta = config.coupling * eigenvalues(j) * config.tau;
                    if (s.q_min + delta - g.q_min < margin * dq ||
                        g.q_max - (s.q_max + delta) < margin * dq) {
                        add("pointer_domains",
                            branch_name(j) + " shifted support violates the boundary margin",
                            Kind::Geometry);
                    }
                }
            }

            if (config.method == EvolutionMethod::GenericStepper && config.steps >= 1 &&
                config.tau > 0.0) {
                const double max_abs_lambda =
                    std::max(std::abs(eigenvalues(0)), std::abs(eigenvalues(eigenvalues.size() - 1)));
                const double speed = std::abs(config.coupling) * max_abs_lambda;
                if (speed * config.tau / config.steps > 0.5 * dq) {
                    add("stepper.steps",
                        "CFL bound violated: need steps >= " +
                            std::to_string(static_cast<int>(
                                std::ceil(speed * config.tau / (0.5 * dq)))),
                        Kind::Invariant);
                }
            }
        }
    }

    return out;
}

Experiment::Experiment(ExperimentConfig config, PhaseSpaceGrid grid, SpectralData spectral,
                       std::vector<Domain> domains, std::vector<double> labels,
                       std::vector<int> domain_of_branch, Domain ready, Domain support,
                       ClassicalState ready_state, GridFunction coupling,
                       CompositeHamiltonian hamiltonian, HybridState initial,
                       PointerObservable pointer)
    : config_(std::move(config)),
      grid_(grid),
      spectral_(std::move(spectral)),
      domains_(std::move(domains)),
      labels_(std::move(labels)),
      domain_of_branch_(std::move(domain_of_branch)),
      ready_(std::move(ready)),
      support_(std::move(support)),
      ready_state_(std::move(ready_state)),
      coupling_(std::move(coupling)),
      hamiltonian_(std::move(hamiltonian)),
      initial_(std::move(initial)),
      pointer_(std::move(pointer)) {}

EvolutionSpec Experiment::evolution_spec() const {
    return EvolutionSpec{hamiltonian_, config_.tau, config_.steps, config_.hbar, config_.method};
}

Experiment build_experiment(const ExperimentConfig& config) {
    const auto diagnostics = diagnose_config(config);
    if (!diagnostics.empty()) {
        map_kind_and_throw(diagnostics.front());
    }

    const GridGeometry& g = config.grid;
    PhaseSpaceGrid grid(g.q_min, g.q_max, g.p_min, g.p_max, g.n_q, g.n_p);

    QuantumObservable f(config.measured_observable);
    SpectralData spectral = eigendecompose(f, config.degeneracy_tol);
    const int d = spectral.dim();

    std::vector<Domain> domains;
    std::vector<double> labels;
    for (const auto& spec : config.pointer_domains) {
        domains.push_back(Domain::from_rectangle(grid, spec.rect.q_min, spec.rect.q_max,
                                                 spec.rect.p_min, spec.rect.p_max));
        labels.push_back(spec.label);
    }
    PointerObservable pointer =
        pointer_observable(domains, labels, config.pointer_smoothing_cells);
    Domain ready = ready_domain(grid, domains, config.ready_is_pointer);

    const std::vector<int> branch_domains = compute_branch_domains(config, spectral.eigenvalues,
                                                                   nullptr);

    // Ready-state density: flat top with raised-cosine edges on the support.
    const Rect& s = config.initial_support;
    Domain support = Domain::from_rectangle(grid, s.q_min, s.q_max, s.p_min, s.p_max);
    const CellRange qr = cells_in_interval(s.q_min, s.q_max, g.q_min, grid.dq(), g.n_q);
    const CellRange pr = cells_in_interval(s.p_min, s.p_max, g.p_min, grid.dp(), g.n_p);
    const auto profile_q = tukey_profile(qr.count(), config.initial_ramp_cells);
    const auto profile_p = tukey_profile(pr.count(), config.initial_ramp_cells);
    std::vector<double> density(grid.cell_count(), 0.0);
    double mass = 0.0;
    for (int iq = qr.first; iq <= qr.last; ++iq) {
        for (int ip = pr.first; ip <= pr.last; ++ip) {
            const double v = profile_q[iq - qr.first] * profile_p[ip - pr.first];
            density[grid.index(iq, ip)] = v;
            mass += v;
        }
    }
    const double norm = 1.0 / (mass * grid.cell_volume());
    for (double& v : density) v *= norm;
    ClassicalState ready_state{GridFunction(grid, std::move(density))};

    GridFunction coupling = GridFunction::sample(
        grid, [&config](double, double p) { return config.coupling * p; });
    CompositeHamiltonian hamiltonian =
        compose_hamiltonian(grid, d, std::nullopt, std::nullopt, {{f, coupling}});

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
    for (int j = 0; j < d; ++j) psi += config.amplitudes[j] * spectral.eigenvectors.col(j);
    QuantumState system_state{Matrix(psi * psi.adjoint())};
    HybridState initial = product_state(system_state, ready_state);

    return Experiment(config, grid, std::move(spectral), std::move(domains), std::move(labels),
                      branch_domains, std::move(ready), std::move(support), std::move(ready_state),
                      std::move(coupling), std::move(hamiltonian), std::move(initial),
                      std::move(pointer));
}

CalibrationReport calibrate(const Experiment& experiment, bool throw_on_failure) {
    CalibrationReport report;
    const auto& spectral = experiment.spectral();
    const int d = experiment.dim();
    const EvolutionSpec spec = experiment.evolution_spec();

    for (int j = 0; j < d; ++j) {
        const Eigen::VectorXcd psi = spectral.eigenvectors.col(j);
        QuantumState eigenstate{Matrix(psi * psi.adjoint())};
        HybridState phi_in = product_state(eigenstate, experiment.ready_state());
        HybridState phi_out = evolve_state(phi_in, spec);

        CalibrationEntry entry;
        entry.eigenvalue = spectral.eigenvalues(j);
        const int domain_index =
            experiment.domain_of_branch().empty() ? -1 : experiment.domain_of_branch()[j];
        if (domain_index >= 0) {
            entry.domain_label = experiment.pointer_labels()[domain_index];
            entry.pointer_mass =
                domain_trace_mass(phi_out, experiment.pointer_domains()[domain_index]);
        }
        const Matrix marginal = quantum_marginal_matrix(phi_out);
        entry.fidelity = (psi.adjoint() * marginal * psi).value().real();
        entry.pass = entry.pointer_mass >= 0.99 && entry.fidelity >= 1.0 - 1e-6;
        report.entries.push_back(entry);
    }

    report.all_pass = std::all_of(report.entries.begin(), report.entries.end(),
                                  [](const CalibrationEntry& e) { return e.pass; });
    if (!report.all_pass && throw_on_failure) {
        std::string failed;
        for (std::size_t j = 0; j < report.entries.size(); ++j) {
            if (!report.entries[j].pass) {
                if (!failed.empty()) failed += ", ";
                failed += std::to_string(j);
            }
        }
        throw CalibrationFailure("calibrate: ideal-measurement condition failed for branch(es) " +
                                 failed);
    }
    return report;
}

std::vector<Probe> standard_probe_set(const Experiment& experiment) {
    const int d = experiment.dim();
    std::vector<std::pair<std::string, Matrix>> basis;
    basis.emplace_back("I", Matrix::Identity(d, d));
    if (d == 2) {
        Matrix sx(2, 2), sy(2, 2), sz(2, 2);
        sx << 0, 1, 1, 0;
        sy << 0, Complex(0, -1), Complex(0, 1), 0;
        sz << 1, 0, 0, -1;
        basis.emplace_back("sigma_x", sx);
        basis.emplace_back("sigma_y", sy);
        basis.emplace_back("sigma_z", sz);
    } else {
        for (int i = 0; i < d; ++i) {
            Matrix e = Matrix::Zero(d, d);
            e(i, i) = 1.0;
            basis.emplace_back("h_" + std::to_string(i) + std::to_string(i), e);
        }
        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                Matrix re = Matrix::Zero(d, d), im = Matrix::Zero(d, d);
                re(i, j) = 1.0;
                re(j, i) = 1.0;
                im(i, j) = Complex(0, -1);
                im(j, i) = Complex(0, 1);
                basis.emplace_back("h_re_" + std::to_string(i) + std::to_string(j), re);
                basis.emplace_back("h_im_" + std::to_string(i) + std::to_string(j), im);
            }
        }
    }

    const int w = experiment.config().pointer_smoothing_cells;
    std::vector<std::pair<std::string, PointerObservable>> pointers;
    pointers.emplace_back("J", experiment.pointer());
    for (std::size_t k = 0; k < experiment.pointer_domains().size(); ++k) {
        pointers.emplace_back("J" + std::to_string(k),
                              pointer_observable({experiment.pointer_domains()[k]},
                                                 {experiment.pointer_labels()[k]}, w));
    }
    pointers.emplace_back("J_ready", pointer_observable({experiment.ready()}, {1.0}, w));

    std::vector<Probe> probes;
    for (const auto& [a_name, a] : basis) {
        for (const auto& [j_name, j] : pointers) {
            probes.push_back({a_name + "*" + j_name, QuantumObservable(a), j});
        }
    }
    return probes;
}

MeasurementResult run_measurement(const Experiment& experiment, int snapshot_stride,
                                  const SnapshotCallback& on_snapshot) {
    EvolutionSpec spec = experiment.evolution_spec();
    spec.snapshot_stride = snapshot_stride;

    EvolutionDiagnostics diagnostics;
    HybridState phi_f = evolve_state(experiment.initial_state(), spec, &diagnostics, on_snapshot);

    // Reference state: per-branch projector times the ready density advected
    // under the branch flow, mixed with the Born weights.
    const auto& spectral = experiment.spectral();
    const int d = experiment.dim();
    const double sign = experiment.grid().orientation_sign();
    std::vector<HybridState> branches;
    std::vector<double> weights;
    for (int j = 0; j < d; ++j) {
        const double delta =
            sign * experiment.config().coupling * spectral.eigenvalues(j) * experiment.config().tau;
        GridFunction advected = shift_density_q(experiment.ready_state().density(), delta);
        const Eigen::VectorXcd psi = spectral.eigenvectors.col(j);
        branches.push_back(
            product_state(QuantumState{Matrix(psi * psi.adjoint())}, ClassicalState{advected}));
        weights.push_back(std::norm(experiment.config().amplitudes[j]));
    }
    HybridState phi_ref = HybridState::mixture(branches, weights);

    MeasurementResult result{std::move(phi_f), std::move(phi_ref), {}, {}, 0.0, 0.0, {},
                             diagnostics};
    double born_total = 0.0;
    for (std::size_t k = 0; k < experiment.pointer_domains().size(); ++k) {
        const double mass = domain_trace_mass(result.phi_f, experiment.pointer_domains()[k]);
        result.born.push_back(mass);
        result.born_labels.push_back(experiment.pointer_labels()[k]);
        born_total += mass;
    }
    result.residual_mass = result.phi_f.trace_integral() - born_total;
    result.eta_over_hbar = eta_criterion(experiment);

    for (const Probe& probe : standard_probe_set(experiment)) {
        result.w_values.push_back({probe.name, discrepancy_w(result, probe.a, probe.j)});
    }
    return result;
}

double discrepancy_w(const MeasurementResult& result, const QuantumObservable& a,
                     const PointerObservable& j) {
    const HybridObservable probe = embed(a, j.realization());
    return expect(result.phi_f, probe) - expect(result.phi_ref, probe);
}

double eta_criterion(const Experiment& experiment) {
    const auto& values = experiment.spectral().eigenvalues;
    if (values.size() < 2) {
        throw InvariantViolation("eta_criterion: need at least two eigenvalues");
    }
    double min_gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j + 1 < values.size(); ++j) {
        min_gap = std::min(min_gap, values(j + 1) - values(j));
    }
    const auto& support = experiment.initial_support();
    const auto& k = experiment.coupling();
    double mean_abs_k = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < support.grid().cell_count(); ++c) {
        if (!support.mask()[c]) continue;
        mean_abs_k += std::abs(k.values()[c]);
        ++count;
    }
    if (count == 0) return 0.0;
    mean_abs_k /= static_cast<double>(count);
    return min_gap * mean_abs_k * experiment.config().tau / experiment.config().hbar;
}

ExperimentConfig scaled_config(const ExperimentConfig& config, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw InvariantViolation("scaled_config: scale must be positive and finite");
    }
    ExperimentConfig scaled = config;
    scaled.coupling *= scale;
    scaled.grid.q_min *= scale;
    scaled.grid.q_max *= scale;
    for (auto& domain : scaled.pointer_domains) {
        domain.rect.q_min *= scale;
        domain.rect.q_max *= scale;
    }
    scaled.initial_support.q_min *= scale;
    scaled.initial_support.q_max *= scale;
    return scaled;
}

SweepResult decoherence_sweep(const ExperimentConfig& config, const std::vector<double>& scales) {
    if (scales.empty()) {
        throw InvariantViolation("decoherence_sweep: need at least one scale factor");
    }
    std::vector<std::future<SweepRow>> futures;
    futures.reserve(scales.size());
    for (double scale : scales) {
        futures.push_back(std::async(std::launch::async, [config, scale]() {
            ExperimentConfig row_config;
            try {
                row_config = scaled_config(config, scale);
                Experiment experiment = build_experiment(row_config);
                MeasurementResult result = run_measurement(experiment);
                double max_abs_w = 0.0;
                for (const auto& entry : result.w_values) {
                    max_abs_w = std::max(max_abs_w, std::abs(entry.value));
                }
                return SweepRow{scale, result.eta_over_hbar, max_abs_w,
                                result.eta_over_hbar < 1.0};
            } catch (const GeometryInfeasible& e) {
                throw GeometryInfeasible("sweep scale " + std::to_string(scale) + ": " + e.what());
            }
        }));
    }

    SweepResult result;
    for (auto& future : futures) result.rows.push_back(future.get());

    const SweepRow* lowest = nullptr;
    const SweepRow* highest = nullptr;
    for (const auto& row : result.rows) {
        if (row.non_classical) continue;
        if (!lowest || row.eta_over_hbar < lowest->eta_over_hbar) lowest = &row;
        if (!highest || row.eta_over_hbar > highest->eta_over_hbar) highest = &row;
    }
    if (lowest && highest && highest->eta_over_hbar >= 10.0 * lowest->eta_over_hbar) {
        result.trend_checked = true;
        result.trend_ok = highest->max_abs_w <= 0.1 * lowest->max_abs_w;
    }
    return result;
}

}  // namespace supmech
