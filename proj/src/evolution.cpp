#include "supmech/evolution.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "supmech/detail/stencil.hpp"

namespace supmech {

namespace {

using Field = std::vector<Complex>;

// y += alpha * a * b for column-major d x d blocks.
void gemm_acc(const Complex* a, const Complex* b, Complex alpha, Complex* y, int d) {
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            const Complex w = alpha * b[j * d + k];
            const Complex* acol = a + k * d;
            Complex* ycol = y + j * d;
            for (int i = 0; i < d; ++i) ycol[i] += w * acol[i];
        }
    }
}

void field_derivative_into(const PhaseSpaceGrid& grid, int d, const Field& in, bool along_q,
                           Field& out) {
    const std::size_t m = static_cast<std::size_t>(d) * d;
    if (along_q) {
        const double inv_two_h = 1.0 / (2.0 * grid.dq());
        const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(grid.n_p()) * m;
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            for (std::size_t e = 0; e < m; ++e) {
                const std::size_t base = static_cast<std::size_t>(ip) * m + e;
                detail::line_derivative(in.data() + base, out.data() + base, grid.n_q(), stride,
                                        inv_two_h);
            }
        }
    } else {
        const double inv_two_h = 1.0 / (2.0 * grid.dp());
        const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(m);
        for (int iq = 0; iq < grid.n_q(); ++iq) {
            for (std::size_t e = 0; e < m; ++e) {
                const std::size_t base = grid.index(iq, 0) * m + e;
                detail::line_derivative(in.data() + base, out.data() + base, grid.n_p(), stride,
                                        inv_two_h);
            }
        }
    }
}

void field_derivative_transpose_into(const PhaseSpaceGrid& grid, int d, const Field& in,
                                     bool along_q, Field& out) {
    std::fill(out.begin(), out.end(), Complex(0.0));
    const std::size_t m = static_cast<std::size_t>(d) * d;
    if (along_q) {
        const double inv_two_h = 1.0 / (2.0 * grid.dq());
        const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(grid.n_p()) * m;
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            for (std::size_t e = 0; e < m; ++e) {
                const std::size_t base = static_cast<std::size_t>(ip) * m + e;
                detail::line_derivative_transpose_acc(in.data() + base, out.data() + base,
                                                      grid.n_q(), stride, inv_two_h);
            }
        }
    } else {
        const double inv_two_h = 1.0 / (2.0 * grid.dp());
        const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(m);
        for (int iq = 0; iq < grid.n_q(); ++iq) {
            for (std::size_t e = 0; e < m; ++e) {
                const std::size_t base = grid.index(iq, 0) * m + e;
                detail::line_derivative_transpose_acc(in.data() + base, out.data() + base,
                                                      grid.n_p(), stride, inv_two_h);
            }
        }
    }
}

// Cellwise {g, x}_+ anticommutator, scaled.
void anticommutator_into(const Field& g, const Field& x, double scale, int d, std::size_t cells,
                         Field& out) {
    std::fill(out.begin(), out.end(), Complex(0.0));
    const std::size_t m = static_cast<std::size_t>(d) * d;
    for (std::size_t c = 0; c < cells; ++c) {
        const std::size_t off = c * m;
        gemm_acc(g.data() + off, x.data() + off, scale, out.data() + off, d);
        gemm_acc(x.data() + off, g.data() + off, scale, out.data() + off, d);
    }
}

double max_cell_spectral_norm(const PhaseSpaceGrid& grid, int d, const Field& field) {
    double best = 0.0;
    const std::size_t m = static_cast<std::size_t>(d) * d;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        Eigen::Map<const Matrix> blk(field.data() + c * m, d, d);
        // Hermitian fields: spectral norm is the largest |eigenvalue|.
        Eigen::SelfAdjointEigenSolver<Matrix> solver(blk, Eigen::EigenvaluesOnly);
        best = std::max(best, std::max(std::abs(solver.eigenvalues().minCoeff()),
                                       std::abs(solver.eigenvalues().maxCoeff())));
    }
    return best;
}

// Applies D_H (Heisenberg) or its exact transpose (Liouville).
class BracketGenerator {
public:
    BracketGenerator(const CompositeHamiltonian& h, double hbar)
        : grid_(h.grid()),
          dim_(h.dim()),
          hbar_(hbar),
          h_field_(h.realization().data()),
          gq_(h_field_.size()),
          gp_(h_field_.size()),
          buf_a_(h_field_.size()),
          buf_b_(h_field_.size()),
          buf_c_(h_field_.size()) {
        field_derivative_into(grid_, dim_, h_field_, true, gq_);
        field_derivative_into(grid_, dim_, h_field_, false, gp_);
    }

    double max_speed_q() const { return max_cell_spectral_norm(grid_, dim_, gp_); }
    double max_speed_p() const { return max_cell_spectral_norm(grid_, dim_, gq_); }

    // out = (i/hbar)[H, x] + (s/2)({Gp, d_q x}_+ - {Gq, d_p x}_+)
    void apply_observable(const Field& x, Field& out) {
        std::fill(out.begin(), out.end(), Complex(0.0));
        commutator_acc(x, Complex(0.0, 1.0 / hbar_), out);
        field_derivative_into(grid_, dim_, x, true, buf_a_);
        field_derivative_into(grid_, dim_, x, false, buf_b_);
        const double half = 0.5 * grid_.orientation_sign();
        const std::size_t m = static_cast<std::size_t>(dim_) * dim_;
        for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
            const std::size_t off = c * m;
            gemm_acc(gp_.data() + off, buf_a_.data() + off, half, out.data() + off, dim_);
            gemm_acc(buf_a_.data() + off, gp_.data() + off, half, out.data() + off, dim_);
            gemm_acc(gq_.data() + off, buf_b_.data() + off, -half, out.data() + off, dim_);
            gemm_acc(buf_b_.data() + off, gq_.data() + off, -half, out.data() + off, dim_);
        }
    }

    // Exact matrix transpose of apply_observable under the trace pairing:
    // out = -(i/hbar)[H, x] + (s/2)(D_q^T {Gp, x}_+ - D_p^T {Gq, x}_+)
    void apply_state(const Field& x, Field& out) {
        std::fill(out.begin(), out.end(), Complex(0.0));
        commutator_acc(x, Complex(0.0, -1.0 / hbar_), out);
        const double half = 0.5 * grid_.orientation_sign();
        anticommutator_into(gp_, x, half, dim_, grid_.cell_count(), buf_a_);
        field_derivative_transpose_into(grid_, dim_, buf_a_, true, buf_c_);
        add_into(buf_c_, out);
        anticommutator_into(gq_, x, -half, dim_, grid_.cell_count(), buf_b_);
        field_derivative_transpose_into(grid_, dim_, buf_b_, false, buf_c_);
        add_into(buf_c_, out);
    }

private:
    void commutator_acc(const Field& x, Complex factor, Field& out) const {
        const std::size_t m = static_cast<std::size_t>(dim_) * dim_;
        for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
            const std::size_t off = c * m;
            gemm_acc(h_field_.data() + off, x.data() + off, factor, out.data() + off, dim_);
            gemm_acc(x.data() + off, h_field_.data() + off, -factor, out.data() + off, dim_);
        }
    }

    static void add_into(const Field& src, Field& dst) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

    PhaseSpaceGrid grid_;
    int dim_;
    double hbar_;
    Field h_field_;
    Field gq_, gp_;
    Field buf_a_, buf_b_, buf_c_;
};

void check_spec(const EvolutionSpec& spec) {
    if (!std::isfinite(spec.tau)) {
        throw InvariantViolation("EvolutionSpec: tau must be finite");
    }
    if (spec.steps < 1) {
        throw InvariantViolation("EvolutionSpec: steps must be >= 1");
    }
    if (!(spec.hbar > 0.0)) {
        throw InvariantViolation("EvolutionSpec: hbar must be positive");
    }
}

void check_cfl(const BracketGenerator& gen, const EvolutionSpec& spec,
               const PhaseSpaceGrid& grid) {
    const double h = std::abs(spec.tau) / spec.steps;
    const double sq = gen.max_speed_q();
    const double sp = gen.max_speed_p();
    if (sq * h > 0.5 * grid.dq() || sp * h > 0.5 * grid.dp()) {
        throw CflViolation("evolution: advection speeds (" + std::to_string(sq) + ", " +
                           std::to_string(sp) + ") violate the CFL bound at dt = " +
                           std::to_string(h) + "; increase steps");
    }
}

template <class Apply>
void rk4_integrate(Field& x, double tau, int steps, Apply&& apply) {
    const double h = tau / steps;
    Field k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), xt(x.size());
    for (int step = 0; step < steps; ++step) {
        apply(x, k1);
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + 0.5 * h * k1[i];
        apply(xt, k2);
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + 0.5 * h * k2[i];
        apply(xt, k3);
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + h * k3[i];
        apply(xt, k4);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

template <class Apply>
void rk4_integrate_observed(Field& x, double tau, int steps, Apply&& apply, int stride,
                            const std::function<void(int, const Field&)>& observe) {
    const double h = tau / steps;
    Field k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), xt(x.size());
    for (int step = 0; step < steps; ++step) {
        apply(x, k1);
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + 0.5 * h * k1[i];
        apply(xt, k2);
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + 0.5 * h * k2[i];
        apply(xt, k3);
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + h * k3[i];
        apply(xt, k4);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (stride > 0 && observe && ((step + 1) % stride == 0)) {
            observe(step + 1, x);
        }
    }
}

double boundary_collar_mass(const PhaseSpaceGrid& grid, int d, const Field& data) {
    const std::size_t m = static_cast<std::size_t>(d) * d;
    double mass = 0.0;
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        const bool q_edge = iq < 2 || iq >= grid.n_q() - 2;
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            if (!q_edge && ip >= 2 && ip < grid.n_p() - 2) continue;
            const Complex* blk = data.data() + grid.index(iq, ip) * m;
            double tr = 0.0;
            for (int i = 0; i < d; ++i) tr += blk[i * d + i].real();
            mass += std::abs(tr);
        }
    }
    return mass * grid.cell_volume();
}

double min_cell_eigenvalue(const PhaseSpaceGrid& grid, int d, const Field& data) {
    const std::size_t m = static_cast<std::size_t>(d) * d;
    double worst = 0.0;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        Eigen::Map<const Matrix> blk(data.data() + c * m, d, d);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(blk, Eigen::EigenvaluesOnly);
        worst = std::min(worst, solver.eigenvalues().minCoeff());
    }
    return worst;
}

void finalize_state_diagnostics(const PhaseSpaceGrid& grid, int d, const Field& data,
                                double trace_before, EvolutionDiagnostics* diagnostics) {
    double trace_after = 0.0;
    const std::size_t m = static_cast<std::size_t>(d) * d;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        for (int i = 0; i < d; ++i) trace_after += data[c * m + i * d + i].real();
    }
    trace_after *= grid.cell_volume();

    const double collar = boundary_collar_mass(grid, d, data);
    if (diagnostics) {
        diagnostics->trace_integral_drift = trace_after - trace_before;
        diagnostics->boundary_mass = collar;
        diagnostics->min_cell_eigenvalue = min_cell_eigenvalue(grid, d, data);
    }
    if (collar > 1e-6 * std::max(1.0, std::abs(trace_before))) {
        throw MassLeak("evolve_state: " + std::to_string(collar) +
                       " of the trace mass reached the 2-cell boundary collar");
    }
}

}  // namespace

HybridObservable evolve_observable(const HybridObservable& o, const EvolutionSpec& spec) {
    check_spec(spec);
    if (spec.method != EvolutionMethod::GenericStepper) {
        throw InvariantViolation(
            "evolve_observable: only the generic stepper is defined for observables");
    }
    if (!o.grid().same_geometry(spec.hamiltonian.grid())) {
        throw GridMismatch("evolve_observable: observable and Hamiltonian grids differ");
    }
    if (o.dim() != spec.hamiltonian.dim()) {
        throw DimensionMismatch("evolve_observable: dimension mismatch");
    }

    BracketGenerator gen(spec.hamiltonian, spec.hbar);
    check_cfl(gen, spec, o.grid());

    Field x = o.data();
    rk4_integrate(x, spec.tau, spec.steps, [&](const Field& in, Field& out) {
        gen.apply_observable(in, out);
    });
    return HybridObservable::unchecked(o.grid(), o.dim(), std::move(x));
}

HybridState evolve_state(const HybridState& phi, const EvolutionSpec& spec,
                         EvolutionDiagnostics* diagnostics, const SnapshotCallback& on_snapshot) {
    check_spec(spec);
    if (!phi.grid().same_geometry(spec.hamiltonian.grid())) {
        throw GridMismatch("evolve_state: state and Hamiltonian grids differ");
    }
    if (phi.dim() != spec.hamiltonian.dim()) {
        throw DimensionMismatch("evolve_state: dimension mismatch");
    }

    if (spec.method == EvolutionMethod::Characteristics) {
        // Valid for H = F (x) K only; extract the single interaction term.
        const auto& ham = spec.hamiltonian;
        if (ham.quantum_part() || ham.classical_part() || ham.interactions().size() != 1) {
            throw UnsupportedCoupling(
                "evolve_state: characteristics path requires H = F (x) K with no subsystem terms");
        }
        const auto& [f, k] = ham.interactions().front();
        const SpectralData spectral = eigendecompose(f);
        return characteristics_propagator(phi, spectral, k, spec, diagnostics);
    }

    BracketGenerator gen(spec.hamiltonian, spec.hbar);
    check_cfl(gen, spec, phi.grid());

    const double trace_before = phi.trace_integral();
    Field x = phi.data();
    std::function<void(int, const Field&)> observer;
    if (on_snapshot && spec.snapshot_stride > 0) {
        observer = [&](int step, const Field& data) {
            on_snapshot(step, HybridState::unchecked(phi.grid(), phi.dim(), Field(data)));
        };
    }
    rk4_integrate_observed(
        x, spec.tau, spec.steps,
        [&](const Field& in, Field& out) { gen.apply_state(in, out); }, spec.snapshot_stride,
        observer);

    finalize_state_diagnostics(phi.grid(), phi.dim(), x, trace_before, diagnostics);
    return HybridState::unchecked(phi.grid(), phi.dim(), std::move(x));
}

HybridState characteristics_propagator(const HybridState& phi, const SpectralData& spectral,
                                       const GridFunction& coupling, const EvolutionSpec& spec,
                                       EvolutionDiagnostics* diagnostics) {
    check_spec(spec);
    if (!phi.grid().same_geometry(coupling.grid())) {
        throw GridMismatch("characteristics_propagator: state and coupling grids differ");
    }
    if (phi.dim() != spectral.dim()) {
        throw DimensionMismatch("characteristics_propagator: state and spectral dims differ");
    }
    const auto& grid = phi.grid();
    const int d = phi.dim();
    const std::size_t m = static_cast<std::size_t>(d) * d;

    // K must be kappa * p; fit kappa by least squares and verify the residual.
    double num = 0.0, den = 0.0, scale = 0.0;
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            const double p = grid.p_center(ip);
            const double k = coupling.at(iq, ip);
            num += k * p;
            den += p * p;
            scale = std::max(scale, std::abs(k));
        }
    }
    const double kappa = den > 0.0 ? num / den : 0.0;
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            const double residual = std::abs(coupling.at(iq, ip) - kappa * grid.p_center(ip));
            if (residual > 1e-9 * std::max(1.0, scale)) {
                throw UnsupportedCoupling(
                    "characteristics_propagator: coupling is not linear in p");
            }
        }
    }

    const double trace_before = phi.trace_integral();
    const Matrix& v = spectral.eigenvectors;

    // Rotate every cell into the F eigenbasis.
    Field rotated(phi.data().size());
    {
        Matrix tmp(d, d);
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            tmp = v.adjoint() * phi.cell(c) * v;
            Eigen::Map<Matrix>(rotated.data() + c * m, d, d) = tmp;
        }
    }

    // Per-component shift in q and phase in p. The orientation flag enters the
    // advection (classical symplectic tensor) but not the commutator phase.
    const double sign = grid.orientation_sign();
    Field shifted(rotated.size(), Complex(0.0));
    std::vector<Complex> line(grid.n_q());
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            const double speed = sign * kappa * (spectral.eigenvalues(j) + spectral.eigenvalues(k)) / 2.0;
            const double delta = speed * spec.tau;
            const double shift_cells = delta / grid.dq();
            const double floor_shift = std::floor(shift_cells);
            const int whole = static_cast<int>(floor_shift);
            const double frac = shift_cells - floor_shift;
            const double omega =
                -(spectral.eigenvalues(j) - spectral.eigenvalues(k)) * kappa * spec.tau /
                spec.hbar;
            for (int ip = 0; ip < grid.n_p(); ++ip) {
                const Complex phase = std::exp(Complex(0.0, omega * grid.p_center(ip)));
                for (int iq = 0; iq < grid.n_q(); ++iq) {
                    const int a = iq - whole;
                    const int b = a - 1;
                    Complex value(0.0);
                    if (a >= 0 && a < grid.n_q()) {
                        value += (1.0 - frac) * rotated[grid.index(a, ip) * m + k * d + j];
                    }
                    if (b >= 0 && b < grid.n_q()) {
                        value += frac * rotated[grid.index(b, ip) * m + k * d + j];
                    }
                    line[iq] = phase * value;
                }
                for (int iq = 0; iq < grid.n_q(); ++iq) {
                    shifted[grid.index(iq, ip) * m + k * d + j] = line[iq];
                }
            }
        }
    }

    // Rotate back.
    Field out(shifted.size());
    {
        Matrix tmp(d, d);
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            tmp = v * Eigen::Map<const Matrix>(shifted.data() + c * m, d, d) * v.adjoint();
            Eigen::Map<Matrix>(out.data() + c * m, d, d) = tmp;
        }
    }

    finalize_state_diagnostics(grid, d, out, trace_before, diagnostics);
    return HybridState::unchecked(grid, d, std::move(out));
}

}  // namespace supmech
