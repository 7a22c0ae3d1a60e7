#include "supmech/hybrid.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "supmech/detail/stencil.hpp"

namespace supmech {

namespace {

void require_same_grid(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b, const char* what) {
    if (!a.same_geometry(b)) {
        throw GridMismatch(std::string(what) + ": grids differ");
    }
}

void require_same_dim(int a, int b, const char* what) {
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": dimensions " + std::to_string(a) + " and " +
                                std::to_string(b) + " differ");
    }
}

void require_field_shape(const PhaseSpaceGrid& grid, int dim, std::size_t size, const char* what) {
    if (dim < 1) {
        throw DimensionMismatch(std::string(what) + ": dim must be >= 1");
    }
    if (size != grid.cell_count() * static_cast<std::size_t>(dim) * dim) {
        throw DimensionMismatch(std::string(what) + ": field size does not match grid and dim");
    }
}

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

double field_hermiticity_defect(const std::vector<Complex>& data, std::size_t cells, int d) {
    double defect = 0.0;
    const std::size_t m = static_cast<std::size_t>(d) * d;
    for (std::size_t c = 0; c < cells; ++c) {
        const Complex* blk = data.data() + c * m;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j <= i; ++j) {
                defect = std::max(defect, std::abs(blk[j * d + i] - std::conj(blk[i * d + j])));
            }
        }
    }
    return defect;
}

// Derivative of a matrix-valued field along q or p, entrywise.
std::vector<Complex> field_derivative(const PhaseSpaceGrid& grid, int d,
                                      const std::vector<Complex>& in, bool along_q) {
    std::vector<Complex> out(in.size());
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
    return out;
}

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

HybridObservable::HybridObservable(PhaseSpaceGrid grid, int dim, std::vector<Complex> data,
                                   bool validate)
    : grid_(grid), dim_(dim), data_(std::move(data)) {
    require_field_shape(grid_, dim_, data_.size(), "HybridObservable");
    if (validate) {
        for (const Complex& v : data_) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw InvariantViolation("HybridObservable: entries must be finite");
            }
        }
        const double defect = field_hermiticity_defect(data_, grid_.cell_count(), dim_);
        if (defect > kHermitianTol) {
            throw InvariantViolation("HybridObservable: cellwise Hermiticity defect " +
                                     std::to_string(defect));
        }
    }
}

HybridObservable::HybridObservable(PhaseSpaceGrid grid, int dim, std::vector<Complex> data)
    : HybridObservable(grid, dim, std::move(data), true) {}

HybridObservable HybridObservable::zero(const PhaseSpaceGrid& grid, int dim) {
    return HybridObservable(grid, dim,
                            std::vector<Complex>(grid.cell_count() * dim * dim, Complex(0.0)),
                            false);
}

HybridObservable HybridObservable::unchecked(PhaseSpaceGrid grid, int dim,
                                             std::vector<Complex> data) {
    return HybridObservable(grid, dim, std::move(data), false);
}

HybridObservable operator+(const HybridObservable& a, const HybridObservable& b) {
    require_same_grid(a.grid(), b.grid(), "HybridObservable +");
    require_same_dim(a.dim(), b.dim(), "HybridObservable +");
    std::vector<Complex> data(a.data());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += b.data()[i];
    return HybridObservable::unchecked(a.grid(), a.dim(), std::move(data));
}

HybridObservable operator-(const HybridObservable& a, const HybridObservable& b) {
    require_same_grid(a.grid(), b.grid(), "HybridObservable -");
    require_same_dim(a.dim(), b.dim(), "HybridObservable -");
    std::vector<Complex> data(a.data());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= b.data()[i];
    return HybridObservable::unchecked(a.grid(), a.dim(), std::move(data));
}

HybridObservable operator*(double s, const HybridObservable& a) {
    std::vector<Complex> data(a.data());
    for (Complex& v : data) v *= s;
    return HybridObservable::unchecked(a.grid(), a.dim(), std::move(data));
}

HybridState::HybridState(PhaseSpaceGrid grid, int dim, std::vector<Complex> data, bool validate)
    : grid_(grid), dim_(dim), data_(std::move(data)) {
    require_field_shape(grid_, dim_, data_.size(), "HybridState");
    if (validate) {
        const double defect = field_hermiticity_defect(data_, grid_.cell_count(), dim_);
        if (defect > kHermitianTol) {
            throw InvariantViolation("HybridState: cellwise Hermiticity defect " +
                                     std::to_string(defect));
        }
        double min_eigenvalue = 0.0;
        for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
            Eigen::SelfAdjointEigenSolver<Matrix> solver(cell(c), Eigen::EigenvaluesOnly);
            min_eigenvalue = std::min(min_eigenvalue, solver.eigenvalues().minCoeff());
        }
        if (min_eigenvalue < -1e-10) {
            throw InvariantViolation("HybridState: cell eigenvalue " +
                                     std::to_string(min_eigenvalue) + " below -1e-10");
        }
        const double mass = trace_integral();
        if (std::abs(mass - 1.0) > 1e-8) {
            throw InvariantViolation("HybridState: trace-integral is " + std::to_string(mass));
        }
    }
}

HybridState::HybridState(PhaseSpaceGrid grid, int dim, std::vector<Complex> data)
    : HybridState(grid, dim, std::move(data), true) {}

HybridState HybridState::unchecked(PhaseSpaceGrid grid, int dim, std::vector<Complex> data) {
    return HybridState(grid, dim, std::move(data), false);
}

HybridState HybridState::mixture(const std::vector<HybridState>& states,
                                 const std::vector<double>& weights) {
    if (states.empty() || states.size() != weights.size()) {
        throw InvariantViolation("HybridState::mixture: need matching nonempty states/weights");
    }
    std::vector<Complex> data(states.front().data().size(), Complex(0.0));
    for (std::size_t k = 0; k < states.size(); ++k) {
        require_same_grid(states[k].grid(), states.front().grid(), "HybridState::mixture");
        require_same_dim(states[k].dim(), states.front().dim(), "HybridState::mixture");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += weights[k] * states[k].data()[i];
    }
    return HybridState(states.front().grid(), states.front().dim(), std::move(data));
}

double HybridState::trace_integral() const {
    double sum = 0.0;
    const std::size_t m = static_cast<std::size_t>(dim_) * dim_;
    for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
        const Complex* blk = data_.data() + c * m;
        for (int i = 0; i < dim_; ++i) sum += blk[i * dim_ + i].real();
    }
    return sum * grid_.cell_volume();
}

CompositeHamiltonian::CompositeHamiltonian(PhaseSpaceGrid grid, int dim,
                                           std::optional<QuantumObservable> h1,
                                           std::optional<GridFunction> h2,
                                           std::vector<Interaction> interactions)
    : h1_(std::move(h1)),
      h2_(std::move(h2)),
      interactions_(std::move(interactions)),
      realization_(HybridObservable::zero(grid, dim)) {
    if (h1_) require_same_dim(h1_->dim(), dim, "CompositeHamiltonian H1");
    if (h2_) require_same_grid(h2_->grid(), grid, "CompositeHamiltonian H2");
    for (const auto& [f, g] : interactions_) {
        require_same_dim(f.dim(), dim, "CompositeHamiltonian interaction");
        require_same_grid(g.grid(), grid, "CompositeHamiltonian interaction");
    }

    std::vector<Complex> data(grid.cell_count() * dim * dim, Complex(0.0));
    const std::size_t m = static_cast<std::size_t>(dim) * dim;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        Eigen::Map<Matrix> blk(data.data() + c * m, dim, dim);
        if (h1_) blk += h1_->matrix();
        if (h2_) blk += h2_->values()[c] * Matrix::Identity(dim, dim);
        for (const auto& [f, g] : interactions_) blk += g.values()[c] * f.matrix();
    }
    realization_ = HybridObservable::unchecked(grid, dim, std::move(data));
}

HybridObservable embed(const QuantumObservable& a, const GridFunction& f) {
    const int d = a.dim();
    const std::size_t m = static_cast<std::size_t>(d) * d;
    std::vector<Complex> data(f.grid().cell_count() * m);
    for (std::size_t c = 0; c < f.grid().cell_count(); ++c) {
        const double w = f.values()[c];
        for (std::size_t e = 0; e < m; ++e) {
            data[c * m + e] = w * a.matrix().data()[e];
        }
    }
    return HybridObservable::unchecked(f.grid(), d, std::move(data));
}

HybridState product_state(const QuantumState& phi1, const ClassicalState& phi2) {
    const int d = phi1.dim();
    const std::size_t m = static_cast<std::size_t>(d) * d;
    const auto& grid = phi2.grid();
    std::vector<Complex> data(grid.cell_count() * m);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const double w = phi2.density().values()[c];
        for (std::size_t e = 0; e < m; ++e) {
            data[c * m + e] = w * phi1.matrix().data()[e];
        }
    }
    return HybridState::unchecked(grid, d, std::move(data));
}

double expect(const HybridState& phi, const HybridObservable& o) {
    require_same_grid(phi.grid(), o.grid(), "expect");
    require_same_dim(phi.dim(), o.dim(), "expect");
    const int d = phi.dim();
    const std::size_t m = static_cast<std::size_t>(d) * d;
    double sum = 0.0;
    // trace(S * O) = sum_ij S_ij O_ji; fixed cell order for reproducibility.
    for (std::size_t c = 0; c < phi.grid().cell_count(); ++c) {
        const Complex* s = phi.data().data() + c * m;
        const Complex* w = o.data().data() + c * m;
        Complex tr(0.0);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                tr += s[j * d + i] * w[i * d + j];
            }
        }
        sum += tr.real();
    }
    return sum * phi.grid().cell_volume();
}

HybridObservable hybrid_bracket(const HybridObservable& x, const HybridObservable& y,
                                double hbar) {
    require_same_grid(x.grid(), y.grid(), "hybrid_bracket");
    require_same_dim(x.dim(), y.dim(), "hybrid_bracket");
    if (!(hbar > 0.0)) {
        throw InvariantViolation("hybrid_bracket: hbar must be positive");
    }
    const auto& grid = x.grid();
    const int d = x.dim();
    const std::size_t m = static_cast<std::size_t>(d) * d;

    const auto xq = field_derivative(grid, d, x.data(), true);
    const auto xp = field_derivative(grid, d, x.data(), false);
    const auto yq = field_derivative(grid, d, y.data(), true);
    const auto yp = field_derivative(grid, d, y.data(), false);

    const Complex quantum_factor(0.0, 1.0 / hbar);
    const double half = 0.5 * grid.orientation_sign();

    std::vector<Complex> out(x.data().size(), Complex(0.0));
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const std::size_t off = c * m;
        Complex* blk = out.data() + off;
        const Complex* xc = x.data().data() + off;
        const Complex* yc = y.data().data() + off;
        gemm_acc(xc, yc, quantum_factor, blk, d);
        gemm_acc(yc, xc, -quantum_factor, blk, d);
        // (1/2) { d_p X, d_q Y }_+  -  (1/2) { d_q X, d_p Y }_+
        gemm_acc(xp.data() + off, yq.data() + off, half, blk, d);
        gemm_acc(yq.data() + off, xp.data() + off, half, blk, d);
        gemm_acc(xq.data() + off, yp.data() + off, -half, blk, d);
        gemm_acc(yp.data() + off, xq.data() + off, -half, blk, d);
    }
    return HybridObservable::unchecked(grid, d, std::move(out));
}

CompositeHamiltonian compose_hamiltonian(
    const PhaseSpaceGrid& grid, int dim, std::optional<QuantumObservable> h1,
    std::optional<GridFunction> h2, std::vector<CompositeHamiltonian::Interaction> interactions) {
    return CompositeHamiltonian(grid, dim, std::move(h1), std::move(h2), std::move(interactions));
}

std::pair<QuantumState, ClassicalState> marginals(const HybridState& phi) {
    const int d = phi.dim();
    const std::size_t m = static_cast<std::size_t>(d) * d;
    const auto& grid = phi.grid();

    Matrix quantum = Matrix::Zero(d, d);
    std::vector<double> density(grid.cell_count());
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const auto blk = phi.cell(c);
        quantum += blk;
        Complex tr(0.0);
        for (int i = 0; i < d; ++i) tr += phi.data()[c * m + i * d + i];
        density[c] = tr.real();
    }
    quantum *= grid.cell_volume();
    return {QuantumState(std::move(quantum)),
            ClassicalState(GridFunction(grid, std::move(density)))};
}

void write_csv(std::ostream& out, const HybridState& state) {
    const int d = state.dim();
    out << "q,p";
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            out << ",re_" << i << j << ",im_" << i << j;
        }
    }
    out << '\n';
    const auto& grid = state.grid();
    const std::size_t m = static_cast<std::size_t>(d) * d;
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            out << fmt17(grid.q_center(iq)) << ',' << fmt17(grid.p_center(ip));
            const Complex* blk = state.data().data() + grid.index(iq, ip) * m;
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    const Complex v = blk[j * d + i];
                    out << ',' << fmt17(v.real()) << ',' << fmt17(v.imag());
                }
            }
            out << '\n';
        }
    }
}

}  // namespace supmech
