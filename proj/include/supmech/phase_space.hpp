#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "supmech/errors.hpp"

namespace supmech {

/// Uniform cell-centered discretization of a 2D symplectic phase space
/// (one degree of freedom, u = (q, p)). Cheap value type; immutable.
class PhaseSpaceGrid {
public:
    PhaseSpaceGrid(double q_min, double q_max, double p_min, double p_max, int n_q, int n_p,
                   bool positive_orientation = true);

    double q_min() const { return q_min_; }
    double q_max() const { return q_max_; }
    double p_min() const { return p_min_; }
    double p_max() const { return p_max_; }
    int n_q() const { return n_q_; }
    int n_p() const { return n_p_; }

    double dq() const { return dq_; }
    double dp() const { return dp_; }
    /// Phase-space volume of one cell.
    double cell_volume() const { return dq_ * dp_; }
    double total_volume() const { return (q_max_ - q_min_) * (p_max_ - p_min_); }
    std::size_t cell_count() const { return static_cast<std::size_t>(n_q_) * n_p_; }

    double q_center(int iq) const { return q_min_ + (iq + 0.5) * dq_; }
    double p_center(int ip) const { return p_min_ + (ip + 0.5) * dp_; }
    std::size_t index(int iq, int ip) const { return static_cast<std::size_t>(iq) * n_p_ + ip; }

    /// Sign convention of the symplectic tensor; flipping it negates brackets.
    bool positive_orientation() const { return positive_orientation_; }
    double orientation_sign() const { return positive_orientation_ ? 1.0 : -1.0; }

    bool same_geometry(const PhaseSpaceGrid& other) const;

private:
    double q_min_, q_max_, p_min_, p_max_;
    int n_q_, n_p_;
    double dq_, dp_;
    bool positive_orientation_;
};

/// Real-valued function sampled at cell centers.
class GridFunction {
public:
    GridFunction(PhaseSpaceGrid grid, std::vector<double> values);

    /// Sample f(q, p) at every cell center.
    static GridFunction sample(const PhaseSpaceGrid& grid,
                               const std::function<double(double, double)>& f);
    static GridFunction constant(const PhaseSpaceGrid& grid, double value);

    const PhaseSpaceGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double at(int iq, int ip) const { return values_[grid_.index(iq, ip)]; }

private:
    PhaseSpaceGrid grid_;
    std::vector<double> values_;
};

GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(const GridFunction& a, const GridFunction& b);
GridFunction operator*(double s, const GridFunction& f);

/// Finite-difference partial derivatives (see detail/stencil.hpp).
GridFunction d_dq(const GridFunction& f);
GridFunction d_dp(const GridFunction& f);

/// Subset of grid cells; unions of axis-aligned cell rectangles in practice.
/// Volumes and disjointness checks are exact on the cell level.
class Domain {
public:
    Domain(PhaseSpaceGrid grid, std::vector<std::uint8_t> mask);

    /// Cells whose centers lie in [q_lo, q_hi] x [p_lo, p_hi].
    static Domain from_rectangle(const PhaseSpaceGrid& grid, double q_lo, double q_hi,
                                 double p_lo, double p_hi);
    static Domain full(const PhaseSpaceGrid& grid);

    const PhaseSpaceGrid& grid() const { return grid_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    bool contains(int iq, int ip) const { return mask_[grid_.index(iq, ip)] != 0; }
    std::size_t cell_count() const { return count_; }
    double volume() const { return count_ * grid_.cell_volume(); }
    bool empty() const { return count_ == 0; }

    bool disjoint_from(const Domain& other) const;

private:
    PhaseSpaceGrid grid_;
    std::vector<std::uint8_t> mask_;
    std::size_t count_;
};

/// Pointer observable: nonzero distinct labels b_j on pairwise disjoint
/// domains D_j, realized as sum_j b_j chi_{D_j}, optionally mollified by a
/// separable raised-cosine kernel of the given half-width in cells.
class PointerObservable {
public:
    PointerObservable(std::vector<Domain> domains, std::vector<double> labels, int width_cells,
                      GridFunction realization);

    const std::vector<Domain>& domains() const { return domains_; }
    const std::vector<double>& labels() const { return labels_; }
    int width_cells() const { return width_cells_; }
    const GridFunction& realization() const { return realization_; }

private:
    std::vector<Domain> domains_;
    std::vector<double> labels_;
    int width_cells_;
    GridFunction realization_;
};

/// Normalized nonnegative phase-space density.
/// Construction tolerates values down to -1e-10 (numerical slack mirroring the
/// quantum-state eigenvalue slack) and a 1e-8 normalization defect.
class ClassicalState {
public:
    explicit ClassicalState(GridFunction density);

    const GridFunction& density() const { return density_; }
    const PhaseSpaceGrid& grid() const { return density_.grid(); }

private:
    GridFunction density_;
};

/// Classical Poisson bracket {f,g} = d_p f d_q g - d_q f d_p g (sign fixed so
/// that dq/dt = {H,q} = p/m for H = p^2/2m), by the grid stencils.
GridFunction classical_bracket(const GridFunction& f, const GridFunction& g);

/// Midpoint-rule integral sum_cells f * dGamma.
double integrate(const GridFunction& f);

/// Build a pointer observable from domains and labels; width_cells = 0 gives
/// the sharp characteristic-function realization.
PointerObservable pointer_observable(const std::vector<Domain>& domains,
                                     const std::vector<double>& labels, int width_cells = 0);

/// Uniform pointer state chi_D / V(D).
ClassicalState pointer_state(const Domain& d);

/// Ready domain: the grid minus all pointer domains. When ready_is_pointer is
/// true the first domain is the ready pointer's own region and is kept.
Domain ready_domain(const PhaseSpaceGrid& grid, const std::vector<Domain>& pointer_domains,
                    bool ready_is_pointer);

/// CSV serialization (header row, one line per cell, 17 significant digits).
void write_csv(std::ostream& out, const GridFunction& f);
void write_csv(std::ostream& out, const Domain& d);

}  // namespace supmech
