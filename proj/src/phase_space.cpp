#include "supmech/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
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

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Normalized raised-cosine kernel of half-width w cells (w = 0 -> delta).
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

// Separable convolution with zero padding outside the grid.
std::vector<double> smooth_2d(const PhaseSpaceGrid& grid, const std::vector<double>& in, int w) {
    if (w == 0) return in;
    const auto kernel = hann_kernel(w);
    const int nq = grid.n_q(), np = grid.n_p();
    std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
    for (int iq = 0; iq < nq; ++iq) {
        for (int ip = 0; ip < np; ++ip) {
            double acc = 0.0;
            for (int o = -w; o <= w; ++o) {
                const int jq = iq + o;
                if (jq >= 0 && jq < nq) acc += kernel[o + w] * in[grid.index(jq, ip)];
            }
            tmp[grid.index(iq, ip)] = acc;
        }
    }
    for (int iq = 0; iq < nq; ++iq) {
        for (int ip = 0; ip < np; ++ip) {
            double acc = 0.0;
            for (int o = -w; o <= w; ++o) {
                const int jp = ip + o;
                if (jp >= 0 && jp < np) acc += kernel[o + w] * tmp[grid.index(iq, jp)];
            }
            out[grid.index(iq, ip)] = acc;
        }
    }
    return out;
}

}  // namespace

PhaseSpaceGrid::PhaseSpaceGrid(double q_min, double q_max, double p_min, double p_max, int n_q,
                               int n_p, bool positive_orientation)
    : q_min_(q_min),
      q_max_(q_max),
      p_min_(p_min),
      p_max_(p_max),
      n_q_(n_q),
      n_p_(n_p),
      positive_orientation_(positive_orientation) {
    if (!(std::isfinite(q_min) && std::isfinite(q_max) && std::isfinite(p_min) &&
          std::isfinite(p_max))) {
        throw InvariantViolation("PhaseSpaceGrid: bounds must be finite");
    }
    if (!(q_max > q_min && p_max > p_min)) {
        throw InvariantViolation("PhaseSpaceGrid: require q_max > q_min and p_max > p_min");
    }
    if (n_q < 16 || n_p < 16) {
        throw InvariantViolation("PhaseSpaceGrid: require n_q, n_p >= 16");
    }
    dq_ = (q_max_ - q_min_) / n_q_;
    dp_ = (p_max_ - p_min_) / n_p_;
}

bool PhaseSpaceGrid::same_geometry(const PhaseSpaceGrid& other) const {
    return q_min_ == other.q_min_ && q_max_ == other.q_max_ && p_min_ == other.p_min_ &&
           p_max_ == other.p_max_ && n_q_ == other.n_q_ && n_p_ == other.n_p_ &&
           positive_orientation_ == other.positive_orientation_;
}

GridFunction::GridFunction(PhaseSpaceGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.cell_count()) {
        throw GridMismatch("GridFunction: value count does not match grid");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw InvariantViolation("GridFunction: values must be finite");
        }
    }
}

GridFunction GridFunction::sample(const PhaseSpaceGrid& grid,
                                  const std::function<double(double, double)>& f) {
    std::vector<double> values(grid.cell_count());
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            values[grid.index(iq, ip)] = f(grid.q_center(iq), grid.p_center(ip));
        }
    }
    return GridFunction(grid, std::move(values));
}

GridFunction GridFunction::constant(const PhaseSpaceGrid& grid, double value) {
    return GridFunction(grid, std::vector<double>(grid.cell_count(), value));
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    require_same_grid(a.grid(), b.grid(), "GridFunction +");
    std::vector<double> v(a.values());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += b.values()[i];
    return GridFunction(a.grid(), std::move(v));
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    require_same_grid(a.grid(), b.grid(), "GridFunction -");
    std::vector<double> v(a.values());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= b.values()[i];
    return GridFunction(a.grid(), std::move(v));
}

GridFunction operator*(const GridFunction& a, const GridFunction& b) {
    require_same_grid(a.grid(), b.grid(), "GridFunction *");
    std::vector<double> v(a.values());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= b.values()[i];
    return GridFunction(a.grid(), std::move(v));
}

GridFunction operator*(double s, const GridFunction& f) {
    std::vector<double> v(f.values());
    for (double& x : v) x *= s;
    return GridFunction(f.grid(), std::move(v));
}

GridFunction d_dq(const GridFunction& f) {
    const auto& grid = f.grid();
    std::vector<double> out(f.values().size());
    const double inv_two_h = 1.0 / (2.0 * grid.dq());
    for (int ip = 0; ip < grid.n_p(); ++ip) {
        detail::line_derivative(f.values().data() + ip, out.data() + ip, grid.n_q(), grid.n_p(),
                                inv_two_h);
    }
    return GridFunction(grid, std::move(out));
}

GridFunction d_dp(const GridFunction& f) {
    const auto& grid = f.grid();
    std::vector<double> out(f.values().size());
    const double inv_two_h = 1.0 / (2.0 * grid.dp());
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        const std::size_t base = grid.index(iq, 0);
        detail::line_derivative(f.values().data() + base, out.data() + base, grid.n_p(), 1,
                                inv_two_h);
    }
    return GridFunction(grid, std::move(out));
}

Domain::Domain(PhaseSpaceGrid grid, std::vector<std::uint8_t> mask)
    : grid_(grid), mask_(std::move(mask)) {
    if (mask_.size() != grid_.cell_count()) {
        throw GridMismatch("Domain: mask size does not match grid");
    }
    count_ = 0;
    for (auto m : mask_) {
        if (m) ++count_;
    }
}

Domain Domain::from_rectangle(const PhaseSpaceGrid& grid, double q_lo, double q_hi, double p_lo,
                              double p_hi) {
    std::vector<std::uint8_t> mask(grid.cell_count(), 0);
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        const double q = grid.q_center(iq);
        if (q < q_lo || q > q_hi) continue;
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            const double p = grid.p_center(ip);
            if (p >= p_lo && p <= p_hi) mask[grid.index(iq, ip)] = 1;
        }
    }
    return Domain(grid, std::move(mask));
}

Domain Domain::full(const PhaseSpaceGrid& grid) {
    return Domain(grid, std::vector<std::uint8_t>(grid.cell_count(), 1));
}

bool Domain::disjoint_from(const Domain& other) const {
    require_same_grid(grid_, other.grid_, "Domain::disjoint_from");
    for (std::size_t i = 0; i < mask_.size(); ++i) {
        if (mask_[i] && other.mask_[i]) return false;
    }
    return true;
}

PointerObservable::PointerObservable(std::vector<Domain> domains, std::vector<double> labels,
                                     int width_cells, GridFunction realization)
    : domains_(std::move(domains)),
      labels_(std::move(labels)),
      width_cells_(width_cells),
      realization_(std::move(realization)) {}

ClassicalState::ClassicalState(GridFunction density) : density_(std::move(density)) {
    double min_value = 0.0;
    for (double v : density_.values()) min_value = std::min(min_value, v);
    if (min_value < -1e-10) {
        throw InvariantViolation("ClassicalState: density has negative value " +
                                 std::to_string(min_value));
    }
    const double mass = integrate(density_);
    if (std::abs(mass - 1.0) > 1e-8) {
        throw InvariantViolation("ClassicalState: density integrates to " + std::to_string(mass));
    }
}

GridFunction classical_bracket(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f.grid(), g.grid(), "classical_bracket");
    const GridFunction fq = d_dq(f), fp = d_dp(f), gq = d_dq(g), gp = d_dp(g);
    const double sign = f.grid().orientation_sign();
    std::vector<double> out(f.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = sign * (fp.values()[i] * gq.values()[i] - fq.values()[i] * gp.values()[i]);
    }
    return GridFunction(f.grid(), std::move(out));
}

double integrate(const GridFunction& f) {
    double sum = 0.0;
    for (double v : f.values()) sum += v;
    return sum * f.grid().cell_volume();
}

PointerObservable pointer_observable(const std::vector<Domain>& domains,
                                     const std::vector<double>& labels, int width_cells) {
    if (domains.size() != labels.size()) {
        throw InvariantViolation("pointer_observable: domain and label counts differ");
    }
    if (domains.empty()) {
        throw InvariantViolation("pointer_observable: need at least one domain");
    }
    if (width_cells < 0) {
        throw InvariantViolation("pointer_observable: smoothing width must be >= 0");
    }
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == 0.0) {
            throw ZeroLabel("pointer_observable: label " + std::to_string(j) + " is zero");
        }
        for (std::size_t k = j + 1; k < labels.size(); ++k) {
            if (labels[j] == labels[k]) {
                throw DuplicateLabel("pointer_observable: labels " + std::to_string(j) + " and " +
                                     std::to_string(k) + " coincide");
            }
        }
    }
    const PhaseSpaceGrid& grid = domains.front().grid();
    for (std::size_t j = 0; j < domains.size(); ++j) {
        require_same_grid(domains[j].grid(), grid, "pointer_observable");
        if (domains[j].empty()) {
            throw EmptyDomain("pointer_observable: domain " + std::to_string(j) + " is empty");
        }
        for (std::size_t k = j + 1; k < domains.size(); ++k) {
            if (!domains[j].disjoint_from(domains[k])) {
                throw OverlappingDomains("pointer_observable: domains " + std::to_string(j) +
                                         " and " + std::to_string(k) + " share cells");
            }
        }
    }

    std::vector<double> values(grid.cell_count(), 0.0);
    for (std::size_t j = 0; j < domains.size(); ++j) {
        std::vector<double> indicator(grid.cell_count(), 0.0);
        for (std::size_t c = 0; c < indicator.size(); ++c) {
            indicator[c] = domains[j].mask()[c] ? 1.0 : 0.0;
        }
        const auto smoothed = smooth_2d(grid, indicator, width_cells);
        for (std::size_t c = 0; c < values.size(); ++c) values[c] += labels[j] * smoothed[c];
    }
    return PointerObservable(domains, labels, width_cells, GridFunction(grid, std::move(values)));
}

ClassicalState pointer_state(const Domain& d) {
    if (d.empty()) {
        throw EmptyDomain("pointer_state: domain has no cells");
    }
    const double inv_volume = 1.0 / d.volume();
    std::vector<double> values(d.grid().cell_count(), 0.0);
    for (std::size_t c = 0; c < values.size(); ++c) {
        if (d.mask()[c]) values[c] = inv_volume;
    }
    return ClassicalState(GridFunction(d.grid(), std::move(values)));
}

Domain ready_domain(const PhaseSpaceGrid& grid, const std::vector<Domain>& pointer_domains,
                    bool ready_is_pointer) {
    for (std::size_t j = 0; j < pointer_domains.size(); ++j) {
        require_same_grid(pointer_domains[j].grid(), grid, "ready_domain");
        for (std::size_t k = j + 1; k < pointer_domains.size(); ++k) {
            if (!pointer_domains[j].disjoint_from(pointer_domains[k])) {
                throw OverlappingDomains("ready_domain: pointer domains overlap");
            }
        }
    }
    std::vector<std::uint8_t> mask(grid.cell_count(), 1);
    const std::size_t first = ready_is_pointer ? 1 : 0;
    for (std::size_t j = first; j < pointer_domains.size(); ++j) {
        for (std::size_t c = 0; c < mask.size(); ++c) {
            if (pointer_domains[j].mask()[c]) mask[c] = 0;
        }
    }
    Domain result(grid, std::move(mask));
    if (result.empty()) {
        throw EmptyReadyDomain("ready_domain: pointer domains cover the whole grid");
    }
    return result;
}

void write_csv(std::ostream& out, const GridFunction& f) {
    out << "q,p,value\n";
    const auto& grid = f.grid();
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            out << fmt17(grid.q_center(iq)) << ',' << fmt17(grid.p_center(ip)) << ','
                << fmt17(f.at(iq, ip)) << '\n';
        }
    }
}

void write_csv(std::ostream& out, const Domain& d) {
    out << "q,p,inside\n";
    const auto& grid = d.grid();
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            out << fmt17(grid.q_center(iq)) << ',' << fmt17(grid.p_center(ip)) << ','
                << (d.contains(iq, ip) ? 1 : 0) << '\n';
        }
    }
}

}  // namespace supmech
