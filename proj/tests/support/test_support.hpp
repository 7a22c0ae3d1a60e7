#pragma once

#include <random>

#include "supmech/hybrid.hpp"

namespace supmech::testing {

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix random_hermitian(std::mt19937& rng, int d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            a(i, j) = Complex(normal(rng), normal(rng));
        }
    }
    return Matrix(0.5 * (a + a.adjoint()));
}

inline Matrix random_density(std::mt19937& rng, int d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            a(i, j) = Complex(normal(rng), normal(rng));
        }
    }
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return rho;
}

// Random low-wavenumber trigonometric function: analytic and well resolved on
// coarse grids, which keeps finite-difference refinement ratios clean. The
// returned callable is grid-independent so the same function can be sampled
// at several resolutions.
inline std::function<double(double, double)> random_smooth_callable(std::mt19937& rng,
                                                                    double q_extent,
                                                                    double p_extent) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_int_distribution<int> wave(1, 2);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    struct Term {
        double a, kq, kp, cq, cp;
    };
    std::vector<Term> terms;
    const double base_q = 6.283185307179586 / q_extent;
    const double base_p = 6.283185307179586 / p_extent;
    for (int t = 0; t < 3; ++t) {
        terms.push_back({amp(rng), wave(rng) * base_q, wave(rng) * base_p, phase(rng), phase(rng)});
    }
    return [terms](double q, double p) {
        double v = 0.0;
        for (const auto& t : terms) {
            v += t.a * std::cos(t.kq * q + t.cq) * std::cos(t.kp * p + t.cp);
        }
        return v;
    };
}

inline GridFunction random_smooth_function(std::mt19937& rng, const PhaseSpaceGrid& grid) {
    return GridFunction::sample(grid,
                                random_smooth_callable(rng, grid.q_max() - grid.q_min(),
                                                       grid.p_max() - grid.p_min()));
}

inline double max_abs(const GridFunction& f) {
    double best = 0.0;
    for (double v : f.values()) best = std::max(best, std::abs(v));
    return best;
}

// Max over cells at least `margin` cells away from every boundary, where the
// nested one-sided stencils do not pollute the interior truncation order.
inline double interior_max_abs(const GridFunction& f, int margin) {
    const auto& grid = f.grid();
    double best = 0.0;
    for (int iq = margin; iq < grid.n_q() - margin; ++iq) {
        for (int ip = margin; ip < grid.n_p() - margin; ++ip) {
            best = std::max(best, std::abs(f.at(iq, ip)));
        }
    }
    return best;
}

inline double interior_rms(const GridFunction& f, int margin) {
    const auto& grid = f.grid();
    double sum = 0.0;
    std::size_t count = 0;
    for (int iq = margin; iq < grid.n_q() - margin; ++iq) {
        for (int ip = margin; ip < grid.n_p() - margin; ++ip) {
            sum += f.at(iq, ip) * f.at(iq, ip);
            ++count;
        }
    }
    return std::sqrt(sum / count);
}

inline double max_abs_field(const HybridObservable& x) {
    double best = 0.0;
    for (const Complex& v : x.data()) best = std::max(best, std::abs(v));
    return best;
}

}  // namespace supmech::testing
