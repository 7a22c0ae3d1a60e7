#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>
#include <sstream>

#include "support/test_support.hpp"
#include "supmech/phase_space.hpp"

using namespace supmech;
using namespace supmech::testing;

namespace {

PhaseSpaceGrid square_grid(int n) { return PhaseSpaceGrid(-10, 10, -10, 10, n, n); }

}  // namespace

TEST_CASE("grid geometry invariants") {
    const PhaseSpaceGrid grid = square_grid(64);
    CHECK(grid.cell_volume() * grid.n_q() * grid.n_p() ==
          doctest::Approx(grid.total_volume()).epsilon(1e-12));
    CHECK_THROWS_AS(PhaseSpaceGrid(-1, -2, 0, 1, 32, 32), InvariantViolation);
    CHECK_THROWS_AS(PhaseSpaceGrid(-1, 1, 0, 1, 8, 32), InvariantViolation);
}

TEST_CASE("classical_bracket of p and q is +1") {
    const PhaseSpaceGrid grid = square_grid(64);
    const auto p = GridFunction::sample(grid, [](double, double p) { return p; });
    const auto q = GridFunction::sample(grid, [](double q, double) { return q; });
    const GridFunction result = classical_bracket(p, q);
    for (double v : result.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classical_bracket of q^2 and p is -2q") {
    // Oracle (symbolic differentiation): {q^2, p} = -d_q(q^2) d_p p = -2q.
    // Second-order stencils are exact on quadratics, so this holds at every
    // cell including the one-sided boundary rows.
    const PhaseSpaceGrid grid = square_grid(64);
    const auto q2 = GridFunction::sample(grid, [](double q, double) { return q * q; });
    const auto p = GridFunction::sample(grid, [](double, double p) { return p; });
    const GridFunction result = classical_bracket(q2, p);
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            CHECK(result.at(iq, ip) == doctest::Approx(-2.0 * grid.q_center(iq)).epsilon(1e-10));
        }
    }
}

TEST_CASE("classical_bracket antisymmetry is exact") {
    const PhaseSpaceGrid grid = square_grid(48);
    std::mt19937 rng(3);
    const GridFunction f = random_smooth_function(rng, grid);
    CHECK(max_abs(classical_bracket(f, f)) == 0.0);
}

TEST_CASE("hamilton equations come out with the chosen sign") {
    // dq/dt = {H, q} = p/m for H = p^2 / 2m.
    const PhaseSpaceGrid grid = square_grid(64);
    const double mass = 2.0;
    const auto h = GridFunction::sample(grid, [mass](double, double p) { return p * p / (2.0 * mass); });
    const auto q = GridFunction::sample(grid, [](double q, double) { return q; });
    const GridFunction dq_dt = classical_bracket(h, q);
    for (int iq = 2; iq < grid.n_q() - 2; ++iq) {
        for (int ip = 2; ip < grid.n_p() - 2; ++ip) {
            CHECK(dq_dt.at(iq, ip) ==
                  doctest::Approx(grid.p_center(ip) / mass).epsilon(1e-10));
        }
    }
}

TEST_CASE("classical bracket bilinearity, Leibniz and Jacobi with O(dx^2) refinement") {
    std::mt19937 rng(5);
    const PhaseSpaceGrid coarse = square_grid(64);
    const PhaseSpaceGrid fine = square_grid(128);
    for (int trial = 0; trial < 12; ++trial) {
        const auto fc = random_smooth_callable(rng, 20.0, 20.0);
        const auto gc = random_smooth_callable(rng, 20.0, 20.0);
        const auto hc = random_smooth_callable(rng, 20.0, 20.0);
        const GridFunction f = GridFunction::sample(coarse, fc);
        const GridFunction g = GridFunction::sample(coarse, gc);
        const GridFunction h = GridFunction::sample(coarse, hc);
        const GridFunction f2 = GridFunction::sample(fine, fc);
        const GridFunction g2 = GridFunction::sample(fine, gc);
        const GridFunction h2 = GridFunction::sample(fine, hc);

        // Bilinearity is exact.
        const GridFunction lhs = classical_bracket(f + 2.0 * g, h);
        const GridFunction rhs = classical_bracket(f, h) + 2.0 * classical_bracket(g, h);
        CHECK(max_abs(lhs - rhs) < 1e-12);

        // Leibniz residual {f, gh} - {f,g}h - g{f,h} refines at second order.
        const auto leibniz = [](const GridFunction& a, const GridFunction& b,
                                const GridFunction& c) {
            return classical_bracket(a, b * c) - classical_bracket(a, b) * c -
                   b * classical_bracket(a, c);
        };
        const double leibniz_coarse = interior_rms(leibniz(f, g, h), 3);
        const double leibniz_fine = interior_rms(leibniz(f2, g2, h2), 6);
        const double leibniz_ratio = leibniz_coarse / leibniz_fine;
        CHECK(leibniz_ratio > 3.5);
        CHECK(leibniz_ratio < 4.5);

        // Jacobi residual refines at second order as well.
        const auto jacobi = [](const GridFunction& a, const GridFunction& b,
                               const GridFunction& c) {
            return classical_bracket(a, classical_bracket(b, c)) +
                   classical_bracket(b, classical_bracket(c, a)) +
                   classical_bracket(c, classical_bracket(a, b));
        };
        const double jacobi_coarse = interior_rms(jacobi(f, g, h), 3);
        const double jacobi_fine = interior_rms(jacobi(f2, g2, h2), 6);
        const double jacobi_ratio = jacobi_coarse / jacobi_fine;
        CHECK(jacobi_ratio > 3.5);
        CHECK(jacobi_ratio < 4.5);
    }
}

TEST_CASE("integrate: constants, states, and a Gaussian against quadrature") {
    const PhaseSpaceGrid grid = square_grid(64);
    CHECK(integrate(GridFunction::constant(grid, 1.0)) == doctest::Approx(400.0).epsilon(1e-12));

    const Domain block = Domain::from_rectangle(grid, -5, 5, -5, 5);
    CHECK(integrate(pointer_state(block).density()) == doctest::Approx(1.0).epsilon(1e-10));

    // Normalized Gaussian well inside the bounds.
    const auto gaussian = [](double q, double p) {
        const double s2 = 1.5 * 1.5;
        return std::exp(-(q * q + p * p) / (2.0 * s2)) / (2.0 * 3.14159265358979323846 * s2);
    };
    const double at_n = integrate(GridFunction::sample(grid, gaussian));
    // Quadrature oracle at doubled resolution.
    const double at_2n = integrate(GridFunction::sample(square_grid(128), gaussian));
    CHECK(std::abs(at_n - at_2n) < 1e-6);
    CHECK(at_n == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("pointer_observable sharp two-block realization") {
    const PhaseSpaceGrid grid = square_grid(160);
    const Domain d_plus = Domain::from_rectangle(grid, 3, 7, -10, 10);
    const Domain d_minus = Domain::from_rectangle(grid, -7, -3, -10, 10);
    const PointerObservable j = pointer_observable({d_plus, d_minus}, {1.0, -1.0}, 0);

    std::set<double> distinct;
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            const double v = j.realization().at(iq, ip);
            distinct.insert(v);
            if (d_plus.contains(iq, ip)) CHECK(v == 1.0);
            else if (d_minus.contains(iq, ip)) CHECK(v == -1.0);
            else CHECK(v == 0.0);
        }
    }
    // Sharp realization takes exactly |labels| + 1 distinct values.
    CHECK(distinct.size() == 3);
}

TEST_CASE("pointer_observable smoothing keeps values in the convex hull") {
    const PhaseSpaceGrid grid = square_grid(64);
    const Domain d_plus = Domain::from_rectangle(grid, 3, 7, -10, 10);
    const Domain d_minus = Domain::from_rectangle(grid, -7, -3, -10, 10);
    const PointerObservable j = pointer_observable({d_plus, d_minus}, {1.0, -2.0}, 2);
    for (double v : j.realization().values()) {
        CHECK(v <= 1.0 + 1e-12);
        CHECK(v >= -2.0 - 1e-12);
    }
}

TEST_CASE("pointer_observable error paths") {
    const PhaseSpaceGrid grid = square_grid(32);
    const Domain a = Domain::from_rectangle(grid, 0, 5, -10, 10);
    const Domain b = Domain::from_rectangle(grid, 4, 9, -10, 10);
    const Domain c = Domain::from_rectangle(grid, -9, -4, -10, 10);
    CHECK_THROWS_AS(pointer_observable({a, b}, {1.0, -1.0}, 0), OverlappingDomains);
    CHECK_THROWS_AS(pointer_observable({a, c}, {1.0, 1.0}, 0), DuplicateLabel);
    CHECK_THROWS_AS(pointer_observable({a, c}, {1.0, 0.0}, 0), ZeroLabel);
}

TEST_CASE("pointer_state is the normalized characteristic density") {
    const PhaseSpaceGrid grid = square_grid(160);
    const Domain block = Domain::from_rectangle(grid, 3, 7, -10, 10);
    CHECK(block.volume() == doctest::Approx(80.0).epsilon(1e-12));

    const ClassicalState state = pointer_state(block);
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            const double expected = block.contains(iq, ip) ? 1.0 / 80.0 : 0.0;
            CHECK(state.density().at(iq, ip) == doctest::Approx(expected).epsilon(1e-12));
        }
    }

    // Probability 1 inside the domain.
    double inside = 0.0;
    for (int iq = 0; iq < grid.n_q(); ++iq) {
        for (int ip = 0; ip < grid.n_p(); ++ip) {
            if (block.contains(iq, ip)) inside += state.density().at(iq, ip);
        }
    }
    CHECK(inside * grid.cell_volume() == doctest::Approx(1.0).epsilon(1e-12));

    const ClassicalState uniform = pointer_state(Domain::full(grid));
    CHECK(uniform.density().at(0, 0) == doctest::Approx(1.0 / 400.0).epsilon(1e-12));

    CHECK_THROWS_AS(pointer_state(Domain(grid, std::vector<std::uint8_t>(grid.cell_count(), 0))),
                    EmptyDomain);
}

TEST_CASE("ready_domain complements the pointer domains") {
    const PhaseSpaceGrid grid = square_grid(160);
    const Domain d_plus = Domain::from_rectangle(grid, 3, 7, -10, 10);
    const Domain d_minus = Domain::from_rectangle(grid, -7, -3, -10, 10);

    // Cell-count oracle: 400 - 80 - 80 = 240.
    const Domain ready = ready_domain(grid, {d_plus, d_minus}, false);
    CHECK(ready.volume() == doctest::Approx(240.0).epsilon(1e-12));
    CHECK(ready.disjoint_from(d_plus));
    CHECK(ready.disjoint_from(d_minus));

    CHECK(ready_domain(grid, {}, false).volume() == doctest::Approx(400.0));

    // Keeping the ready pointer's own domain.
    const Domain kept = ready_domain(grid, {d_plus, d_minus}, true);
    CHECK(kept.volume() == doctest::Approx(320.0).epsilon(1e-12));

    CHECK_THROWS_AS(ready_domain(grid, {Domain::full(grid)}, false), EmptyReadyDomain);
}

TEST_CASE("grid function CSV round trip layout") {
    const PhaseSpaceGrid grid(-1, 1, -1, 1, 16, 16);
    const auto f = GridFunction::sample(grid, [](double q, double p) { return q + 10.0 * p; });
    std::ostringstream stream;
    write_csv(stream, f);
    const std::string text = stream.str();
    CHECK(text.rfind("q,p,value\n", 0) == 0);
    // Header plus one row per cell.
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 16 * 16);
}
