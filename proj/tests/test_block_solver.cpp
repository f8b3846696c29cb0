#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "ggame/block_solver.hpp"
#include "ggame/errors.hpp"

using namespace ggame;

namespace {

GameModel single_sir(double beta, double gamma, double c_infected, double c_dead) {
    PlayerParams p = fixtures::sir_player(beta, gamma, 1.0, 1.0, 0.9);
    p.c_infected = c_infected;
    p.c_dead = c_dead;
    return GameModel::sir({p}, {1.0});
}

double deceased(const fixtures::BlockCase& c, const EquilibriumSolution& sol) {
    const std::size_t D = c.model.states().index_of("D");
    double out = 0.0;
    for (std::size_t b = 0; b < c.model.group_count(); ++b)
        out += c.model.masses()[b] * sol.p(b, sol.grid.steps(), D);
    return out;
}

}  // namespace

TEST_CASE("hjb: dead state is an affine function of time") {
    const GameModel m = single_sir(0.4, 0.1, 1.0, 2.5);
    const TimeGrid grid(40.0, 400);
    const BlockField Z(1, grid.points(), 1, 0.2);
    const BlockField u = solve_backward_hjb(m, Z, grid);
    const std::size_t D = m.states().index_of("D");
    double err = 0.0;
    for (std::size_t k = 0; k < grid.points(); ++k)
        err = std::max(err, std::abs(u(0, k, D) - 2.5 * (40.0 - grid.t(k))));
    CHECK(err <= 1e-10);
}

TEST_CASE("hjb: zero costs give a zero value") {
    PlayerParams p = fixtures::sir_player(0.4, 0.1, 1.0, 1.0, 1.0);
    p.c_infected = 0.0;
    p.c_dead = 0.0;
    const GameModel m = GameModel::sir({p}, {1.0});
    const TimeGrid grid(10.0, 100);
    const BlockField u = solve_backward_hjb(m, BlockField(1, grid.points(), 1, 0.3), grid);
    for (double v : u.data()) CHECK(v == 0.0);
}

TEST_CASE("hjb: infected value matches a refined solve and the closed form") {
    const GameModel m = single_sir(0.4, 0.1, 1.0, 1.0);
    const TimeGrid coarse(40.0, 200), fine(40.0, 2000);
    const BlockField uc = solve_backward_hjb(m, BlockField(1, coarse.points(), 1, 0.0), coarse);
    const BlockField uf = solve_backward_hjb(m, BlockField(1, fine.points(), 1, 0.0), fine);
    const std::size_t I = m.states().index_of("I");
    double gap = 0.0, exact_gap = 0.0;
    for (std::size_t k = 0; k < coarse.points(); ++k) {
        gap = std::max(gap, std::abs(uc(0, k, I) - uf(0, 10 * k, I)));
        // u_I' = gamma u_I - c_I with u_R = 0 and the I control at its recommendation
        const double s = 40.0 - coarse.t(k);
        exact_gap = std::max(exact_gap, std::abs(uc(0, k, I) - 10.0 * (1.0 - std::exp(-0.1 * s))));
    }
    CHECK(gap <= 1e-8);
    CHECK(exact_gap <= 1e-8);
}

TEST_CASE("kolmogorov: no transitions keep p constant") {
    const GameModel m = GameModel::sir({fixtures::sir_player(0.4, 0.0, 1.0, 1.0, 1.0)}, {1.0});
    const TimeGrid grid(10.0, 50);
    const BlockField phi(1, grid.points(), 4, 1.0);
    const std::vector<std::vector<double>> p0{{0.7, 0.2, 0.1, 0.0}};
    const BlockField p = solve_forward_kolmogorov(m, phi, BlockField(1, grid.points(), 1, 0.0), p0, grid);
    for (std::size_t k = 0; k < grid.points(); ++k)
        for (std::size_t e = 0; e < 4; ++e) CHECK(p(0, k, e) == p0[0][e]);
}

TEST_CASE("kolmogorov: pure decay") {
    const GameModel m = GameModel::sir({fixtures::sir_player(0.0, 0.1, 1.0, 1.0, 1.0)}, {1.0});
    const TimeGrid grid(10.0, 100);
    const std::vector<std::vector<double>> p0{{0.0, 1.0, 0.0, 0.0}};
    const BlockField p = solve_forward_kolmogorov(m, BlockField(1, grid.points(), 4, 1.0),
                                                  BlockField(1, grid.points(), 1, 0.0), p0, grid);
    CHECK(std::abs(p(0, grid.steps(), 1) - std::exp(-1.0)) <= 1e-9);
    CHECK(p(0, grid.steps(), 2) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("kolmogorov: initial condition reproduced") {
    const auto c = fixtures::age_groups(1);
    const TimeGrid grid(c.horizon, 200);
    const BlockField p = solve_forward_kolmogorov(c.model, BlockField(4, grid.points(), 4, 1.0),
                                                  BlockField(4, grid.points(), 1, 0.1), c.p0, grid);
    CHECK(p(0, 0, 0) == 0.95);
    CHECK(p(0, 0, 1) == c.p0[0][1]);
}

TEST_CASE("kolmogorov: overly coarse steps are reported") {
    const GameModel m = GameModel::sir({fixtures::sir_player(0.0, 3.0, 1.0, 1.0, 1.0)}, {1.0});
    const TimeGrid grid(10.0, 5);
    const std::vector<std::vector<double>> p0{{0.0, 1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(solve_forward_kolmogorov(m, BlockField(1, grid.points(), 4, 1.0),
                                             BlockField(1, grid.points(), 1, 0.0), p0, grid),
                    IntegrationError);
}

TEST_CASE("aggregate examples") {
    const GameModel m = GameModel::sir({fixtures::sir_player(0.4, 0.1, 1.0, 1.0, 0.9)}, {1.0});
    const Graphon w = Graphon::block(SquareMatrix::from_rows({{1.0}}), {1.0});
    BlockField p(1, 3, 4, 0.0), phi(1, 3, 4, 0.9);
    for (std::size_t k = 0; k < 3; ++k) {
        p(0, k, 0) = 0.8;
        p(0, k, 1) = 0.2;
    }
    const BlockField Z = compute_aggregate(m, w, p, phi);
    CHECK(Z(0, 1) == doctest::Approx(0.18).epsilon(1e-15));

    BlockField healthy(1, 3, 4, 0.0);
    for (std::size_t k = 0; k < 3; ++k) healthy(0, k, 0) = 1.0;
    const BlockField none = compute_aggregate(m, w, healthy, phi);
    for (double v : none.data()) CHECK(v == 0.0);

    const Graphon zero = Graphon::block(SquareMatrix::from_rows({{0.0}}), {1.0});
    const BlockField cut = compute_aggregate(m, zero, p, phi);
    for (double v : cut.data()) CHECK(v == 0.0);

    CHECK_THROWS_AS(compute_aggregate(m, Graphon::constant(1.0), p, phi), DomainError);
}

TEST_CASE("equilibrium: zero graphon decouples") {
    auto c = fixtures::cities(0);
    const Graphon zero = Graphon::block(SquareMatrix(3, 0.0), {0.4, 0.2, 0.4});
    const TimeGrid grid(c.horizon, 400);
    const auto sol = solve_equilibrium(c.model, zero, c.p0, grid);
    CHECK(sol.diagnostics.iterations <= 2);
    for (double v : sol.Z.data()) CHECK(v == 0.0);
    for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t k = 0; k < grid.points(); ++k) CHECK(sol.phi(b, k, 0) == 1.0);
    CHECK(sol.diagnostics.existence_margin == 0.0);
}

TEST_CASE("equilibrium: cities lockdown invariants and residuals") {
    const auto c = fixtures::cities(1);
    const TimeGrid grid(c.horizon, 2000);  // dt = 0.02
    const auto sol = solve_equilibrium(c.model, c.graphon, c.p0, grid);
    CHECK(sol.diagnostics.residual <= 1e-8);

    const double z_cap = c.model.impact_bound() * c.graphon.sup();
    const double u_cap = 1.01 * c.model.value_bound(c.horizon);
    bool simplex = true, z_ok = true, u_ok = true, phi_ok = true;
    for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t k = 0; k < grid.points(); ++k) {
            double total = 0.0;
            for (std::size_t e = 0; e < 4; ++e) {
                total += sol.p(b, k, e);
                simplex = simplex && sol.p(b, k, e) >= -1e-12;
                u_ok = u_ok && std::abs(sol.u(b, k, e)) <= u_cap;
                phi_ok = phi_ok && c.model.controls().contains(sol.phi(b, k, e));
            }
            simplex = simplex && std::abs(total - 1.0) <= 1e-8;
            z_ok = z_ok && sol.Z(b, k) >= 0.0 && sol.Z(b, k) <= z_cap;
        }
        for (std::size_t e = 0; e < 4; ++e) CHECK(sol.u(b, grid.steps(), e) == 0.0);
    }
    CHECK(simplex);
    CHECK(z_ok);
    CHECK(u_ok);
    CHECK(phi_ok);

    const FbResidual res = fb_residual(c.model, c.graphon, sol);
    CHECK(res.hjb <= 1e-5);
    CHECK(res.kolmogorov <= 1e-5);
    CHECK(res.aggregate <= 1e-5);

    // Verification: phi is the Hamiltonian minimizer on a 2048-point grid.
    const double spacing = c.model.controls().spacing(2048);
    bool verified = true;
    for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t k = 0; k < grid.points(); k += 7)
            for (std::size_t e = 0; e < 3; ++e) {  // D has a flat Hamiltonian
                double best = std::numeric_limits<double>::infinity(), arg = 0.0;
                for (std::size_t i = 0; i < 2048; ++i) {
                    const double a = spacing * static_cast<double>(i);
                    const double v =
                        c.model.hamiltonian(Group{b}, grid.t(k), e, sol.Z(b, k), sol.u.row(b, k), a);
                    if (v < best) {
                        best = v;
                        arg = a;
                    }
                }
                verified = verified && std::abs(arg - sol.phi(b, k, e)) <= spacing;
            }
    CHECK(verified);
}

TEST_CASE("equilibrium: defect injection is detected") {
    const auto c = fixtures::cities(0);
    const TimeGrid grid(c.horizon, 400);
    auto sol = solve_equilibrium(c.model, c.graphon, c.p0, grid);
    sol.u(1, 200, 0) += 0.1;
    CHECK(fb_residual(c.model, c.graphon, sol).hjb >= 0.1 / (2.0 * grid.dt()) - 1.0);
}

TEST_CASE("equilibrium: residuals contract geometrically") {
    const auto c = fixtures::cities(2);
    const auto sol = solve_equilibrium(c.model, c.graphon, c.p0, TimeGrid(c.horizon, 400));
    const auto& h = sol.diagnostics.residual_history;
    REQUIRE(h.size() >= 6);
    const std::size_t n = h.size();
    CHECK(h[n - 1] / h[n - 2] < 1.0);
    CHECK(h[n - 2] / h[n - 3] < 1.0);
}

TEST_CASE("equilibrium: rk4 refinement ratio") {
    const auto c = fixtures::cities(3);
    auto terminal = [&](std::size_t steps) {
        const auto sol = solve_equilibrium(c.model, c.graphon, c.p0, TimeGrid(c.horizon, steps));
        std::vector<double> out;
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t e = 0; e < 4; ++e) out.push_back(sol.p(b, steps, e));
        return out;
    };
    const auto p1 = terminal(50), p2 = terminal(100), p4 = terminal(200);
    double d12 = 0.0, d24 = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        d12 = std::max(d12, std::abs(p1[i] - p2[i]));
        d24 = std::max(d24, std::abs(p2[i] - p4[i]));
    }
    CHECK(d12 / d24 == doctest::Approx(16.0).epsilon(0.3));
}

TEST_CASE("equilibrium: non-convergence is an error") {
    const auto c = fixtures::cities(0);
    BlockSolverConfig cfg;
    cfg.max_iter = 3;
    CHECK_THROWS_AS(solve_equilibrium(c.model, c.graphon, c.p0, TimeGrid(c.horizon, 200), cfg),
                    NonConvergence);
    cfg.damping = 0.0;
    CHECK_THROWS_AS(solve_equilibrium(c.model, c.graphon, c.p0, TimeGrid(c.horizon, 200), cfg),
                    ValidationError);
}

TEST_CASE("equilibrium: uniqueness probe from the upper start") {
    const auto c = fixtures::cities(1);
    BlockSolverConfig cfg;
    cfg.check_uniqueness = true;
    const auto sol = solve_equilibrium(c.model, c.graphon, c.p0, TimeGrid(c.horizon, 400), cfg);
    CHECK(sol.diagnostics.alternative_gap >= 0.0);
    CHECK(sol.diagnostics.alternative_gap <= 1e-6);
    CHECK(sol.alternative == nullptr);
}

TEST_CASE("equilibrium: age-group policy comparison") {
    std::vector<double> dead;
    for (int policy = 1; policy <= 4; ++policy) {
        const auto c = fixtures::age_groups(policy);
        dead.push_back(deceased(c, solve_equilibrium(c.model, c.graphon, c.p0, TimeGrid(c.horizon, 2000))));
    }
    const double drop = 1.0 - dead[1] / dead[0];
    CHECK(drop >= 0.20);
    CHECK(drop <= 0.40);
    CHECK(dead[3] <= dead[2]);
    CHECK(dead[2] <= dead[1]);
}
