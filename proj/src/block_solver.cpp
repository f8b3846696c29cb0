#include "ggame/block_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "ggame/errors.hpp"

namespace ggame {

namespace {

/// Value of component e of a gridded field at an RK4 stage time: exact at grid
/// points, cubic at interval midpoints, linear anywhere else.
double stage_value(const BlockField& f, std::size_t b, std::size_t e, const TimeGrid& grid,
                   double t) {
    const double half_steps = 2.0 * t / grid.dt();
    const double nearest = std::round(half_steps);
    const std::size_t last = grid.steps();
    if (std::abs(half_steps - nearest) < 1e-6) {
        const auto h = static_cast<std::size_t>(std::max(0.0, nearest));
        if (h % 2 == 0) return f(b, std::min(h / 2, last), e);
        const std::size_t k = std::min(h / 2, last - 1);
        return midpoint_cubic([&](std::size_t i) { return f(b, i, e); }, grid.points(), k);
    }
    const double s = std::clamp(t / grid.dt(), 0.0, static_cast<double>(last));
    const auto k = std::min(static_cast<std::size_t>(s), last - 1);
    const double frac = s - static_cast<double>(k);
    return (1.0 - frac) * f(b, k, e) + frac * f(b, k + 1, e);
}

void check_layout(const GameModel& model, const BlockField& f, const TimeGrid& grid,
                  std::size_t width, const char* what) {
    if (f.blocks() != model.group_count() || f.points() != grid.points() || f.width() != width)
        throw DimensionError(std::string(what) + ": field shape does not match model and grid");
}

const BlockKernel& require_block(const Graphon& graphon, const GameModel& model) {
    const BlockKernel* b = graphon.as_block();
    if (b == nullptr)
        throw DomainError("block solver needs a piecewise-constant graphon; use the shooting solver");
    if (b->masses.size() != model.group_count())
        throw ValidationError("graphon.masses", "graphon blocks and player groups differ in number");
    for (std::size_t i = 0; i < b->masses.size(); ++i)
        if (std::abs(b->masses[i] - model.masses()[i]) > 1e-12)
            throw ValidationError("graphon.masses", "graphon block masses differ from group masses");
    return *b;
}

double sup_diff(const BlockField& a, const BlockField& b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        out = std::max(out, std::abs(a.data()[i] - b.data()[i]));
    return out;
}

}  // namespace

BlockField solve_backward_hjb(const GameModel& model, const BlockField& Z, const TimeGrid& grid) {
    check_layout(model, Z, grid, 1, "solve_backward_hjb");
    const std::size_t n = model.n();
    const std::size_t last = grid.steps();
    BlockField u(model.group_count(), grid.points(), n);

    for (std::size_t b = 0; b < model.group_count(); ++b) {
        const Group g{b};
        for (std::size_t e = 0; e < n; ++e) u(b, last, e) = model.terminal_cost(g, e, Z(b, last));

        auto field = [&](double t, std::span<const double> y) {
            const double z = std::max(0.0, stage_value(Z, b, 0, grid, t));
            State dy(n);
            for (std::size_t e = 0; e < n; ++e) {
                const double h = model.minimize_hamiltonian(g, t, e, z, y).value;
                if (!std::isfinite(h)) throw IntegrationError("non-finite Hamiltonian", t);
                dy[e] = -h;
            }
            return dy;
        };
        for (std::size_t k = last; k > 0; --k) {
            const State next = rk4_step(field, grid.t(k), u.row(b, k), -grid.dt());
            std::copy(next.begin(), next.end(), u.row(b, k - 1).begin());
        }
    }
    return u;
}

BlockField optimal_controls(const GameModel& model, const BlockField& u, const BlockField& Z,
                            const TimeGrid& grid) {
    const std::size_t n = model.n();
    check_layout(model, u, grid, n, "optimal_controls");
    check_layout(model, Z, grid, 1, "optimal_controls");
    BlockField phi(model.group_count(), grid.points(), n);
    for (std::size_t b = 0; b < model.group_count(); ++b)
        for (std::size_t k = 0; k < grid.points(); ++k)
            for (std::size_t e = 0; e < n; ++e)
                phi(b, k, e) =
                    model.minimize_hamiltonian(Group{b}, grid.t(k), e, Z(b, k), u.row(b, k)).control;
    return phi;
}

BlockField solve_forward_kolmogorov(const GameModel& model, const BlockField& phi,
                                    const BlockField& Z, std::span<const std::vector<double>> p0,
                                    const TimeGrid& grid) {
    const std::size_t n = model.n();
    check_layout(model, phi, grid, n, "solve_forward_kolmogorov");
    check_layout(model, Z, grid, 1, "solve_forward_kolmogorov");
    if (p0.size() != model.group_count())
        throw DimensionError("solve_forward_kolmogorov: one initial law per block required");
    const ControlSet& A = model.controls();
    BlockField p(model.group_count(), grid.points(), n);

    for (std::size_t b = 0; b < model.group_count(); ++b) {
        if (p0[b].size() != n) throw DimensionError("initial law has wrong number of states");
        std::copy(p0[b].begin(), p0[b].end(), p.row(b, 0).begin());
        const auto& c = model.coefficients(Group{b});

        auto field = [&](double t, std::span<const double> y) {
            const double z = std::max(0.0, stage_value(Z, b, 0, grid, t));
            State dy(n, 0.0);
            for (std::size_t from = 0; from < n; ++from) {
                const double a = A.project(stage_value(phi, b, from, grid, t));
                for (std::size_t to = 0; to < n; ++to) {
                    if (to == from) continue;
                    const double flow = y[from] * (c.base(from, to) + a * z * c.controlled(from, to));
                    dy[to] += flow;
                    dy[from] -= flow;
                }
            }
            return dy;
        };
        for (std::size_t k = 0; k < grid.steps(); ++k) {
            const State next = rk4_step(field, grid.t(k), p.row(b, k), grid.dt());
            double total = 0.0, lowest = 0.0;
            for (double v : next) {
                total += v;
                lowest = std::min(lowest, v);
            }
            if (std::abs(total - 1.0) > 1e-6 || lowest < -1e-6)
                throw IntegrationError("distribution left the simplex; use a smaller dt",
                                       grid.t(k + 1));
            std::copy(next.begin(), next.end(), p.row(b, k + 1).begin());
        }
    }
    return p;
}

BlockField compute_aggregate(const GameModel& model, const Graphon& graphon, const BlockField& p,
                             const BlockField& phi) {
    const BlockKernel& kernel = require_block(graphon, model);
    const std::size_t blocks = model.group_count();
    const std::size_t n = model.n();
    if (p.blocks() != blocks || phi.blocks() != blocks || p.points() != phi.points() ||
        p.width() != n || phi.width() != n)
        throw DimensionError("compute_aggregate: p and phi must share the block grid");
    BlockField Z(blocks, p.points(), 1);
    std::vector<double> contribution(blocks);
    for (std::size_t k = 0; k < p.points(); ++k) {
        for (std::size_t b = 0; b < blocks; ++b) {
            double acc = 0.0;
            for (std::size_t e = 0; e < n; ++e) acc += model.impact(phi(b, k, e), e) * p(b, k, e);
            contribution[b] = acc;
        }
        const auto z = aggregate_block(kernel.weights, kernel.masses, contribution);
        for (std::size_t b = 0; b < blocks; ++b) Z(b, k) = z[b];
    }
    return Z;
}

double scenario_existence_margin(const GameModel& model, const Graphon& graphon, double horizon,
                                 double* control_lipschitz) {
    const double z_bound = model.impact_bound() * graphon.sup();
    const double lip = z_bound > 0.0 ? estimate_control_lipschitz(model, z_bound, horizon) : 0.0;
    if (control_lipschitz != nullptr) *control_lipschitz = lip;
    return existence_margin(graphon, model.impact_lipschitz(), lip);
}

namespace {

EquilibriumSolution picard(const GameModel& model, const Graphon& graphon,
                           std::span<const std::vector<double>> p0, const TimeGrid& grid,
                           const BlockSolverConfig& config, BlockField Z) {
    EquilibriumSolution sol;
    sol.grid = grid;
    for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
        BlockField u = solve_backward_hjb(model, Z, grid);
        BlockField phi = optimal_controls(model, u, Z, grid);
        BlockField p = solve_forward_kolmogorov(model, phi, Z, p0, grid);
        const BlockField fresh = compute_aggregate(model, graphon, p, phi);

        const double residual = config.damping * sup_diff(fresh, Z);
        sol.diagnostics.residual_history.push_back(residual);
        sol.diagnostics.iterations = iter;
        sol.diagnostics.residual = residual;
        if (residual <= config.tol) {
            sol.u = std::move(u);
            sol.phi = std::move(phi);
            sol.p = std::move(p);
            sol.Z = std::move(Z);
            return sol;
        }
        BlockField next(Z.blocks(), Z.points(), 1);
        for (std::size_t b = 0; b < Z.blocks(); ++b)
            for (std::size_t k = 0; k < Z.points(); ++k)
                next(b, k) = (1.0 - config.damping) * Z(b, k) + config.damping * fresh(b, k);
        Z = std::move(next);
    }
    throw NonConvergence(config.max_iter, sol.diagnostics.residual);
}

}  // namespace

EquilibriumSolution solve_equilibrium(const GameModel& model, const Graphon& graphon,
                                      std::span<const std::vector<double>> p0,
                                      const TimeGrid& grid, const BlockSolverConfig& config) {
    require_block(graphon, model);
    if (!(config.damping > 0.0 && config.damping <= 1.0))
        throw ValidationError("solver.block.damping", "must lie in (0,1]");
    if (!(config.tol > 0.0)) throw ValidationError("solver.block.tol", "must be positive");

    double lip = 0.0;
    const double margin = scenario_existence_margin(model, graphon, grid.horizon(), &lip);

    const std::size_t blocks = model.group_count();
    EquilibriumSolution sol =
        picard(model, graphon, p0, grid, config, BlockField(blocks, grid.points(), 1, 0.0));
    sol.diagnostics.existence_margin = margin;
    sol.diagnostics.control_lipschitz = lip;
    if (margin >= 1.0) {
        std::ostringstream msg;
        msg << "existence margin " << margin << " >= 1: equilibrium not guaranteed by contraction";
        sol.diagnostics.warnings.push_back(msg.str());
    }

    if (config.check_uniqueness) {
        const double upper = model.impact_bound() * graphon.sup();
        auto alt = picard(model, graphon, p0, grid, config,
                          BlockField(blocks, grid.points(), 1, upper));
        sol.diagnostics.alternative_gap = sup_diff(sol.Z, alt.Z);
        if (sol.diagnostics.alternative_gap > 1e-6) {
            sol.diagnostics.warnings.push_back("distinct fixed points reached from different starts");
            sol.alternative = std::make_shared<const EquilibriumSolution>(std::move(alt));
        }
    }
    return sol;
}

FbResidual fb_residual(const GameModel& model, const Graphon& graphon,
                       const EquilibriumSolution& sol) {
    const TimeGrid& grid = sol.grid;
    const std::size_t n = model.n();
    const double twelve_dt = 12.0 * grid.dt();
    // Fourth-order centered stencil, matching the order of the RK4 solve.
    const auto derivative = [&](const BlockField& f, std::size_t b, std::size_t k, std::size_t e) {
        return (-f(b, k + 2, e) + 8.0 * f(b, k + 1, e) - 8.0 * f(b, k - 1, e) + f(b, k - 2, e)) /
               twelve_dt;
    };
    FbResidual res;
    std::vector<double> flow(n);
    for (std::size_t b = 0; b < model.group_count(); ++b) {
        const Group g{b};
        const auto& c = model.coefficients(g);
        for (std::size_t k = 2; k + 2 < grid.points(); ++k) {
            const double t = grid.t(k);
            const double z = sol.Z(b, k);
            std::fill(flow.begin(), flow.end(), 0.0);
            for (std::size_t from = 0; from < n; ++from) {
                const double a = sol.phi(b, k, from);
                for (std::size_t to = 0; to < n; ++to) {
                    if (to == from) continue;
                    const double f = sol.p(b, k, from) * (c.base(from, to) + a * z * c.controlled(from, to));
                    flow[to] += f;
                    flow[from] -= f;
                }
            }
            for (std::size_t e = 0; e < n; ++e) {
                const double du = derivative(sol.u, b, k, e);
                const double h = model.minimize_hamiltonian(g, t, e, z, sol.u.row(b, k)).value;
                res.hjb = std::max(res.hjb, std::abs(du + h));
                const double dp = derivative(sol.p, b, k, e);
                res.kolmogorov = std::max(res.kolmogorov, std::abs(dp - flow[e]));
            }
        }
    }
    const BlockField fresh = compute_aggregate(model, graphon, sol.p, sol.phi);
    res.aggregate = sup_diff(fresh, sol.Z);
    return res;
}

}  // namespace ggame
