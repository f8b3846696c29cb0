#include "ggame/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "ggame/errors.hpp"

namespace ggame {

using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double interpolate(const BlockField& f, std::size_t b, std::size_t e, const TimeGrid& grid, double t) {
    const double s = std::clamp(t / grid.dt(), 0.0, static_cast<double>(grid.steps()));
    const auto k = std::min(static_cast<std::size_t>(s), grid.steps() - 1);
    const double frac = s - static_cast<double>(k);
    return (1.0 - frac) * f(b, k, e) + frac * f(b, k + 1, e);
}

std::vector<std::size_t> group_sizes(const GameModel& model, std::span<const Group> groups) {
    std::vector<std::size_t> sizes(model.group_count(), 0);
    for (Group g : groups) ++sizes[g.id];
    return sizes;
}

}  // namespace

void write_trajectories(std::ostream& out, const GameModel& model, const EquilibriumSolution& sol) {
    out << kTrajectoryHeader << '\n';
    const auto& labels = model.states().labels;
    for (std::size_t k = 0; k < sol.grid.points(); ++k)
        for (std::size_t b = 0; b < sol.p.blocks(); ++b)
            for (std::size_t e = 0; e < labels.size(); ++e)
                out << num(sol.grid.t(k)) << ',' << b << ',' << labels[e] << ','
                    << num(std::max(0.0, sol.p(b, k, e))) << ',' << num(sol.u(b, k, e)) << ','
                    << num(sol.Z(b, k)) << ',' << num(sol.phi(b, k, e)) << '\n';
}

void write_trajectories(std::ostream& out, const GameModel& model, const FfodeTrajectory& traj) {
    out << kTrajectoryHeader << '\n';
    const auto& labels = model.states().labels;
    for (std::size_t k = 0; k < traj.grid.points(); ++k)
        for (std::size_t j = 0; j < traj.indices.size(); ++j)
            for (std::size_t e = 0; e < labels.size(); ++e)
                out << num(traj.grid.t(k)) << ',' << num(traj.indices[j]) << ',' << labels[e] << ','
                    << num(std::max(0.0, traj.p(j, k, e))) << ',' << num(traj.u(j, k, e)) << ','
                    << num(traj.Z(j, k)) << ',' << num(traj.phi(j, k, e)) << '\n';
}

void write_trajectories(std::ostream& out, const GameModel& model, const ParticleRun& run,
                        const ParticlePopulation& pop, const ControlSource& controls) {
    out << kTrajectoryHeader << '\n';
    const auto& labels = model.states().labels;
    const std::size_t N = pop.size(), G = model.group_count(), n = labels.size();
    const auto sizes = group_sizes(model, pop.groups());
    std::vector<double> freq(G * n), control(G * n), z(G);
    for (std::size_t r = 0; r < run.grid.points(); ++r) {
        const double t = run.grid.t(r);
        std::fill(freq.begin(), freq.end(), 0.0);
        std::fill(control.begin(), control.end(), 0.0);
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            const std::size_t g = pop.groups()[j].id;
            freq[g * n + run.state_at(r, j, N)] += 1.0;
            z[g] += run.z_empirical(j, r);
            for (std::size_t e = 0; e < n; ++e) control[g * n + e] += controls(j, pop.groups()[j], t, e);
        }
        for (std::size_t g = 0; g < G; ++g) {
            if (sizes[g] == 0) continue;
            const double m = static_cast<double>(sizes[g]);
            for (std::size_t e = 0; e < n; ++e)
                out << num(t) << ',' << g << ',' << labels[e] << ',' << num(freq[g * n + e] / m)
                    << ",," << num(z[g] / m) << ',' << num(control[g * n + e] / m) << '\n';
        }
    }
}

void write_training_log(std::ostream& out, const TrainingLog& log) {
    out << "iteration,loss,grad_norm,lr,seconds\n";
    for (const auto& r : log.records)
        out << r.iteration << ',' << num(r.loss) << ',' << num(r.grad_norm) << ','
            << num(r.learning_rate) << ',' << num(r.seconds) << '\n';
}

void write_events(std::ostream& out, const GameModel& model, const ParticleRun& run,
                  const ParticlePopulation& pop) {
    out << "t,agent_id,index,from_state,to_state\n";
    std::vector<std::size_t> order(run.events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return run.events[a].t < run.events[b].t; });
    const auto& labels = model.states().labels;
    for (std::size_t i : order) {
        const auto& ev = run.events[i];
        out << num(ev.t) << ',' << ev.agent << ',' << num(pop.indices()[ev.agent]) << ','
            << labels[ev.from] << ',' << labels[ev.to] << '\n';
    }
}

void write_aggregates(std::ostream& out, const GameModel& model, const ParticleRun& run,
                      const ParticlePopulation& pop) {
    out << "t,unit,z_empirical,z_deterministic\n";
    const std::size_t N = pop.size(), G = model.group_count();
    const auto sizes = group_sizes(model, pop.groups());
    const bool has_det = run.z_deterministic.points() > 0;
    std::vector<double> emp(G), det(G);
    for (std::size_t r = 0; r < run.grid.points(); ++r) {
        std::fill(emp.begin(), emp.end(), 0.0);
        std::fill(det.begin(), det.end(), 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            emp[pop.groups()[j].id] += run.z_empirical(j, r);
            if (has_det) det[pop.groups()[j].id] += run.z_deterministic(j, r);
        }
        for (std::size_t g = 0; g < G; ++g) {
            if (sizes[g] == 0) continue;
            const double m = static_cast<double>(sizes[g]);
            out << num(run.grid.t(r)) << ',' << g << ',' << num(emp[g] / m) << ','
                << (has_det ? num(det[g] / m) : std::string()) << '\n';
        }
    }
}

json block_summary(const GameModel& model, const EquilibriumSolution& sol) {
    const std::size_t D = model.states().index_of("D"), I = model.states().index_of("I");
    const std::size_t last = sol.grid.steps();
    json blocks = json::array();
    double total = 0.0;
    for (std::size_t b = 0; b < sol.p.blocks(); ++b) {
        std::size_t peak_k = 0;
        for (std::size_t k = 0; k < sol.grid.points(); ++k)
            if (sol.p(b, k, I) > sol.p(b, peak_k, I)) peak_k = k;
        const double dead = sol.p(b, last, D);
        total += model.masses()[b] * dead;
        blocks.push_back({{"block", b},
                          {"mass", model.masses()[b]},
                          {"terminal_deceased", dead},
                          {"peak_infected", sol.p(b, peak_k, I)},
                          {"peak_time", sol.grid.t(peak_k)}});
    }
    return {{"blocks", blocks}, {"population_deceased", total}};
}

json block_diagnostics(const EquilibriumSolution& sol, const FbResidual& residual) {
    const auto& d = sol.diagnostics;
    json out = {{"iterations", d.iterations},
                {"fixed_point_residual", d.residual},
                {"residual_history", d.residual_history},
                {"existence_margin", d.existence_margin},
                {"control_lipschitz", d.control_lipschitz},
                {"fb_residual",
                 {{"hjb", residual.hjb}, {"kolmogorov", residual.kolmogorov}, {"aggregate", residual.aggregate}}},
                {"warnings", d.warnings}};
    if (d.alternative_gap >= 0.0) out["alternative_gap"] = d.alternative_gap;
    return out;
}

json shoot_summary(const GameModel& model, const FfodeTrajectory& traj) {
    const std::size_t D = model.states().index_of("D"), I = model.states().index_of("I");
    const std::size_t last = traj.grid.steps(), N = traj.indices.size();
    std::vector<double> dead(model.group_count(), 0.0), peak(model.group_count(), 0.0);
    std::vector<std::size_t> count(model.group_count(), 0);
    for (std::size_t j = 0; j < N; ++j) {
        const std::size_t g = model.group_of(traj.indices[j]).id;
        ++count[g];
        dead[g] += traj.p(j, last, D);
        double top = 0.0;
        for (std::size_t k = 0; k < traj.grid.points(); ++k) top = std::max(top, traj.p(j, k, I));
        peak[g] += top;
    }
    json groups = json::array();
    double overall = 0.0;
    for (std::size_t g = 0; g < model.group_count(); ++g) {
        if (count[g] == 0) continue;
        const double m = static_cast<double>(count[g]);
        overall += dead[g];
        groups.push_back({{"group", g},
                          {"indices", count[g]},
                          {"terminal_deceased", dead[g] / m},
                          {"peak_infected", peak[g] / m}});
    }
    return {{"groups", groups}, {"index_mean_deceased", overall / static_cast<double>(N)}};
}

double SolverComparison::max_u0_s_gap() const {
    return u0_s_gap.empty() ? 0.0 : *std::max_element(u0_s_gap.begin(), u0_s_gap.end());
}

double SolverComparison::max_u0_s_spread() const {
    return u0_s_spread.empty() ? 0.0 : *std::max_element(u0_s_spread.begin(), u0_s_spread.end());
}

SolverComparison compare_solutions(const GameModel& model, const EquilibriumSolution& block,
                                   const FfodeTrajectory& shoot) {
    if (std::abs(block.grid.horizon() - shoot.grid.horizon()) > 1e-12)
        throw DimensionError("compare_solutions: horizons differ");
    const std::size_t G = model.group_count(), n = model.n(), N = shoot.indices.size();
    const std::size_t S = model.states().index_of("S");
    std::vector<std::size_t> group(N), count(G, 0);
    for (std::size_t j = 0; j < N; ++j) {
        group[j] = model.group_of(shoot.indices[j]).id;
        ++count[group[j]];
    }
    for (std::size_t g = 0; g < G; ++g)
        if (count[g] == 0) throw DimensionError("compare_solutions: a block has no evaluation index");

    SolverComparison cmp;
    cmp.u0_s_gap.assign(G, 0.0);
    cmp.u0_s_spread.assign(G, 0.0);
    std::vector<double> p_mean(G * n), phi_mean(G), z_mean(G);
    for (std::size_t k = 0; k < shoot.grid.points(); ++k) {
        const double t = shoot.grid.t(k);
        std::fill(p_mean.begin(), p_mean.end(), 0.0);
        std::fill(phi_mean.begin(), phi_mean.end(), 0.0);
        std::fill(z_mean.begin(), z_mean.end(), 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            const double w = 1.0 / static_cast<double>(count[group[j]]);
            for (std::size_t e = 0; e < n; ++e) p_mean[group[j] * n + e] += w * shoot.p(j, k, e);
            phi_mean[group[j]] += w * shoot.phi(j, k, S);
            z_mean[group[j]] += w * shoot.Z(j, k);
        }
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t e = 0; e < n; ++e)
                cmp.p_gap = std::max(cmp.p_gap, std::abs(p_mean[g * n + e] - interpolate(block.p, g, e, block.grid, t)));
            cmp.phi_s_gap = std::max(cmp.phi_s_gap, std::abs(phi_mean[g] - interpolate(block.phi, g, S, block.grid, t)));
            cmp.z_gap = std::max(cmp.z_gap, std::abs(z_mean[g] - interpolate(block.Z, g, 0, block.grid, t)));
        }
    }

    std::vector<double> u0(G, 0.0);
    for (std::size_t j = 0; j < N; ++j) u0[group[j]] += shoot.u(j, 0, S) / static_cast<double>(count[group[j]]);
    for (std::size_t g = 0; g < G; ++g) cmp.u0_s_gap[g] = std::abs(u0[g] - block.u(g, 0, S));
    for (std::size_t j = 0; j < N; ++j)
        cmp.u0_s_spread[group[j]] = std::max(cmp.u0_s_spread[group[j]], std::abs(shoot.u(j, 0, S) - u0[group[j]]));
    return cmp;
}

json to_json(const SolverComparison& cmp) {
    return {{"sup_p_gap", cmp.p_gap},
            {"sup_Z_gap", cmp.z_gap},
            {"sup_control_S_gap", cmp.phi_s_gap},
            {"u0_S_gap_per_block", cmp.u0_s_gap},
            {"u0_S_within_block_deviation", cmp.u0_s_spread}};
}

}  // namespace ggame
