#include "ggame/particle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ggame/errors.hpp"

namespace ggame {

ParticlePopulation::ParticlePopulation(const GameModel& model,
                                       std::span<const std::vector<double>> p0_by_group,
                                       std::vector<double> indices, std::uint64_t seed)
    : indices_(std::move(indices)), seed_(seed) {
    if (p0_by_group.size() != model.group_count())
        throw DimensionError("ParticlePopulation: one initial law per group required");
    if (indices_.empty()) throw DimensionError("ParticlePopulation: no agents");
    for (std::size_t j = 0; j < indices_.size(); ++j) {
        const double x = indices_[j];
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("agent index outside [0,1]");
        const Group g = model.group_of(x);
        const auto& law = p0_by_group[g.id];
        if (law.size() != model.n()) throw DimensionError("initial law has wrong number of states");
        RngStream rng(seed, kParticleStreamBase + j);
        const double u = rng.uniform();
        std::size_t state = 0;
        double cumulative = 0.0;
        for (std::size_t e = 0; e < law.size(); ++e) {
            if (law[e] <= 0.0) continue;
            state = e;
            cumulative += law[e];
            if (u < cumulative) break;
        }
        groups_.push_back(g);
        initial_.push_back(state);
        streams_.push_back(rng);
    }
    states_ = initial_;
}

std::vector<double> empirical_aggregate(std::span<const double> indices,
                                        std::span<const std::size_t> states,
                                        std::span<const double> controls, const GameModel& model,
                                        const Graphon& graphon) {
    if (states.size() != indices.size() || controls.size() != indices.size())
        throw DimensionError("empirical_aggregate: indices, states and controls differ in length");
    std::vector<double> s(indices.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = model.impact(controls[k], states[k]);
    return aggregate_sampled_all(graphon, indices, s);
}

ParticleRun simulate(ParticlePopulation& pop, const GameModel& model, const Graphon& graphon,
                     const ControlSource& controls, AggregateMode mode,
                     const AggregatePath& deterministic, const TimeGrid& refresh,
                     bool record_events) {
    if (!controls) throw ValidationError("particle.controls", "a control source is required");
    if (mode == AggregateMode::Frozen && !deterministic)
        throw ValidationError("particle.aggregate", "frozen mode needs a deterministic aggregate path");
    const std::size_t N = pop.size(), n = model.n(), R = refresh.steps();
    const ControlSet& A = model.controls();

    ParticleRun run;
    run.grid = refresh;
    run.rate_bound = model.rate_bound(model.impact_bound() * graphon.sup());
    run.z_empirical = BlockField(N, R + 1, 1);
    if (deterministic) run.z_deterministic = BlockField(N, R + 1, 1);
    run.snapshots.resize((R + 1) * N);

    const double q_max = run.rate_bound;
    const std::size_t offsets = 2 * n - 1;
    const double q_total = static_cast<double>(offsets) * q_max;
    std::vector<double> next(N, 0.0);
    if (q_total > 0.0)
        for (std::size_t j = 0; j < N; ++j) next[j] = pop.stream(j).exponential(q_total);

    auto control_of = [&](std::size_t j, double t, std::size_t e) {
        const double a = controls(j, pop.groups()[j], t, e);
        if (!A.contains(a)) throw DomainError("control source returned a value outside A");
        return a;
    };

    auto& states = pop.mutable_states();
    std::vector<double> a_now(N);
    for (std::size_t r = 0;; ++r) {
        const double t0 = refresh.t(r);
        for (std::size_t j = 0; j < N; ++j) {
            run.snapshots[r * N + j] = static_cast<std::uint8_t>(states[j]);
            a_now[j] = control_of(j, t0, states[j]);
        }
        const auto z_emp = empirical_aggregate(pop.indices(), states, a_now, model, graphon);
        for (std::size_t j = 0; j < N; ++j) {
            run.z_empirical(j, r) = z_emp[j];
            if (deterministic) run.z_deterministic(j, r) = deterministic(j, t0);
        }
        if (r == R || q_total == 0.0) {
            if (r == R) break;
            continue;
        }

        const double t1 = refresh.t(r + 1);
        for (std::size_t j = 0; j < N; ++j) {
            RngStream& rng = pop.stream(j);
            const auto& c = model.coefficients(pop.groups()[j]);
            while (next[j] < t1) {
                const double tau = next[j];
                next[j] += rng.exponential(q_total);
                const std::size_t pick = rng.below(offsets);
                const double u = rng.uniform();
                const std::size_t from = states[j];
                const std::ptrdiff_t to = static_cast<std::ptrdiff_t>(from) +
                                          static_cast<std::ptrdiff_t>(pick) -
                                          static_cast<std::ptrdiff_t>(n - 1);
                if (to < 0 || to >= static_cast<std::ptrdiff_t>(n) || to == static_cast<std::ptrdiff_t>(from))
                    continue;
                const auto target = static_cast<std::size_t>(to);
                const double z = mode == AggregateMode::Frozen ? deterministic(j, tau) : z_emp[j];
                const double rate =
                    c.base(from, target) + control_of(j, tau, from) * z * c.controlled(from, target);
                if (rate > q_max * (1.0 + 1e-12))
                    throw ModelBoundViolation("jump rate " + std::to_string(rate) +
                                              " exceeds the declared bound " + std::to_string(q_max));
                if (u * q_max < rate) {
                    states[j] = target;
                    if (record_events) run.events.push_back({tau, j, from, target});
                }
            }
        }
    }
    return run;
}

LlnGap lln_gap(const BlockField& empirical, const BlockField& deterministic) {
    if (empirical.blocks() != deterministic.blocks() || empirical.points() != deterministic.points() ||
        empirical.width() != deterministic.width())
        throw DimensionError("lln_gap: aggregate paths are on different grids");
    LlnGap gap;
    const auto& a = empirical.data();
    const auto& b = deterministic.data();
    if (a.empty()) return gap;
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        gap.sup = std::max(gap.sup, d);
        sq += d * d;
    }
    gap.rms = std::sqrt(sq / static_cast<double>(a.size()));
    return gap;
}

namespace {

double interpolate(const BlockField& f, std::size_t b, std::size_t e, const TimeGrid& grid, double t) {
    const double s = std::clamp(t / grid.dt(), 0.0, static_cast<double>(grid.steps()));
    const auto k = std::min(static_cast<std::size_t>(s), grid.steps() - 1);
    const double frac = s - static_cast<double>(k);
    return (1.0 - frac) * f(b, k, e) + frac * f(b, k + 1, e);
}

std::vector<std::size_t> blocks_of(const GameModel& model, std::span<const double> indices) {
    std::vector<std::size_t> out;
    for (double x : indices) out.push_back(model.group_of(x).id);
    return out;
}

}  // namespace

ControlSource frozen_controls(const EquilibriumSolution& solution, const GameModel& model,
                              std::span<const double> indices) {
    return [&solution, &model, blocks = blocks_of(model, indices)](std::size_t agent, Group, double t,
                                                                   std::size_t e) {
        return model.controls().project(interpolate(solution.phi, blocks[agent], e, solution.grid, t));
    };
}

AggregatePath frozen_aggregate(const EquilibriumSolution& solution, const GameModel& model,
                               std::span<const double> indices) {
    return [&solution, blocks = blocks_of(model, indices)](std::size_t agent, double t) {
        return std::max(0.0, interpolate(solution.Z, blocks[agent], 0, solution.grid, t));
    };
}

ControlSource recommended_controls(const GameModel& model) {
    return [&model](std::size_t, Group g, double t, std::size_t e) {
        return model.controls().project(model.coefficients(g).recommended[e](t));
    };
}

}  // namespace ggame
