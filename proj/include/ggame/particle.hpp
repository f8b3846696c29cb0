#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ggame/block_solver.hpp"
#include "ggame/graphon.hpp"
#include "ggame/model.hpp"
#include "ggame/numerics.hpp"

namespace ggame {

inline constexpr std::uint64_t kParticleStreamBase = 1000;

/// Control used by agent `agent` (in group g) in state e at time t.
using ControlSource = std::function<double(std::size_t agent, Group g, double t, std::size_t e)>;
/// Deterministic aggregate seen by agent `agent` at time t.
using AggregatePath = std::function<double(std::size_t agent, double t)>;

enum class AggregateMode { Frozen, Empirical };

struct ParticleEvent {
    double t;
    std::size_t agent;
    std::size_t from;
    std::size_t to;

    bool operator==(const ParticleEvent&) const = default;
};

/// N agents with fixed indices, their current states and private streams.
class ParticlePopulation {
public:
    /// Initial states are drawn from p0 of each agent's group using the
    /// agent's own stream (seed, kParticleStreamBase + j).
    ParticlePopulation(const GameModel& model, std::span<const std::vector<double>> p0_by_group,
                       std::vector<double> indices, std::uint64_t seed);

    std::size_t size() const noexcept { return indices_.size(); }
    const std::vector<double>& indices() const noexcept { return indices_; }
    const std::vector<Group>& groups() const noexcept { return groups_; }
    const std::vector<std::size_t>& states() const noexcept { return states_; }
    const std::vector<std::size_t>& initial_states() const noexcept { return initial_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::vector<std::size_t>& mutable_states() noexcept { return states_; }
    RngStream& stream(std::size_t agent) { return streams_.at(agent); }

private:
    std::vector<double> indices_;
    std::vector<Group> groups_;
    std::vector<std::size_t> initial_;
    std::vector<std::size_t> states_;
    std::vector<RngStream> streams_;
    std::uint64_t seed_;
};

struct ParticleRun {
    TimeGrid grid{1.0, 1};           // aggregate refresh grid
    BlockField z_empirical;          // per agent and refresh point
    BlockField z_deterministic;      // empty unless a deterministic path was given
    std::vector<std::uint8_t> snapshots;  // state per (refresh point, agent)
    std::vector<ParticleEvent> events;    // per refresh interval, agent by agent
    double rate_bound = 0.0;

    std::size_t state_at(std::size_t point, std::size_t agent, std::size_t agents) const {
        return snapshots[point * agents + agent];
    }
};

/// Uniformization with the clock rate (2n-1) q_max and uniform offset
/// choice. In frozen mode agents see `deterministic` at each candidate time;
/// in empirical mode they see the graphon-weighted empirical aggregate,
/// recomputed at every refresh point and held in between.
/// Throws ModelBoundViolation when a rate exceeds q_max.
ParticleRun simulate(ParticlePopulation& population, const GameModel& model, const Graphon& graphon,
                     const ControlSource& controls, AggregateMode mode,
                     const AggregatePath& deterministic, const TimeGrid& refresh,
                     bool record_events = true);

/// z_j = (1/N) sum_k w(x_j, x_k) K(controls_k, states_k).
std::vector<double> empirical_aggregate(std::span<const double> indices,
                                        std::span<const std::size_t> states,
                                        std::span<const double> controls, const GameModel& model,
                                        const Graphon& graphon);

struct LlnGap {
    double sup = 0.0;
    double rms = 0.0;
};

/// Sup and RMS of |z_empirical - z_deterministic| over agents and times.
LlnGap lln_gap(const BlockField& empirical, const BlockField& deterministic);

/// Controls and aggregate taken from a block solution, interpolated linearly
/// in time; agents use the block containing their index.
ControlSource frozen_controls(const EquilibriumSolution& solution, const GameModel& model,
                              std::span<const double> indices);
AggregatePath frozen_aggregate(const EquilibriumSolution& solution, const GameModel& model,
                               std::span<const double> indices);
/// Recommended levels projected onto A.
ControlSource recommended_controls(const GameModel& model);

}  // namespace ggame
