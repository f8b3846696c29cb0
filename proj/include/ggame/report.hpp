#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "json.hpp"

#include "ggame/block_solver.hpp"
#include "ggame/model.hpp"
#include "ggame/particle.hpp"
#include "ggame/shooting.hpp"

namespace ggame {

/// Header of every trajectories file.
inline constexpr const char* kTrajectoryHeader = "t,unit,state,p,u,Z,control";

/// One row per (time, block, state); unit is the block id.
void write_trajectories(std::ostream& out, const GameModel& model, const EquilibriumSolution& sol);
/// One row per (time, index, state); unit is the index value.
void write_trajectories(std::ostream& out, const GameModel& model, const FfodeTrajectory& traj);
/// Empirical state frequencies per group; u is left empty, Z is the group
/// mean of the empirical aggregate and control the group mean control.
void write_trajectories(std::ostream& out, const GameModel& model, const ParticleRun& run,
                        const ParticlePopulation& population, const ControlSource& controls);

/// iteration,loss,grad_norm,lr,seconds
void write_training_log(std::ostream& out, const TrainingLog& log);
/// t,agent_id,index,from_state,to_state in time order.
void write_events(std::ostream& out, const GameModel& model, const ParticleRun& run,
                  const ParticlePopulation& population);
/// t,unit,z_empirical,z_deterministic with group means per refresh time.
void write_aggregates(std::ostream& out, const GameModel& model, const ParticleRun& run,
                      const ParticlePopulation& population);

/// Terminal deceased mass per block, its population-weighted total and the
/// infected peak per block.
nlohmann::ordered_json block_summary(const GameModel& model, const EquilibriumSolution& sol);
nlohmann::ordered_json block_diagnostics(const EquilibriumSolution& sol, const FbResidual& residual);
/// Per-group means of the terminal deceased share and infected peak.
nlohmann::ordered_json shoot_summary(const GameModel& model, const FfodeTrajectory& traj);

struct SolverComparison {
    double p_gap = 0.0;      // sup over blocks, times, states of |mean p_shoot - p_block|
    double z_gap = 0.0;      // same for Z
    double phi_s_gap = 0.0;  // same for the control at S
    std::vector<double> u0_s_gap;     // per block |mean u_shoot(0,S) - u_block(0,S)|
    std::vector<double> u0_s_spread;  // per block sup |u_x(0,S) - block mean|

    double max_u0_s_gap() const;
    double max_u0_s_spread() const;
};

/// Compares shooting trajectories on indices covering every block with a
/// block solution on any time grid of the same horizon.
SolverComparison compare_solutions(const GameModel& model, const EquilibriumSolution& block,
                                   const FfodeTrajectory& shoot);
nlohmann::ordered_json to_json(const SolverComparison& cmp);

}  // namespace ggame
