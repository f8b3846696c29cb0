#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ggame/block_solver.hpp"
#include "ggame/graphon.hpp"
#include "ggame/model.hpp"
#include "ggame/network.hpp"
#include "ggame/numerics.hpp"

namespace ggame {

/// Sampled player indices with their parameter groups and initial laws.
struct SampleBatch {
    std::vector<double> indices;
    std::vector<Group> groups;
    std::vector<std::vector<double>> p0;

    std::size_t size() const noexcept { return indices.size(); }
};

/// Builds a batch; p0_by_group holds one initial law per model group.
SampleBatch make_batch(const GameModel& model, std::span<const std::vector<double>> p0_by_group,
                       std::vector<double> indices);

/// x_j = (j + U_j) / N: one uniform draw per stratum, in increasing order.
std::vector<double> stratified_indices(std::size_t count, RngStream& rng);
/// x_j = (j + 1/2) / N.
std::vector<double> midpoint_indices(std::size_t count);

/// Forward-forward trajectories per sampled index ("unit" = batch slot).
struct FfodeTrajectory {
    TimeGrid grid{1.0, 1};
    std::vector<double> indices;
    BlockField u;
    BlockField p;
    BlockField Z;
    BlockField phi;
};

/// Explicit Euler on the finite forward-forward system from u(0) = net(x).
/// The aggregate at step k uses the state at t_k, which is exact for models
/// whose impact-state control does not depend on (z, h).
FfodeTrajectory integrate_ffode(const Mlp& net, const SampleBatch& batch, const GameModel& model,
                                const Graphon& graphon, const TimeGrid& grid);

/// (1/N) sum_j sum_e (u_j(T,e) - g(e))^2.
double shooting_loss(const Mlp& net, const SampleBatch& batch, const GameModel& model,
                     const Graphon& graphon, const TimeGrid& grid);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Exact reverse-mode derivative of the Euler-discretized loss.
LossGradient loss_gradient(const Mlp& net, const SampleBatch& batch, const GameModel& model,
                           const Graphon& graphon, const TimeGrid& grid);

/// Loss with the direction sum_j J_theta(x_j)^T (2/N) M_j^{-1} r_j, where r_j
/// is the terminal residual and M_j the Jacobian of u_j(T) in u_j(0) with the
/// aggregate held fixed. The loss and its zeros are those of loss_gradient;
/// only the descent direction changes. Euler steps of u are badly conditioned
/// (their Jacobian grows like exp of the integrated out-rates), and this
/// undoes that per index.
LossGradient preconditioned_direction(const Mlp& net, const SampleBatch& batch,
                                      const GameModel& model, const Graphon& graphon,
                                      const TimeGrid& grid);

struct TrainingConfig {
    std::size_t iterations = 5000;
    std::size_t batch_size = 256;
    std::size_t steps = 400;
    std::vector<std::size_t> hidden{32, 32};
    double learning_rate = 1e-3;
    /// When positive the rate decays geometrically to this value at the last
    /// iteration.
    double final_learning_rate = 0.0;
    /// Plain gradient steps instead of Adam.
    bool plain_gradient = false;
    /// Use preconditioned_direction in place of the exact gradient.
    bool precondition = true;
    /// Without an initial network, set the output bias of the random one to
    /// the mass-weighted u(0) of the backward solve at zero aggregate.
    bool warm_start = true;
    /// When positive and no initial network is given, first-layer slopes get
    /// magnitude in [scale/2, scale] with random sign and each hidden unit's
    /// transition point -b/w is stratified over [0,1]. Block graphons give
    /// value functions that jump between blocks; steep units resolve that.
    double feature_scale = 0.0;
    bool resample = true;
    std::uint64_t seed = 0;

    bool operator==(const TrainingConfig&) const = default;
};

struct TrainingRecord {
    std::size_t iteration;
    double loss;
    double grad_norm;
    double learning_rate;
    double seconds;
};

struct TrainingLog {
    std::vector<TrainingRecord> records;
};

struct TrainingResult {
    Mlp net;
    TrainingLog log;
    /// Batch used by the last iteration.
    SampleBatch batch;
};

using TrainingObserver = std::function<void(const TrainingRecord&)>;

/// Gradient training of the initial-value network. Throws TrainingDivergence
/// when the loss stops being finite, or exceeds both 1e6 and the loss of the
/// first iteration.
TrainingResult train(const GameModel& model, const Graphon& graphon,
                     std::span<const std::vector<double>> p0_by_group, double horizon,
                     const TrainingConfig& config, std::optional<Mlp> initial = std::nullopt,
                     const TrainingObserver& observer = {});

/// Trajectories of a trained network on caller-chosen indices.
FfodeTrajectory evaluate(const Mlp& net, const GameModel& model, const Graphon& graphon,
                         std::span<const std::vector<double>> p0_by_group,
                         std::vector<double> indices, const TimeGrid& grid);

/// Stream ids derived from the scenario seed.
inline constexpr std::uint64_t kNetworkInitStream = 1;
inline constexpr std::uint64_t kBatchStream = 2;

}  // namespace ggame
