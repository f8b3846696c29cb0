#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ggame/graphon.hpp"
#include "ggame/model.hpp"
#include "ggame/numerics.hpp"

namespace ggame {

/// Values per (block, grid point, component), contiguous in the component.
class BlockField {
public:
    BlockField() = default;
    BlockField(std::size_t blocks, std::size_t points, std::size_t width, double fill = 0.0)
        : blocks_(blocks), points_(points), width_(width), data_(blocks * points * width, fill) {}

    std::size_t blocks() const noexcept { return blocks_; }
    std::size_t points() const noexcept { return points_; }
    std::size_t width() const noexcept { return width_; }

    double& operator()(std::size_t b, std::size_t k, std::size_t e = 0) {
        return data_[(b * points_ + k) * width_ + e];
    }
    double operator()(std::size_t b, std::size_t k, std::size_t e = 0) const {
        return data_[(b * points_ + k) * width_ + e];
    }
    std::span<double> row(std::size_t b, std::size_t k) {
        return {data_.data() + (b * points_ + k) * width_, width_};
    }
    std::span<const double> row(std::size_t b, std::size_t k) const {
        return {data_.data() + (b * points_ + k) * width_, width_};
    }
    /// Time series of component e in block b (stride = width).
    std::span<const double> series(std::size_t b) const {
        return {data_.data() + b * points_ * width_, points_ * width_};
    }
    const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t blocks_ = 0, points_ = 0, width_ = 0;
    std::vector<double> data_;
};

struct BlockSolverConfig {
    double damping = 0.5;
    double tol = 1e-8;
    std::size_t max_iter = 200;
    /// Also iterate from the upper-bound aggregate and report the gap between
    /// the two fixed points.
    bool check_uniqueness = false;

    bool operator==(const BlockSolverConfig&) const = default;
};

struct SolverDiagnostics {
    std::size_t iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
    double existence_margin = 0.0;
    double control_lipschitz = 0.0;
    std::vector<std::string> warnings;
    /// sup |Z - Z_alt| when check_uniqueness ran, negative otherwise.
    double alternative_gap = -1.0;
};

struct EquilibriumSolution {
    TimeGrid grid{1.0, 1};
    BlockField u;    // value
    BlockField p;    // state distribution
    BlockField Z;    // aggregate (width 1)
    BlockField phi;  // equilibrium control
    SolverDiagnostics diagnostics;
    /// Fixed point reached from the alternative start, when it differs.
    std::shared_ptr<const EquilibriumSolution> alternative;
};

/// Backward RK4 sweep of du/dt = -H_hat(t, e, Z_t, u) from u(T) = g.
BlockField solve_backward_hjb(const GameModel& model, const BlockField& Z, const TimeGrid& grid);

/// Pointwise optimal feedback phi(t,e) = a_hat(t, e, Z_t, u(t,.)).
BlockField optimal_controls(const GameModel& model, const BlockField& u, const BlockField& Z,
                            const TimeGrid& grid);

/// Forward RK4 sweep of dp/dt = p Q(phi, Z) per block.
BlockField solve_forward_kolmogorov(const GameModel& model, const BlockField& phi,
                                    const BlockField& Z, std::span<const std::vector<double>> p0,
                                    const TimeGrid& grid);

/// Z_i(t) = sum_k w_ik (sum_e K(phi_k(t,e), e) p_k(t,e)) m_k.
BlockField compute_aggregate(const GameModel& model, const Graphon& graphon, const BlockField& p,
                             const BlockField& phi);

/// Damped Picard iteration on the aggregate path. Throws NonConvergence.
EquilibriumSolution solve_equilibrium(const GameModel& model, const Graphon& graphon,
                                      std::span<const std::vector<double>> p0,
                                      const TimeGrid& grid, const BlockSolverConfig& config = {});

struct FbResidual {
    double hjb = 0.0;
    double kolmogorov = 0.0;
    double aggregate = 0.0;
};

/// Sup-norm defects of the discrete FB system: fourth-order centered
/// differences on grid points with two neighbours on each side.
FbResidual fb_residual(const GameModel& model, const Graphon& graphon,
                       const EquilibriumSolution& solution);

/// Contraction diagnostic for a block scenario: ||w|| L_K L_a(C_K sup w).
double scenario_existence_margin(const GameModel& model, const Graphon& graphon, double horizon,
                                 double* control_lipschitz = nullptr);

}  // namespace ggame
