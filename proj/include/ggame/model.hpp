#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ggame/matrix.hpp"

namespace ggame {

/// Step function of time: values[i] holds on [breaks[i-1], breaks[i]).
struct PiecewiseConstant {
    std::vector<double> breaks;
    std::vector<double> values{0.0};

    static PiecewiseConstant constant(double v) { return {{}, {v}}; }
    double operator()(double t) const;
    bool is_constant() const noexcept { return breaks.empty(); }

    bool operator==(const PiecewiseConstant&) const = default;
};

struct StateSpace {
    std::vector<std::string> labels;

    std::size_t size() const noexcept { return labels.size(); }
    /// Position of `label`; throws DomainError when absent.
    std::size_t index_of(const std::string& label) const;
    bool contains(const std::string& label) const;

    bool operator==(const StateSpace&) const = default;
};

/// Compact action interval A = [a_min, a_max].
struct ControlSet {
    double a_min = 0.0;
    double a_max = 2.0;

    bool contains(double a) const noexcept { return a >= a_min && a <= a_max; }
    double project(double a) const noexcept { return a < a_min ? a_min : (a > a_max ? a_max : a); }
    double spacing(std::size_t points) const { return (a_max - a_min) / static_cast<double>(points - 1); }

    bool operator==(const ControlSet&) const = default;
};

enum class ModelKind { Sir, Seird };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Epidemiological and cost parameters of one group of players. The
/// recommended contact levels are indexed by state label.
struct PlayerParams {
    double beta = 0.0;
    double gamma = 0.0;
    double kappa = 0.0;
    double rho = 1.0;
    double epsilon = 0.0;
    double c_infected = 0.0;
    double c_dead = 0.0;
    double c_lambda = 1.0;
    std::vector<std::pair<std::string, PiecewiseConstant>> recommended;

    /// Level recommended in state `label`; 1 when the regulator gives none.
    const PiecewiseConstant& recommendation(const std::string& label) const;

    bool operator==(const PlayerParams&) const = default;
};

/// Player group handle (block of the index interval).
struct Group {
    std::size_t id = 0;
};

struct ControlChoice {
    double control;
    double value;
};

/// Minimizer a_hat = project(lambda_e - z * drift / weight_e) with
/// drift = sum_j controlled_ej (h_j - h_e), and its partial derivatives.
/// The derivatives are zero where the projection saturates.
struct ControlSensitivity {
    double control;
    double drift;
    double d_z;
    double d_drift;
};

/// Finite-state game with transition rates
///     q_{e e'}(a, z) = base_{e e'} + a z controlled_{e e'}   (e != e'),
/// running cost f(t,e,a) = weight_e/2 (lambda_e(t) - a)^2 + state_cost_e,
/// constant terminal cost and contact-factor impact K(a,e) = a 1{e = impact}.
/// The SIR and SEIRD epidemic games are instances of this family; players are
/// grouped into blocks of the index interval with per-group parameters.
class GameModel {
public:
    struct Coefficients {
        SquareMatrix base;
        SquareMatrix controlled;
        std::vector<double> weight;
        std::vector<double> state_cost;
        std::vector<PiecewiseConstant> recommended;
        std::vector<double> terminal;
    };

    static GameModel sir(std::vector<PlayerParams> groups, std::vector<double> masses,
                         ControlSet controls = {});
    static GameModel seird(std::vector<PlayerParams> groups, std::vector<double> masses,
                           ControlSet controls = {});
    static GameModel make(ModelKind kind, std::vector<PlayerParams> groups,
                          std::vector<double> masses, ControlSet controls = {});

    ModelKind kind() const noexcept { return kind_; }
    const StateSpace& states() const noexcept { return states_; }
    std::size_t n() const noexcept { return states_.size(); }
    const ControlSet& controls() const noexcept { return controls_; }
    std::size_t group_count() const noexcept { return params_.size(); }
    const std::vector<double>& masses() const noexcept { return masses_; }
    const PlayerParams& params(Group g) const { return params_.at(g.id); }
    const Coefficients& coefficients(Group g) const { return coeffs_.at(g.id); }

    /// Group whose cumulative-mass interval contains x.
    Group group_of(double x) const;

    SquareMatrix q_matrix(Group g, double t, double a, double z) const;
    SquareMatrix q_matrix(double x, double t, double a, double z) const {
        return q_matrix(group_of(x), t, a, z);
    }

    double running_cost(Group g, double t, std::size_t e, double z, double a) const;
    double running_cost(double x, double t, std::size_t e, double z, double a) const {
        return running_cost(group_of(x), t, e, z, a);
    }
    double terminal_cost(Group g, std::size_t e, double z) const;

    /// Row e of Q(a,z) applied to h, plus the running cost.
    double hamiltonian(Group g, double t, std::size_t e, double z, std::span<const double> h,
                       double a) const;
    double hamiltonian(double x, double t, std::size_t e, double z, std::span<const double> h,
                       double a) const {
        return hamiltonian(group_of(x), t, e, z, h, a);
    }

    /// Closed-form minimizer of a -> H(t,e,z,h,a) over A.
    ControlChoice minimize_hamiltonian(Group g, double t, std::size_t e, double z,
                                       std::span<const double> h) const;
    ControlChoice minimize_hamiltonian(double x, double t, std::size_t e, double z,
                                       std::span<const double> h) const {
        return minimize_hamiltonian(group_of(x), t, e, z, h);
    }

    ControlSensitivity control_sensitivity(Group g, double t, std::size_t e, double z,
                                           std::span<const double> h) const;

    /// Minimizer without the z >= 0 precondition (used for Lipschitz probing).
    double unconstrained_argmin(Group g, double t, std::size_t e, double z,
                                std::span<const double> h) const;

    std::size_t impact_state() const noexcept { return impact_state_; }
    double impact(double a, std::size_t e) const { return e == impact_state_ ? a : 0.0; }
    /// C_K: bound on |K| over A x E.
    double impact_bound() const noexcept;
    /// L_K: Lipschitz constant of K in the control.
    double impact_lipschitz() const noexcept { return 1.0; }

    /// q_max: rate majorant given a bound on the aggregate.
    double rate_bound(double aggregate_bound) const;
    /// sup |f| over groups, states, times and A.
    double running_cost_bound() const;
    /// sup |g|.
    double terminal_cost_bound() const;
    /// T sup|f| + sup|g|: bound on the value function.
    double value_bound(double horizon) const {
        return horizon * running_cost_bound() + terminal_cost_bound();
    }

    /// True when the control chosen at the impact state ignores (z, h), so the
    /// aggregate is an explicit function of the current distribution.
    bool impact_control_is_open_loop() const;

    /// All switch times of the recommendation schedules.
    std::vector<double> schedule_breaks() const;

private:
    GameModel() = default;

    void check_state(std::size_t e) const;
    void check_control(double a) const;

    ModelKind kind_ = ModelKind::Sir;
    StateSpace states_;
    ControlSet controls_;
    std::vector<PlayerParams> params_;
    std::vector<double> masses_;
    std::vector<Coefficients> coeffs_;
    std::size_t impact_state_ = 0;
};

/// Numeric upper estimate of the Lipschitz constant of z -> a_hat(t,z,h) on
/// [-z_bound, z_bound], probing h over the corners of [-C_h, C_h]^n with
/// C_h the value-function bound for the given horizon.
double estimate_control_lipschitz(const GameModel& model, double z_bound, double horizon);

}  // namespace ggame
