#include "ggame/model.hpp"

#include <algorithm>
#include <cmath>

#include "ggame/errors.hpp"

namespace ggame {

double PiecewiseConstant::operator()(double t) const {
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    return values[static_cast<std::size_t>(it - breaks.begin())];
}

std::size_t StateSpace::index_of(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw DomainError("unknown state '" + label + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

bool StateSpace::contains(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::Sir ? "sir" : "seird";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "sir") return ModelKind::Sir;
    if (name == "seird") return ModelKind::Seird;
    throw ValidationError("model", "expected 'sir' or 'seird', got '" + name + "'");
}

const PiecewiseConstant& PlayerParams::recommendation(const std::string& label) const {
    static const PiecewiseConstant kDefault = PiecewiseConstant::constant(1.0);
    for (const auto& [state, level] : recommended)
        if (state == label) return level;
    return kDefault;
}

namespace {

void validate_schedule(const PiecewiseConstant& s, const std::string& field) {
    if (s.values.size() != s.breaks.size() + 1)
        throw ValidationError(field, "piecewise schedule needs one more value than breaks");
    for (std::size_t i = 1; i < s.breaks.size(); ++i)
        if (!(s.breaks[i] > s.breaks[i - 1]))
            throw ValidationError(field, "schedule breaks must be strictly increasing");
    for (double v : s.values)
        if (!std::isfinite(v)) throw ValidationError(field, "schedule values must be finite");
}

void validate_params(const PlayerParams& p, std::size_t group, const StateSpace& states) {
    const std::string prefix = "groups[" + std::to_string(group) + "].";
    auto nonneg = [&](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError(prefix + name, "must be finite and >= 0");
    };
    nonneg(p.beta, "beta");
    nonneg(p.gamma, "gamma");
    nonneg(p.kappa, "kappa");
    nonneg(p.epsilon, "epsilon");
    nonneg(p.c_infected, "c_I");
    nonneg(p.c_dead, "c_D");
    if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw ValidationError(prefix + "rho", "must lie in [0,1]");
    if (!(p.c_lambda > 0.0) || !std::isfinite(p.c_lambda))
        throw ValidationError(prefix + "c_lambda", "must be > 0");
    for (const auto& [label, schedule] : p.recommended) {
        if (!states.contains(label))
            throw ValidationError(prefix + "lambda", "state '" + label + "' not in model");
        validate_schedule(schedule, prefix + "lambda." + label);
    }
}

std::vector<double> validate_masses(std::vector<double> masses, std::size_t groups) {
    if (groups == 0) throw ValidationError("groups", "at least one group required");
    if (masses.size() != groups) throw ValidationError("masses", "one mass per group required");
    double total = 0.0;
    for (double m : masses) {
        if (!(m >= 0.0)) throw ValidationError("masses", "masses must be nonnegative");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError("masses", "masses sum ≠ 1 (got " + std::to_string(total) + ")");
    return masses;
}

}  // namespace

GameModel GameModel::make(ModelKind kind, std::vector<PlayerParams> groups,
                          std::vector<double> masses, ControlSet controls) {
    GameModel m;
    m.kind_ = kind;
    m.states_.labels = kind == ModelKind::Sir
                           ? std::vector<std::string>{"S", "I", "R", "D"}
                           : std::vector<std::string>{"S", "E", "I", "R", "D"};
    if (!(controls.a_min >= 0.0) || !(controls.a_max >= controls.a_min) ||
        !std::isfinite(controls.a_max))
        throw ValidationError("controls", "need 0 <= a_min <= a_max < inf");
    m.controls_ = controls;
    m.masses_ = validate_masses(std::move(masses), groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) validate_params(groups[g], g, m.states_);
    m.params_ = std::move(groups);

    const std::size_t n = m.states_.size();
    const auto idx = [&](const char* s) { return m.states_.index_of(s); };
    const std::size_t S = idx("S"), I = idx("I"), R = idx("R"), D = idx("D");
    m.impact_state_ = I;

    for (const PlayerParams& p : m.params_) {
        Coefficients c{SquareMatrix(n), SquareMatrix(n), std::vector<double>(n, 0.0),
                       std::vector<double>(n, 0.0), {}, std::vector<double>(n, 0.0)};
        c.base(I, R) = p.rho * p.gamma;
        c.base(I, D) = (1.0 - p.rho) * p.gamma;
        if (kind == ModelKind::Sir) {
            c.controlled(S, I) = p.beta;
            c.base(R, S) = p.kappa;
        } else {
            const std::size_t E = idx("E");
            c.controlled(S, E) = p.beta;
            c.base(E, I) = p.epsilon;
            c.weight[E] = p.c_lambda;
        }
        c.weight[S] = p.c_lambda;
        c.weight[I] = 1.0;
        c.weight[R] = 1.0;
        c.state_cost[I] = p.c_infected;
        c.state_cost[D] = p.c_dead;
        for (const auto& label : m.states_.labels) c.recommended.push_back(p.recommendation(label));
        m.coeffs_.push_back(std::move(c));
    }
    return m;
}

GameModel GameModel::sir(std::vector<PlayerParams> groups, std::vector<double> masses,
                         ControlSet controls) {
    return make(ModelKind::Sir, std::move(groups), std::move(masses), controls);
}

GameModel GameModel::seird(std::vector<PlayerParams> groups, std::vector<double> masses,
                           ControlSet controls) {
    return make(ModelKind::Seird, std::move(groups), std::move(masses), controls);
}

Group GameModel::group_of(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("player index outside [0,1]");
    double cumulative = 0.0;
    for (std::size_t i = 0; i + 1 < masses_.size(); ++i) {
        cumulative += masses_[i];
        if (x < cumulative) return Group{i};
    }
    return Group{masses_.size() - 1};
}

void GameModel::check_state(std::size_t e) const {
    if (e >= n()) throw DomainError("state index " + std::to_string(e) + " out of range");
}

void GameModel::check_control(double a) const {
    if (!controls_.contains(a))
        throw DomainError("control " + std::to_string(a) + " outside the action set");
}

SquareMatrix GameModel::q_matrix(Group g, double /*t*/, double a, double z) const {
    check_control(a);
    if (!(z >= 0.0)) throw DomainError("aggregate must be nonnegative");
    const Coefficients& c = coefficients(g);
    const std::size_t states = n();
    SquareMatrix q(states);
    for (std::size_t i = 0; i < states; ++i) {
        double out = 0.0;
        for (std::size_t j = 0; j < states; ++j) {
            if (i == j) continue;
            q(i, j) = c.base(i, j) + a * z * c.controlled(i, j);
            out += q(i, j);
        }
        q(i, i) = -out;
    }
    return q;
}

double GameModel::running_cost(Group g, double t, std::size_t e, double /*z*/, double a) const {
    check_state(e);
    const Coefficients& c = coefficients(g);
    const double dev = c.recommended[e](t) - a;
    return 0.5 * c.weight[e] * dev * dev + c.state_cost[e];
}

double GameModel::terminal_cost(Group g, std::size_t e, double /*z*/) const {
    check_state(e);
    return coefficients(g).terminal[e];
}

double GameModel::hamiltonian(Group g, double t, std::size_t e, double z,
                              std::span<const double> h, double a) const {
    check_state(e);
    check_control(a);
    if (!(z >= 0.0)) throw DomainError("aggregate must be nonnegative");
    if (h.size() != n()) throw DimensionError("hamiltonian: h has wrong length");
    const Coefficients& c = coefficients(g);
    double acc = 0.0;
    for (std::size_t j = 0; j < n(); ++j) {
        if (j == e) continue;
        acc += (c.base(e, j) + a * z * c.controlled(e, j)) * (h[j] - h[e]);
    }
    return acc + running_cost(g, t, e, z, a);
}

double GameModel::unconstrained_argmin(Group g, double t, std::size_t e, double z,
                                       std::span<const double> h) const {
    const Coefficients& c = coefficients(g);
    double drift = 0.0;
    for (std::size_t j = 0; j < n(); ++j)
        if (j != e) drift += c.controlled(e, j) * (h[j] - h[e]);
    const double slope = z * drift;
    const double target = c.recommended[e](t);
    if (c.weight[e] > 0.0) return controls_.project(target - slope / c.weight[e]);
    if (slope == 0.0) return controls_.project(target);
    return slope > 0.0 ? controls_.a_min : controls_.a_max;
}

ControlSensitivity GameModel::control_sensitivity(Group g, double t, std::size_t e, double z,
                                                  std::span<const double> h) const {
    const Coefficients& c = coefficients(g);
    double drift = 0.0;
    for (std::size_t j = 0; j < n(); ++j)
        if (j != e) drift += c.controlled(e, j) * (h[j] - h[e]);
    const double a = unconstrained_argmin(g, t, e, z, h);
    if (c.weight[e] <= 0.0) return {a, drift, 0.0, 0.0};
    const double raw = c.recommended[e](t) - z * drift / c.weight[e];
    if (!(raw > controls_.a_min && raw < controls_.a_max)) return {a, drift, 0.0, 0.0};
    return {a, drift, -drift / c.weight[e], -z / c.weight[e]};
}

ControlChoice GameModel::minimize_hamiltonian(Group g, double t, std::size_t e, double z,
                                              std::span<const double> h) const {
    check_state(e);
    if (!(z >= 0.0)) throw DomainError("aggregate must be nonnegative");
    if (h.size() != n()) throw DimensionError("minimize_hamiltonian: h has wrong length");
    const double a = unconstrained_argmin(g, t, e, z, h);
    return {a, hamiltonian(g, t, e, z, h, a)};
}

double GameModel::impact_bound() const noexcept {
    return std::max(std::abs(controls_.a_min), std::abs(controls_.a_max));
}

double GameModel::rate_bound(double aggregate_bound) const {
    double q = 0.0;
    for (const Coefficients& c : coeffs_)
        for (std::size_t i = 0; i < n(); ++i)
            for (std::size_t j = 0; j < n(); ++j)
                if (i != j)
                    q = std::max(q, c.base(i, j) + controls_.a_max * aggregate_bound * c.controlled(i, j));
    return q;
}

double GameModel::running_cost_bound() const {
    double bound = 0.0;
    for (const Coefficients& c : coeffs_) {
        for (std::size_t e = 0; e < n(); ++e) {
            double worst = 0.0;
            for (double level : c.recommended[e].values) {
                const double lo = level - controls_.a_min, hi = level - controls_.a_max;
                worst = std::max({worst, lo * lo, hi * hi});
            }
            bound = std::max(bound, 0.5 * c.weight[e] * worst + std::abs(c.state_cost[e]));
        }
    }
    return bound;
}

double GameModel::terminal_cost_bound() const {
    double bound = 0.0;
    for (const Coefficients& c : coeffs_)
        for (double v : c.terminal) bound = std::max(bound, std::abs(v));
    return bound;
}

bool GameModel::impact_control_is_open_loop() const {
    for (const Coefficients& c : coeffs_)
        for (std::size_t j = 0; j < n(); ++j)
            if (c.controlled(impact_state_, j) != 0.0) return false;
    return true;
}

std::vector<double> GameModel::schedule_breaks() const {
    std::vector<double> out;
    for (const Coefficients& c : coeffs_)
        for (const auto& s : c.recommended) out.insert(out.end(), s.breaks.begin(), s.breaks.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double estimate_control_lipschitz(const GameModel& model, double z_bound, double horizon) {
    if (!(z_bound > 0.0)) throw DomainError("z_bound must be positive");
    constexpr double kDelta = 1e-4;
    constexpr std::size_t kZPoints = 41;
    const std::size_t n = model.n();
    const double c_h = model.value_bound(horizon);

    std::vector<double> times{0.0, 0.25 * horizon, 0.5 * horizon, 0.75 * horizon, horizon};
    for (double b : model.schedule_breaks())
        if (b >= 0.0 && b <= horizon) times.push_back(b);

    std::vector<double> h(n);
    double best = 0.0;
    for (std::size_t g = 0; g < model.group_count(); ++g) {
        for (double t : times) {
            for (std::size_t e = 0; e < n; ++e) {
                for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
                    for (std::size_t j = 0; j < n; ++j) h[j] = (corner >> j) & 1 ? c_h : -c_h;
                    for (std::size_t k = 0; k < kZPoints; ++k) {
                        const double z =
                            -z_bound + 2.0 * z_bound * static_cast<double>(k) / (kZPoints - 1);
                        const double a0 = model.unconstrained_argmin(Group{g}, t, e, z, h);
                        const double a1 = model.unconstrained_argmin(Group{g}, t, e, z + kDelta, h);
                        best = std::max(best, std::abs(a1 - a0) / kDelta);
                    }
                }
            }
        }
    }
    return best;
}

}  // namespace ggame
