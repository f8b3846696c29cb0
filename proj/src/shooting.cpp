#include "ggame/shooting.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Dense>

#include "ggame/block_solver.hpp"
#include "ggame/errors.hpp"

namespace ggame {

SampleBatch make_batch(const GameModel& model, std::span<const std::vector<double>> p0_by_group,
                       std::vector<double> indices) {
    if (p0_by_group.size() != model.group_count())
        throw DimensionError("make_batch: one initial law per group required");
    SampleBatch batch;
    batch.indices = std::move(indices);
    for (double x : batch.indices) {
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("sample index outside [0,1]");
        const Group g = model.group_of(x);
        batch.groups.push_back(g);
        batch.p0.push_back(p0_by_group[g.id]);
    }
    return batch;
}

std::vector<double> stratified_indices(std::size_t count, RngStream& rng) {
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j)
        out[j] = (static_cast<double>(j) + rng.uniform()) / static_cast<double>(count);
    return out;
}

std::vector<double> midpoint_indices(std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j)
        out[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(count);
    return out;
}

namespace {

void check_inputs(const Mlp& net, const SampleBatch& batch, const GameModel& model) {
    if (!model.impact_control_is_open_loop())
        throw DomainError("shooting solver needs a control at the impact state that ignores (z, h)");
    if (batch.size() == 0) throw DimensionError("empty sample batch");
    if (batch.groups.size() != batch.size() || batch.p0.size() != batch.size())
        throw DimensionError("sample batch fields differ in length");
    if (net.outputs() != model.n())
        throw DimensionError("network output size differs from the number of states");
    for (const auto& p : batch.p0)
        if (p.size() != model.n()) throw DimensionError("initial law has wrong number of states");
}

double impact_control(const GameModel& model, Group g, double t, std::span<const double> u) {
    return model.control_sensitivity(g, t, model.impact_state(), 0.0, u).control;
}

}  // namespace

FfodeTrajectory integrate_ffode(const Mlp& net, const SampleBatch& batch, const GameModel& model,
                                const Graphon& graphon, const TimeGrid& grid) {
    check_inputs(net, batch, model);
    const std::size_t N = batch.size(), n = model.n(), K = grid.steps();
    const std::size_t I = model.impact_state();
    const double dt = grid.dt();
    FfodeTrajectory tr{grid,
                       batch.indices,
                       BlockField(N, K + 1, n),
                       BlockField(N, K + 1, n),
                       BlockField(N, K + 1, 1),
                       BlockField(N, K + 1, n)};
    for (std::size_t j = 0; j < N; ++j) {
        const auto u0 = net.forward(batch.indices[j]);
        std::copy(u0.begin(), u0.end(), tr.u.row(j, 0).begin());
        std::copy(batch.p0[j].begin(), batch.p0[j].end(), tr.p.row(j, 0).begin());
    }

    std::vector<double> s(N);
    for (std::size_t k = 0;; ++k) {
        const double t = grid.t(k);
        for (std::size_t j = 0; j < N; ++j)
            s[j] = model.impact(impact_control(model, batch.groups[j], t, tr.u.row(j, k)), I) *
                   tr.p(j, k, I);
        const auto z = aggregate_sampled_all(graphon, batch.indices, s);
        for (std::size_t j = 0; j < N; ++j) {
            tr.Z(j, k) = z[j];
            for (std::size_t e = 0; e < n; ++e)
                tr.phi(j, k, e) =
                    model.control_sensitivity(batch.groups[j], t, e, z[j], tr.u.row(j, k)).control;
        }
        if (k == K) break;

        for (std::size_t j = 0; j < N; ++j) {
            const Group g = batch.groups[j];
            const auto& c = model.coefficients(g);
            const auto u = tr.u.row(j, k);
            const auto p = tr.p.row(j, k);
            auto u_next = tr.u.row(j, k + 1);
            auto p_next = tr.p.row(j, k + 1);
            std::copy(p.begin(), p.end(), p_next.begin());
            for (std::size_t e = 0; e < n; ++e) {
                const double a = tr.phi(j, k, e);
                u_next[e] = u[e] - dt * model.hamiltonian(g, t, e, z[j], u, a);
                for (std::size_t to = 0; to < n; ++to) {
                    if (to == e) continue;
                    const double flow = dt * p[e] * (c.base(e, to) + a * z[j] * c.controlled(e, to));
                    p_next[to] += flow;
                    p_next[e] -= flow;
                }
            }
            for (std::size_t e = 0; e < n; ++e)
                if (!std::isfinite(u_next[e]) || !std::isfinite(p_next[e]))
                    throw IntegrationError("non-finite state at step " + std::to_string(k + 1),
                                           grid.t(k + 1));
        }
    }
    return tr;
}

double shooting_loss(const Mlp& net, const SampleBatch& batch, const GameModel& model,
                     const Graphon& graphon, const TimeGrid& grid) {
    const FfodeTrajectory tr = integrate_ffode(net, batch, model, graphon, grid);
    const std::size_t K = grid.steps();
    double loss = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j)
        for (std::size_t e = 0; e < model.n(); ++e) {
            const double d = tr.u(j, K, e) - model.terminal_cost(batch.groups[j], e, tr.Z(j, K));
            loss += d * d;
        }
    return loss / static_cast<double>(batch.size());
}

LossGradient loss_gradient(const Mlp& net, const SampleBatch& batch, const GameModel& model,
                           const Graphon& graphon, const TimeGrid& grid) {
    const FfodeTrajectory tr = integrate_ffode(net, batch, model, graphon, grid);
    const std::size_t N = batch.size(), n = model.n(), K = grid.steps();
    const std::size_t I = model.impact_state();
    const double dt = grid.dt();
    const double inv_n = 1.0 / static_cast<double>(N);

    LossGradient out;
    BlockField ubar(N, 1, n), pbar(N, 1, n);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t e = 0; e < n; ++e) {
            const double d = tr.u(j, K, e) - model.terminal_cost(batch.groups[j], e, tr.Z(j, K));
            out.loss += d * d;
            ubar(j, 0, e) = 2.0 * d * inv_n;
        }
    out.loss *= inv_n;

    std::vector<double> zbar(N), ub_next(n), pb_next(n);
    std::vector<ControlSensitivity> sens(n);
    for (std::size_t k = K; k-- > 0;) {
        const double t = grid.t(k);
        for (std::size_t j = 0; j < N; ++j) {
            const Group g = batch.groups[j];
            const auto& c = model.coefficients(g);
            const auto u = tr.u.row(j, k);
            const auto p = tr.p.row(j, k);
            const double z = tr.Z(j, k);
            auto ub = ubar.row(j, 0);
            auto pb = pbar.row(j, 0);
            std::copy(ub.begin(), ub.end(), ub_next.begin());
            std::copy(pb.begin(), pb.end(), pb_next.begin());
            double zb = 0.0;

            for (std::size_t e = 0; e < n; ++e) sens[e] = model.control_sensitivity(g, t, e, z, u);
            for (std::size_t e = 0; e < n; ++e) {
                const double a = sens[e].control;
                // u_next[e] = u[e] - dt * H_e(z, u); envelope in a
                const double hbar = -dt * ub_next[e];
                double out_rate = 0.0;
                for (std::size_t to = 0; to < n; ++to) {
                    if (to == e) continue;
                    const double q = c.base(e, to) + a * z * c.controlled(e, to);
                    ub[to] += hbar * q;
                    out_rate += q;
                }
                ub[e] -= hbar * out_rate;
                zb += hbar * a * sens[e].drift;

                // p_next[to] += dt p[e] q_{e,to}(a, z), p_next[e] -= same
                double abar = 0.0;
                for (std::size_t to = 0; to < n; ++to) {
                    if (to == e) continue;
                    const double gap = pb_next[to] - pb_next[e];
                    const double q = c.base(e, to) + a * z * c.controlled(e, to);
                    pb[e] += dt * q * gap;
                    const double qbar = dt * p[e] * gap;
                    zb += qbar * a * c.controlled(e, to);
                    abar += qbar * z * c.controlled(e, to);
                }
                zb += abar * sens[e].d_z;
                const double dbar = abar * sens[e].d_drift;
                if (dbar != 0.0) {
                    for (std::size_t to = 0; to < n; ++to) {
                        if (to == e) continue;
                        ub[to] += dbar * c.controlled(e, to);
                        ub[e] -= dbar * c.controlled(e, to);
                    }
                }
            }
            zbar[j] = zb;
        }
        // Z = A s with A symmetric, so sbar = A zbar.
        const auto sbar = aggregate_sampled_all(graphon, batch.indices, zbar);
        for (std::size_t j = 0; j < N; ++j)
            pbar(j, 0, I) +=
                sbar[j] * model.impact(impact_control(model, batch.groups[j], t, tr.u.row(j, k)), I);
    }

    out.gradient.assign(net.parameter_count(), 0.0);
    Mlp::Tape tape;
    for (std::size_t j = 0; j < N; ++j) {
        net.forward(batch.indices[j], tape);
        net.backward(tape, ubar.row(j, 0), out.gradient);
    }
    return out;
}

LossGradient preconditioned_direction(const Mlp& net, const SampleBatch& batch,
                                      const GameModel& model, const Graphon& graphon,
                                      const TimeGrid& grid) {
    const FfodeTrajectory tr = integrate_ffode(net, batch, model, graphon, grid);
    const std::size_t N = batch.size(), n = model.n(), K = grid.steps();
    const double dt = grid.dt();
    LossGradient out;
    out.gradient.assign(net.parameter_count(), 0.0);
    Mlp::Tape tape;
    Eigen::MatrixXd M(n, n), step(n, n);
    Eigen::VectorXd r(n);
    for (std::size_t j = 0; j < N; ++j) {
        const Group g = batch.groups[j];
        const auto& c = model.coefficients(g);
        M.setIdentity();
        // d u_{k+1} / d u_k = I - dt Q_k by the envelope property of H
        for (std::size_t k = 0; k < K; ++k) {
            step.setIdentity();
            const double z = tr.Z(j, k);
            for (std::size_t e = 0; e < n; ++e) {
                const double a = tr.phi(j, k, e);
                for (std::size_t to = 0; to < n; ++to) {
                    if (to == e) continue;
                    const double q = dt * (c.base(e, to) + a * z * c.controlled(e, to));
                    step(e, to) -= q;
                    step(e, e) += q;
                }
            }
            M = step * M;
        }
        for (std::size_t e = 0; e < n; ++e) {
            r(e) = tr.u(j, K, e) - model.terminal_cost(g, e, tr.Z(j, K));
            out.loss += r(e) * r(e);
        }
        const Eigen::VectorXd d = M.partialPivLu().solve(r) * (2.0 / static_cast<double>(N));
        net.forward(batch.indices[j], tape);
        net.backward(tape, std::span<const double>(d.data(), n), out.gradient);
    }
    out.loss /= static_cast<double>(N);
    return out;
}

TrainingResult train(const GameModel& model, const Graphon& graphon,
                     std::span<const std::vector<double>> p0_by_group, double horizon,
                     const TrainingConfig& config, std::optional<Mlp> initial,
                     const TrainingObserver& observer) {
    if (config.batch_size == 0) throw ValidationError("solver.shoot.batch_size", "must be positive");
    if (config.steps == 0) throw ValidationError("solver.shoot.steps", "must be positive");
    if (!(config.learning_rate > 0.0))
        throw ValidationError("solver.shoot.learning_rate", "must be positive");
    if (config.final_learning_rate < 0.0)
        throw ValidationError("solver.shoot.final_learning_rate", "must be nonnegative");
    const TimeGrid grid(horizon, config.steps);

    RngStream init_rng(config.seed, kNetworkInitStream), batch_rng(config.seed, kBatchStream);
    std::vector<std::size_t> widths{1};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(model.n());
    const bool fresh = !initial;
    TrainingResult result{initial ? std::move(*initial) : Mlp::random(widths, init_rng), {}, {}};
    if (result.net.outputs() != model.n())
        throw DimensionError("initial network output size differs from the number of states");
    if (fresh && config.feature_scale > 0.0 && !config.hidden.empty()) {
        const std::size_t H = config.hidden.front();
        auto theta = result.net.parameters();
        for (std::size_t i = 0; i < H; ++i) {
            const double slope = config.feature_scale * (0.5 + 0.5 * init_rng.uniform());
            const double w = init_rng.uniform() < 0.5 ? -slope : slope;
            const double at = (static_cast<double>(i) + init_rng.uniform()) / static_cast<double>(H);
            theta[i] = w;
            theta[H + i] = -w * at;
        }
    }
    if (fresh && config.warm_start) {
        const std::size_t n = model.n();
        const BlockField u = solve_backward_hjb(
            model, BlockField(model.group_count(), grid.points(), 1, 0.0), grid);
        auto bias = result.net.parameters().last(n);
        std::fill(bias.begin(), bias.end(), 0.0);
        for (std::size_t b = 0; b < model.group_count(); ++b)
            for (std::size_t e = 0; e < n; ++e) bias[e] += model.masses()[b] * u(b, 0, e);
    }

    result.batch = make_batch(model, p0_by_group, stratified_indices(config.batch_size, batch_rng));
    Adam adam(result.net.parameter_count());
    const auto start = std::chrono::steady_clock::now();
    const double decay =
        config.final_learning_rate > 0.0 && config.iterations > 1
            ? std::log(config.final_learning_rate / config.learning_rate) /
                  static_cast<double>(config.iterations - 1)
            : 0.0;

    double first_loss = 0.0;
    for (std::size_t it = 0; it < config.iterations; ++it) {
        if (it > 0 && config.resample)
            result.batch =
                make_batch(model, p0_by_group, stratified_indices(config.batch_size, batch_rng));
        const double lr = config.learning_rate * std::exp(decay * static_cast<double>(it));
        const LossGradient lg =
            config.precondition
                ? preconditioned_direction(result.net, result.batch, model, graphon, grid)
                : loss_gradient(result.net, result.batch, model, graphon, grid);
        if (it == 0) first_loss = lg.loss;
        if (!std::isfinite(lg.loss) || (lg.loss > 1e6 && lg.loss > first_loss))
            throw TrainingDivergence(it, lg.loss);
        double norm = 0.0;
        for (double v : lg.gradient) norm += v * v;
        norm = std::sqrt(norm);

        const TrainingRecord rec{
            it, lg.loss, norm, lr,
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
        result.log.records.push_back(rec);
        if (observer) observer(rec);

        auto theta = result.net.parameters();
        if (config.plain_gradient) {
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * lg.gradient[i];
        } else {
            adam.step(theta, lg.gradient, lr);
        }
    }
    return result;
}

FfodeTrajectory evaluate(const Mlp& net, const GameModel& model, const Graphon& graphon,
                         std::span<const std::vector<double>> p0_by_group,
                         std::vector<double> indices, const TimeGrid& grid) {
    return integrate_ffode(net, make_batch(model, p0_by_group, std::move(indices)), model, graphon,
                           grid);
}

}  // namespace ggame
