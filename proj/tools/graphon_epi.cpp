// graphon-epi: run the block solver, the shooting solver, the particle
// simulator or a block/shoot comparison on a scenario file.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ggame/block_solver.hpp"
#include "ggame/errors.hpp"
#include "ggame/particle.hpp"
#include "ggame/report.hpp"
#include "ggame/scenario.hpp"
#include "ggame/shooting.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ggame;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInvalid = 2, kNoConvergence = 3 };

struct Options {
    std::string command;
    fs::path scenario;
    fs::path out;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<std::size_t> iters;
    std::optional<std::size_t> agents;
    std::optional<fs::path> baseline;
};

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.exceptions(std::ios::badbit | std::ios::failbit);
    return f;
}

void write_json(const fs::path& path, const json& j) { open_output(path) << j.dump(2) << '\n'; }

std::size_t steps_for(double horizon, double dt) {
    if (!(dt > 0.0)) throw ValidationError("--dt", "must be positive");
    const double steps = std::round(horizon / dt);
    if (steps < 1.0) throw ValidationError("--dt", "larger than the horizon");
    return static_cast<std::size_t>(steps);
}

ScenarioConfig load_with_overrides(const Options& opt) {
    ScenarioConfig c = load_scenario(opt.scenario);
    if (opt.seed) {
        c.seed = *opt.seed;
        c.shoot.training.seed = *opt.seed;
    }
    if (opt.dt) {
        c.block.steps = steps_for(c.horizon, *opt.dt);
        c.shoot.training.steps = c.block.steps;
    }
    if (opt.iters) c.shoot.training.iterations = *opt.iters;
    if (opt.agents) c.particle.agents = *opt.agents;
    return c;
}

json run_header(const std::string& command, const ScenarioConfig& c) {
    return {{"command", command}, {"scenario", c.name}, {"seed", c.seed}};
}

// Relative change of terminal deceased mass against a baseline scenario.
json policy_deltas(const json& summary, const json& baseline) {
    const auto relative = [](double now, double before) {
        return before > 0.0 ? json((now - before) / before) : json(nullptr);
    };
    json blocks = json::array();
    const auto& a = summary["blocks"];
    const auto& b = baseline["blocks"];
    if (a.size() != b.size()) throw ValidationError("--baseline", "block counts differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        blocks.push_back({{"block", i},
                          {"deceased_change", relative(a[i]["terminal_deceased"].get<double>(),
                                                       b[i]["terminal_deceased"].get<double>())}});
    return {{"blocks", std::move(blocks)},
            {"population_deceased_change",
             relative(summary["population_deceased"].get<double>(),
                      baseline["population_deceased"].get<double>())}};
}

EquilibriumSolution run_block(const ScenarioConfig& c, const GameModel& model, const fs::path& out,
                              const std::optional<fs::path>& baseline = std::nullopt) {
    if (!c.graphon.as_block())
        throw DomainError("the block solver needs a block graphon; use shoot instead");
    const auto p0 = c.initial_laws();
    EquilibriumSolution sol =
        solve_equilibrium(model, c.graphon, p0, TimeGrid(c.horizon, c.block.steps), c.block.solver);

    fs::create_directories(out);
    auto traj = open_output(out / "trajectories.csv");
    write_trajectories(traj, model, sol);
    json diag = run_header("block", c);
    diag["status"] = "ok";
    diag["block"] = block_diagnostics(sol, fb_residual(model, c.graphon, sol));
    write_json(out / "diagnostics.json", diag);
    json report = run_header("block", c);
    report["summary"] = block_summary(model, sol);
    if (baseline) {
        const ScenarioConfig bc = load_scenario(*baseline);
        if (!bc.graphon.as_block()) throw ValidationError("--baseline", "needs a block graphon");
        const GameModel bm = bc.build_model();
        const auto bp0 = bc.initial_laws();
        const EquilibriumSolution bs = solve_equilibrium(
            bm, bc.graphon, bp0, TimeGrid(bc.horizon, bc.block.steps), bc.block.solver);
        report["baseline"] = bc.name;
        report["policy_deltas"] = policy_deltas(report["summary"], block_summary(bm, bs));
    }
    write_json(out / "report.json", report);
    return sol;
}

FfodeTrajectory run_shoot(const ScenarioConfig& c, const GameModel& model, const fs::path& out) {
    const auto p0 = c.initial_laws();
    const auto& tc = c.shoot.training;
    const auto progress = [&](const TrainingRecord& r) {
        if (r.iteration % 500 == 0 || r.iteration + 1 == tc.iterations)
            std::cerr << "iteration " << r.iteration << " loss " << r.loss << '\n';
    };
    const TrainingResult trained = train(model, c.graphon, p0, c.horizon, tc, std::nullopt, progress);
    const TimeGrid grid(c.horizon, tc.steps);
    FfodeTrajectory traj =
        evaluate(trained.net, model, c.graphon, p0, midpoint_indices(c.shoot.eval_indices), grid);

    fs::create_directories(out);
    write_json(out / "theta.json", trained.net.to_json());
    {
        auto log = open_output(out / "training_log.csv");
        write_training_log(log, trained.log);
        auto f = open_output(out / "trajectories.csv");
        write_trajectories(f, model, traj);
    }
    double lip = 0.0;
    const double margin = scenario_existence_margin(model, c.graphon, c.horizon, &lip);
    json diag = run_header("shoot", c);
    diag["status"] = "ok";
    diag["iterations"] = trained.log.records.size();
    diag["final_loss"] = trained.log.records.empty() ? shooting_loss(trained.net, trained.batch, model,
                                                                      c.graphon, grid)
                                                     : trained.log.records.back().loss;
    diag["existence_margin"] = margin;
    diag["control_lipschitz"] = lip;
    json curve = json::array();
    for (const auto& r : trained.log.records) curve.push_back(r.loss);
    diag["loss_curve"] = std::move(curve);
    write_json(out / "diagnostics.json", diag);
    json report = run_header("shoot", c);
    report["summary"] = shoot_summary(model, traj);
    write_json(out / "report.json", report);
    return traj;
}

void run_particle(const ScenarioConfig& c, const GameModel& model, const fs::path& out) {
    const auto p0 = c.initial_laws();
    const auto indices = midpoint_indices(c.particle.agents);
    const TimeGrid refresh(c.horizon, c.particle.refresh_steps);

    std::optional<EquilibriumSolution> sol;
    if (c.particle.solver_controls || c.particle.mode == AggregateMode::Frozen) {
        if (!c.graphon.as_block())
            throw ValidationError("solver.particle.controls",
                                  "solver controls and frozen mode need a block graphon");
        sol = solve_equilibrium(model, c.graphon, p0, TimeGrid(c.horizon, c.block.steps),
                                c.block.solver);
    }
    const ControlSource controls =
        c.particle.solver_controls ? frozen_controls(*sol, model, indices) : recommended_controls(model);
    const AggregatePath deterministic = sol ? frozen_aggregate(*sol, model, indices) : AggregatePath{};

    ParticlePopulation population(model, p0, indices, c.seed);
    const ParticleRun run =
        simulate(population, model, c.graphon, controls, c.particle.mode, deterministic, refresh);

    fs::create_directories(out);
    {
        auto f = open_output(out / "trajectories.csv");
        write_trajectories(f, model, run, population, controls);
        auto ev = open_output(out / "events.csv");
        write_events(ev, model, run, population);
        auto ag = open_output(out / "aggregate.csv");
        write_aggregates(ag, model, run, population);
    }

    json diag = run_header("particle", c);
    diag["status"] = "ok";
    diag["agents"] = population.size();
    diag["events"] = run.events.size();
    diag["rate_bound"] = run.rate_bound;
    if (sol) {
        const LlnGap gap = lln_gap(run.z_empirical, run.z_deterministic);
        diag["lln_gap"] = {{"sup", gap.sup}, {"rms", gap.rms}};
    }
    write_json(out / "diagnostics.json", diag);

    // Terminal and peak frequencies per group.
    const std::size_t N = population.size(), G = model.group_count();
    const std::size_t I = model.impact_state(), D = model.n() - 1;
    std::vector<double> count(G, 0.0), dead(G, 0.0), peak(G, 0.0), peak_t(G, 0.0);
    for (std::size_t a = 0; a < N; ++a) count[population.groups()[a].id] += 1.0;
    for (std::size_t k = 0; k < refresh.points(); ++k) {
        std::vector<double> infected(G, 0.0);
        for (std::size_t a = 0; a < N; ++a)
            if (run.state_at(k, a, N) == I) infected[population.groups()[a].id] += 1.0;
        for (std::size_t g = 0; g < G; ++g)
            if (count[g] > 0.0 && infected[g] / count[g] > peak[g]) {
                peak[g] = infected[g] / count[g];
                peak_t[g] = refresh.t(k);
            }
    }
    for (std::size_t a = 0; a < N; ++a)
        if (run.state_at(refresh.steps(), a, N) == D) dead[population.groups()[a].id] += 1.0;
    json groups = json::array();
    for (std::size_t g = 0; g < G; ++g)
        groups.push_back({{"unit", g},
                          {"agents", count[g]},
                          {"terminal_deceased", count[g] > 0.0 ? dead[g] / count[g] : 0.0},
                          {"peak_infected", peak[g]},
                          {"peak_time", peak_t[g]}});
    json report = run_header("particle", c);
    report["summary"] = {{"blocks", std::move(groups)}};
    write_json(out / "report.json", report);
}

void run_compare(const ScenarioConfig& c, const GameModel& model, const fs::path& out) {
    const EquilibriumSolution block = run_block(c, model, out / "block");
    const FfodeTrajectory shoot = run_shoot(c, model, out / "shoot");
    const SolverComparison cmp = compare_solutions(model, block, shoot);
    json report = run_header("compare", c);
    report["comparison"] = to_json(cmp);
    write_json(out / "report.json", report);
    json diag = run_header("compare", c);
    diag["status"] = "ok";
    write_json(out / "diagnostics.json", diag);
}

int run(const Options& opt) {
    const ScenarioConfig c = load_with_overrides(opt);
    const GameModel model = c.build_model();
    if (opt.command == "block") run_block(c, model, opt.out, opt.baseline);
    else if (opt.command == "shoot") run_shoot(c, model, opt.out);
    else if (opt.command == "particle") run_particle(c, model, opt.out);
    else run_compare(c, model, opt.out);
    return kOk;
}

int fail(const Options& opt, int code, const std::string& kind, const std::string& message,
         json extra = json::object()) {
    std::cerr << "graphon-epi: " << kind << ": " << message << '\n';
    json diag{{"command", opt.command}, {"status", "error"}, {"error", kind}, {"message", message}};
    for (auto& [k, v] : extra.items()) diag[k] = v;
    try {
        fs::create_directories(opt.out);
        write_json(opt.out / "diagnostics.json", diag);
    } catch (const std::exception& e) {
        std::cerr << "graphon-epi: could not write diagnostics: " << e.what() << '\n';
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graphon epidemic game solver"};
    Options opt;
    app.add_option("command", opt.command, "block | shoot | particle | compare")
        ->required()
        ->check(CLI::IsMember({"block", "shoot", "particle", "compare"}));
    app.add_option("--scenario", opt.scenario, "Scenario JSON file")->required();
    app.add_option("--out", opt.out, "Output directory")->required();
    app.add_option("--seed", opt.seed, "Override the scenario seed");
    app.add_option("--dt", opt.dt, "Time step for the block and shooting grids");
    app.add_option("--iters", opt.iters, "Training iterations");
    app.add_option("--agents", opt.agents, "Number of simulated agents");
    app.add_option("--baseline", opt.baseline, "Scenario to report policy deltas against (block)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        return run(opt);
    } catch (const ValidationError& e) {
        return fail(opt, kInvalid, "validation", e.what(), {{"field", e.field()}});
    } catch (const DomainError& e) {
        return fail(opt, kInvalid, "domain", e.what());
    } catch (const DimensionError& e) {
        return fail(opt, kInvalid, "dimension", e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(opt, kInvalid, "parse", e.what());
    } catch (const NonConvergence& e) {
        return fail(opt, kNoConvergence, "non_convergence", e.what(),
                    {{"iterations", e.iterations()}, {"residual", e.residual()}});
    } catch (const TrainingDivergence& e) {
        return fail(opt, kNoConvergence, "training_divergence", e.what(),
                    {{"iteration", e.iteration()}, {"loss", e.loss()}});
    } catch (const IntegrationError& e) {
        return fail(opt, kNoConvergence, "integration", e.what(), {{"time", e.time()}});
    } catch (const std::exception& e) {
        return fail(opt, kFailure, "error", e.what());
    }
}
