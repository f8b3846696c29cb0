#include "ggame/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "ggame/errors.hpp"

namespace ggame {

using json = nlohmann::ordered_json;

namespace {

/// Field access with dotted paths in error messages.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ValidationError(path_.empty() ? "scenario" : path_, "expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        const std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [key, _] : node_.items())
            if (!known.contains(key)) throw ValidationError(child(key), "unknown field");
    }

    bool has(const std::string& key) const { return node_.contains(key); }
    const json& raw(const std::string& key) const {
        if (!has(key)) throw ValidationError(child(key), "missing required field");
        return node_.at(key);
    }
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    Reader sub(const std::string& key) const { return Reader(raw(key), child(key)); }

    template <class T>
    T get(const std::string& key) const {
        try {
            return raw(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError(child(key), "has the wrong type");
        }
    }
    template <class T>
    T get(const std::string& key, T fallback) const {
        return has(key) ? get<T>(key) : fallback;
    }
    double number(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number()) throw ValidationError(child(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ValidationError(child(key), "must be finite");
        return d;
    }
    double number(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }
    std::size_t count(const std::string& key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
            throw ValidationError(child(key), "expected a positive integer");
        return v.get<std::size_t>();
    }
    const json& node() const noexcept { return node_; }

private:
    const json& node_;
    std::string path_;
};

PiecewiseConstant schedule_from_json(const json& v, const std::string& path) {
    if (v.is_number()) return PiecewiseConstant::constant(v.get<double>());
    Reader r(v, path);
    r.allow({"breaks", "values"});
    return {r.get<std::vector<double>>("breaks"), r.get<std::vector<double>>("values")};
}

json schedule_to_json(const PiecewiseConstant& s) {
    if (s.is_constant()) return s.values.at(0);
    return {{"breaks", s.breaks}, {"values", s.values}};
}

std::vector<std::pair<std::string, double>> labelled(const Reader& r, const std::string& key) {
    std::vector<std::pair<std::string, double>> out;
    if (!r.has(key)) return out;
    const Reader obj = r.sub(key);
    for (const auto& [label, v] : obj.node().items()) out.emplace_back(label, obj.number(label));
    return out;
}

GroupSpec group_from_json(const json& node, std::size_t index) {
    const Reader r(node, "groups[" + std::to_string(index) + "]");
    r.allow({"name", "mass", "beta", "gamma", "kappa", "rho", "epsilon", "c_I", "c_D", "c_lambda",
             "lambda", "p0"});
    GroupSpec g;
    g.name = r.get<std::string>("name", "group" + std::to_string(index));
    g.mass = r.number("mass");
    g.params.beta = r.number("beta");
    g.params.gamma = r.number("gamma");
    g.params.kappa = r.number("kappa", 0.0);
    g.params.rho = r.number("rho", 1.0);
    g.params.epsilon = r.number("epsilon", 0.0);
    g.params.c_infected = r.number("c_I");
    g.params.c_dead = r.number("c_D");
    g.params.c_lambda = r.number("c_lambda", 1.0);
    if (r.has("lambda")) {
        const Reader lam = r.sub("lambda");
        for (const auto& [label, v] : lam.node().items())
            g.params.recommended.emplace_back(label, schedule_from_json(v, lam.child(label)));
    }
    g.p0 = labelled(r, "p0");
    return g;
}

json group_to_json(const GroupSpec& g) {
    json lambda = json::object();
    for (const auto& [label, s] : g.params.recommended) lambda[label] = schedule_to_json(s);
    json p0 = json::object();
    for (const auto& [label, v] : g.p0) p0[label] = v;
    return {{"name", g.name},       {"mass", g.mass},
            {"beta", g.params.beta}, {"gamma", g.params.gamma},
            {"kappa", g.params.kappa}, {"rho", g.params.rho},
            {"epsilon", g.params.epsilon}, {"c_I", g.params.c_infected},
            {"c_D", g.params.c_dead}, {"c_lambda", g.params.c_lambda},
            {"lambda", lambda},      {"p0", p0}};
}

SquareMatrix matrix_from_json(const Reader& r, const std::string& key) {
    const auto rows = r.get<std::vector<std::vector<double>>>(key);
    for (const auto& row : rows)
        if (row.size() != rows.size()) throw ValidationError(r.child(key), "matrix must be square");
    return SquareMatrix::from_rows(rows);
}

}  // namespace

json graphon_to_json(const Graphon& graphon) {
    struct Visitor {
        json operator()(const BlockKernel& k) const {
            return {{"kind", "block"}, {"weights", k.weights.rows()}, {"masses", k.masses}};
        }
        json operator()(const PowerLawKernel& k) const { return {{"kind", "powerlaw"}, {"g", k.g}}; }
        json operator()(const ConstantKernel& k) const { return {{"kind", "constant"}, {"p", k.p}}; }
        json operator()(const TabulatedKernel& k) const {
            return {{"kind", "tabulated"}, {"grid", k.grid.rows()}};
        }
    };
    return std::visit(Visitor{}, graphon.kernel());
}

Graphon graphon_from_json(const json& j, std::span<const double> group_masses) {
    const Reader r(j, "graphon");
    const auto kind = r.get<std::string>("kind");
    if (kind == "block") {
        r.allow({"kind", "weights", "masses"});
        std::vector<double> masses = r.has("masses")
                                         ? r.get<std::vector<double>>("masses")
                                         : std::vector<double>(group_masses.begin(), group_masses.end());
        return Graphon::block(matrix_from_json(r, "weights"), std::move(masses));
    }
    if (kind == "powerlaw") {
        r.allow({"kind", "g"});
        return Graphon::power_law(r.number("g"));
    }
    if (kind == "constant") {
        r.allow({"kind", "p"});
        return Graphon::constant(r.number("p"));
    }
    if (kind == "tabulated") {
        r.allow({"kind", "grid"});
        return Graphon::tabulated(matrix_from_json(r, "grid"));
    }
    throw ValidationError("graphon.kind", "expected block, power_law, constant or tabulated");
}

GameModel ScenarioConfig::build_model() const {
    std::vector<PlayerParams> params;
    std::vector<double> masses;
    for (const GroupSpec& g : groups) {
        params.push_back(g.params);
        masses.push_back(g.mass);
    }
    return GameModel::make(model, std::move(params), std::move(masses), controls);
}

std::vector<std::vector<double>> ScenarioConfig::initial_laws() const {
    const StateSpace states{model == ModelKind::Sir ? std::vector<std::string>{"S", "I", "R", "D"}
                                                    : std::vector<std::string>{"S", "E", "I", "R", "D"}};
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const std::string path = "groups[" + std::to_string(i) + "].p0";
        std::vector<double> law(states.size(), 0.0);
        double total = 0.0;
        for (const auto& [label, v] : groups[i].p0) {
            if (!states.contains(label)) throw ValidationError(path + "." + label, "unknown state");
            if (!(v >= 0.0)) throw ValidationError(path + "." + label, "must be >= 0");
            law[states.index_of(label)] += v;
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ValidationError(path, "initial law must sum to 1");
        out.push_back(std::move(law));
    }
    return out;
}

ScenarioConfig scenario_from_json(const json& j) {
    const Reader r(j, "");
    r.allow({"schema_version", "name", "description", "model", "horizon", "seed", "controls",
             "graphon", "groups", "solver"});
    ScenarioConfig c;
    c.schema_version = r.get<int>("schema_version");
    if (c.schema_version != kScenarioSchemaVersion)
        throw ValidationError("schema_version", "unsupported version " + std::to_string(c.schema_version));
    c.name = r.get<std::string>("name", "");
    c.description = r.get<std::string>("description", "");
    try {
        c.model = model_kind_from_string(r.get<std::string>("model"));
    } catch (const DomainError&) {
        throw ValidationError("model", "expected sir or seird");
    }
    c.horizon = r.number("horizon");
    if (!(c.horizon > 0.0)) throw ValidationError("horizon", "must be positive");
    c.seed = r.get<std::uint64_t>("seed", 0);

    if (r.has("controls")) {
        const Reader a = r.sub("controls");
        a.allow({"a_min", "a_max"});
        c.controls = {a.number("a_min", 0.0), a.number("a_max", 2.0)};
    }

    const json& groups = r.raw("groups");
    if (!groups.is_array() || groups.empty())
        throw ValidationError("groups", "expected a nonempty array");
    for (std::size_t i = 0; i < groups.size(); ++i) c.groups.push_back(group_from_json(groups[i], i));

    std::vector<double> masses;
    for (const auto& g : c.groups) masses.push_back(g.mass);
    c.graphon = graphon_from_json(r.raw("graphon"), masses);

    if (r.has("solver")) {
        const Reader s = r.sub("solver");
        s.allow({"block", "shoot", "particle"});
        if (s.has("block")) {
            const Reader b = s.sub("block");
            b.allow({"steps", "damping", "tol", "max_iter", "check_uniqueness"});
            c.block.steps = b.count("steps", c.block.steps);
            c.block.solver.damping = b.number("damping", c.block.solver.damping);
            c.block.solver.tol = b.number("tol", c.block.solver.tol);
            c.block.solver.max_iter = b.count("max_iter", c.block.solver.max_iter);
            c.block.solver.check_uniqueness = b.get<bool>("check_uniqueness", false);
            if (!(c.block.solver.damping > 0.0 && c.block.solver.damping <= 1.0))
                throw ValidationError("solver.block.damping", "must lie in (0,1]");
            if (!(c.block.solver.tol > 0.0)) throw ValidationError("solver.block.tol", "must be positive");
        }
        if (s.has("shoot")) {
            const Reader t = s.sub("shoot");
            t.allow({"steps", "batch_size", "iterations", "learning_rate", "final_learning_rate",
                     "hidden", "plain_gradient", "precondition", "warm_start", "feature_scale", "resample",
                     "eval_indices"});
            auto& tc = c.shoot.training;
            tc.steps = t.count("steps", tc.steps);
            tc.batch_size = t.count("batch_size", tc.batch_size);
            tc.iterations = t.get<std::size_t>("iterations", tc.iterations);
            tc.learning_rate = t.number("learning_rate", tc.learning_rate);
            tc.final_learning_rate = t.number("final_learning_rate", tc.final_learning_rate);
            tc.hidden = t.get<std::vector<std::size_t>>("hidden", tc.hidden);
            tc.plain_gradient = t.get<bool>("plain_gradient", tc.plain_gradient);
            tc.precondition = t.get<bool>("precondition", tc.precondition);
            tc.warm_start = t.get<bool>("warm_start", tc.warm_start);
            tc.feature_scale = t.number("feature_scale", tc.feature_scale);
            if (tc.feature_scale < 0.0)
                throw ValidationError("solver.shoot.feature_scale", "must be nonnegative");
            tc.resample = t.get<bool>("resample", tc.resample);
            c.shoot.eval_indices = t.count("eval_indices", c.shoot.eval_indices);
            if (!(tc.learning_rate > 0.0))
                throw ValidationError("solver.shoot.learning_rate", "must be positive");
            if (tc.final_learning_rate < 0.0)
                throw ValidationError("solver.shoot.final_learning_rate", "must be nonnegative");
            for (std::size_t w : tc.hidden)
                if (w == 0) throw ValidationError("solver.shoot.hidden", "layer widths must be positive");
        }
        if (s.has("particle")) {
            const Reader p = s.sub("particle");
            p.allow({"agents", "refresh_steps", "mode", "controls"});
            c.particle.agents = p.count("agents", c.particle.agents);
            c.particle.refresh_steps = p.count("refresh_steps", c.particle.refresh_steps);
            const auto mode = p.get<std::string>("mode", "empirical");
            if (mode != "empirical" && mode != "frozen")
                throw ValidationError("solver.particle.mode", "expected empirical or frozen");
            c.particle.mode = mode == "frozen" ? AggregateMode::Frozen : AggregateMode::Empirical;
            const auto controls = p.get<std::string>("controls", "solver");
            if (controls != "solver" && controls != "recommended")
                throw ValidationError("solver.particle.controls", "expected solver or recommended");
            c.particle.solver_controls = controls == "solver";
        }
    }
    c.shoot.training.seed = c.seed;

    // Semantic checks that need the assembled model.
    const GameModel model = c.build_model();
    for (std::size_t i = 0; i < c.groups.size(); ++i)
        for (const auto& [label, _] : c.groups[i].params.recommended)
            if (!model.states().contains(label))
                throw ValidationError("groups[" + std::to_string(i) + "].lambda." + label,
                                      "unknown state for this model");
    c.initial_laws();
    if (const BlockKernel* b = c.graphon.as_block()) {
        if (b->masses.size() != c.groups.size())
            throw ValidationError("graphon.weights", "one block per group required");
        for (std::size_t i = 0; i < masses.size(); ++i)
            if (std::abs(b->masses[i] - masses[i]) > 1e-12)
                throw ValidationError("graphon.masses", "block masses differ from group masses");
    }
    return c;
}

json scenario_to_json(const ScenarioConfig& c) {
    json groups = json::array();
    for (const auto& g : c.groups) groups.push_back(group_to_json(g));
    const auto& tc = c.shoot.training;
    return {
        {"schema_version", c.schema_version},
        {"name", c.name},
        {"description", c.description},
        {"model", to_string(c.model)},
        {"horizon", c.horizon},
        {"seed", c.seed},
        {"controls", {{"a_min", c.controls.a_min}, {"a_max", c.controls.a_max}}},
        {"graphon", graphon_to_json(c.graphon)},
        {"groups", groups},
        {"solver",
         {{"block",
           {{"steps", c.block.steps},
            {"damping", c.block.solver.damping},
            {"tol", c.block.solver.tol},
            {"max_iter", c.block.solver.max_iter},
            {"check_uniqueness", c.block.solver.check_uniqueness}}},
          {"shoot",
           {{"steps", tc.steps},
            {"batch_size", tc.batch_size},
            {"iterations", tc.iterations},
            {"learning_rate", tc.learning_rate},
            {"final_learning_rate", tc.final_learning_rate},
            {"hidden", tc.hidden},
            {"plain_gradient", tc.plain_gradient},
            {"precondition", tc.precondition},
            {"warm_start", tc.warm_start},
            {"feature_scale", tc.feature_scale},
            {"resample", tc.resample},
            {"eval_indices", c.shoot.eval_indices}}},
          {"particle",
           {{"agents", c.particle.agents},
            {"refresh_steps", c.particle.refresh_steps},
            {"mode", c.particle.mode == AggregateMode::Frozen ? "frozen" : "empirical"},
            {"controls", c.particle.solver_controls ? "solver" : "recommended"}}}}},
    };
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("scenario", std::string("parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

void write_scenario(const std::filesystem::path& path, const ScenarioConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << scenario_to_json(config).dump(2) << '\n';
}

}  // namespace ggame
