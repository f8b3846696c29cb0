#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "ggame/errors.hpp"
#include "ggame/scenario.hpp"

using namespace ggame;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = GGAME_SCENARIO_DIR;

std::string validation_message(const nlohmann::ordered_json& j) {
    try {
        scenario_from_json(j);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

nlohmann::ordered_json bundled(const std::string& name) {
    std::ifstream in(kScenarios / name);
    return nlohmann::ordered_json::parse(in);
}

}  // namespace

TEST_CASE("bundled age group policy 2") {
    const ScenarioConfig c = load_scenario(kScenarios / "age_groups_policy2.json");
    CHECK(c.groups.size() == 4);
    CHECK(c.horizon == 200.0);
    const GameModel m = c.build_model();
    for (std::size_t b = 0; b < 4; ++b)
        CHECK(m.params(Group{b}).recommendation("I")(0.0) == 0.5);
    REQUIRE(c.graphon.as_block() != nullptr);
    CHECK(c.graphon.as_block()->masses == std::vector<double>{0.27, 0.33, 0.27, 0.13});
}

TEST_CASE("bundled SEIRD power law") {
    const ScenarioConfig c = load_scenario(kScenarios / "seird_powerlaw.json");
    CHECK(c.model == ModelKind::Seird);
    CHECK(c.horizon == 40.0);
    const PlayerParams& p = c.groups.at(0).params;
    CHECK(p.beta == 0.2);
    CHECK(p.epsilon == 0.2);
    CHECK(p.gamma == 0.1);
    CHECK(p.rho == 0.95);
    const auto* k = c.graphon.as_power_law();
    REQUIRE(k != nullptr);
    CHECK(k->g == -0.2);
}

TEST_CASE("every bundled scenario loads and round-trips") {
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json") continue;
        ++count;
        const ScenarioConfig c = load_scenario(entry.path());
        const fs::path tmp = fs::temp_directory_path() / ("roundtrip_" + entry.path().filename().string());
        write_scenario(tmp, c);
        CHECK(load_scenario(tmp) == c);
        fs::remove(tmp);
    }
    CHECK(count == 10);
}

TEST_CASE("masses must sum to one") {
    auto j = bundled("cities_no_lockdown.json");
    j["groups"].erase(2);
    j["graphon"] = {{"kind", "constant"}, {"p", 1.0}};
    j["groups"][0]["mass"] = 0.5;
    j["groups"][1]["mass"] = 0.6;
    CHECK(validation_message(j).find("masses sum ≠ 1") != std::string::npos);
}

TEST_CASE("validation names the offending field") {
    auto j = bundled("cities_lockdown_city1.json");
    j["groups"][1]["gamma"] = -0.1;
    CHECK(validation_message(j).rfind("groups[1].gamma", 0) == 0);

    j = bundled("cities_lockdown_city1.json");
    j["groups"][0]["p0"]["S"] = 0.9;
    CHECK(validation_message(j).find("groups[0].p0") != std::string::npos);

    j = bundled("cities_lockdown_city1.json");
    j["groups"][0]["lambda"]["E"] = 1.0;
    CHECK(validation_message(j).rfind("groups[0].lambda: state 'E'", 0) == 0);

    j = bundled("cities_lockdown_city1.json");
    j["horizon"] = 0.0;
    CHECK(validation_message(j).rfind("horizon", 0) == 0);

    j = bundled("cities_lockdown_city1.json");
    j["solver"]["block"]["dampin"] = 0.5;
    CHECK(validation_message(j).find("dampin") != std::string::npos);

    j = bundled("cities_lockdown_city1.json");
    j["schema_version"] = 2;
    CHECK(validation_message(j).rfind("schema_version", 0) == 0);

    j = bundled("cities_lockdown_city1.json");
    j["graphon"]["weights"][0][1] = 0.5;
    CHECK(!validation_message(j).empty());
}

TEST_CASE("unreadable files are validation errors") {
    CHECK_THROWS_AS(load_scenario(kScenarios / "missing.json"), ValidationError);
    const fs::path bad = fs::temp_directory_path() / "ggame_bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(load_scenario(bad), ValidationError);
    fs::remove(bad);
}

TEST_CASE("training seed follows the scenario seed") {
    auto j = bundled("zero_graphon.json");
    j["seed"] = 1234;
    CHECK(scenario_from_json(j).shoot.training.seed == 1234);
}
