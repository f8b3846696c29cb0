#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ggame/block_solver.hpp"
#include "ggame/graphon.hpp"
#include "ggame/model.hpp"
#include "ggame/particle.hpp"
#include "ggame/shooting.hpp"

namespace ggame {

inline constexpr int kScenarioSchemaVersion = 1;

struct GroupSpec {
    std::string name;
    double mass = 0.0;
    PlayerParams params;
    /// Initial law by state label; absent states have mass 0.
    std::vector<std::pair<std::string, double>> p0;

    bool operator==(const GroupSpec&) const = default;
};

struct BlockSettings {
    std::size_t steps = 2000;
    BlockSolverConfig solver;

    bool operator==(const BlockSettings&) const = default;
};

struct ShootSettings {
    TrainingConfig training;
    /// Equispaced evaluation indices for reporting.
    std::size_t eval_indices = 100;

    bool operator==(const ShootSettings&) const = default;
};

struct ParticleSettings {
    std::size_t agents = 10000;
    std::size_t refresh_steps = 400;
    AggregateMode mode = AggregateMode::Empirical;
    /// Frozen block-solver controls; otherwise the recommended levels.
    bool solver_controls = true;

    bool operator==(const ParticleSettings&) const = default;
};

struct ScenarioConfig {
    int schema_version = kScenarioSchemaVersion;
    std::string name;
    std::string description;
    ModelKind model = ModelKind::Sir;
    double horizon = 1.0;
    std::uint64_t seed = 0;
    ControlSet controls;
    Graphon graphon = Graphon::constant(0.0);
    std::vector<GroupSpec> groups;
    BlockSettings block;
    ShootSettings shoot;
    ParticleSettings particle;

    GameModel build_model() const;
    /// One law per group in the model's state order.
    std::vector<std::vector<double>> initial_laws() const;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses and validates; failures raise ValidationError naming the field.
ScenarioConfig scenario_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& config);

ScenarioConfig load_scenario(const std::filesystem::path& path);
void write_scenario(const std::filesystem::path& path, const ScenarioConfig& config);

nlohmann::ordered_json graphon_to_json(const Graphon& graphon);
Graphon graphon_from_json(const nlohmann::ordered_json& j, std::span<const double> group_masses);

}  // namespace ggame
