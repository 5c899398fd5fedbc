#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "drpets/bench.hpp"

namespace drpets {

/**
 * Everything a run needs, as one flat key/value document (JSON object). Every key has a
 * default; defaults for the sweep grid and perturbed parameter depend on `env`, so `env` is
 * applied first. Unknown keys and wrongly typed values raise ConfigError naming the key.
 */
struct RunConfig {
    EnvKind env = EnvKind::Pendulum;
    EnvParams params = EnvParams::nominal(EnvKind::Pendulum);

    std::size_t episodes = 30;
    std::size_t steps_per_episode = 200;
    std::size_t random_episodes = 1;
    std::size_t ensemble_size = 5;
    std::vector<std::size_t> hidden{64, 64, 64};
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    PlannerConfig planner;
    DRConfig dr;
    Algorithm algorithm = Algorithm::Pets;

    PerturbedParam perturbed_param = PerturbedParam::PendulumMass;
    std::vector<double> grid{0.5, 0.75, 1.0, 1.25, 1.5};
    std::size_t seeds_per_point = 10;
    std::size_t episode_horizon = 200;
    std::size_t workers = 1;

    /// Model used by `sweep`; empty means <out>/model.ckpt.
    std::string checkpoint;
    /// Train with the run's own algorithm/epsilon instead of plain PETS.
    bool retrain = false;

    static RunConfig defaults(EnvKind env);
    /// Throws ConfigError naming the first offending key.
    void validate() const;

    TrainRunConfig train_config() const;
    SweepSpec sweep_spec() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
/// All keys with their values, one per line; parse_config(to_json(c)) == c.
std::string to_json(const RunConfig& config);

/// Names of every accepted key, in echo order.
std::vector<std::string> config_keys();

}  // namespace drpets
