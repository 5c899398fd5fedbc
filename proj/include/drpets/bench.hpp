#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drpets/drcore.hpp"
#include "drpets/ensemble.hpp"
#include "drpets/envsim.hpp"
#include "drpets/planner.hpp"

namespace drpets {

enum class Algorithm { Pets, DrPets };
std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

enum class PerturbedParam { PendulumMass, PoleLength };
std::string_view to_string(PerturbedParam p);
PerturbedParam parse_perturbed_param(std::string_view name);
/// Copy of `base` with the perturbed field set to `value`.
EnvParams with_param(const EnvParams& base, PerturbedParam which, double value);

struct TrainRunConfig {
    std::size_t episodes = 30;  // total, random episodes included
    std::size_t steps_per_episode = 200;
    std::size_t random_episodes = 1;
    std::size_t ensemble_size = 5;
    std::vector<std::size_t> hidden{64, 64, 64};
    TrainConfig ensemble;
    PlannerConfig planner;
    /// Planning objective of the MPC training episodes; epsilon 0 (plain PETS) by default.
    DRConfig dr;
    std::uint64_t master_seed = 0;

    void validate() const;
};

struct TrainRunResult {
    EnsembleModel model;
    std::vector<double> episode_rewards;  // learning curve, one entry per episode
    TransitionDataset data;
};

/// Uniform-random actions within bounds; every transition of every episode.
TransitionDataset collect_random(EnvKind kind, const EnvParams& params, std::size_t episodes,
                                 std::size_t horizon, std::uint64_t seed);

/// Random episodes first, then MPC episodes on the nominal system, retraining
/// the ensemble on the whole dataset after every episode.
TrainRunResult train_agent(const TrainRunConfig& config, EnvKind kind, const EnvParams& nominal);

/// One closed-loop episode on `true_params`, planning with the agent's `nominal` reward.
EpisodeRecord run_mpc_episode(const EnsembleModel& model, EnvKind kind, const EnvParams& true_params,
                              const EnvParams& nominal, const PlannerConfig& planner,
                              const DRConfig& dr, std::size_t horizon, std::uint64_t seed);

struct SweepSpec {
    EnvKind env = EnvKind::Pendulum;
    PerturbedParam param = PerturbedParam::PendulumMass;
    std::vector<double> grid;
    std::size_t seeds_per_point = 10;
    Algorithm algorithm = Algorithm::Pets;
    DRConfig dr;
    PlannerConfig planner;
    std::size_t episode_horizon = 200;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;

    void validate() const;
    /// DR-PETS with epsilon = 0 plans exactly like PETS and is reported as PETS;
    /// PETS ignores the ball and is reported with epsilon = 0, p = 2.
    Algorithm effective_algorithm() const;
    DRConfig effective_dr() const;
};

struct SweepRow {
    double param = 0.0;
    double mean_reward = 0.0;
    double stderr_reward = 0.0;
    std::size_t n_seeds = 0;
    Algorithm algorithm = Algorithm::Pets;
    double epsilon = 0.0;
    PNorm p = PNorm::Two;
    /// Fewer than two successful seeds: the standard error is reported as 0.
    bool single_seed = false;

    bool operator==(const SweepRow&) const = default;
};

struct EpisodeOutcome {
    double param = 0.0;
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;
    double total_reward = 0.0;
    bool ok = true;
    std::string status = "ok";
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<EpisodeOutcome> episodes;  // ordered by grid point, then seed index
};

/// Seed of episode `seed_index` at perturbation `value`; shared by all algorithms and
/// independent of where the value sits in the grid.
std::uint64_t episode_seed(std::uint64_t master, double value, std::size_t seed_index);

/// Runs seeds_per_point MPC episodes per grid value on the perturbed system. Failed episodes
/// are kept in `episodes` and excluded from the row; a grid value with no success throws.
SweepResult sweep(const EnsembleModel& model, const SweepSpec& spec, const EnvParams& nominal);

/// Sample mean and standard error (n-1 denominator). A single value gives (value, 0).
std::pair<double, double> aggregate(std::span<const double> values);

}  // namespace drpets
