#include "drpets/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "drpets/errors.hpp"

namespace drpets {

std::string_view to_string(Algorithm a) { return a == Algorithm::Pets ? "pets" : "drpets"; }

Algorithm parse_algorithm(std::string_view name) {
    if (name == "pets") return Algorithm::Pets;
    if (name == "drpets" || name == "dr-pets") return Algorithm::DrPets;
    throw InvalidInput("algorithm must be 'pets' or 'drpets' (got '" + std::string(name) + "')");
}

std::string_view to_string(PerturbedParam p) {
    return p == PerturbedParam::PendulumMass ? "pendulum_mass" : "pole_length";
}

PerturbedParam parse_perturbed_param(std::string_view name) {
    if (name == "pendulum_mass") return PerturbedParam::PendulumMass;
    if (name == "pole_length") return PerturbedParam::PoleLength;
    throw InvalidInput("perturbed parameter must be 'pendulum_mass' or 'pole_length'");
}

EnvParams with_param(const EnvParams& base, PerturbedParam which, double value) {
    EnvParams p = base;
    if (which == PerturbedParam::PendulumMass) p.pendulum_mass = value;
    else p.pole_length = value;
    p.validate();
    return p;
}

void TrainRunConfig::validate() const {
    if (episodes < 1) throw InvalidInput("episodes must be at least 1");
    if (steps_per_episode < 1) throw InvalidInput("steps_per_episode must be at least 1");
    if (ensemble_size < 1) throw InvalidInput("ensemble_size must be at least 1");
    if (hidden.empty()) throw InvalidInput("need at least one hidden layer");
    planner.validate();
    dr.validate();
}

namespace {

void add_episode(TransitionDataset& data, const EpisodeRecord& rec) {
    for (std::size_t t = 0; t < rec.actions.size(); ++t)
        data.add(rec.observations[t], rec.actions[t], rec.observations[t + 1]);
}

EpisodeRecord random_episode(EnvKind kind, const EnvParams& params, std::size_t horizon,
                             std::uint64_t seed) {
    RngStream rng(derive_seed(seed, {purpose_id("random-policy")}));
    return run_episode(
        kind, params,
        [&](const EnvState&, std::size_t) { return rng.uniform(params.action_low, params.action_high); },
        horizon, seed);
}

}  // namespace

TransitionDataset collect_random(EnvKind kind, const EnvParams& params, std::size_t episodes,
                                 std::size_t horizon, std::uint64_t seed) {
    if (episodes < 1) throw InvalidInput("episodes must be at least 1");
    params.validate();
    TransitionDataset data;
    for (std::size_t e = 0; e < episodes; ++e)
        add_episode(data, random_episode(kind, params, horizon, derive_seed(seed, {purpose_id("collect"), e})));
    return data;
}

EpisodeRecord run_mpc_episode(const EnsembleModel& model, EnvKind kind, const EnvParams& true_params,
                              const EnvParams& nominal, const PlannerConfig& planner,
                              const DRConfig& dr, std::size_t horizon, std::uint64_t seed) {
    planner.validate();
    const MpcContext ctx = MpcContext::make(model, kind, nominal);
    CEMState warm = CEMState::initial(planner.horizon, planner.initial_variance);
    const Policy policy = [&](const EnvState& state, std::size_t t) {
        const MpcDecision d = mpc_act(ctx, observe(kind, state), planner, dr, warm,
                                      derive_seed(seed, {purpose_id("mpc"), t}));
        warm = d.next_warm_start;
        return d.action;
    };
    return run_episode(kind, true_params, policy, horizon, seed);
}

TrainRunResult train_agent(const TrainRunConfig& config, EnvKind kind, const EnvParams& nominal) {
    config.validate();
    nominal.validate();
    Architecture arch;
    arch.obs_dim = obs_dim(kind);
    arch.hidden = config.hidden;

    TrainRunResult out;
    out.model = EnsembleModel::create(arch, config.ensemble_size,
                                      derive_seed(config.master_seed, {purpose_id("init")}));
    const std::size_t n_random = std::min(config.random_episodes, config.episodes);

    auto retrain = [&](std::size_t episode) {
        TrainConfig tc = config.ensemble;
        tc.seed = derive_seed(config.master_seed, {purpose_id("fit"), episode});
        try {
            train(out.model, out.data, tc);
        } catch (const ModelDivergence& e) {
            throw ModelDivergence("after episode " + std::to_string(episode) + ": " + e.what());
        }
    };

    for (std::size_t e = 0; e < config.episodes; ++e) {
        const std::uint64_t seed = derive_seed(config.master_seed, {purpose_id("episode"), e});
        const EpisodeRecord rec =
            e < n_random ? random_episode(kind, nominal, config.steps_per_episode, seed)
                         : run_mpc_episode(out.model, kind, nominal, nominal, config.planner,
                                           config.dr, config.steps_per_episode, seed);
        add_episode(out.data, rec);
        out.episode_rewards.push_back(rec.total_reward);
        // the first MPC episode needs a model; later ones need the refreshed one
        if (e + 1 >= n_random) retrain(e);
    }
    return out;
}

void SweepSpec::validate() const {
    if (grid.empty()) throw InvalidInput("sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidInput("sweep grid must be strictly increasing");
    if (seeds_per_point < 1) throw InvalidInput("seeds_per_point must be at least 1");
    if (episode_horizon < 1) throw InvalidInput("episode_horizon must be at least 1");
    if (workers < 1) throw InvalidInput("workers must be at least 1");
    if (env == EnvKind::Pendulum && param != PerturbedParam::PendulumMass)
        throw InvalidInput("pendulum sweeps perturb pendulum_mass");
    if (env == EnvKind::CartpoleSwingup && param != PerturbedParam::PoleLength)
        throw InvalidInput("cartpole sweeps perturb pole_length");
    dr.validate();
    planner.validate();
}

Algorithm SweepSpec::effective_algorithm() const {
    return algorithm == Algorithm::DrPets && dr.epsilon > 0.0 ? Algorithm::DrPets : Algorithm::Pets;
}

DRConfig SweepSpec::effective_dr() const {
    return effective_algorithm() == Algorithm::Pets ? DRConfig{} : dr;
}

std::uint64_t episode_seed(std::uint64_t master, double value, std::size_t seed_index) {
    return derive_seed(master, {purpose_id("sweep"), value_key(value), seed_index});
}

std::pair<double, double> aggregate(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("cannot aggregate an empty set");
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

SweepResult sweep(const EnsembleModel& model, const SweepSpec& spec, const EnvParams& nominal) {
    spec.validate();
    model.validate();
    const DRConfig dr = spec.effective_dr();
    const std::size_t S = spec.seeds_per_point;

    SweepResult out;
    out.episodes.resize(spec.grid.size() * S);
    for (std::size_t g = 0; g < spec.grid.size(); ++g)
        for (std::size_t s = 0; s < S; ++s) {
            auto& ep = out.episodes[g * S + s];
            ep.param = spec.grid[g];
            ep.seed_index = s;
            ep.seed = episode_seed(spec.master_seed, spec.grid[g], s);
        }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < out.episodes.size(); i = next++) {
            auto& ep = out.episodes[i];
            try {
                const EnvParams truth = with_param(nominal, spec.param, ep.param);
                ep.total_reward = run_mpc_episode(model, spec.env, truth, nominal, spec.planner, dr,
                                                  spec.episode_horizon, ep.seed)
                                      .total_reward;
            } catch (const std::exception& e) {
                ep.ok = false;
                ep.status = e.what();
            }
        }
    };
    const std::size_t n_threads = std::min(spec.workers, out.episodes.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        std::vector<double> totals;
        for (std::size_t s = 0; s < S; ++s)
            if (const auto& ep = out.episodes[g * S + s]; ep.ok) totals.push_back(ep.total_reward);
        if (totals.empty())
            throw std::runtime_error("every episode failed at grid value " +
                                     std::to_string(spec.grid[g]) + ": " +
                                     out.episodes[g * S].status);
        const auto [mean, se] = aggregate(totals);
        out.rows.push_back({spec.grid[g], mean, se, totals.size(), spec.effective_algorithm(),
                            dr.epsilon, dr.p, totals.size() < 2});
    }
    return out;
}

}  // namespace drpets
