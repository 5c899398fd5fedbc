#include "drpets/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drpets/errors.hpp"

namespace drpets {

void PlannerConfig::validate() const {
    if (horizon < 1) throw InvalidInput("planner horizon must be at least 1");
    if (population < 1) throw InvalidInput("population must be at least 1");
    if (elite_count < 1 || elite_count > population)
        throw InvalidInput("elite_count must lie in [1, population]");
    if (cem_iterations < 1) throw InvalidInput("cem_iterations must be at least 1");
    if (!(smoothing >= 0.0 && smoothing <= 1.0)) throw InvalidInput("smoothing must lie in [0, 1]");
    if (particles < 1) throw InvalidInput("particles must be at least 1");
    if (!(discount >= 0.0 && discount < 1.0)) throw InvalidInput("discount must lie in [0, 1)");
    if (!(initial_variance > 0.0) || !std::isfinite(initial_variance))
        throw InvalidInput("initial_variance must be positive");
}

CEMState CEMState::initial(std::size_t horizon, double variance) {
    const auto t = static_cast<Eigen::Index>(horizon);
    return {Eigen::VectorXd::Zero(t),
            Eigen::VectorXd::Constant(t, std::max(variance, kCemVarianceFloor))};
}

CEMResult cem_plan(const PopulationObjective& objective, const PlannerConfig& config,
                   const ActionBounds& bounds, const CEMState& init, RngStream& rng,
                   CEMTrace* trace) {
    config.validate();
    const auto T = static_cast<Eigen::Index>(config.horizon);
    if (init.mean.size() != T || init.variance.size() != T)
        throw InvalidInput("CEM state length differs from the planning horizon");

    CEMState state = init;
    state.variance = state.variance.cwiseMax(kCemVarianceFloor);
    const std::size_t M = config.population;
    const std::size_t E = config.elite_count;
    const double alpha = config.smoothing;

    CEMResult result;
    result.best_value = -std::numeric_limits<double>::infinity();
    bool have_best = false;

    std::vector<ActionSequence> pop(M, ActionSequence(T));
    std::vector<std::size_t> order(M);
    for (std::size_t it = 0; it < config.cem_iterations; ++it) {
        if (trace) trace->states.push_back(state);
        const Eigen::VectorXd sd = state.variance.cwiseSqrt();
        for (std::size_t i = 0; i < M; ++i) {
            if (i == 0 && have_best) {
                pop[0] = result.best;
                continue;
            }
            for (Eigen::Index k = 0; k < T; ++k)
                pop[i][k] = std::clamp(state.mean[k] + sd[k] * rng.normal(), bounds.low, bounds.high);
        }
        std::vector<double> values = objective(pop, it);
        if (values.size() != M) throw InvalidInput("objective returned the wrong number of values");
        bool any_finite = false;
        for (double& v : values) {
            if (std::isfinite(v)) any_finite = true;
            else v = -std::numeric_limits<double>::infinity();
        }
        if (!any_finite) throw PlanningError("every CEM candidate evaluated to a non-finite value");

        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
        if (values[order[0]] > result.best_value || !have_best) {
            result.best_value = values[order[0]];
            result.best = pop[order[0]];
            have_best = true;
        }

        Eigen::VectorXd elite_mean = Eigen::VectorXd::Zero(T);
        for (std::size_t e = 0; e < E; ++e) elite_mean += pop[order[e]];
        elite_mean /= static_cast<double>(E);
        Eigen::VectorXd elite_var = Eigen::VectorXd::Zero(T);
        for (std::size_t e = 0; e < E; ++e)
            elite_var += (pop[order[e]] - elite_mean).cwiseAbs2();
        elite_var /= static_cast<double>(E);

        state.mean = alpha * state.mean + (1.0 - alpha) * elite_mean;
        state.variance = (alpha * state.variance + (1.0 - alpha) * elite_var).cwiseMax(kCemVarianceFloor);

        if (trace) {
            trace->best_elite_value.push_back(values[order[0]]);
            trace->populations.push_back(pop);
            trace->values.push_back(values);
        }
    }
    if (trace) trace->states.push_back(state);
    result.state = state;
    return result;
}

CEMResult cem_plan(const Objective& objective, const PlannerConfig& config,
                   const ActionBounds& bounds, const CEMState& init, RngStream& rng,
                   CEMTrace* trace) {
    PopulationObjective batched = [&](const std::vector<ActionSequence>& pop, std::size_t) {
        std::vector<double> v;
        v.reserve(pop.size());
        for (const auto& s : pop) v.push_back(objective(s));
        return v;
    };
    return cem_plan(batched, config, bounds, init, rng, trace);
}

MpcContext MpcContext::make(const EnsembleModel& model, EnvKind kind, const EnvParams& nominal) {
    return {&model, kind, make_reward_model(kind, nominal), {nominal.action_low, nominal.action_high}};
}

PopulationObjective make_planning_objective(const MpcContext& ctx, const Observation& obs,
                                            const PlannerConfig& config, const DRConfig& dr,
                                            std::uint64_t seed) {
    dr.validate();
    return [&ctx, obs, config, dr, seed](const std::vector<ActionSequence>& pop, std::size_t it) {
        std::vector<RngStream> streams;
        streams.reserve(pop.size());
        for (std::size_t c = 0; c < pop.size(); ++c)
            streams.emplace_back(derive_seed(seed, {purpose_id("candidate"), it, c}));
        const bool robust = dr.epsilon > 0.0;
        const auto batches = propagate_population(*ctx.model, obs, pop, config.particles, ctx.reward,
                                                  streams, angle_pair(ctx.kind), robust);
        std::vector<double> values;
        values.reserve(pop.size());
        for (const auto& b : batches)
            values.push_back(robust ? dr_objective(b, config.discount, dr)
                                    : pets_objective(b, config.discount));
        return values;
    };
}

MpcDecision receding_step(const PopulationObjective& objective, const PlannerConfig& config,
                          const ActionBounds& bounds, const CEMState& warm_start, std::uint64_t seed) {
    RngStream rng(derive_seed(seed, {purpose_id("cem")}));
    const CEMResult res = cem_plan(objective, config, bounds, warm_start, rng);

    MpcDecision out;
    out.action = std::clamp(res.best[0], bounds.low, bounds.high);
    out.planned_value = res.best_value;
    const auto T = static_cast<Eigen::Index>(config.horizon);
    out.next_warm_start = CEMState::initial(config.horizon, config.initial_variance);
    out.next_warm_start.mean.head(T - 1) = res.state.mean.tail(T - 1);
    out.next_warm_start.mean[T - 1] = 0.0;
    return out;
}

MpcDecision mpc_act(const MpcContext& ctx, const Observation& obs, const PlannerConfig& config,
                    const DRConfig& dr, const CEMState& warm_start, std::uint64_t seed) {
    if (ctx.model == nullptr) throw InvalidInput("MPC context has no model");
    return receding_step(make_planning_objective(ctx, obs, config, dr, seed), config, ctx.bounds,
                         warm_start, seed);
}

}  // namespace drpets
