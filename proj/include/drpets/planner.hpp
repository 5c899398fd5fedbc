#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "drpets/drcore.hpp"
#include "drpets/ensemble.hpp"
#include "drpets/envsim.hpp"
#include "drpets/rng.hpp"
#include "drpets/trajectory.hpp"

namespace drpets {

inline constexpr double kCemVarianceFloor = 1e-6;

struct PlannerConfig {
    std::size_t horizon = 25;
    std::size_t population = 400;
    std::size_t elite_count = 40;
    std::size_t cem_iterations = 5;
    double smoothing = 0.1;  // weight kept on the previous mean/variance
    std::size_t particles = 10;  // per ensemble member
    double discount = 0.99;
    double initial_variance = 1.0;

    void validate() const;
};

struct ActionBounds {
    double low = -1.0;
    double high = 1.0;
};

/// Elementwise Gaussian over action sequences.
struct CEMState {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;

    static CEMState initial(std::size_t horizon, double variance);
};

/// Scores a whole population; `iteration` lets the caller key random streams per round.
using PopulationObjective =
    std::function<std::vector<double>(const std::vector<ActionSequence>&, std::size_t iteration)>;
using Objective = std::function<double(const ActionSequence&)>;

struct CEMResult {
    ActionSequence best;
    double best_value = 0.0;
    CEMState state;
};

/// Optional per-iteration record for diagnostics and tests.
struct CEMTrace {
    std::vector<double> best_elite_value;
    std::vector<std::vector<ActionSequence>> populations;
    std::vector<std::vector<double>> values;
    std::vector<CEMState> states;  // state before each iteration, then the final one
};

/**
 * Cross-entropy optimization. Each round samples `population` clipped sequences from the
 * current Gaussian (from round two on, slot 0 re-evaluates the best sequence so far), keeps
 * the top `elite_count`, and blends the elite mean/variance into the state with weight
 * 1 - smoothing. Non-finite objective values rank last; a round with no finite value throws
 * PlanningError. Returns the best sequence ever evaluated.
 */
CEMResult cem_plan(const PopulationObjective& objective, const PlannerConfig& config,
                   const ActionBounds& bounds, const CEMState& init, RngStream& rng,
                   CEMTrace* trace = nullptr);
CEMResult cem_plan(const Objective& objective, const PlannerConfig& config,
                   const ActionBounds& bounds, const CEMState& init, RngStream& rng,
                   CEMTrace* trace = nullptr);

/// What the agent knows when planning: the model, its reward, and the action limits.
struct MpcContext {
    const EnsembleModel* model = nullptr;
    EnvKind kind = EnvKind::Pendulum;
    RewardModel reward;
    ActionBounds bounds;

    static MpcContext make(const EnsembleModel& model, EnvKind kind, const EnvParams& nominal);
};

struct MpcDecision {
    double action = 0.0;
    CEMState next_warm_start;
    double planned_value = 0.0;
};

/// Population objective used by mpc_act: the ensemble return when epsilon = 0, the robust
/// objective otherwise. Candidate c in round i draws from a stream keyed on (seed, i, c).
PopulationObjective make_planning_objective(const MpcContext& ctx, const Observation& obs,
                                            const PlannerConfig& config, const DRConfig& dr,
                                            std::uint64_t seed);

/// CEM from `warm_start`, first action of the best sequence, shifted warm start.
MpcDecision receding_step(const PopulationObjective& objective, const PlannerConfig& config,
                          const ActionBounds& bounds, const CEMState& warm_start, std::uint64_t seed);

/// One receding-horizon decision: plan, return the first action, and shift the CEM mean by
/// one step (last entry zero) with the variance reset for the next call.
MpcDecision mpc_act(const MpcContext& ctx, const Observation& obs, const PlannerConfig& config,
                    const DRConfig& dr, const CEMState& warm_start, std::uint64_t seed);

}  // namespace drpets
