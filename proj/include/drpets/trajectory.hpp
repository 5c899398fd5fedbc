#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "drpets/ensemble.hpp"
#include "drpets/envsim.hpp"
#include "drpets/rng.hpp"

namespace drpets {

/// A length-T vector of actions, already within bounds.
using ActionSequence = Eigen::VectorXd;

/// Known reward evaluated on observations, plus the floor used after a rollout diverges.
struct RewardModel {
    std::function<double(std::span<const double>, double)> fn;
    double floor = 0.0;
};

RewardModel make_reward_model(EnvKind kind, const EnvParams& params);

/**
 * Member-blocked particle rollouts for one action sequence.
 *
 * Index (b, q, k): member b owns particles q = 0..Q-1; x_0 is the start observation and
 * x_k for k >= 1 is sampled from member b given (x_{k-1}, u_{k-1}). reward(b,q,k) is
 * r(x_k, u_k). score(b,q,k), k >= 1, is the score of the draw of x_k in the member's
 * (mean, log-variance) head coordinates; score(b,q,0) is zero.
 */
struct TrajectoryBatch {
    std::size_t members = 0;
    std::size_t particles = 0;
    std::size_t horizon = 0;
    std::size_t obs_dim = 0;
    bool has_scores = false;

    std::vector<double> observations;
    std::vector<double> rewards;
    std::vector<double> scores;
    std::vector<std::uint8_t> diverged;  // per (b, q)

    TrajectoryBatch() = default;
    TrajectoryBatch(std::size_t b, std::size_t q, std::size_t t, std::size_t d, bool scores);

    std::size_t score_dim() const { return 2 * obs_dim; }
    std::size_t slot(std::size_t b, std::size_t q, std::size_t k) const {
        return (b * particles + q) * horizon + k;
    }
    double& reward(std::size_t b, std::size_t q, std::size_t k) { return rewards[slot(b, q, k)]; }
    double reward(std::size_t b, std::size_t q, std::size_t k) const { return rewards[slot(b, q, k)]; }
    std::span<double> observation(std::size_t b, std::size_t q, std::size_t k) {
        return {observations.data() + slot(b, q, k) * obs_dim, obs_dim};
    }
    std::span<const double> observation(std::size_t b, std::size_t q, std::size_t k) const {
        return {observations.data() + slot(b, q, k) * obs_dim, obs_dim};
    }
    std::span<double> score(std::size_t b, std::size_t q, std::size_t k) {
        return {scores.data() + slot(b, q, k) * score_dim(), score_dim()};
    }
    std::span<const double> score(std::size_t b, std::size_t q, std::size_t k) const {
        return {scores.data() + slot(b, q, k) * score_dim(), score_dim()};
    }
    bool is_diverged(std::size_t b, std::size_t q) const { return diverged[b * particles + q] != 0; }
};

/// Rolls Q particles per member through `seq`. The network is evaluated in single
/// precision; sampling and rewards are double. A particle whose observation turns
/// non-finite is marked diverged and receives the reward floor for its remaining steps.
TrajectoryBatch propagate(const EnsembleModel& model, const Observation& start,
                          const ActionSequence& seq, std::size_t particles,
                          const RewardModel& reward, RngStream& rng,
                          std::optional<AnglePair> angles, bool record_scores = true);

/// Same draws as calling `propagate` once per sequence with streams[i], batched through the
/// network. Results agree with the one-at-a-time path up to matrix-product rounding.
std::vector<TrajectoryBatch> propagate_population(const EnsembleModel& model,
                                                  const Observation& start,
                                                  const std::vector<ActionSequence>& seqs,
                                                  std::size_t particles,
                                                  const RewardModel& reward,
                                                  std::vector<RngStream>& streams,
                                                  std::optional<AnglePair> angles,
                                                  bool record_scores = true);

/// j_b = (1/Q) sum_q sum_k gamma^k reward(b,q,k), one entry per member.
std::vector<double> member_returns(const TrajectoryBatch& batch, double discount);

/// Monte-Carlo estimate of the discounted return under the ensemble mixture:
/// the average of member_returns.
double pets_objective(const TrajectoryBatch& batch, double discount);

}  // namespace drpets
