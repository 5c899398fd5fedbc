#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "drpets/ensemble.hpp"
#include "drpets/trajectory.hpp"

namespace drpets {

/// Order of the Wasserstein ball.
enum class PNorm { One, Two, Infinity };

std::string_view to_string(PNorm p);
/// Accepts "1", "2", "inf" (also "one", "two", "infinity").
PNorm parse_p_norm(std::string_view text);

/// Radius and order of the ambiguity ball around the ensemble. The metric is Euclidean on
/// the (mean, log-variance) head outputs, so the dual norm is Euclidean as well.
struct DRConfig {
    double epsilon = 0.0;
    PNorm p = PNorm::Two;
    /// Subtract the per-step particle mean of the reward-to-go inside the estimator.
    bool baseline = false;

    void validate() const;
};

/// Per-member gradient of the objective with respect to the member's head outputs.
struct GradientEstimate {
    std::vector<Eigen::VectorXd> g;
    std::vector<double> norm;

    std::size_t size() const { return g.size(); }
    static GradientEstimate from_vectors(std::vector<Eigen::VectorXd> g);
};

/**
 * Score-function estimate, one vector per member:
 *   g_b = (1/Q) sum_q sum_{k=1}^{T-1} gamma^k score(b,q,k) R(b,q,k),
 *   R(b,q,k) = sum_{i=k}^{T-1} gamma^{i-k} reward(b,q,i).
 * Zero when T < 2. Requires a batch recorded with scores.
 */
GradientEstimate grad_estimate(const TrajectoryBatch& batch, double discount, bool baseline = false);

/// The penalty subtracted from the ensemble mean: eps * (RMS, max, or mean) of the norms
/// for p = 2, 1, inf respectively.
double dr_penalty(std::span<const double> grad_norms, const DRConfig& config);

/// (1/B) sum_b j_b - dr_penalty(norms).
double dr_value(std::span<const double> j_values, const GradientEstimate& grads,
                const DRConfig& config);

struct DualDiagnostics {
    double lambda_star = 0.0;
    std::vector<double> delta_star;
    bool degenerate = false;
};

/// lambda* and delta*_b for p = 2. All-zero norms give lambda* = 0, delta* = 0, degenerate.
DualDiagnostics dual_optimizers(std::span<const double> grad_norms, const DRConfig& config);

/// Outer dual function after the inner minimization over perturbations, for finite p > 1:
///   (1-p) mean(|g|^{p/(p-1)}) / (p^{p/(p-1)} lambda^{1/(p-1)}) - lambda eps^p.
double dual_function(double lambda, std::span<const double> grad_norms, double epsilon, double p);

/// Penalty for an arbitrary finite p > 1: eps * mean(|g|^{p/(p-1)})^{(p-1)/p}.
double general_penalty(std::span<const double> grad_norms, double epsilon, double p);

/// The robust objective on an already propagated batch.
double dr_objective(const TrajectoryBatch& batch, double discount, const DRConfig& config);

/// Propagates `seq` and evaluates the robust objective for it.
double dr_objective(const EnsembleModel& model, const Observation& start, const ActionSequence& seq,
                    std::size_t particles, double discount, const RewardModel& reward,
                    std::optional<AnglePair> angles, const DRConfig& dr, RngStream& rng);

/**
 * Brute-force worst case of the linearized inner problem:
 *   min (1/B) sum_b [ j0_b + <g_b, v_b> ]  s.t.  (1/B) sum_b |v_b|^p <= eps^p
 * (|v_b| <= eps for p = inf), by grid search over directions and budget splits followed by
 * golden-section refinement. Limited to B <= 2 members and dimension <= 3.
 */
double worstcase_oracle(std::span<const double> j0, const GradientEstimate& grads,
                        const DRConfig& config, std::size_t grid_resolution);

}  // namespace drpets
