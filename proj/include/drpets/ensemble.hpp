#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "drpets/envsim.hpp"
#include "drpets/rng.hpp"

namespace drpets {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 4.0;
inline constexpr double kMinStd = 1e-8;

/// Layer widths of a Gaussian-head MLP: input is obs||action, output is
/// (mean, log-variance) of the observation delta.
struct Architecture {
    std::size_t obs_dim = 0;
    std::size_t action_dim = 1;
    std::vector<std::size_t> hidden{64, 64, 64};
    std::string activation = "swish";

    std::size_t input_dim() const { return obs_dim + action_dim; }
    std::size_t output_dim() const { return 2 * obs_dim; }
    bool operator==(const Architecture&) const = default;
};

struct Layer {
    Eigen::MatrixXd weight;  // fan_in x fan_out
    Eigen::RowVectorXd bias;
};

struct MLPParams {
    Architecture arch;
    std::vector<Layer> layers;

    static MLPParams zeros(const Architecture& arch);
    /// Glorot-uniform weights, zero biases.
    static MLPParams random(const Architecture& arch, RngStream& rng);
    /// Throws InvalidInput if shapes do not chain or an entry is non-finite.
    void validate() const;
};

/// Input statistics of obs||action and target statistics of the delta.
struct NormStats {
    Eigen::RowVectorXd input_mean;
    Eigen::RowVectorXd input_std;
    Eigen::RowVectorXd target_mean;
    Eigen::RowVectorXd target_std;

    static NormStats identity(std::size_t input_dim, std::size_t obs_dim);
    /// (raw - mean) / std, row-wise.
    Eigen::MatrixXd normalize_inputs(const Eigen::MatrixXd& raw) const;
};

struct TransitionDataset {
    std::vector<Observation> observations;
    std::vector<double> actions;
    std::vector<Observation> next_observations;

    std::size_t size() const { return actions.size(); }
    bool empty() const { return actions.empty(); }
    void add(const Observation& obs, double action, const Observation& next);
    void append(const TransitionDataset& other);

    /// Rows of obs||action.
    Eigen::MatrixXd inputs() const;
    /// Rows of next - obs.
    Eigen::MatrixXd deltas() const;
    /// Per-dimension mean/std with std floored at kMinStd. Throws on an empty or ragged dataset.
    NormStats statistics() const;
};

/// Diagonal Gaussian over the observation delta.
struct GaussianPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_variance;
};

/// Gradient of ln N(observed; mean, diag exp(logvar)) with respect to (mean, logvar).
struct ScoreVector {
    Eigen::VectorXd d_mean;
    Eigen::VectorXd d_logvar;

    /// (d_mean, d_logvar) stacked.
    Eigen::VectorXd flat() const;
};

struct EnsembleModel {
    Architecture arch;
    NormStats norm;
    std::vector<MLPParams> members;

    std::size_t size() const { return members.size(); }
    static EnsembleModel create(const Architecture& arch, std::size_t members, std::uint64_t seed);
    void validate() const;
};

/// Row-batched prediction: one row per input.
struct BatchPrediction {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd log_variance;
};

/// Raw inputs (obs||action rows) through one member. Throws ModelDivergence on non-finite output.
BatchPrediction predict_batch(const MLPParams& member, const NormStats& norm,
                              const Eigen::MatrixXd& raw_inputs);

/// As predict_batch but leaves non-finite rows in place for the caller to handle.
BatchPrediction predict_batch_unchecked(const MLPParams& member, const NormStats& norm,
                                        const Eigen::MatrixXd& raw_inputs);

GaussianPrediction forward(const MLPParams& member, const Observation& obs, double action,
                           const NormStats& norm);

double nll(const GaussianPrediction& pred, const Eigen::VectorXd& target_delta);

struct NllGradient {
    Eigen::VectorXd d_mean;
    Eigen::VectorXd d_logvar;
};
NllGradient nll_gradient(const GaussianPrediction& pred, const Eigen::VectorXd& target_delta);

double log_density(const GaussianPrediction& pred, const Eigen::VectorXd& delta);

ScoreVector score(const GaussianPrediction& pred, const Eigen::VectorXd& observed_delta);

/// obs + mean + sqrt(exp(logvar)) * z, with the (cos, sin) pair projected back onto the circle.
Observation sample_next(const GaussianPrediction& pred, const Observation& obs, RngStream& rng,
                        std::optional<AnglePair> angles);

/// Density of the Dirac mixture over members, evaluated at a delta.
double mixture_density(const EnsembleModel& model, const Observation& obs, double action,
                       const Eigen::VectorXd& delta);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

struct TrainReport {
    /// loss_curves[b][e]: mean normalized-space NLL of member b during epoch e.
    std::vector<std::vector<double>> loss_curves;
    std::vector<double> final_loss;
};

/// Recomputes normalization from `data`, then trains every member with Adam on its own
/// bootstrap resample. Continues from the current weights. Throws ModelDivergence naming
/// member and epoch if the loss becomes non-finite.
TrainReport train(EnsembleModel& model, const TransitionDataset& data, const TrainConfig& config);

/// Versioned text checkpoint, weights at 17 significant digits.
std::string serialize(const EnsembleModel& model);
EnsembleModel deserialize(const std::string& text);
void save_checkpoint(const EnsembleModel& model, const std::string& path);
EnsembleModel load_checkpoint(const std::string& path);

}  // namespace drpets
