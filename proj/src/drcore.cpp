#include "drpets/drcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "drpets/errors.hpp"

namespace drpets {

std::string_view to_string(PNorm p) {
    switch (p) {
        case PNorm::One: return "1";
        case PNorm::Two: return "2";
        case PNorm::Infinity: return "inf";
    }
    return "?";
}

PNorm parse_p_norm(std::string_view text) {
    if (text == "1" || text == "one") return PNorm::One;
    if (text == "2" || text == "two") return PNorm::Two;
    if (text == "inf" || text == "infinity") return PNorm::Infinity;
    throw InvalidInput("p must be one of 1, 2, inf (got '" + std::string(text) + "')");
}

void DRConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw InvalidInput("epsilon must be finite and non-negative");
}

GradientEstimate GradientEstimate::from_vectors(std::vector<Eigen::VectorXd> vectors) {
    GradientEstimate e;
    e.norm.reserve(vectors.size());
    for (const auto& v : vectors) e.norm.push_back(v.norm());
    e.g = std::move(vectors);
    return e;
}

GradientEstimate grad_estimate(const TrajectoryBatch& batch, double discount, bool baseline) {
    const std::size_t dim = batch.score_dim();
    const std::size_t T = batch.horizon;
    const std::size_t Q = batch.particles;
    std::vector<Eigen::VectorXd> g(batch.members, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)));
    if (T < 2) return GradientEstimate::from_vectors(std::move(g));
    if (!batch.has_scores) throw InvalidInput("batch was propagated without scores");

    std::vector<double> powers(T, 1.0);
    for (std::size_t k = 1; k < T; ++k) powers[k] = powers[k - 1] * discount;

    std::vector<double> to_go(Q * T);
    std::vector<double> mean_to_go(T);
    for (std::size_t b = 0; b < batch.members; ++b) {
        for (std::size_t q = 0; q < Q; ++q) {
            double acc = 0.0;
            for (std::size_t k = T; k-- > 0;) {
                acc = batch.reward(b, q, k) + discount * acc;
                to_go[q * T + k] = acc;
            }
        }
        std::fill(mean_to_go.begin(), mean_to_go.end(), 0.0);
        if (baseline) {
            for (std::size_t k = 0; k < T; ++k) {
                for (std::size_t q = 0; q < Q; ++q) mean_to_go[k] += to_go[q * T + k];
                mean_to_go[k] /= static_cast<double>(Q);
            }
        }
        Eigen::VectorXd& gb = g[b];
        for (std::size_t q = 0; q < Q; ++q) {
            for (std::size_t k = 1; k < T; ++k) {
                const double w = powers[k] * (to_go[q * T + k] - mean_to_go[k]);
                const auto s = batch.score(b, q, k);
                for (std::size_t i = 0; i < dim; ++i) gb[static_cast<Eigen::Index>(i)] += w * s[i];
            }
        }
        gb /= static_cast<double>(Q);
    }
    return GradientEstimate::from_vectors(std::move(g));
}

double dr_penalty(std::span<const double> norms, const DRConfig& config) {
    config.validate();
    if (norms.empty()) throw InvalidInput("no gradient norms");
    if (config.epsilon == 0.0) return 0.0;
    const double n = static_cast<double>(norms.size());
    switch (config.p) {
        case PNorm::Two: {
            double sq = 0.0;
            for (double v : norms) sq += v * v;
            return config.epsilon * std::sqrt(sq / n);
        }
        case PNorm::One:
            return config.epsilon * *std::max_element(norms.begin(), norms.end());
        case PNorm::Infinity: {
            double sum = 0.0;
            for (double v : norms) sum += v;
            return config.epsilon * sum / n;
        }
    }
    return 0.0;
}

double dr_value(std::span<const double> j_values, const GradientEstimate& grads,
                const DRConfig& config) {
    if (j_values.empty() || j_values.size() != grads.size())
        throw InvalidInput("need one return and one gradient per member");
    double acc = 0.0;
    for (double v : j_values) acc += v;
    const double mean = acc / static_cast<double>(j_values.size());
    return mean - dr_penalty(grads.norm, config);
}

DualDiagnostics dual_optimizers(std::span<const double> norms, const DRConfig& config) {
    config.validate();
    if (config.p != PNorm::Two) throw InvalidInput("dual diagnostics are exposed for p = 2 only");
    if (!(config.epsilon > 0.0)) throw InvalidInput("dual diagnostics need epsilon > 0");
    if (norms.empty()) throw InvalidInput("no gradient norms");
    DualDiagnostics out;
    double sq = 0.0;
    for (double v : norms) sq += v * v;
    if (sq == 0.0) {
        out.delta_star.assign(norms.size(), 0.0);
        out.degenerate = true;
        return out;
    }
    out.lambda_star = std::sqrt(sq / static_cast<double>(norms.size())) / (2.0 * config.epsilon);
    for (double v : norms) out.delta_star.push_back(v / (2.0 * out.lambda_star));
    return out;
}

double dual_function(double lambda, std::span<const double> norms, double epsilon, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("dual_function needs finite p > 1");
    if (!(lambda > 0.0)) throw InvalidInput("dual_function needs lambda > 0");
    const double q = p / (p - 1.0);
    double acc = 0.0;
    for (double v : norms) acc += std::pow(v, q);
    acc /= static_cast<double>(norms.size());
    return (1.0 - p) * acc / (std::pow(p, q) * std::pow(lambda, 1.0 / (p - 1.0))) -
           lambda * std::pow(epsilon, p);
}

double general_penalty(std::span<const double> norms, double epsilon, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("general_penalty needs finite p > 1");
    const double q = p / (p - 1.0);
    double acc = 0.0;
    for (double v : norms) acc += std::pow(v, q);
    return epsilon * std::pow(acc / static_cast<double>(norms.size()), 1.0 / q);
}

double dr_objective(const TrajectoryBatch& batch, double discount, const DRConfig& config) {
    const auto j = member_returns(batch, discount);
    if (config.epsilon == 0.0) {
        GradientEstimate zero;
        zero.g.assign(j.size(), Eigen::VectorXd());
        zero.norm.assign(j.size(), 0.0);
        return dr_value(j, zero, config);
    }
    return dr_value(j, grad_estimate(batch, discount, config.baseline), config);
}

double dr_objective(const EnsembleModel& model, const Observation& start, const ActionSequence& seq,
                    std::size_t particles, double discount, const RewardModel& reward,
                    std::optional<AnglePair> angles, const DRConfig& dr, RngStream& rng) {
    const bool scores = dr.epsilon > 0.0;
    const TrajectoryBatch batch = propagate(model, start, seq, particles, reward, rng, angles, scores);
    return dr_objective(batch, discount, dr);
}

}  // namespace drpets
