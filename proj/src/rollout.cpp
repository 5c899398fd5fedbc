#include <cmath>

#include "drpets/errors.hpp"
#include "drpets/trajectory.hpp"

namespace drpets {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-precision copy of one member for rollouts; training stays in double.
class FastMember {
public:
    FastMember(const MLPParams& net, const NormStats& norm)
        : in_mean_(norm.input_mean.cast<float>()),
          in_scale_(norm.input_std.cwiseInverse().cast<float>()),
          out_mean_(norm.target_mean.cast<float>()),
          out_std_(norm.target_std.cast<float>()),
          lv_shift_((2.0 * norm.target_std.array().log()).matrix().cast<float>()),
          d_(static_cast<Eigen::Index>(net.arch.obs_dim)) {
        for (const auto& l : net.layers) {
            w_.push_back(l.weight.cast<float>());
            b_.push_back(l.bias.cast<float>());
        }
    }

    void predict(const RowMatrix& raw, Eigen::MatrixXf& mean, Eigen::MatrixXf& log_var) {
        h_ = raw.cast<float>();
        h_ = ((h_.rowwise() - in_mean_).array().rowwise() * in_scale_.array()).matrix();
        const std::size_t hidden = w_.size() - 1;
        for (std::size_t l = 0; l < hidden; ++l) {
            z_.noalias() = h_ * w_[l];
            z_.rowwise() += b_[l];
            h_ = (z_.array() * (1.0f / (1.0f + (-z_.array()).exp()))).matrix();
        }
        z_.noalias() = h_ * w_.back();
        z_.rowwise() += b_.back();
        mean = (z_.leftCols(d_).array().rowwise() * out_std_.array()).matrix();
        mean.rowwise() += out_mean_;
        log_var = z_.rightCols(d_);
        log_var.rowwise() += lv_shift_;
        log_var = log_var.cwiseMax(static_cast<float>(kLogVarMin))
                      .cwiseMin(static_cast<float>(kLogVarMax));
    }

private:
    std::vector<Eigen::MatrixXf> w_;
    std::vector<Eigen::RowVectorXf> b_;
    Eigen::RowVectorXf in_mean_, in_scale_, out_mean_, out_std_, lv_shift_;
    Eigen::Index d_;
    Eigen::MatrixXf h_, z_;
};

}  // namespace

TrajectoryBatch::TrajectoryBatch(std::size_t b, std::size_t q, std::size_t t, std::size_t d,
                                 bool with_scores)
    : members(b), particles(q), horizon(t), obs_dim(d), has_scores(with_scores),
      observations(b * q * t * d, 0.0), rewards(b * q * t, 0.0),
      scores(with_scores ? b * q * t * 2 * d : 0, 0.0), diverged(b * q, 0) {}

RewardModel make_reward_model(EnvKind kind, const EnvParams& params) {
    return {[kind, params](std::span<const double> obs, double u) {
                return observation_reward(kind, obs, u, params);
            },
            min_reward(kind, params)};
}

TrajectoryBatch propagate(const EnsembleModel& model, const Observation& start,
                          const ActionSequence& seq, std::size_t particles,
                          const RewardModel& reward, RngStream& rng,
                          std::optional<AnglePair> angles, bool record_scores) {
    std::vector<RngStream> streams{rng};
    auto out = propagate_population(model, start, {seq}, particles, reward, streams, angles,
                                    record_scores);
    rng = streams.front();
    return std::move(out.front());
}

std::vector<TrajectoryBatch> propagate_population(const EnsembleModel& model,
                                                  const Observation& start,
                                                  const std::vector<ActionSequence>& seqs,
                                                  std::size_t particles,
                                                  const RewardModel& reward,
                                                  std::vector<RngStream>& streams,
                                                  std::optional<AnglePair> angles,
                                                  bool record_scores) {
    if (particles == 0) throw InvalidInput("need at least one particle");
    if (seqs.empty()) return {};
    if (streams.size() != seqs.size()) throw InvalidInput("one stream per sequence required");
    const std::size_t horizon = static_cast<std::size_t>(seqs.front().size());
    if (horizon == 0) throw InvalidInput("empty action sequence");
    for (const auto& s : seqs)
        if (static_cast<std::size_t>(s.size()) != horizon)
            throw InvalidInput("action sequences differ in length");
    const std::size_t d = model.arch.obs_dim;
    if (static_cast<std::size_t>(start.size()) != d) throw InvalidInput("start observation dimension");
    if (!start.allFinite()) throw InvalidInput("non-finite start observation");

    const std::size_t n_seq = seqs.size();
    const std::size_t B = model.size();
    const auto Q = particles;
    const auto rows = static_cast<Eigen::Index>(n_seq * Q);
    const auto di = static_cast<Eigen::Index>(d);

    std::vector<TrajectoryBatch> out;
    out.reserve(n_seq);
    for (std::size_t c = 0; c < n_seq; ++c) out.emplace_back(B, Q, horizon, d, record_scores);

    const Eigen::ArrayXd target_std = model.norm.target_std.transpose().array();
    RowMatrix state(rows, di);
    RowMatrix input(rows, di + 1);
    std::vector<std::uint8_t> dead(static_cast<std::size_t>(rows));

    Eigen::MatrixXf mean, log_var;
    for (std::size_t b = 0; b < B; ++b) {
        FastMember fast(model.members[b], model.norm);
        for (Eigen::Index r = 0; r < rows; ++r) state.row(r) = start.transpose();
        std::fill(dead.begin(), dead.end(), 0);

        for (std::size_t k = 0; k < horizon; ++k) {
            // rewards of the current states
            for (std::size_t c = 0; c < n_seq; ++c) {
                const double u = seqs[c][static_cast<Eigen::Index>(k)];
                auto& batch = out[c];
                for (std::size_t q = 0; q < Q; ++q) {
                    const auto r = static_cast<Eigen::Index>(c * Q + q);
                    std::span<const double> obs(state.row(r).data(), d);
                    auto dst = batch.observation(b, q, k);
                    std::copy(obs.begin(), obs.end(), dst.begin());
                    double rew = dead[r] ? reward.floor : reward.fn(obs, u);
                    if (!std::isfinite(rew)) {
                        dead[r] = 1;
                        rew = reward.floor;
                    }
                    batch.reward(b, q, k) = rew;
                }
            }
            if (k + 1 == horizon) break;

            input.leftCols(di) = state;
            for (std::size_t c = 0; c < n_seq; ++c)
                input.col(di).segment(static_cast<Eigen::Index>(c * Q), static_cast<Eigen::Index>(Q))
                    .setConstant(seqs[c][static_cast<Eigen::Index>(k)]);
            for (Eigen::Index r = 0; r < rows; ++r)
                if (dead[r]) input.row(r).head(di) = start.transpose();

            fast.predict(input, mean, log_var);

            for (std::size_t c = 0; c < n_seq; ++c) {
                auto& batch = out[c];
                RngStream& rng = streams[c];
                for (std::size_t q = 0; q < Q; ++q) {
                    const auto r = static_cast<Eigen::Index>(c * Q + q);
                    bool ok = true;
                    double* score = record_scores ? batch.score(b, q, k + 1).data() : nullptr;
                    for (Eigen::Index j = 0; j < di; ++j) {
                        const double z = rng.normal();
                        const double lv = log_var(r, j);
                        const double sd = std::exp(0.5 * lv);
                        const double next = state(r, j) + static_cast<double>(mean(r, j)) + sd * z;
                        ok = ok && std::isfinite(next) && std::isfinite(sd);
                        state(r, j) = next;
                        if (score) {
                            // d/d(mean) in normalized head units, d/d(logvar) is shift-invariant
                            score[j] = z / sd * target_std[j];
                            score[j + di] = 0.5 * (z * z - 1.0);
                        }
                    }
                    if (angles && ok) {
                        const auto ci = static_cast<Eigen::Index>(angles->cos_index);
                        const auto si = static_cast<Eigen::Index>(angles->sin_index);
                        const double n = std::hypot(state(r, ci), state(r, si));
                        if (n > 0.0) {
                            state(r, ci) /= n;
                            state(r, si) /= n;
                        }
                    }
                    if (dead[r] || !ok) {
                        dead[r] = 1;
                        batch.diverged[b * Q + q] = 1;
                        if (score) std::fill(score, score + 2 * d, 0.0);
                    }
                }
            }
        }
    }
    return out;
}

std::vector<double> member_returns(const TrajectoryBatch& batch, double discount) {
    std::vector<double> j(batch.members, 0.0);
    for (std::size_t b = 0; b < batch.members; ++b) {
        double acc = 0.0;
        for (std::size_t q = 0; q < batch.particles; ++q) {
            double g = 1.0;
            double ret = 0.0;
            for (std::size_t k = 0; k < batch.horizon; ++k) {
                ret += g * batch.reward(b, q, k);
                g *= discount;
            }
            acc += ret;
        }
        j[b] = acc / static_cast<double>(batch.particles);
    }
    return j;
}

double pets_objective(const TrajectoryBatch& batch, double discount) {
    if (batch.members == 0 || batch.particles == 0 || batch.horizon == 0)
        throw InvalidInput("empty trajectory batch");
    const auto j = member_returns(batch, discount);
    double acc = 0.0;
    for (double v : j) acc += v;
    return acc / static_cast<double>(j.size());
}

}  // namespace drpets
