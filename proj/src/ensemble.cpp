#include "drpets/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "drpets/errors.hpp"

namespace drpets {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

void check_dims(const GaussianPrediction& pred, const Eigen::VectorXd& x) {
    if (pred.mean.size() != x.size() || pred.log_variance.size() != x.size())
        throw InvalidInput("prediction and target dimensions differ");
}

// Hidden activations and the final linear output for a normalized batch.
struct Trace {
    std::vector<Eigen::MatrixXd> pre;   // pre-activation per hidden layer
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l+1] = swish(pre[l])
    Eigen::MatrixXd out;
};

Trace run_layers(const MLPParams& net, const Eigen::MatrixXd& x, bool keep) {
    Trace t;
    Eigen::MatrixXd h = x;
    const std::size_t hidden = net.layers.size() - 1;
    if (keep) {
        t.acts.reserve(hidden + 1);
        t.pre.reserve(hidden);
    }
    for (std::size_t l = 0; l < hidden; ++l) {
        Eigen::MatrixXd z = h * net.layers[l].weight;
        z.rowwise() += net.layers[l].bias;
        Eigen::MatrixXd a = (z.array() * sigmoid(z.array())).matrix();
        if (keep) {
            t.acts.push_back(std::move(h));
            t.pre.push_back(std::move(z));
        }
        h = std::move(a);
    }
    t.out = h * net.layers.back().weight;
    t.out.rowwise() += net.layers.back().bias;
    if (keep) t.acts.push_back(std::move(h));
    return t;
}

}  // namespace

MLPParams MLPParams::zeros(const Architecture& arch) {
    MLPParams p;
    p.arch = arch;
    std::size_t fan_in = arch.input_dim();
    auto add = [&](std::size_t fan_out) {
        p.layers.push_back({Eigen::MatrixXd::Zero(fan_in, fan_out), Eigen::RowVectorXd::Zero(fan_out)});
        fan_in = fan_out;
    };
    for (std::size_t w : arch.hidden) add(w);
    add(arch.output_dim());
    return p;
}

MLPParams MLPParams::random(const Architecture& arch, RngStream& rng) {
    MLPParams p = zeros(arch);
    for (auto& layer : p.layers) {
        const double limit =
            std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
                layer.weight(r, c) = rng.uniform(-limit, limit);
    }
    return p;
}

void MLPParams::validate() const {
    if (arch.activation != "swish") throw InvalidInput("unsupported activation " + arch.activation);
    if (layers.size() != arch.hidden.size() + 1) throw InvalidInput("layer count mismatch");
    Eigen::Index fan_in = static_cast<Eigen::Index>(arch.input_dim());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Eigen::Index fan_out = static_cast<Eigen::Index>(
            l < arch.hidden.size() ? arch.hidden[l] : arch.output_dim());
        const auto& layer = layers[l];
        if (layer.weight.rows() != fan_in || layer.weight.cols() != fan_out ||
            layer.bias.size() != fan_out)
            throw InvalidInput("layer " + std::to_string(l) + " has inconsistent shape");
        if (!layer.weight.allFinite() || !layer.bias.allFinite())
            throw InvalidInput("layer " + std::to_string(l) + " has non-finite entries");
        fan_in = fan_out;
    }
}

NormStats NormStats::identity(std::size_t input_dim, std::size_t obs_dim) {
    const auto in = static_cast<Eigen::Index>(input_dim);
    const auto d = static_cast<Eigen::Index>(obs_dim);
    return {Eigen::RowVectorXd::Zero(in), Eigen::RowVectorXd::Ones(in),
            Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Ones(d)};
}

Eigen::MatrixXd NormStats::normalize_inputs(const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd x = raw.rowwise() - input_mean;
    return x.array().rowwise() / input_std.array();
}

void TransitionDataset::add(const Observation& obs, double action, const Observation& next) {
    observations.push_back(obs);
    actions.push_back(action);
    next_observations.push_back(next);
}

void TransitionDataset::append(const TransitionDataset& other) {
    observations.insert(observations.end(), other.observations.begin(), other.observations.end());
    actions.insert(actions.end(), other.actions.begin(), other.actions.end());
    next_observations.insert(next_observations.end(), other.next_observations.begin(),
                             other.next_observations.end());
}

Eigen::MatrixXd TransitionDataset::inputs() const {
    if (empty()) throw InvalidInput("empty dataset");
    const Eigen::Index d = observations.front().size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(size()), d + 1);
    for (std::size_t i = 0; i < size(); ++i) {
        if (observations[i].size() != d || next_observations[i].size() != d)
            throw InvalidInput("row " + std::to_string(i) + " has inconsistent dimension");
        const auto r = static_cast<Eigen::Index>(i);
        x.row(r).head(d) = observations[i].transpose();
        x(r, d) = actions[i];
    }
    return x;
}

Eigen::MatrixXd TransitionDataset::deltas() const {
    if (empty()) throw InvalidInput("empty dataset");
    const Eigen::Index d = observations.front().size();
    Eigen::MatrixXd y(static_cast<Eigen::Index>(size()), d);
    for (std::size_t i = 0; i < size(); ++i)
        y.row(static_cast<Eigen::Index>(i)) = (next_observations[i] - observations[i]).transpose();
    return y;
}

namespace {

void column_stats(const Eigen::MatrixXd& m, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& stddev) {
    mean = m.colwise().mean();
    const Eigen::MatrixXd centered = m.rowwise() - mean;
    stddev = (centered.array().square().colwise().sum() / static_cast<double>(m.rows())).sqrt();
    stddev = stddev.cwiseMax(kMinStd);
}

}  // namespace

NormStats TransitionDataset::statistics() const {
    NormStats s;
    column_stats(inputs(), s.input_mean, s.input_std);
    column_stats(deltas(), s.target_mean, s.target_std);
    return s;
}

Eigen::VectorXd ScoreVector::flat() const {
    Eigen::VectorXd v(d_mean.size() + d_logvar.size());
    v << d_mean, d_logvar;
    return v;
}

EnsembleModel EnsembleModel::create(const Architecture& arch, std::size_t members,
                                    std::uint64_t seed) {
    if (members == 0) throw InvalidInput("an ensemble needs at least one member");
    EnsembleModel m;
    m.arch = arch;
    m.norm = NormStats::identity(arch.input_dim(), arch.obs_dim);
    for (std::size_t b = 0; b < members; ++b) {
        RngStream rng(derive_seed(seed, {purpose_id("init"), b}));
        m.members.push_back(MLPParams::random(arch, rng));
    }
    return m;
}

void EnsembleModel::validate() const {
    if (members.empty()) throw InvalidInput("an ensemble needs at least one member");
    const auto in = static_cast<Eigen::Index>(arch.input_dim());
    const auto d = static_cast<Eigen::Index>(arch.obs_dim);
    if (norm.input_mean.size() != in || norm.input_std.size() != in ||
        norm.target_mean.size() != d || norm.target_std.size() != d)
        throw InvalidInput("normalization statistics do not match the architecture");
    for (const auto& m : members) {
        if (!(m.arch == arch)) throw InvalidInput("members do not share an architecture");
        m.validate();
    }
}

BatchPrediction predict_batch_unchecked(const MLPParams& member, const NormStats& norm,
                                        const Eigen::MatrixXd& raw_inputs) {
    const Eigen::Index d = static_cast<Eigen::Index>(member.arch.obs_dim);
    if (raw_inputs.cols() != static_cast<Eigen::Index>(member.arch.input_dim()))
        throw InvalidInput("input dimension does not match the architecture");
    const Trace t = run_layers(member, norm.normalize_inputs(raw_inputs), false);
    BatchPrediction p;
    p.mean = (t.out.leftCols(d).array().rowwise() * norm.target_std.array()).matrix();
    p.mean.rowwise() += norm.target_mean;
    const Eigen::RowVectorXd log_var_shift = 2.0 * norm.target_std.array().log();
    p.log_variance = t.out.rightCols(d);
    p.log_variance.rowwise() += log_var_shift;
    p.log_variance = p.log_variance.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
    return p;
}

BatchPrediction predict_batch(const MLPParams& member, const NormStats& norm,
                              const Eigen::MatrixXd& raw_inputs) {
    BatchPrediction p = predict_batch_unchecked(member, norm, raw_inputs);
    if (!p.mean.allFinite() || !p.log_variance.allFinite())
        throw ModelDivergence("network produced a non-finite prediction");
    return p;
}

GaussianPrediction forward(const MLPParams& member, const Observation& obs, double action,
                           const NormStats& norm) {
    Eigen::MatrixXd x(1, obs.size() + 1);
    x.row(0).head(obs.size()) = obs.transpose();
    x(0, obs.size()) = action;
    const BatchPrediction b = predict_batch(member, norm, x);
    return {b.mean.row(0).transpose(), b.log_variance.row(0).transpose()};
}

double nll(const GaussianPrediction& pred, const Eigen::VectorXd& target_delta) {
    check_dims(pred, target_delta);
    const Eigen::ArrayXd r = (target_delta - pred.mean).array();
    const double quad = (r.square() * (-pred.log_variance.array()).exp()).sum();
    return 0.5 * (quad + pred.log_variance.sum()) +
           static_cast<double>(target_delta.size()) * kHalfLog2Pi;
}

NllGradient nll_gradient(const GaussianPrediction& pred, const Eigen::VectorXd& target_delta) {
    check_dims(pred, target_delta);
    const Eigen::ArrayXd inv_var = (-pred.log_variance.array()).exp();
    const Eigen::ArrayXd r = (target_delta - pred.mean).array();
    return {(-r * inv_var).matrix(), (0.5 * (1.0 - r.square() * inv_var)).matrix()};
}

double log_density(const GaussianPrediction& pred, const Eigen::VectorXd& delta) {
    return -nll(pred, delta);
}

ScoreVector score(const GaussianPrediction& pred, const Eigen::VectorXd& observed_delta) {
    check_dims(pred, observed_delta);
    const Eigen::ArrayXd inv_var = (-pred.log_variance.array()).exp();
    const Eigen::ArrayXd r = (observed_delta - pred.mean).array();
    return {(r * inv_var).matrix(), (0.5 * (r.square() * inv_var - 1.0)).matrix()};
}

Observation sample_next(const GaussianPrediction& pred, const Observation& obs, RngStream& rng,
                        std::optional<AnglePair> angles) {
    Observation next = obs + pred.mean;
    for (Eigen::Index j = 0; j < next.size(); ++j)
        next[j] += std::exp(0.5 * pred.log_variance[j]) * rng.normal();
    if (angles) {
        const double c = next[static_cast<Eigen::Index>(angles->cos_index)];
        const double s = next[static_cast<Eigen::Index>(angles->sin_index)];
        const double n = std::hypot(c, s);
        if (n > 0.0) {
            next[static_cast<Eigen::Index>(angles->cos_index)] = c / n;
            next[static_cast<Eigen::Index>(angles->sin_index)] = s / n;
        }
    }
    return next;
}

double mixture_density(const EnsembleModel& model, const Observation& obs, double action,
                       const Eigen::VectorXd& delta) {
    double acc = 0.0;
    for (const auto& m : model.members)
        acc += std::exp(log_density(forward(m, obs, action, model.norm), delta));
    return acc / static_cast<double>(model.size());
}

namespace {

struct AdamSlot {
    Eigen::MatrixXd m, v;
};

struct Adam {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t t = 0;
    std::vector<AdamSlot> w, b;

    Adam(const MLPParams& net, double rate) : lr(rate) {
        for (const auto& l : net.layers) {
            w.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                         Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols())});
            b.push_back({Eigen::MatrixXd::Zero(1, l.bias.size()),
                         Eigen::MatrixXd::Zero(1, l.bias.size())});
        }
    }

    template <class Param>
    void update(Param& p, const Eigen::MatrixXd& g, AdamSlot& s, double c1, double c2) const {
        s.m = beta1 * s.m + (1.0 - beta1) * g;
        s.v = beta2 * s.v + (1.0 - beta2) * g.cwiseProduct(g);
        p.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps);
    }

    void step(MLPParams& net, const std::vector<Eigen::MatrixXd>& gw,
              const std::vector<Eigen::RowVectorXd>& gb) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            update(net.layers[l].weight, gw[l], w[l], c1, c2);
            update(net.layers[l].bias, gb[l], b[l], c1, c2);
        }
    }
};

// One Adam step on a normalized mini-batch; returns the batch loss (mean over rows).
double train_batch(MLPParams& net, Adam& opt, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                   const Eigen::RowVectorXd& lv_shift) {
    const Eigen::Index d = y.cols();
    const double n = static_cast<double>(x.rows());
    Trace t = run_layers(net, x, true);

    const Eigen::MatrixXd mean = t.out.leftCols(d);
    Eigen::MatrixXd raw_lv = t.out.rightCols(d);
    // clamp acts on the de-normalized log-variance
    Eigen::MatrixXd shifted = raw_lv.rowwise() + lv_shift;
    const Eigen::ArrayXXd inside =
        ((shifted.array() > kLogVarMin) && (shifted.array() < kLogVarMax)).cast<double>();
    Eigen::MatrixXd lv = shifted.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax).rowwise() - lv_shift;

    const Eigen::ArrayXXd inv_var = (-lv.array()).exp();
    const Eigen::ArrayXXd r = (y - mean).array();
    const double loss = 0.5 * (r.square() * inv_var + lv.array()).sum() / n;

    Eigen::MatrixXd d_out(x.rows(), 2 * d);
    d_out.leftCols(d) = (-r * inv_var / n).matrix();
    d_out.rightCols(d) = (0.5 * (1.0 - r.square() * inv_var) * inside / n).matrix();

    const std::size_t layers = net.layers.size();
    std::vector<Eigen::MatrixXd> gw(layers);
    std::vector<Eigen::RowVectorXd> gb(layers);
    Eigen::MatrixXd delta = std::move(d_out);
    for (std::size_t l = layers; l-- > 0;) {
        gw[l] = t.acts[l].transpose() * delta;
        gb[l] = delta.colwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd d_act = delta * net.layers[l].weight.transpose();
        const Eigen::ArrayXXd z = t.pre[l - 1].array();
        const Eigen::ArrayXXd s = sigmoid(z);
        delta = (d_act.array() * (s + z * s * (1.0 - s))).matrix();
    }
    opt.step(net, gw, gb);
    return loss;
}

}  // namespace

TrainReport train(EnsembleModel& model, const TransitionDataset& data, const TrainConfig& config) {
    if (data.empty()) throw InvalidInput("cannot train on an empty dataset");
    if (config.batch_size == 0 || config.epochs == 0) throw InvalidInput("bad training config");
    model.norm = data.statistics();
    model.validate();

    const Eigen::MatrixXd x_all = model.norm.normalize_inputs(data.inputs());
    Eigen::MatrixXd y_all = data.deltas().rowwise() - model.norm.target_mean;
    y_all = (y_all.array().rowwise() / model.norm.target_std.array()).matrix();
    const Eigen::RowVectorXd lv_shift = 2.0 * model.norm.target_std.array().log();

    const std::size_t n = data.size();
    TrainReport report;
    for (std::size_t b = 0; b < model.size(); ++b) {
        RngStream rng(derive_seed(config.seed, {purpose_id("train"), b}));
        std::vector<Eigen::Index> boot(n);
        for (auto& i : boot) i = static_cast<Eigen::Index>(rng.index(n));

        Adam opt(model.members[b], config.learning_rate);
        std::vector<double> curve;
        for (std::size_t e = 0; e < config.epochs; ++e) {
            for (std::size_t i = n; i > 1; --i) std::swap(boot[i - 1], boot[rng.index(i)]);
            double epoch_loss = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < n; start += config.batch_size) {
                const std::size_t len = std::min(config.batch_size, n - start);
                Eigen::MatrixXd xb(static_cast<Eigen::Index>(len), x_all.cols());
                Eigen::MatrixXd yb(static_cast<Eigen::Index>(len), y_all.cols());
                for (std::size_t k = 0; k < len; ++k) {
                    xb.row(static_cast<Eigen::Index>(k)) = x_all.row(boot[start + k]);
                    yb.row(static_cast<Eigen::Index>(k)) = y_all.row(boot[start + k]);
                }
                epoch_loss += train_batch(model.members[b], opt, xb, yb, lv_shift);
                ++batches;
            }
            epoch_loss /= static_cast<double>(batches);
            if (!std::isfinite(epoch_loss))
                throw ModelDivergence("member " + std::to_string(b) + " diverged in epoch " +
                                      std::to_string(e));
            curve.push_back(epoch_loss);
        }
        report.final_loss.push_back(curve.back());
        report.loss_curves.push_back(std::move(curve));
    }
    return report;
}

}  // namespace drpets
