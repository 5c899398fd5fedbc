#include "drpets/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>

#include "drpets/drcore.hpp"
#include "drpets/ensemble.hpp"
#include "drpets/planner.hpp"
#include "drpets/rng.hpp"
#include "drpets/trajectory.hpp"

namespace drpets {

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

SelftestRow oracle_agreement(RngStream& rng) {
    double worst = 0.0;
    const PNorm ps[] = {PNorm::One, PNorm::Two, PNorm::Infinity};
    for (int i = 0; i < 100; ++i) {
        const std::size_t B = 1 + rng.index(2);
        const std::size_t dim = 1 + rng.index(3);
        std::vector<double> j(B);
        std::vector<Eigen::VectorXd> g(B, Eigen::VectorXd(dim));
        for (std::size_t b = 0; b < B; ++b) {
            j[b] = rng.uniform(-2.0, 2.0);
            for (std::size_t d = 0; d < dim; ++d) g[b][d] = rng.uniform(-3.0, 3.0);
        }
        const auto grads = GradientEstimate::from_vectors(g);
        const double eps = rng.uniform(1e-3, 1.0);
        for (PNorm p : ps) {
            const DRConfig cfg{eps, p};
            worst = std::max(worst, std::abs(dr_value(j, grads, cfg) - worstcase_oracle(j, grads, cfg, 200)));
        }
    }
    return {"oracle agreement", worst < 1e-3, "max |dr_value - oracle| = " + sci(worst)};
}

SelftestRow score_differences(RngStream& rng) {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t dim = 1 + rng.index(5);
        GaussianPrediction pred{Eigen::VectorXd(dim), Eigen::VectorXd(dim)};
        Eigen::VectorXd x(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            pred.mean[d] = rng.uniform(-2.0, 2.0);
            pred.log_variance[d] = rng.uniform(-3.0, 2.0);
            x[d] = pred.mean[d] + rng.normal() * std::exp(0.5 * pred.log_variance[d]);
        }
        const Eigen::VectorXd s = score(pred, x).flat();
        for (std::size_t k = 0; k < 2 * dim; ++k) {
            const double h = 1e-5;
            GaussianPrediction up = pred, dn = pred;
            double& u = k < dim ? up.mean[k] : up.log_variance[k - dim];
            double& w = k < dim ? dn.mean[k] : dn.log_variance[k - dim];
            u += h;
            w -= h;
            const double fd = (log_density(up, x) - log_density(dn, x)) / (2 * h);
            worst = std::max(worst, std::abs(fd - s[k]) / std::max(1.0, std::abs(fd)));
        }
    }
    return {"score finite differences", worst < 1e-4, "max rel err = " + sci(worst)};
}

SelftestRow dual_optimality(RngStream& rng) {
    double saturation = 0.0, reproduction = 0.0;
    bool concave = true;
    for (int i = 0; i < 200; ++i) {
        const std::size_t B = 1 + rng.index(5);
        std::vector<double> norms(B);
        for (double& n : norms) n = rng.uniform(0.01, 5.0);
        const DRConfig cfg{rng.uniform(0.01, 1.0), PNorm::Two};
        const DualDiagnostics d = dual_optimizers(norms, cfg);
        double ball = 0.0;
        for (double v : d.delta_star) ball += v * v;
        ball /= static_cast<double>(B);
        saturation = std::max(saturation, std::abs(ball - cfg.epsilon * cfg.epsilon));
        const double at_star = dual_function(d.lambda_star, norms, cfg.epsilon, 2.0);
        reproduction = std::max(reproduction, std::abs(at_star + dr_penalty(norms, cfg)));
        if (!(dual_function(1.1 * d.lambda_star, norms, cfg.epsilon, 2.0) < at_star) ||
            !(dual_function(0.9 * d.lambda_star, norms, cfg.epsilon, 2.0) < at_star))
            concave = false;
    }
    const bool ok = saturation < 1e-9 && reproduction < 1e-9 && concave;
    return {"dual optimality", ok,
            "saturation " + sci(saturation) + ", penalty " + sci(reproduction) +
                (concave ? ", lambda +-10% lower" : ", lambda +-10% NOT lower")};
}

SelftestRow zero_radius(RngStream& rng) {
    Architecture arch;
    arch.obs_dim = 3;
    arch.hidden = {16, 16};
    const EnsembleModel model = EnsembleModel::create(arch, 3, rng.split(1).seed());
    const RewardModel reward = make_reward_model(EnvKind::Pendulum, EnvParams::nominal(EnvKind::Pendulum));
    Observation start(3);
    start << -1.0, 0.0, 0.0;

    std::vector<ActionSequence> seqs;
    for (int c = 0; c < 16; ++c) {
        ActionSequence s(8);
        for (Eigen::Index k = 0; k < s.size(); ++k) s[k] = rng.uniform(-2.0, 2.0);
        seqs.push_back(s);
    }
    std::vector<RngStream> streams;
    for (std::size_t c = 0; c < seqs.size(); ++c) streams.emplace_back(derive_seed(rng.seed(), {c}));
    const auto batches = propagate_population(model, start, seqs, 4, reward, streams,
                                              angle_pair(EnvKind::Pendulum));
    std::size_t mismatches = 0;
    for (const auto& b : batches)
        if (dr_objective(b, 0.99, DRConfig{0.0, PNorm::Two}) != pets_objective(b, 0.99)) ++mismatches;

    const MpcContext ctx = MpcContext::make(model, EnvKind::Pendulum, EnvParams::nominal(EnvKind::Pendulum));
    PlannerConfig pc;
    pc.horizon = 6;
    pc.population = 24;
    pc.elite_count = 4;
    pc.cem_iterations = 2;
    pc.particles = 3;
    const CEMState warm = CEMState::initial(pc.horizon, pc.initial_variance);
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Infinity}) {
        const auto a = mpc_act(ctx, start, pc, DRConfig{}, warm, 11);
        const auto b = mpc_act(ctx, start, pc, DRConfig{0.0, p}, warm, 11);
        if (a.action != b.action) ++mismatches;
    }
    return {"epsilon = 0 equivalence", mismatches == 0,
            std::to_string(mismatches) + " mismatches over " + std::to_string(batches.size() + 3) + " checks"};
}

template <class F>
SelftestRow guarded(const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {name, false, std::string("threw: ") + e.what()};
    }
}

}  // namespace

std::vector<SelftestRow> run_selftest(std::uint64_t seed) {
    RngStream root(derive_seed(seed, {purpose_id("selftest")}));
    RngStream a = root.split(1), b = root.split(2), c = root.split(3), d = root.split(4);
    return {guarded("oracle agreement", [&] { return oracle_agreement(a); }),
            guarded("score finite differences", [&] { return score_differences(b); }),
            guarded("dual optimality", [&] { return dual_optimality(c); }),
            guarded("epsilon = 0 equivalence", [&] { return zero_radius(d); })};
}

std::string format_selftest(const std::vector<SelftestRow>& rows) {
    std::string out;
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-26s %-4s  %s\n", r.suite.c_str(), r.pass ? "pass" : "FAIL",
                      r.detail.c_str());
        out += buf;
    }
    return out;
}

}  // namespace drpets
