// Acceptance checks. Prints one "[PASS]" or "[FAIL]" line per criterion and exits non-zero
// if any selected criterion fails. Usage: acceptance --criteria 1,2,3 --work DIR

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <CLI11.hpp>

#include "drpets/bench.hpp"
#include "drpets/config.hpp"
#include "drpets/drcore.hpp"
#include "drpets/planner.hpp"
#include "drpets/report.hpp"
#include "drpets/textio.hpp"

namespace fs = std::filesystem;
using namespace drpets;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path g_work;

// ---------------------------------------------------------------------------- 1

Outcome zero_radius() {
    Architecture arch;
    arch.obs_dim = 3;
    arch.hidden = {64, 64, 64};
    const EnsembleModel model = EnsembleModel::create(arch, 5, 101);
    const EnvParams nominal = EnvParams::nominal(EnvKind::Pendulum);
    PlannerConfig pc;
    pc.horizon = 12;
    pc.population = 50;
    pc.elite_count = 5;
    pc.cem_iterations = 3;
    pc.particles = 5;

    const EpisodeRecord pets = run_mpc_episode(model, EnvKind::Pendulum, nominal, nominal, pc, DRConfig{}, 200, 77);
    std::size_t differing = 0;
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Infinity}) {
        const EpisodeRecord dr =
            run_mpc_episode(model, EnvKind::Pendulum, nominal, nominal, pc, DRConfig{0.0, p}, 200, 77);
        if (dr.actions != pets.actions || dr.total_reward != pets.total_reward) ++differing;
    }

    SweepSpec spec;
    spec.env = EnvKind::Pendulum;
    spec.param = PerturbedParam::PendulumMass;
    spec.grid = {0.75, 1.25};
    spec.seeds_per_point = 2;
    spec.episode_horizon = 30;
    spec.planner = pc;
    spec.master_seed = 5;
    spec.algorithm = Algorithm::Pets;
    const std::string a = format_csv(sweep(model, spec, nominal).rows);
    spec.algorithm = Algorithm::DrPets;
    spec.dr = DRConfig{0.0, PNorm::Infinity};
    const std::string b = format_csv(sweep(model, spec, nominal).rows);

    const bool ok = differing == 0 && pets.actions.size() == 200 && a == b;
    return {ok, std::to_string(differing) + " of 3 DR episodes differ over 200 steps; sweep CSVs " +
                    (a == b ? "identical" : "DIFFER")};
}

// ---------------------------------------------------------------------------- 2

Outcome duality() {
    RngStream rng(2024);
    double worst = 0.0;
    std::size_t instances = 0;
    for (int i = 0; i < 150; ++i) {
        const std::size_t B = 1 + rng.index(2);
        const std::size_t dim = 1 + rng.index(3);
        std::vector<double> j(B);
        std::vector<Eigen::VectorXd> g(B, Eigen::VectorXd(dim));
        for (std::size_t b = 0; b < B; ++b) {
            j[b] = rng.uniform(-5.0, 5.0);
            for (std::size_t d = 0; d < dim; ++d) g[b][d] = rng.uniform(-4.0, 4.0);
        }
        const auto grads = GradientEstimate::from_vectors(g);
        const double eps = 1.0 - rng.uniform(0.0, 1.0);  // (0, 1]
        for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Infinity}) {
            const DRConfig cfg{eps, p};
            worst = std::max(worst, std::abs(dr_value(j, grads, cfg) - worstcase_oracle(j, grads, cfg, 200)));
        }
        ++instances;
    }
    return {worst < 1e-3, std::to_string(instances) + " instances x 3 orders, max gap " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------- 3

// Outer dual for p = 2 after the inner minimization: -mean(|g|^2) / (4 lambda) - lambda eps^2.
double dual_p2(double lambda, const std::vector<double>& norms, double eps) {
    double m = 0.0;
    for (double n : norms) m += n * n;
    m /= static_cast<double>(norms.size());
    return -m / (4.0 * lambda) - lambda * eps * eps;
}

Outcome dual_optimality() {
    RngStream rng(33);
    double saturation = 0.0, reproduction = 0.0, library_gap = 0.0;
    std::size_t not_strict = 0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t B = 1 + rng.index(6);
        std::vector<double> norms(B);
        for (double& n : norms) n = rng.uniform(0.05, 10.0);
        const double eps = rng.uniform(0.01, 1.0);
        const DRConfig cfg{eps, PNorm::Two};
        const DualDiagnostics d = dual_optimizers(norms, cfg);

        double ball = 0.0, rms = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            ball += d.delta_star[b] * d.delta_star[b];
            rms += norms[b] * norms[b];
        }
        ball /= static_cast<double>(B);
        rms = std::sqrt(rms / static_cast<double>(B));
        saturation = std::max(saturation, std::abs(ball - eps * eps));

        const double at_star = dual_p2(d.lambda_star, norms, eps);
        reproduction = std::max(reproduction, std::abs(at_star + eps * rms));
        library_gap = std::max(library_gap, std::abs(at_star - dual_function(d.lambda_star, norms, eps, 2.0)));
        if (!(dual_p2(1.1 * d.lambda_star, norms, eps) < at_star) ||
            !(dual_p2(0.9 * d.lambda_star, norms, eps) < at_star))
            ++not_strict;
    }
    const bool ok = saturation < 1e-9 && reproduction < 1e-9 && library_gap < 1e-9 && not_strict == 0;
    return {ok, "200 instances, saturation " + fmt("%.1e", saturation) + ", penalty " + fmt("%.1e", reproduction) +
                    ", " + std::to_string(not_strict) + " non-strict maxima"};
}

// ---------------------------------------------------------------------------- 4

double gaussian_log_density(const Eigen::VectorXd& mean, const Eigen::VectorXd& logvar, const Eigen::VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        const double r = x[d] - mean[d];
        s += -0.5 * (std::log(2.0 * std::numbers::pi) + logvar[d] + r * r * std::exp(-logvar[d]));
    }
    return s;
}

Outcome score_check() {
    RngStream rng(44);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t dim = 1 + rng.index(5);
        GaussianPrediction pred{Eigen::VectorXd(dim), Eigen::VectorXd(dim)};
        Eigen::VectorXd x(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            pred.mean[d] = rng.uniform(-3.0, 3.0);
            pred.log_variance[d] = rng.uniform(-4.0, 3.0);
            x[d] = pred.mean[d] + rng.normal() * std::exp(0.5 * pred.log_variance[d]);
        }
        const Eigen::VectorXd s = score(pred, x).flat();
        for (std::size_t k = 0; k < 2 * dim; ++k) {
            const double h = 1e-5;
            Eigen::VectorXd mu = pred.mean, lv = pred.log_variance, mu2 = mu, lv2 = lv;
            if (k < dim) {
                mu[k] += h;
                mu2[k] -= h;
            } else {
                lv[k - dim] += h;
                lv2[k - dim] -= h;
            }
            const double fd = (gaussian_log_density(mu, lv, x) - gaussian_log_density(mu2, lv2, x)) / (2 * h);
            worst = std::max(worst, std::abs(fd - s[k]) / std::max(std::abs(fd), 1e-3));
        }
    }
    return {worst < 1e-4, "1000 triples, max rel err " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------- 5

Outcome chain_gradient() {
    // x1 ~ N(m1, v1), x2 ~ N(a x1 + m2, v2); rewards c, -x1^2, -x2^2. Only the first
    // transition depends on the differentiated head outputs (m1, log v1).
    const double c = 0.7, m1 = 0.4, v1 = 0.5, a = 0.8, m2 = -0.3, v2 = 0.3, gamma = 0.9;
    const std::size_t Q = 100000;
    TrajectoryBatch batch(1, Q, 3, 1, true);
    RngStream rng(55);
    for (std::size_t q = 0; q < Q; ++q) {
        const double x1 = m1 + std::sqrt(v1) * rng.normal();
        const double x2 = a * x1 + m2 + std::sqrt(v2) * rng.normal();
        batch.reward(0, q, 0) = c;
        batch.reward(0, q, 1) = -x1 * x1;
        batch.reward(0, q, 2) = -x2 * x2;
        auto s = batch.score(0, q, 1);
        s[0] = (x1 - m1) / v1;
        s[1] = 0.5 * ((x1 - m1) * (x1 - m1) / v1 - 1.0);
        // step-2 scores stay zero
    }
    // J = c - gamma (m1^2 + v1) - gamma^2 ((a m1 + m2)^2 + a^2 v1 + v2)
    const double d_mean = -2.0 * gamma * m1 - 2.0 * gamma * gamma * a * (a * m1 + m2);
    const double d_logvar = -gamma * v1 - gamma * gamma * a * a * v1;
    const GradientEstimate est = grad_estimate(batch, gamma);
    const double e0 = std::abs(est.g[0][0] - d_mean) / std::abs(d_mean);
    const double e1 = std::abs(est.g[0][1] - d_logvar) / std::abs(d_logvar);
    return {e0 < 0.05 && e1 < 0.05, "Q = 1e5, rel err mean " + fmt("%.3f", e0) + ", log-variance " + fmt("%.3f", e1)};
}

// ---------------------------------------------------------------------------- 6

Outcome cem_sanity() {
    double worst = 0.0;
    bool monotone = true, bounded = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RngStream pick(600 + seed);
        ActionSequence target(3);
        for (Eigen::Index k = 0; k < 3; ++k) target[k] = pick.uniform(-1.5, 1.5);
        const Objective f = [&](const ActionSequence& u) { return -(u - target).squaredNorm(); };
        PlannerConfig pc;
        pc.horizon = 3;
        pc.population = 200;
        pc.elite_count = 20;
        pc.cem_iterations = 5;
        RngStream rng(700 + seed);
        CEMTrace trace;
        const CEMResult res = cem_plan(f, pc, {-2.0, 2.0}, CEMState::initial(3, 1.0), rng, &trace);
        worst = std::max(worst, (res.best - target).cwiseAbs().maxCoeff());
        for (std::size_t i = 1; i < trace.best_elite_value.size(); ++i)
            monotone = monotone && trace.best_elite_value[i] >= trace.best_elite_value[i - 1];
        for (const auto& pop : trace.populations)
            for (const auto& u : pop) bounded = bounded && u.maxCoeff() <= 2.0 && u.minCoeff() >= -2.0;
    }

    // actions emitted by the receding-horizon controller stay in bounds too
    Architecture arch;
    arch.obs_dim = 3;
    arch.hidden = {16, 16};
    const EnsembleModel model = EnsembleModel::create(arch, 2, 66);
    const EnvParams nominal = EnvParams::nominal(EnvKind::Pendulum);
    PlannerConfig pc;
    pc.horizon = 5;
    pc.population = 20;
    pc.elite_count = 4;
    pc.cem_iterations = 2;
    pc.particles = 2;
    pc.initial_variance = 100.0;
    const EpisodeRecord rec =
        run_mpc_episode(model, EnvKind::Pendulum, nominal, nominal, pc, DRConfig{0.1, PNorm::Two}, 40, 6);
    for (double u : rec.actions) bounded = bounded && u >= nominal.action_low && u <= nominal.action_high;

    return {worst < 0.05 && monotone && bounded,
            "max element error " + fmt("%.4f", worst) + (monotone ? ", elite best non-decreasing" : ", elite best DECREASED") +
                (bounded ? ", all actions in bounds" : ", action OUT OF BOUNDS")};
}

// ---------------------------------------------------------------------------- 7, 8

struct DeskResult {
    std::vector<SweepRow> pets, dr;
    double epsilon = 0.0;
    std::string pilot;
};

double mean_over(const std::vector<SweepRow>& rows, const std::function<bool(double)>& keep) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (keep(r.param)) {
            s += r.mean_reward;
            ++n;
        }
    return s / n;
}

const SweepRow& at(const std::vector<SweepRow>& rows, double param) {
    for (const auto& r : rows)
        if (std::abs(r.param - param) < 1e-12) return r;
    throw std::runtime_error("grid value missing from sweep");
}

// Trains on the nominal system, picks epsilon on a pilot sweep with disjoint seeds, then sweeps
// both algorithms on the configured grid. The pilot keeps the radii whose nominal-point mean is
// within 15% of PETS and takes the one with the best mean over the stressed points; if none
// qualifies it takes the best stressed mean overall.
DeskResult desk_run(const std::string& config_path, double nominal_value, const std::vector<double>& stressed,
                    const std::string& name) {
    const fs::path dir = g_work / name;
    fs::create_directories(dir);
    RunConfig cfg = load_config(config_path);
    write_file((dir / "config.resolved").string(), to_json(cfg));

    const auto t0 = std::chrono::steady_clock::now();
    const TrainRunResult trained = train_agent(cfg.train_config(), cfg.env, cfg.params);
    save_checkpoint(trained.model, (dir / "model.ckpt").string());
    std::string curve = "episode,total_reward\n";
    for (std::size_t e = 0; e < trained.episode_rewards.size(); ++e)
        curve += std::to_string(e) + "," + fmt("%.17g", trained.episode_rewards[e]) + "\n";
    write_file((dir / "learning_curve.csv").string(), curve);
    std::printf("  [%s] trained in %.0f s\n", name.c_str(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::fflush(stdout);

    SweepSpec pilot = cfg.sweep_spec();
    pilot.grid = {nominal_value};
    pilot.grid.insert(pilot.grid.end(), stressed.begin(), stressed.end());
    pilot.seeds_per_point = 3;
    pilot.master_seed = cfg.seed + 1000003;  // disjoint from the reported sweep's seeds
    pilot.algorithm = Algorithm::Pets;
    const auto pets_pilot = sweep(trained.model, pilot, cfg.params).rows;
    const double pets_nominal = at(pets_pilot, nominal_value).mean_reward;

    DeskResult out;
    double best_ok = -std::numeric_limits<double>::infinity(), best_any = best_ok;
    double eps_ok = -1.0, eps_any = -1.0;
    std::string pilot_csv = format_csv(pets_pilot);
    for (double eps : {0.01, 0.05, 0.1, 0.5}) {
        pilot.algorithm = Algorithm::DrPets;
        pilot.dr.epsilon = eps;
        const auto rows = sweep(trained.model, pilot, cfg.params).rows;
        pilot_csv += format_csv(rows).substr(std::string(kCsvHeader).size() + 1);
        const double stress = mean_over(rows, [&](double v) { return v != nominal_value; });
        const double nom = at(rows, nominal_value).mean_reward;
        if (stress > best_any) best_any = stress, eps_any = eps;
        if (std::abs(nom - pets_nominal) <= 0.15 * std::abs(pets_nominal) && stress > best_ok)
            best_ok = stress, eps_ok = eps;
    }
    write_file((dir / "pilot.csv").string(), pilot_csv);
    out.epsilon = eps_ok > 0.0 ? eps_ok : eps_any;
    out.pilot = eps_ok > 0.0 ? "nominal-feasible" : "no radius kept nominal within 15%";
    std::printf("  [%s] pilot picked epsilon %g (%s)\n", name.c_str(), out.epsilon, out.pilot.c_str());
    std::fflush(stdout);

    SweepSpec spec = cfg.sweep_spec();
    spec.algorithm = Algorithm::Pets;
    const SweepResult pets = sweep(trained.model, spec, cfg.params);
    spec.algorithm = Algorithm::DrPets;
    spec.dr.epsilon = out.epsilon;
    const SweepResult dr = sweep(trained.model, spec, cfg.params);
    out.pets = pets.rows;
    out.dr = dr.rows;

    std::vector<SweepRow> both = out.pets;
    both.insert(both.end(), out.dr.begin(), out.dr.end());
    export_result(both, (dir / "sweep.csv").string(), (dir / "sweep.svg").string(),
                  cfg.env == EnvKind::Pendulum ? "pendulum mass (kg)" : "pole length (m)");
    write_file((dir / "episodes.log").string(), format_episode_log(pets) + format_episode_log(dr));
    std::printf("%s", format_csv(both).c_str());
    std::printf("  [%s] total %.0f s\n", name.c_str(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return out;
}

// DR >= PETS at both stressed points, or within one (PETS) stderr at one and above at the other.
bool dominates(const DeskResult& r, double x1, double x2, std::string& detail) {
    const SweepRow &p1 = at(r.pets, x1), &d1 = at(r.dr, x1), &p2 = at(r.pets, x2), &d2 = at(r.dr, x2);
    const bool above1 = d1.mean_reward >= p1.mean_reward, above2 = d2.mean_reward >= p2.mean_reward;
    auto close = [](const SweepRow& p, const SweepRow& d) {
        return std::abs(d.mean_reward - p.mean_reward) <= std::max(p.stderr_reward, d.stderr_reward);
    };
    char buf[256];
    std::snprintf(buf, sizeof buf, "at %g: DR %.1f vs PETS %.1f; at %g: DR %.1f vs PETS %.1f", x1, d1.mean_reward,
                  p1.mean_reward, x2, d2.mean_reward, p2.mean_reward);
    detail = buf;
    return (above1 && above2) || (above1 && close(p2, d2)) || (above2 && close(p1, d1));
}

std::string g_source;

Outcome pendulum_desk() {
    const DeskResult r = desk_run(g_source + "/configs/pendulum_desk.json", 1.0, {1.25, 1.5}, "pendulum");
    std::string detail;
    const bool stressed = dominates(r, 1.25, 1.5, detail);
    const double pn = at(r.pets, 1.0).mean_reward, dn = at(r.dr, 1.0).mean_reward;
    const bool nominal = std::abs(dn - pn) <= 0.15 * std::abs(pn);
    char buf[160];
    std::snprintf(buf, sizeof buf, "; nominal DR %.1f vs PETS %.1f (%.1f%%); epsilon %g", dn, pn,
                  100.0 * std::abs(dn - pn) / std::abs(pn), r.epsilon);
    return {stressed && nominal, detail + buf};
}

Outcome cartpole_desk() {
    const DeskResult r = desk_run(g_source + "/configs/cartpole_desk.json", 0.5, {0.65, 0.8}, "cartpole");
    std::string detail;
    const bool stressed = dominates(r, 0.65, 0.8, detail);
    auto pooled = [](const std::vector<SweepRow>& rows) {
        const SweepRow &a = at(rows, 0.65), &b = at(rows, 0.8);
        return std::sqrt(0.5 * (a.stderr_reward * a.stderr_reward + b.stderr_reward * b.stderr_reward));
    };
    const double sp = pooled(r.pets), sd = pooled(r.dr);
    char buf[160];
    std::snprintf(buf, sizeof buf, "; pooled stderr DR %.2f vs PETS %.2f; epsilon %g", sd, sp, r.epsilon);
    return {stressed && sd <= sp, detail + buf};
}

// ---------------------------------------------------------------------------- 9

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DRPETS_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducibility() {
    const fs::path dir = g_work / "repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cfg = (dir / "run.json").string();
    write_file(cfg, R"({"env": "pendulum", "episodes": 3, "steps_per_episode": 30, "random_episodes": 1,
        "hidden": [16, 16], "epochs": 5, "ensemble_size": 3, "horizon": 6, "population": 20,
        "elite_count": 4, "cem_iterations": 2, "particles": 3, "grid": [0.75, 1.0, 1.25],
        "seeds_per_point": 2, "episode_horizon": 25, "seed": 12, "algorithm": "drpets",
        "epsilon": 0.1, "baseline": true, "workers": 2})");
    const fs::path a = dir / "a", b = dir / "b";
    if (run_cli("train --config " + cfg + " --out " + a.string()) != 0 ||
        run_cli("sweep --config " + cfg + " --out " + a.string()) != 0)
        return {false, "first run failed"};
    const std::string echo = (a / "config.resolved").string();
    if (run_cli("train --config " + echo + " --out " + b.string()) != 0 ||
        run_cli("sweep --config " + echo + " --out " + b.string()) != 0)
        return {false, "rerun from the echoed config failed"};

    std::size_t same = 0, differ = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const fs::path other = b / entry.path().filename();
        if (fs::exists(other) && read_file(entry.path().string()) == read_file(other.string())) ++same;
        else ++differ;
    }
    return {differ == 0 && same >= 6,
            std::to_string(same) + " files byte-identical, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::string work = "acceptance_out";
    g_source = DRPETS_SOURCE_DIR;
    app.add_option("--criteria", criteria, "criteria to run")->delimiter(',');
    app.add_option("--work", work, "scratch directory");
    CLI11_PARSE(app, argc, argv);
    g_work = fs::absolute(work);
    fs::create_directories(g_work);

    const std::vector<std::pair<const char*, Outcome (*)()>> all{
        {"zero-radius equivalence", zero_radius},   {"duality agreement", duality},
        {"dual optimality", dual_optimality},       {"score correctness", score_check},
        {"reward-to-go gradient estimator", chain_gradient}, {"planner sanity", cem_sanity},
        {"pendulum mass sweep direction", pendulum_desk},    {"cartpole length sweep direction", cartpole_desk},
        {"reproducibility", reproducibility}};

    int failures = 0;
    for (int c : criteria) {
        if (c < 1 || c > 9) {
            std::fprintf(stderr, "no criterion %d\n", c);
            return 2;
        }
        const auto& [name, fn] = all[static_cast<std::size_t>(c - 1)];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c, name, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
