// drpets: collect / train / sweep / plot / selftest.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drpets/bench.hpp"
#include "drpets/config.hpp"
#include "drpets/errors.hpp"
#include "drpets/report.hpp"
#include "drpets/selftest.hpp"
#include "drpets/textio.hpp"

namespace fs = std::filesystem;
using namespace drpets;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct Overrides {
    std::string config;
    std::string env;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::string p;
    std::string algorithm;
    std::optional<std::size_t> workers;
    std::string out = "out";
};

// Missing checkpoint is a usage problem, not a runtime failure.
struct MissingCheckpoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--env", o.env, "pendulum or cartpole (when no config file is given)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--epsilon", o.epsilon, "ambiguity radius");
    cmd->add_option("--p", o.p, "ball order: 1, 2 or inf");
    cmd->add_option("--algorithm", o.algorithm, "pets or drpets");
    cmd->add_option("--workers", o.workers, "parallel sweep episodes");
    cmd->add_option("--out", o.out, "output directory");
}

RunConfig resolve(const Overrides& o) {
    RunConfig c;
    if (!o.config.empty()) {
        c = load_config(o.config);
        if (!o.env.empty() && parse_env_kind(o.env) != c.env)
            throw ConfigError("env", "--env disagrees with the config file");
    } else {
        c = RunConfig::defaults(o.env.empty() ? EnvKind::Pendulum : parse_env_kind(o.env));
    }
    if (o.seed) c.seed = *o.seed;
    if (o.epsilon) c.dr.epsilon = *o.epsilon;
    if (!o.p.empty()) c.dr.p = parse_p_norm(o.p);
    if (!o.algorithm.empty()) c.algorithm = parse_algorithm(o.algorithm);
    if (o.workers) c.workers = *o.workers;
    c.validate();
    return c;
}

fs::path prepare_out(const Overrides& o, const RunConfig& c) {
    const fs::path out(o.out);
    fs::create_directories(out);
    write_file((out / "config.resolved").string(), to_json(c));
    return out;
}

std::string x_label(const RunConfig& c) {
    return c.perturbed_param == PerturbedParam::PendulumMass ? "pendulum mass (kg)" : "pole length (m)";
}

int cmd_collect(const Overrides& o) {
    const RunConfig c = resolve(o);
    const fs::path out = prepare_out(o, c);
    const TransitionDataset data =
        collect_random(c.env, c.params, c.random_episodes, c.steps_per_episode, c.seed);
    std::string text;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::string line;
        for (Eigen::Index d = 0; d < data.observations[i].size(); ++d)
            line += format_double(data.observations[i][d]) + ' ';
        line += format_double(data.actions[i]);
        for (Eigen::Index d = 0; d < data.next_observations[i].size(); ++d)
            line += ' ' + format_double(data.next_observations[i][d]);
        text += line + '\n';
    }
    write_file((out / "transitions.txt").string(), text);
    std::printf("collected %zu transitions -> %s\n", data.size(), (out / "transitions.txt").c_str());
    return kOk;
}

EnsembleModel train_into(const RunConfig& c, const fs::path& out) {
    const TrainRunResult r = train_agent(c.train_config(), c.env, c.params);
    save_checkpoint(r.model, (out / "model.ckpt").string());
    std::string curve = "episode,total_reward\n";
    for (std::size_t e = 0; e < r.episode_rewards.size(); ++e)
        curve += std::to_string(e) + ',' + format_double(r.episode_rewards[e]) + '\n';
    write_file((out / "learning_curve.csv").string(), curve);
    return r.model;
}

int cmd_train(const Overrides& o) {
    const RunConfig c = resolve(o);
    const fs::path out = prepare_out(o, c);
    train_into(c, out);
    std::printf("trained %zu-member ensemble -> %s\n", c.ensemble_size, (out / "model.ckpt").c_str());
    return kOk;
}

int cmd_sweep(const Overrides& o) {
    const RunConfig c = resolve(o);
    const fs::path ckpt = c.checkpoint.empty() ? fs::path(o.out) / "model.ckpt" : fs::path(c.checkpoint);
    if (!c.retrain && !fs::exists(ckpt))
        throw MissingCheckpoint("no checkpoint at " + ckpt.string() + " (run `drpets train` first)");
    const fs::path out = prepare_out(o, c);
    const EnsembleModel model = c.retrain ? train_into(c, out) : load_checkpoint(ckpt.string());
    const SweepResult r = sweep(model, c.sweep_spec(), c.params);
    export_result(r.rows, (out / "sweep.csv").string(), (out / "sweep.svg").string(), x_label(c));
    write_file((out / "episodes.log").string(), format_episode_log(r));
    std::fputs(format_csv(r.rows).c_str(), stdout);
    return kOk;
}

int cmd_plot(const Overrides& o, const std::vector<std::string>& inputs) {
    std::vector<SweepRow> rows;
    for (const auto& path : inputs) {
        const auto part = parse_csv(read_file(path));
        rows.insert(rows.end(), part.begin(), part.end());
    }
    fs::create_directories(o.out);
    const std::string label = o.env == "cartpole" ? "pole length (m)" : o.env.empty() ? "param" : "pendulum mass (kg)";
    write_file((fs::path(o.out) / "sweep.svg").string(), render_svg(rows, label));
    std::printf("plotted %zu rows -> %s\n", rows.size(), (fs::path(o.out) / "sweep.svg").c_str());
    return kOk;
}

int cmd_selftest(std::uint64_t seed) {
    const auto rows = run_selftest(seed);
    std::fputs(format_selftest(rows).c_str(), stdout);
    for (const auto& r : rows)
        if (!r.pass) return kRuntime;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-based planning with PETS and distributionally robust PETS"};
    app.require_subcommand(1);
    Overrides o;
    std::vector<std::string> plot_inputs;
    std::uint64_t selftest_seed = 0;

    auto* collect = app.add_subcommand("collect", "random-action transitions");
    auto* trainc = app.add_subcommand("train", "train an ensemble with MPC data collection");
    auto* sweepc = app.add_subcommand("sweep", "perturbation sweep with a trained ensemble");
    auto* plot = app.add_subcommand("plot", "SVG from one or more sweep CSVs");
    auto* self = app.add_subcommand("selftest", "mathematical oracle suites");
    for (auto* c : {collect, trainc, sweepc}) add_common(c, o);
    plot->add_option("csv", plot_inputs, "sweep CSV files")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", o.out, "output directory");
    plot->add_option("--env", o.env, "axis label: pendulum or cartpole");
    self->add_option("--seed", selftest_seed, "seed of the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*collect) return cmd_collect(o);
        if (*trainc) return cmd_train(o);
        if (*sweepc) return cmd_sweep(o);
        if (*plot) return cmd_plot(o, plot_inputs);
        return cmd_selftest(selftest_seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kInvalid;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kInvalid;
    } catch (const MissingCheckpoint& e) {
        std::cerr << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
