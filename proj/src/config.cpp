#include "drpets/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <json.hpp>

#include "drpets/errors.hpp"
#include "drpets/textio.hpp"

namespace drpets {

using Json = nlohmann::ordered_json;

RunConfig RunConfig::defaults(EnvKind env) {
    RunConfig c;
    c.env = env;
    c.params = EnvParams::nominal(env);
    if (env == EnvKind::CartpoleSwingup) {
        c.perturbed_param = PerturbedParam::PoleLength;
        c.grid = {0.2, 0.35, 0.5, 0.65, 0.8};
    }
    return c;
}

namespace {

std::size_t get_count(const Json& v, const std::string& key) {
    if (!v.is_number_unsigned()) throw ConfigError(key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

double get_number(const Json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    return v.get<double>();
}

std::string get_string(const Json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError(key, "expected a string");
    return v.get<std::string>();
}

bool get_bool(const Json& v, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
    return v.get<bool>();
}

// Parsers of enum-like strings throw InvalidInput; re-raise with the key.
template <class F>
auto keyed(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const InvalidInput& e) {
        throw ConfigError(key, e.what());
    }
}

struct Field {
    std::string key;
    std::function<Json(const RunConfig&)> get;
    std::function<void(RunConfig&, const Json&)> set;
};

Field count_field(std::string key, std::size_t RunConfig::*m) {
    return {key, [m](const RunConfig& c) { return Json(c.*m); },
            [m, key](RunConfig& c, const Json& v) { c.*m = get_count(v, key); }};
}

Field number_field(std::string key, std::function<double&(RunConfig&)> ref) {
    return {key, [ref](const RunConfig& c) { return Json(ref(const_cast<RunConfig&>(c))); },
            [ref, key](RunConfig& c, const Json& v) { ref(c) = get_number(v, key); }};
}

Field planner_count(std::string key, std::size_t PlannerConfig::*m) {
    return {key, [m](const RunConfig& c) { return Json(c.planner.*m); },
            [m, key](RunConfig& c, const Json& v) { c.planner.*m = get_count(v, key); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"env", [](const RunConfig& c) { return Json(std::string(to_string(c.env))); },
                     [](RunConfig&, const Json&) {}});  // handled before the other keys
        f.push_back(number_field("pendulum_mass", [](RunConfig& c) -> double& { return c.params.pendulum_mass; }));
        f.push_back(number_field("pendulum_length", [](RunConfig& c) -> double& { return c.params.pendulum_length; }));
        f.push_back(number_field("pole_mass", [](RunConfig& c) -> double& { return c.params.pole_mass; }));
        f.push_back(number_field("pole_length", [](RunConfig& c) -> double& { return c.params.pole_length; }));
        f.push_back(number_field("cart_mass", [](RunConfig& c) -> double& { return c.params.cart_mass; }));
        f.push_back(number_field("gravity", [](RunConfig& c) -> double& { return c.params.gravity; }));
        f.push_back(number_field("dt", [](RunConfig& c) -> double& { return c.params.dt; }));
        f.push_back(number_field("action_low", [](RunConfig& c) -> double& { return c.params.action_low; }));
        f.push_back(number_field("action_high", [](RunConfig& c) -> double& { return c.params.action_high; }));
        f.push_back(number_field("max_angular_velocity",
                                 [](RunConfig& c) -> double& { return c.params.max_angular_velocity; }));

        f.push_back(count_field("episodes", &RunConfig::episodes));
        f.push_back(count_field("steps_per_episode", &RunConfig::steps_per_episode));
        f.push_back(count_field("random_episodes", &RunConfig::random_episodes));
        f.push_back(count_field("ensemble_size", &RunConfig::ensemble_size));
        f.push_back({"hidden", [](const RunConfig& c) { return Json(c.hidden); },
                     [](RunConfig& c, const Json& v) {
                         if (!v.is_array()) throw ConfigError("hidden", "expected an array of layer widths");
                         c.hidden.clear();
                         for (const Json& w : v) c.hidden.push_back(get_count(w, "hidden"));
                     }});
        f.push_back(count_field("epochs", &RunConfig::epochs));
        f.push_back(count_field("batch_size", &RunConfig::batch_size));
        f.push_back(number_field("learning_rate", [](RunConfig& c) -> double& { return c.learning_rate; }));
        f.push_back({"seed", [](const RunConfig& c) { return Json(c.seed); },
                     [](RunConfig& c, const Json& v) {
                         if (!v.is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
                         c.seed = v.get<std::uint64_t>();
                     }});

        f.push_back(planner_count("horizon", &PlannerConfig::horizon));
        f.push_back(planner_count("population", &PlannerConfig::population));
        f.push_back(planner_count("elite_count", &PlannerConfig::elite_count));
        f.push_back(planner_count("cem_iterations", &PlannerConfig::cem_iterations));
        f.push_back(number_field("smoothing", [](RunConfig& c) -> double& { return c.planner.smoothing; }));
        f.push_back(planner_count("particles", &PlannerConfig::particles));
        f.push_back(number_field("discount", [](RunConfig& c) -> double& { return c.planner.discount; }));
        f.push_back(number_field("initial_variance",
                                 [](RunConfig& c) -> double& { return c.planner.initial_variance; }));

        f.push_back(number_field("epsilon", [](RunConfig& c) -> double& { return c.dr.epsilon; }));
        f.push_back({"p", [](const RunConfig& c) { return Json(std::string(to_string(c.dr.p))); },
                     [](RunConfig& c, const Json& v) {
                         const std::string s = v.is_number() ? v.dump() : get_string(v, "p");
                         c.dr.p = keyed("p", [&] { return parse_p_norm(s); });
                     }});
        f.push_back({"baseline", [](const RunConfig& c) { return Json(c.dr.baseline); },
                     [](RunConfig& c, const Json& v) { c.dr.baseline = get_bool(v, "baseline"); }});
        f.push_back({"algorithm", [](const RunConfig& c) { return Json(std::string(to_string(c.algorithm))); },
                     [](RunConfig& c, const Json& v) {
                         const std::string s = get_string(v, "algorithm");
                         c.algorithm = keyed("algorithm", [&] { return parse_algorithm(s); });
                     }});

        f.push_back({"perturbed_param",
                     [](const RunConfig& c) { return Json(std::string(to_string(c.perturbed_param))); },
                     [](RunConfig& c, const Json& v) {
                         const std::string s = get_string(v, "perturbed_param");
                         c.perturbed_param = keyed("perturbed_param", [&] { return parse_perturbed_param(s); });
                     }});
        f.push_back({"grid", [](const RunConfig& c) { return Json(c.grid); },
                     [](RunConfig& c, const Json& v) {
                         if (!v.is_array()) throw ConfigError("grid", "expected an array of numbers");
                         c.grid.clear();
                         for (const Json& x : v) c.grid.push_back(get_number(x, "grid"));
                     }});
        f.push_back(count_field("seeds_per_point", &RunConfig::seeds_per_point));
        f.push_back(count_field("episode_horizon", &RunConfig::episode_horizon));
        f.push_back(count_field("workers", &RunConfig::workers));
        f.push_back({"checkpoint", [](const RunConfig& c) { return Json(c.checkpoint); },
                     [](RunConfig& c, const Json& v) { c.checkpoint = get_string(v, "checkpoint"); }});
        f.push_back({"retrain", [](const RunConfig& c) { return Json(c.retrain); },
                     [](RunConfig& c, const Json& v) { c.retrain = get_bool(v, "retrain"); }});
        return f;
    }();
    return table;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const Field& f : fields()) keys.push_back(f.key);
    return keys;
}

void RunConfig::validate() const {
    auto check = [](bool ok, const char* key, const char* what) {
        if (!ok) throw ConfigError(key, what);
    };
    check(params.pendulum_mass > 0, "pendulum_mass", "must be positive");
    check(params.pendulum_length > 0, "pendulum_length", "must be positive");
    check(params.pole_mass > 0, "pole_mass", "must be positive");
    check(params.pole_length > 0, "pole_length", "must be positive");
    check(params.cart_mass > 0, "cart_mass", "must be positive");
    check(params.gravity > 0, "gravity", "must be positive");
    check(params.dt > 0 && params.dt <= 0.1, "dt", "must lie in (0, 0.1]");
    check(params.action_low < params.action_high, "action_high", "must exceed action_low");
    check(params.max_angular_velocity > 0, "max_angular_velocity", "must be positive");
    check(episodes >= 1, "episodes", "must be at least 1");
    check(steps_per_episode >= 1, "steps_per_episode", "must be at least 1");
    check(ensemble_size >= 1, "ensemble_size", "must be at least 1");
    check(!hidden.empty(), "hidden", "needs at least one layer");
    for (std::size_t w : hidden) check(w >= 1, "hidden", "layer widths must be positive");
    check(epochs >= 1, "epochs", "must be at least 1");
    check(batch_size >= 1, "batch_size", "must be at least 1");
    check(learning_rate > 0 && std::isfinite(learning_rate), "learning_rate", "must be positive");
    check(planner.horizon >= 1, "horizon", "must be at least 1");
    check(planner.population >= 1, "population", "must be at least 1");
    check(planner.elite_count >= 1 && planner.elite_count <= planner.population, "elite_count",
          "must lie in [1, population]");
    check(planner.cem_iterations >= 1, "cem_iterations", "must be at least 1");
    check(planner.smoothing >= 0 && planner.smoothing <= 1, "smoothing", "must lie in [0, 1]");
    check(planner.particles >= 1, "particles", "must be at least 1");
    check(planner.discount >= 0 && planner.discount < 1, "discount", "must lie in [0, 1)");
    check(planner.initial_variance > 0, "initial_variance", "must be positive");
    check(dr.epsilon >= 0 && std::isfinite(dr.epsilon), "epsilon", "must be finite and non-negative");
    check(!grid.empty(), "grid", "must not be empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        check(grid[i] > grid[i - 1], "grid", "must be strictly increasing");
    for (double g : grid) check(g > 0, "grid", "values must be positive");
    check((env == EnvKind::Pendulum) == (perturbed_param == PerturbedParam::PendulumMass),
          "perturbed_param", "pendulum sweeps perturb pendulum_mass, cartpole sweeps pole_length");
    check(seeds_per_point >= 1, "seeds_per_point", "must be at least 1");
    check(episode_horizon >= 1, "episode_horizon", "must be at least 1");
    check(workers >= 1, "workers", "must be at least 1");
    // anything left is a cross-field rule of a component
    keyed("config", [&] {
        params.validate();
        train_config().validate();
        sweep_spec().validate();
        return 0;
    });
}

TrainRunConfig RunConfig::train_config() const {
    TrainRunConfig t;
    t.episodes = episodes;
    t.steps_per_episode = steps_per_episode;
    t.random_episodes = random_episodes;
    t.ensemble_size = ensemble_size;
    t.hidden = hidden;
    t.ensemble.epochs = epochs;
    t.ensemble.batch_size = batch_size;
    t.ensemble.learning_rate = learning_rate;
    t.planner = planner;
    if (retrain && algorithm == Algorithm::DrPets) t.dr = dr;
    t.master_seed = seed;
    return t;
}

SweepSpec RunConfig::sweep_spec() const {
    SweepSpec s;
    s.env = env;
    s.param = perturbed_param;
    s.grid = grid;
    s.seeds_per_point = seeds_per_point;
    s.algorithm = algorithm;
    s.dr = dr;
    s.planner = planner;
    s.episode_horizon = episode_horizon;
    s.master_seed = seed;
    s.workers = workers;
    return s;
}

RunConfig parse_config(const std::string& json_text) {
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config", std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config", "top level must be an object");

    EnvKind env = EnvKind::Pendulum;
    if (doc.contains("env")) {
        const std::string s = get_string(doc["env"], "env");
        env = keyed("env", [&] { return parse_env_kind(s); });
    }
    RunConfig c = RunConfig::defaults(env);

    const auto& table = fields();
    for (const auto& [key, value] : doc.items()) {
        auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
        if (it == table.end()) throw ConfigError(key, "unknown key");
        it->set(c, value);
    }
    return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string to_json(const RunConfig& config) {
    Json doc = Json::object();
    for (const Field& f : fields()) doc[f.key] = f.get(config);
    return doc.dump(2) + "\n";
}

}  // namespace drpets
