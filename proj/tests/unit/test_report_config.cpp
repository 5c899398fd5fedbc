#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "drpets/config.hpp"
#include "drpets/errors.hpp"
#include "drpets/report.hpp"

using namespace drpets;

namespace {

std::vector<SweepRow> sample_rows(Algorithm alg, double eps, double shift) {
    std::vector<SweepRow> rows;
    const double grid[] = {0.5, 0.75, 1.0, 1.25, 1.5};
    for (int i = 0; i < 5; ++i) {
        SweepRow r;
        r.param = grid[i];
        r.mean_reward = -100.0 - 37.123456789012345 * i + shift;
        r.stderr_reward = 0.1 * (i + 1) / 3.0;
        r.n_seeds = 10;
        r.algorithm = alg;
        r.epsilon = eps;
        r.p = PNorm::Two;
        rows.push_back(r);
    }
    return rows;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("CSV layout and round trip") {
    const auto rows = sample_rows(Algorithm::DrPets, 0.1, 0.0);
    const std::string csv = format_csv(rows);
    CHECK(csv.rfind("param,mean_reward,stderr,n_seeds,algorithm,epsilon,p\n", 0) == 0);
    CHECK(count(csv, "\n") == 6);
    CHECK(csv.find("0.10000000000000001") != std::string::npos);
    CHECK(parse_csv(csv) == rows);

    auto single = rows;
    single.resize(1);
    single[0].n_seeds = 1;
    single[0].stderr_reward = 0.0;
    single[0].single_seed = true;
    CHECK(parse_csv(format_csv(single)) == single);

    CHECK_THROWS_AS(parse_csv("param,mean\n"), InvalidInput);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\n1,2,3\n"), InvalidInput);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\n1,2,3,-4,pets,0,2\n"), InvalidInput);
}

TEST_CASE("SVG carries one series and one band per algorithm") {
    auto rows = sample_rows(Algorithm::Pets, 0.0, 0.0);
    const auto dr = sample_rows(Algorithm::DrPets, 0.05, 20.0);
    rows.insert(rows.end(), dr.begin(), dr.end());
    const std::string svg = render_svg(rows, "pendulum mass (kg)");
    CHECK(count(svg, "<polyline") == 2);
    CHECK(count(svg, "<polygon") == 2);
    CHECK(svg.find("pendulum mass (kg)") != std::string::npos);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(render_svg(rows, "x") == render_svg(rows, "x"));
}

TEST_CASE("export writes files and reports unwritable paths") {
    const auto dir = std::filesystem::temp_directory_path() / "drpets_report_test";
    std::filesystem::create_directories(dir);
    const auto rows = sample_rows(Algorithm::Pets, 0.0, 0.0);
    export_result(rows, (dir / "s.csv").string(), (dir / "s.svg").string());
    CHECK(std::filesystem::exists(dir / "s.svg"));
    CHECK_THROWS_AS(export_result(rows, (dir / "no" / "such" / "dir" / "s.csv").string()), IoError);
}

TEST_CASE("episode log records episodes and failure counts") {
    SweepResult r;
    r.rows = sample_rows(Algorithm::Pets, 0.0, 0.0);
    r.rows.resize(1);
    r.rows[0].n_seeds = 1;
    r.episodes = {{0.5, 0, 11, -120.5, true, "ok"}, {0.5, 1, 12, 0.0, false, "model diverged"}};
    std::istringstream is(format_episode_log(r));
    std::string line;
    std::vector<nlohmann::json> recs;
    while (std::getline(is, line)) recs.push_back(nlohmann::json::parse(line));
    REQUIRE(recs.size() == 3);
    CHECK(recs[0]["kind"] == "episode");
    CHECK(recs[0]["total_reward"] == -120.5);
    CHECK(recs[1]["status"] == "model diverged");
    CHECK(recs[1]["total_reward"].is_null());
    CHECK(recs[2]["kind"] == "point");
    CHECK(recs[2]["n_failed"] == 1);
    CHECK(recs[2]["n_ok"] == 1);
}

TEST_CASE("config defaults depend on the environment") {
    const RunConfig p = parse_config("{}");
    CHECK(p.env == EnvKind::Pendulum);
    CHECK(p.perturbed_param == PerturbedParam::PendulumMass);
    CHECK(p.grid == std::vector<double>{0.5, 0.75, 1.0, 1.25, 1.5});
    const RunConfig c = parse_config(R"({"env": "cartpole"})");
    CHECK(c.perturbed_param == PerturbedParam::PoleLength);
    CHECK(c.grid == std::vector<double>{0.2, 0.35, 0.5, 0.65, 0.8});
    CHECK(c.params.action_high == 10.0);
    CHECK(c.planner.horizon == 25);
    CHECK(c.planner.population == 400);
    c.validate();
    p.validate();
}

TEST_CASE("config errors name the key") {
    auto key_of = [](const std::string& text) {
        try {
            parse_config(text).validate();
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("<none>");
    };
    CHECK(key_of(R"({"horizn": 5})") == "horizn");
    CHECK(key_of(R"({"horizon": "long"})") == "horizon");
    CHECK(key_of(R"({"episodes": -3})") == "episodes");
    CHECK(key_of(R"({"p": "7"})") == "p");
    CHECK(key_of(R"({"algorithm": "ppo"})") == "algorithm");
    CHECK(key_of(R"({"env": "acrobot"})") == "env");
    CHECK(key_of(R"({"elite_count": 500})") == "elite_count");
    CHECK(key_of(R"({"discount": 1.0})") == "discount");
    CHECK(key_of(R"({"grid": [1.0, 0.5]})") == "grid");
    CHECK(key_of(R"({"epsilon": -0.5})") == "epsilon");
    CHECK(key_of(R"({"dt": 0.5})") == "dt");
    CHECK(key_of(R"({"env": "cartpole", "perturbed_param": "pendulum_mass"})") == "perturbed_param");
    CHECK(key_of("[1, 2]") == "config");
    CHECK(key_of("{not json") == "config");
    CHECK(key_of(R"({"seed": 5, "p": 1, "epsilon": 0.1})") == "<none>");
}

TEST_CASE("resolved config round trips") {
    RunConfig c = parse_config(R"({"env": "cartpole", "seed": 18446744073709551615, "epsilon": 0.1,
                                   "p": "inf", "algorithm": "drpets", "hidden": [32, 16],
                                   "learning_rate": 0.00037, "grid": [0.3, 0.7], "retrain": true})");
    const std::string text = to_json(c);
    const RunConfig d = parse_config(text);
    CHECK(to_json(d) == text);
    CHECK(d.seed == 18446744073709551615ull);
    CHECK(d.dr.p == PNorm::Infinity);
    CHECK(d.learning_rate == 0.00037);
    CHECK(d.train_config().dr.epsilon == 0.1);  // retrain uses the run's objective
    CHECK(d.sweep_spec().grid == std::vector<double>{0.3, 0.7});
    const auto keys = config_keys();
    const auto doc = nlohmann::json::parse(text);
    CHECK(doc.size() == keys.size());
    for (const auto& k : keys) CHECK(doc.contains(k));
}
