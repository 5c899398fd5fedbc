#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "drpets/textio.hpp"

namespace fs = std::filesystem;
using drpets::read_file;
using drpets::write_file;

namespace {

const fs::path kWork = fs::temp_directory_path() / "drpets_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(DRPETS_BIN) + " " + args + " > " + (kWork / "last.out").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string last_output() { return read_file((kWork / "last.out").string()); }

std::string tiny_config() {
    const std::string path = (kWork / "tiny.json").string();
    write_file(path, R"({"env": "pendulum", "episodes": 2, "steps_per_episode": 15, "hidden": [8, 8],
        "epochs": 2, "ensemble_size": 2, "horizon": 4, "population": 10, "elite_count": 3,
        "cem_iterations": 2, "particles": 2, "grid": [0.8, 1.2], "seeds_per_point": 2,
        "episode_horizon": 6, "seed": 4})");
    return path;
}

struct Fresh {
    Fresh() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

}  // namespace

TEST_CASE_FIXTURE(Fresh, "selftest passes") {
    CHECK(run("selftest") == 0);
    const std::string out = last_output();
    CHECK(out.find("FAIL") == std::string::npos);
    CHECK(out.find("oracle agreement") != std::string::npos);
    CHECK(out.find("score finite differences") != std::string::npos);
    CHECK(out.find("dual optimality") != std::string::npos);
    CHECK(out.find("epsilon = 0 equivalence") != std::string::npos);
}

TEST_CASE_FIXTURE(Fresh, "validation errors exit 1 and name the key") {
    const std::string bad = (kWork / "bad.json").string();
    write_file(bad, R"({"population": 10, "elite_count": 3, "particels": 4})");
    CHECK(run("train --config " + bad + " --out " + (kWork / "x").string()) == 1);
    CHECK(last_output().find("particels") != std::string::npos);
    CHECK(run("train --p 3 --out " + (kWork / "x").string()) == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("sweep --config " + tiny_config() + " --out " + (kWork / "empty").string()) == 1);
    CHECK(last_output().find("checkpoint") != std::string::npos);
}

TEST_CASE_FIXTURE(Fresh, "train is deterministic and the echoed config reproduces it") {
    const std::string cfg = tiny_config();
    const fs::path a = kWork / "a", b = kWork / "b", c = kWork / "c";
    REQUIRE(run("train --config " + cfg + " --seed 7 --out " + a.string()) == 0);
    REQUIRE(run("train --config " + cfg + " --seed 7 --out " + b.string()) == 0);
    CHECK(read_file((a / "model.ckpt").string()) == read_file((b / "model.ckpt").string()));
    REQUIRE(run("train --config " + (a / "config.resolved").string() + " --out " + c.string()) == 0);
    CHECK(read_file((a / "model.ckpt").string()) == read_file((c / "model.ckpt").string()));
    CHECK(read_file((a / "config.resolved").string()) == read_file((c / "config.resolved").string()));
    CHECK(read_file((a / "config.resolved").string()).find("\"seed\": 7") != std::string::npos);
}

TEST_CASE_FIXTURE(Fresh, "zero-radius DR-PETS sweep writes the PETS CSV") {
    const std::string cfg = tiny_config();
    const fs::path m = kWork / "m";
    REQUIRE(run("train --config " + cfg + " --out " + m.string()) == 0);
    const std::string ckpt = (m / "model.ckpt").string();
    const std::string cfg2 = (kWork / "sweep.json").string();
    std::string text = read_file(cfg);
    text.insert(text.rfind('}'), ", \"checkpoint\": \"" + ckpt + "\"");
    write_file(cfg2, text);
    const fs::path p = kWork / "pets", d = kWork / "dr";
    REQUIRE(run("sweep --config " + cfg2 + " --algorithm pets --out " + p.string()) == 0);
    REQUIRE(run("sweep --config " + cfg2 + " --algorithm drpets --epsilon 0 --workers 2 --out " + d.string()) == 0);
    CHECK(read_file((p / "sweep.csv").string()) == read_file((d / "sweep.csv").string()));
    for (const char* f : {"config.resolved", "sweep.csv", "sweep.svg", "episodes.log"})
        CHECK(fs::exists(p / f));

    // rerun from the echo into a fresh directory: identical outputs
    const fs::path r = kWork / "rerun";
    REQUIRE(run("sweep --config " + (d / "config.resolved").string() + " --out " + r.string()) == 0);
    for (const char* f : {"config.resolved", "sweep.csv", "sweep.svg", "episodes.log"})
        CHECK(read_file((d / f).string()) == read_file((r / f).string()));

    REQUIRE(run("plot " + (p / "sweep.csv").string() + " " + (d / "sweep.csv").string() + " --out " +
                (kWork / "plot").string()) == 0);
    CHECK(fs::exists(kWork / "plot" / "sweep.svg"));
}
