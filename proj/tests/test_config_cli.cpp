#include "fpchain/config.hpp"
#include "fpchain/errors.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fpchain;
namespace fs = std::filesystem;

namespace {

const char* kQuadratic2d = R"({
  "schema_version": 1,
  "grid": {"d": 2, "K": 1.0, "h": 0.25},
  "potential": {"kind": "quadratic", "hessian": [[1.0, 0.2], [0.2, 1.0]]},
  "sigma": 1.0,
  "decay": {"alpha": 2.0, "initial": {"kind": "box", "lo": [-1.0, -1.0], "hi": [0.0, 0.0]},
            "times": {"start": 0.0, "stop": 4.0, "count": 9}, "discrete_steps": 200},
  "contract": {"mode": "W1_graph", "nu": {"kind": "point", "cell": 0}, "eta": {"kind": "point", "cell": 63},
               "times": [0.1, 0.5, 1.0, 2.0]},
  "simulate": {"seed": 3, "n_paths": 2000, "horizon": 0.5, "initial": {"kind": "point", "x": [0.0, 0.0]},
               "coupling": "neighbor", "nu": {"kind": "point", "cell": 0}, "eta": {"kind": "point", "cell": 9}}
})";

const char* kFlat = R"({"schema_version": 1, "grid": {"d": 1, "K": 1.0, "h": 0.25}})";

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fpchain_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FPCHAIN_CLI) + " " + args + " --quiet > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WEXITSTATUS(raw);
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(Config, ParsesAndHashesDeterministically) {
    const RunConfig a = parse_config(kQuadratic2d), b = parse_config(kQuadratic2d);
    EXPECT_EQ(a.d, 2);
    EXPECT_EQ(a.hash, b.hash);
    EXPECT_EQ(a.decay->times.size(), 9u);
    EXPECT_DOUBLE_EQ(a.decay->times[1], 0.5);
    EXPECT_EQ(a.simulate->seed, 3u);
    const RunConfig c = parse_config(kQuadratic2d, 99);
    EXPECT_EQ(c.simulate->seed, 99u);
    EXPECT_NE(c.hash, a.hash);
    // key order and whitespace do not matter
    const RunConfig d = parse_config(R"({"grid":{"h":0.25,"K":1.0,"d":1},"schema_version":1})");
    EXPECT_EQ(d.hash, parse_config(kFlat).hash);
}

TEST(Config, Fnv1aReference) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Config, RejectsBadInput) {
    auto field_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("<accepted>");
    };
    EXPECT_EQ(field_of(R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.25}, "sigma": -1})"), "sigma");
    EXPECT_EQ(field_of(R"({"schema_version": 2, "grid": {"d": 1, "K": 1, "h": 0.25}})"), "schema_version");
    EXPECT_EQ(field_of(R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.25, "x": 1}})"), "grid.x");
    EXPECT_EQ(field_of(R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.3}})"), "grid");
    EXPECT_EQ(field_of(R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.25}, "extra": true})"), "extra");
    EXPECT_EQ(field_of(R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.25}, "scheme": "spectral"})"), "scheme");
    EXPECT_EQ(field_of(R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.25},
                           "decay": {"initial": {"kind": "box", "lo": [0], "hi": [1], "p": 2}}})"),
              "decay.initial.p");
    EXPECT_EQ(field_of(R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.25}, "decay": {"times": [1, 0.5]}})"),
              "decay.times");
    EXPECT_EQ(field_of("{not json"), "");
}

TEST(Config, AdditiveKappaDerived) {
    const RunConfig c = parse_config(R"({"schema_version": 1, "grid": {"d": 2, "K": 1, "h": 0.25},
        "potential": {"kind": "additive", "terms": [[0, 0, 0.5], [0, 1, 1.5]]}})");
    const RateTable r = make_rates(c);
    EXPECT_TRUE(r.additive);
    ASSERT_TRUE(r.kappa.has_value());
    EXPECT_DOUBLE_EQ(*r.kappa, 1.0);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("exit");
    const fs::path good = write(dir, "good.json", kQuadratic2d);
    const fs::path flat = write(dir, "flat.json", kFlat);
    const fs::path bad = write(dir, "bad.json", R"({"schema_version": 1, "grid": {"d": 1, "K": 1, "h": 0.25}, "sigma": -1})");
    const fs::path w2 = write(dir, "w2.json", R"({"schema_version": 1, "grid": {"d": 2, "K": 1, "h": 0.25},
        "potential": {"kind": "quadratic", "hessian": [[1.0, 0.2], [0.2, 1.0]]}, "contract": {"mode": "W2"}})");
    const std::string out = " --out " + (dir / "out").string();

    EXPECT_EQ(run_cli("certify --config " + good.string() + out), 0);
    EXPECT_EQ(run_cli("certify --config " + flat.string() + out), 2);
    EXPECT_EQ(run_cli("certify --config " + bad.string() + out), 1);
    EXPECT_EQ(run_cli("contract --config " + w2.string() + out), 3);
    EXPECT_EQ(run_cli("decay --config " + flat.string() + out), 1);  // no decay block
    EXPECT_EQ(run_cli("frobnicate --config " + good.string()), 1);
}

TEST(Cli, OutputsEmbedHashAndAreReproducible) {
    const fs::path dir = scratch("repro");
    const fs::path cfg = write(dir, "cfg.json", kQuadratic2d);
    const std::string hash = hex64(parse_config(kQuadratic2d).hash);
    for (const char* run : {"a", "b"}) {
        const std::string out = " --out " + (dir / run).string();
        for (const char* cmd : {"certify", "decay", "contract", "simulate"})
            ASSERT_EQ(run_cli(std::string(cmd) + " --config " + cfg.string() + out), 0) << cmd;
    }
    for (const char* file : {"certificate.json", "decay.csv", "decay_discrete.csv", "contract.csv",
                             "simulate_terminal.csv", "simulate_coupled.csv"}) {
        const std::string a = slurp(dir / "a" / file), b = slurp(dir / "b" / file);
        EXPECT_FALSE(a.empty()) << file;
        EXPECT_EQ(a, b) << file;
        EXPECT_NE(a.find(hash), std::string::npos) << file;
    }

    // decay rows: ratio <= 1 + 1e-8
    std::istringstream rows(slurp(dir / "a" / "decay.csv"));
    std::string line;
    int checked = 0;
    while (std::getline(rows, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        EXPECT_LE(std::stod(line.substr(line.rfind(',') + 1)), 1.0 + 1e-8);
        ++checked;
    }
    EXPECT_EQ(checked, 9);

    // a different seed changes the simulation output
    ASSERT_EQ(run_cli("simulate --seed 4 --config " + cfg.string() + " --out " + (dir / "c").string()), 0);
    EXPECT_NE(slurp(dir / "a" / "simulate_terminal.csv"), slurp(dir / "c" / "simulate_terminal.csv"));
}
