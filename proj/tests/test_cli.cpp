#include "support.hpp"

#include "kcdc/cli.hpp"
#include "kcdc/config.hpp"
#include "kcdc/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

using namespace kcdc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
    {
        path = fs::temp_directory_path() / ("kcdc-test-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s)
{
    return s.substr(0, s.find('\n'));
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("presets load and validate")
{
    for (const auto& name : preset_names()) {
        const auto cfg = preset(name);
        CHECK_NOTHROW(cfg.validate());
        CHECK_NOTHROW(make_model(cfg));
    }
    const auto lv1 = preset("lv1-paper");
    CHECK(lv1.grid.size() == 4);
    CHECK(lv1.u0 == std::vector<double>{1.0, 1.9, 0.5});
    CHECK(preset("lv2-paper").model == ModelKind::Lv2);
    CHECK_THROWS_AS(preset("lv3"), ValidationError);
}

TEST_CASE("config round trip")
{
    for (const auto& name : preset_names()) {
        const auto cfg = preset(name);
        CHECK(parse_config(emit_config(cfg)) == cfg);
    }

    testing::Gen g(61);
    for (int trial = 0; trial < 100; ++trial) {
        ExperimentConfig cfg;
        const int kind = trial % 3;
        cfg.model = kind == 0 ? ModelKind::Lv1 : kind == 1 ? ModelKind::Lv2 : ModelKind::Custom;
        cfg.u0 = {g.uniform(0.1, 2), g.uniform(0.1, 2), g.uniform(0.1, 2)};
        if (cfg.model == ModelKind::Custom) {
            cfg.rates = {g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1)};
            cfg.interaction.assign(3, std::vector<double>(3));
            for (auto& row : cfg.interaction)
                for (auto& x : row)
                    x = g.uniform(-1, 1);
        }
        cfg.t_end = g.uniform(1, 200);
        cfg.dt = g.uniform(1e-3, 0.5);
        cfg.corrections = trial % 5;
        if (trial % 2)
            cfg.nodes = 2 + trial % 10;
        cfg.reference_tol = std::pow(10.0, -g.uniform(6, 14));
        cfg.target = g.uniform(1e-12, 1e-6);
        cfg.saturation_ratio = g.uniform(1.01, 3);
        cfg.max_halvings = trial % 9;
        cfg.stop_metric = trial % 3 == 0 ? ErrorMetric::Solution : trial % 3 == 1 ? ErrorMetric::H1 : ErrorMetric::H2;
        for (int c = 0; c < trial % 4; ++c)
            cfg.grid.push_back({c, 2 * c + 3 + trial % 2, c % 2 ? std::optional<double>(g.uniform(0.01, 0.2)) : std::nullopt});
        cfg.output_dir = "out/run" + std::to_string(trial);
        const auto back = parse_config(emit_config(cfg));
        CHECK(back == cfg);
    }
}

TEST_CASE("config rejections")
{
    const std::string base = R"({"model": "lv1", "u0": [1, 1.9, 0.5])";
    CHECK_NOTHROW(parse_config(base + "}"));
    try {
        parse_config(base + R"(, "step": 0.1})");
        FAIL("unknown key accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(base + R"(, "node_distribution": "chebyshev"})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"model": "lv7", "u0": [1, 1, 1]})"), ValidationError);
    CHECK_THROWS_AS(parse_config(base + R"(, "dt": -0.1})"), ValidationError);
    CHECK_THROWS_AS(parse_config(base + R"(, "rates": [1, 1, 1]})"), ValidationError);
    CHECK_THROWS_AS(parse_config(base + R"(, "grid": [{"corrections": 1, "nodes": 5, "h": 0.1}]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_config("{not json"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"model": "lv2", "u0": [1, -1, 1]})"), ValidationError);
    CHECK_THROWS_AS(load_config("/nonexistent/kcdc.json"), IoError);
}

TEST_CASE("integrate writes both files; S=0 equals --no-cdc")
{
    TempDir a("s0"), b("nocdc"), c("cdc");
    const std::vector<std::string> common = {"integrate", "--preset", "lv1-paper", "--t-end", "1", "--dt", "0.05"};
    auto args = common;
    args.insert(args.end(), {"--corrections", "0", "--output-dir", a.path.string()});
    const auto r1 = run(args);
    REQUIRE(r1.code == kExitOk);
    args = common;
    args.insert(args.end(), {"--no-cdc", "--output-dir", b.path.string()});
    REQUIRE(run(args).code == kExitOk);

    const auto t1 = slurp(a.path / "trajectory.csv");
    CHECK(first_line(t1) == "t,u1,u2,u3");
    CHECK(t1 == slurp(b.path / "trajectory.csv"));
    CHECK(slurp(a.path / "invariants.csv") == slurp(b.path / "invariants.csv"));
    CHECK(first_line(slurp(a.path / "invariants.csv")) == "t,H1_err,H2_err");
    // header + 21 rows
    CHECK(std::count(t1.begin(), t1.end(), '\n') == 22);

    args = common;
    args.insert(args.end(), {"--output-dir", c.path.string()});
    const auto r3 = run(args);
    REQUIRE(r3.code == kExitOk);
    CHECK(r3.out.find("CDC") != std::string::npos);
    CHECK(slurp(c.path / "trajectory.csv") != t1);
}

TEST_CASE("integrate with a config file and a model without invariants")
{
    TempDir d("custom");
    const auto cfg_path = d.path / "custom.json";
    std::ofstream(cfg_path) << R"({"model": "custom", "rates": [1, -1, 0.5],
        "interaction": [[0, -1, 0], [1, 0, 0], [0, 0, -0.5]], "u0": [0.5, 0.5, 0.5],
        "t_end": 0.5, "dt": 0.1, "output_dir": ")" + d.path.string() + "\"}";
    const auto r = run({"integrate", "--config", cfg_path.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(d.path / "trajectory.csv"));
    CHECK(!fs::exists(d.path / "invariants.csv"));
    CHECK(r.err.find("no invariants") != std::string::npos);

    CHECK(run({"converge", "--config", cfg_path.string(), "--cell", "1:5"}).code == kExitValidation);
}

TEST_CASE("converge writes a table")
{
    TempDir d("conv");
    const auto r = run({"converge", "--model", "lv2", "--t-end", "5", "--cell", "1:5:0.1", "--cell", "0:2:0.05",
                        "--target", "1e-300", "--output-dir", d.path.string()});
    REQUIRE(r.code == kExitOk);
    const auto csv = slurp(d.path / "convergence.csv");
    CHECK(first_line(csv) == "S,n,dt,l2_u,l2_H1,l2_H2,order_u,order_H1,order_H2,wall_s");
    CHECK(csv.find(",nan,nan,nan,") != std::string::npos);
    CHECK(r.out.find("S=1 n=5") != std::string::npos);
    CHECK(r.out.find("S=0 n=2") != std::string::npos);
}

TEST_CASE("exit codes")
{
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run({"integrate", "--help"}).out.find("--no-cdc") != std::string::npos);
    CHECK(run({}).code == kExitValidation);
    CHECK(run({"frobnicate"}).code == kExitValidation);

    const auto s1 = run({"structure", "--model", "lv1", "--samples", "200"});
    CHECK(s1.code == kExitOk);
    CHECK(s1.out.find("ok") != std::string::npos);
    const auto s2 = run({"structure", "--model", "lv2", "--samples", "200"});
    CHECK(s2.code == kExitOk);
    CHECK(s2.out.find("nambu") != std::string::npos);

    // abc must equal -1
    CHECK(run({"structure", "--params", "-1,-1,-2,0,1,-1"}).code == kExitValidation);
    CHECK(run({"integrate", "--model", "lv9"}).code == kExitValidation);
    CHECK(run({"converge", "--preset", "lv1-paper", "--cell", "1"}).code == kExitValidation);
    CHECK(run({"integrate", "--dt", "0.03", "--t-end", "1"}).code == kExitValidation);
    CHECK(run({"integrate", "--config", "/nonexistent/x.json"}).code == kExitValidation);

    TempDir d("io");
    const auto blocker = d.path / "file";
    std::ofstream(blocker) << "x";
    const auto io = run({"integrate", "--t-end", "0.1", "--output-dir", (blocker / "sub").string()});
    CHECK(io.code == kExitIo);
    CHECK(io.err.find("i/o error") != std::string::npos);
}

}
