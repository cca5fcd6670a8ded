#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "deblur/config.hpp"
#include "deblur/image_io.hpp"
#include "deblur/pipeline.hpp"
#include "helpers.hpp"

using namespace deblur;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / "deblur_cli_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p)
{
    return nlohmann::json::parse(slurp(p));
}

/// Small generators and a handful of iterations.
RunConfig toy_config(const fs::path& out)
{
    RunConfig c;
    c.image_arch.widths = {8, 8, 8};
    c.image_arch.kernel_sizes = {3, 3, 3};
    c.image_arch.up_kernel_sizes = {3, 3, 3};
    c.kernel_arch.hidden_width = 16;
    c.kernel_size = PixelSize{5, 5};
    c.solver.max_iters = 4;
    c.solver.window = 2;
    c.solver.trace_every = 1;
    c.synth.image_size = {34, 34};
    c.synth.kernel_size = 5;
    c.noise = NoiseSpec::preset(NoiseKind::gaussian, "fig_low");
    c.save_checkpoint = false;
    c.paths.out = out;
    return c;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(DEBLUR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("config survives a json round trip")
{
    RunConfig c = toy_config("somewhere");
    c.seed = 17;
    c.objective.lambda_x = 3e-5;
    c.objective.reg_kind = RegKind::l1;
    c.kernel_arch.model = KernelModel::mlp;
    c.es_profile = EsProfile::high_noise;
    c.sweep.axis = SweepAxis::noise;
    const RunConfig back = RunConfig::from_json(c.to_json());
    CHECK(back == c);

    const fs::path dir = fresh_dir("roundtrip");
    c.paths.out = dir / "out";
    c.save(dir / "c.json");
    CHECK(RunConfig::load(dir / "c.json") == c);
}

TEST_CASE("unknown keys and bad values are rejected")
{
    const nlohmann::json base = RunConfig().to_json();
    auto with = [&](const std::function<void(nlohmann::json&)>& edit) {
        nlohmann::json j = base;
        edit(j);
        return j;
    };
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["lamda"] = 1; })), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["solver"]["lr"] = 1; })), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["ablation"]["loss"] = "l2"; })), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["ablation"]["reg_kind"] = "tv"; })), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["schema_version"] = 2; })), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["solver"]["lr_kernel"] = 1.0; })), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["synth"]["kernel_size"] = 12; })), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(with([](auto& j) { j["es_profile"] = "medium"; })), ConfigError);

    const fs::path dir = fresh_dir("badjson");
    std::ofstream(dir / "broken.json") << "{ \"seed\": ";
    CHECK_THROWS_AS(RunConfig::load(dir / "broken.json"), ConfigError);
    CHECK_THROWS_AS(RunConfig::load(dir / "missing.json"), IoError);
}

TEST_CASE("seed and early-stopping profile propagate")
{
    const RunConfig c = RunConfig::from_json({{"seed", 9}, {"es_profile", "high_noise"}});
    CHECK(c.solver.seed == 9);
    CHECK(c.noise.seed == 9);
    CHECK(c.solver.patience == 200);
    CHECK(RunConfig::from_json(nlohmann::json::object()).solver.patience == 500);
    const RunConfig explicit_patience =
        RunConfig::from_json({{"es_profile", "high_noise"}, {"solver", {{"patience", 42}}}});
    CHECK(explicit_patience.solver.patience == 42);

    RunConfig d;
    d.apply_seed(5);
    d.apply_es_profile(EsProfile::high_noise);
    CHECK(d.seed == 5);
    CHECK(d.solver.seed == 5);
    CHECK(d.noise.seed == 5);
    CHECK(d.solver.patience == 200);
}

TEST_CASE("method hash ignores the seed")
{
    RunConfig a, b;
    b.apply_seed(123);
    CHECK(a.method_hash() == b.method_hash());
    b.objective.lambda_x = 1e-6;
    CHECK(a.method_hash() != b.method_hash());
}

TEST_CASE("relative paths resolve against the config file")
{
    const fs::path dir = fresh_dir("relpaths");
    std::ofstream(dir / "c.json") << R"({"paths": {"input": "img/y.png", "out": "results"}})";
    const RunConfig c = RunConfig::load(dir / "c.json");
    CHECK(c.paths.input == dir / "img/y.png");
    CHECK(c.paths.out == dir / "results");
}

TEST_CASE("synth is deterministic for a seed")
{
    const fs::path dir = fresh_dir("synth_det");
    RunConfig c = toy_config(dir / "a");
    c.apply_seed(4);
    const fs::path a = cmd_synth(c);
    c.paths.out = dir / "b";
    const fs::path b = cmd_synth(c);
    for (const char* f : {"clean.png", "blurry.png", "kernel.csv", "kernel.png"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    c.paths.out = dir / "c";
    c.apply_seed(5);
    const fs::path other = cmd_synth(c);
    CHECK(slurp(a / "blurry.png") != slurp(other / "blurry.png"));

    const nlohmann::json spec = read_json(a / "spec.json");
    CHECK(spec.at("seed") == 4);
    CHECK(spec.contains("groundtruth_offset"));
}

TEST_CASE("a delta kernel without noise yields the groundtruth crop")
{
    const fs::path dir = fresh_dir("synth_delta");
    RunConfig c = toy_config(dir);
    c.synth.kernel = "delta";
    c.synth.kernel_size = 7;
    c.noise = NoiseSpec{};
    const CaseData d = load_case(cmd_synth(c));
    REQUIRE(d.groundtruth);
    REQUIRE(d.kernel);
    CHECK(d.groundtruth_offset == Shift{3, 3});
    CHECK(d.blurry.height() == 34);
    CHECK(d.clean->height() == 40);
    CHECK(testing::max_abs_diff(d.blurry, *d.groundtruth) < 1e-12);
}

TEST_CASE("run writes a report with metrics only when groundtruth exists")
{
    const fs::path dir = fresh_dir("run");
    RunConfig c = toy_config(dir / "cases");
    const fs::path case_dir = cmd_synth(c);

    c.paths.case_dir = case_dir;
    c.paths.out = dir / "with";
    const DeblurOutcome o = cmd_run(c);
    REQUIRE(o.metrics);
    const nlohmann::json rep = read_json(dir / "with/report.json");
    CHECK(rep.contains("metrics"));
    CHECK(rep.contains("baseline"));
    CHECK(rep.at("method_hash") == c.method_hash());
    for (const char* f : {"x_hat.png", "kernel.csv", "kernel.png", "trace.csv", "config.resolved.json"})
        CHECK(fs::exists(dir / "with" / f));
    CHECK(read_image(dir / "with/x_hat.png").height() == 34);

    RunConfig bare = c;
    bare.paths.case_dir.clear();
    bare.paths.input = case_dir / "blurry.png";
    bare.paths.out = dir / "without";
    const DeblurOutcome n = cmd_run(bare);
    CHECK_FALSE(n.metrics);
    const nlohmann::json rep2 = read_json(dir / "without/report.json");
    CHECK_FALSE(rep2.contains("metrics"));
    CHECK_FALSE(rep2.contains("es_gap"));
}

TEST_CASE("eval scores matching files and records failures")
{
    const fs::path dir = fresh_dir("eval");
    fs::create_directories(dir / "est");
    fs::create_directories(dir / "gt");
    for (int i = 0; i < 3; ++i) {
        const ImageGrid img = testing::random_image(1, 32, 32, 70 + i);
        const std::string name = "img" + std::to_string(i) + ".png";
        write_image(dir / "est" / name, img, 16);
        write_image(dir / "gt" / name, img, 16);
    }
    write_image(dir / "gt/only_here.png", testing::random_image(1, 32, 32, 80));
    RunConfig c;
    c.paths.estimates = dir / "est";
    c.paths.groundtruth_dir = dir / "gt";
    c.paths.out = dir / "out";

    auto rows = cmd_eval(c);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(r.metrics.psnr == kPsnrCap);
    }
    const std::string csv = slurp(dir / "out/metrics.csv");
    CHECK(csv.find("mean") != std::string::npos);

    std::ofstream(dir / "est/img1.png", std::ios::binary) << "not a png";
    rows = cmd_eval(c);
    int errors = 0;
    for (const auto& r : rows)
        errors += r.status == "error";
    CHECK(errors == 1);

    RunConfig none = c;
    none.paths.groundtruth_dir = fresh_dir("eval_empty");
    CHECK_THROWS_AS(cmd_eval(none), IoError);
}

TEST_CASE("kernel size levels span true size to half the observation")
{
    const auto levels = kernel_size_levels({13, 13}, {256, 256}, 5);
    REQUIRE(levels.size() == 5);
    CHECK(levels.front() == PixelSize{13, 13});
    CHECK(levels.back() == PixelSize{128, 128});
    for (std::size_t i = 1; i < levels.size(); ++i)
        CHECK(levels[i].rows > levels[i - 1].rows);
    CHECK(kernel_size_levels({13, 13}, {255, 255}, 3).back() == PixelSize{128, 128});

    const SweepSettings s;
    const auto has = [&](double v) { return std::find(s.lambdas.begin(), s.lambdas.end(), v) != s.lambdas.end(); };
    CHECK(has(1e-5));
    CHECK(has(1e-6));
}

TEST_CASE("worker count follows the environment")
{
    ::setenv("DEBLUR_NUM_WORKERS", "3", 1);
    CHECK(worker_count() == 3);
    ::setenv("DEBLUR_NUM_WORKERS", "zero", 1);
    CHECK(worker_count() >= 1);
    ::unsetenv("DEBLUR_NUM_WORKERS");
    CHECK(worker_count() >= 1);
}

TEST_CASE("sweep writes one row per setting and seed")
{
    const fs::path dir = fresh_dir("sweep");
    RunConfig c = toy_config(dir / "cases");
    c.paths.cases = {cmd_synth(c)};
    c.paths.out = dir / "out";
    c.sweep.lambdas = {1e-4, 1e-6};
    c.sweep.seeds = {0, 1};
    const auto rows = cmd_sweep(c, 2);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(r.metrics);
        CHECK(r.method_hash.size() > 0);
    }
    for (const char* f : {"sweep.csv", "summary.csv", "psnr.svg", "es_gap.svg"})
        CHECK(fs::exists(dir / "out" / f));
}

TEST_CASE("command line exit codes")
{
    const fs::path dir = fresh_dir("exit");
    RunConfig c = toy_config(dir / "cases");
    c.save(dir / "synth.json");
    CHECK(run_cli("synth --config " + (dir / "synth.json").string()) == 0);
    CHECK(fs::exists(dir / "cases/case_0/blurry.png"));

    CHECK(run_cli("synth --config " + (dir / "synth.json").string() + " --es-profile medium") == 1);
    CHECK(run_cli("frobnicate --config x.json") == 1);

    std::ofstream(dir / "bad.json") << R"({"sede": 1})";
    CHECK(run_cli("run --config " + (dir / "bad.json").string()) == 1);
    CHECK(run_cli("run --config " + (dir / "nothing.json").string()) == 2);

    RunConfig missing = c;
    missing.paths.input = dir / "no_such.png";
    missing.save(dir / "missing.json");
    CHECK(run_cli("run --config " + (dir / "missing.json").string()) == 2);

    RunConfig diverge = c;
    diverge.paths.case_dir = dir / "cases/case_0";
    diverge.paths.out = dir / "diverge";
    diverge.solver.lr_image = 1e30;
    diverge.solver.lr_kernel = 1e29;
    diverge.save(dir / "diverge.json");
    CHECK(run_cli("run --config " + (dir / "diverge.json").string()) == 3);
    CHECK(fs::exists(dir / "diverge/trace.csv"));

    RunConfig ok = c;
    ok.paths.case_dir = dir / "cases/case_0";
    ok.save(dir / "run.json");
    CHECK(run_cli("run --config " + (dir / "run.json").string() + " --seed 2 --out " + (dir / "run_out").string()) ==
          0);
    const nlohmann::json resolved = read_json(dir / "run_out/config.resolved.json");
    CHECK(resolved.at("seed") == 2);
}
