#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "CLI11.hpp"

#include "deblur/config.hpp"
#include "deblur/pipeline.hpp"
#include "deblur/runtime.hpp"

namespace {

enum Exit { kOk = 0, kBadConfig = 1, kIo = 2, kAborted = 3 };

int dispatch(const std::string& command, deblur::RunConfig& cfg)
{
    if (command == "synth") {
        const auto dir = deblur::cmd_synth(cfg);
        std::printf("%s\n", dir.string().c_str());
    } else if (command == "run") {
        const int every = std::max(1, cfg.solver.max_iters / 20);
        const auto o = deblur::cmd_run(cfg, [every](const deblur::TraceRow& r) {
            if (r.iter % every == 0)
                std::fprintf(stderr, "[run] iter %d objective %.6g wmv %.3g\n", r.iter, r.objective, r.wmv);
        });
        std::printf("best_iter %d iterations %d offset %d %d\n", o.run.best_iter, o.run.iterations,
                    o.placement.offset.rows, o.placement.offset.cols);
        if (o.metrics)
            std::printf("psnr %.4f ssim %.4f vif %.4f (blurry psnr %.4f)\n", o.metrics->psnr, o.metrics->ssim,
                        o.metrics->vif, o.baseline->psnr);
    } else if (command == "sweep") {
        const auto rows = deblur::cmd_sweep(cfg, deblur::worker_count());
        int failed = 0;
        for (const auto& r : rows)
            failed += r.status != "ok";
        std::printf("%zu rows, %d failed\n", rows.size(), failed);
    } else if (command == "eval") {
        const auto rows = deblur::cmd_eval(cfg);
        int failed = 0;
        for (const auto& r : rows)
            failed += r.status != "ok";
        std::printf("%zu matched, %d failed\n", rows.size(), failed);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    deblur::tune_allocator();
    CLI::App app{"Blind deblurring with a generator pair"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> es_profile;
    std::optional<std::string> out_dir;
    const std::pair<const char*, const char*> commands[] = {
        {"synth", "blur and degrade a clean image into a case directory"},
        {"run", "deblur one observation"},
        {"sweep", "run a grid of settings over cases and seeds"},
        {"eval", "score a directory of estimates against references"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--es-profile", es_profile, "low_noise or high_noise")
            ->check(CLI::IsMember({"low_noise", "high_noise"}));
        sub->add_option("--out", out_dir, "output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kBadConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        deblur::RunConfig cfg = deblur::RunConfig::load(config_path);
        if (seed)
            cfg.apply_seed(*seed);
        if (es_profile)
            cfg.apply_es_profile(deblur::es_profile_from_string(*es_profile));
        if (out_dir)
            cfg.paths.out = *out_dir;
        return dispatch(command, cfg);
    } catch (const deblur::RunAborted& e) {
        std::cerr << "run aborted: " << e.what() << '\n';
        return kAborted;
    } catch (const deblur::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const deblur::Error& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
}
