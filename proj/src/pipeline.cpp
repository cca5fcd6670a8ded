#include "deblur/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "deblur/degradation.hpp"
#include "deblur/image_io.hpp"
#include "deblur/plots.hpp"
#include "deblur/synthetic.hpp"

namespace fs = std::filesystem;

namespace deblur {

namespace {

void make_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

ImageGrid crop(const ImageGrid& x, Shift at, PixelSize size)
{
    if (at.rows < 0 || at.cols < 0 || at.rows + size.rows > x.height() || at.cols + size.cols > x.width())
        throw DimensionError("crop window outside the image");
    ImageGrid out(x.channels(), size.rows, size.cols);
    for (int c = 0; c < x.channels(); ++c)
        for (int i = 0; i < size.rows; ++i)
            for (int j = 0; j < size.cols; ++j)
                out(c, i, j) = x(c, at.rows + i, at.cols + j);
    return out;
}

ImageGrid replicate_channels(const ImageGrid& gray, int channels)
{
    if (channels == 1)
        return gray;
    ImageGrid out(channels, gray.height(), gray.width());
    for (int c = 0; c < channels; ++c)
        std::copy(gray.plane(0), gray.plane(0) + gray.plane_size(), out.plane(c));
    return out;
}

Kernel synth_kernel(const SynthSettings& s, std::uint64_t seed)
{
    if (s.kernel == "motion")
        return motion_kernel(s.kernel_size, seed);
    if (s.kernel == "gaussian")
        return gaussian_kernel(s.kernel_size, s.gaussian_kernel_sigma);
    if (s.kernel == "delta") {
        Kernel k(s.kernel_size, s.kernel_size);
        k(s.kernel_size / 2, s.kernel_size / 2) = 1.0;
        return k;
    }
    return read_kernel(s.kernel);
}

nlohmann::json size_json(PixelSize s)
{
    return nlohmann::json::array({s.rows, s.cols});
}

nlohmann::json plan_json(const SizingPlan& p)
{
    return {{"y_size", size_json(p.y_size)}, {"k_size", size_json(p.k_size)}, {"x_size", size_json(p.x_size)}};
}

nlohmann::json gap_json(const EsGap& g)
{
    return {{"peak", g.peak}, {"peak_iter", g.peak_iter}, {"es_gap", g.es_gap}, {"base_gap", g.base_gap}};
}

std::string csv_num(double v)
{
    if (!std::isfinite(v))
        return "";
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

std::string csv_text(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

struct Stats {
    double mean = std::nan("");
    double std = std::nan("");
    int n = 0;
};

Stats stats(const std::vector<double>& v)
{
    Stats s;
    std::vector<double> f;
    for (double x : v)
        if (std::isfinite(x))
            f.push_back(x);
    s.n = static_cast<int>(f.size());
    if (f.empty())
        return s;
    double m = 0;
    for (double x : f)
        m += x;
    m /= f.size();
    double q = 0;
    for (double x : f)
        q += (x - m) * (x - m);
    s.mean = m;
    s.std = std::sqrt(q / f.size());
    return s;
}

} // namespace

Shift groundtruth_offset(const Kernel& k)
{
    double total = 0, ci = 0, cj = 0;
    for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j) {
            total += k(i, j);
            ci += i * k(i, j);
            cj += j * k(i, j);
        }
    if (!(total > 0))
        throw ParameterError("kernel has no mass");
    const int ri = static_cast<int>(std::lround(ci / total)), rj = static_cast<int>(std::lround(cj / total));
    return {k.rows() - 1 - ri, k.cols() - 1 - rj};
}

fs::path cmd_synth(const RunConfig& cfg)
{
    const SynthSettings& s = cfg.synth;
    const Kernel k = synth_kernel(s, cfg.seed);
    ImageGrid clean;
    if (s.clean == "procedural") {
        clean = replicate_channels(procedural_scene(s.image_size.rows + k.rows() - 1,
                                                    s.image_size.cols + k.cols() - 1, cfg.seed),
                                   s.channels);
    } else {
        clean = read_image(s.clean);
    }
    if (clean.height() < k.rows() || clean.width() < k.cols())
        throw InvalidSpecification("clean image is smaller than the kernel");
    const ImageGrid blurry = synthesize_case(clean, k, cfg.noise);
    const Shift offset = groundtruth_offset(k);

    const fs::path dir = cfg.paths.out / ("case_" + s.case_id);
    make_dir(dir);
    write_image(dir / "clean.png", clean, 16);
    write_image(dir / "blurry.png", blurry, 16);
    write_kernel_csv(dir / "kernel.csv", k);
    write_kernel_png(dir / "kernel.png", k);
    nlohmann::json spec{{"schema_version", kConfigSchemaVersion},
                        {"case_id", s.case_id},
                        {"seed", cfg.seed},
                        {"clean_source", s.clean},
                        {"kernel_source", s.kernel},
                        {"clean_size", size_json({clean.height(), clean.width()})},
                        {"kernel_size", size_json({k.rows(), k.cols()})},
                        {"blurry_size", size_json({blurry.height(), blurry.width()})},
                        {"channels", clean.channels()},
                        {"groundtruth_offset", size_json({offset.rows, offset.cols})},
                        {"noise", cfg.noise.to_json()},
                        {"config", cfg.to_json()}};
    write_json(dir / "spec.json", spec);
    return dir;
}

CaseData load_case(const fs::path& dir)
{
    const nlohmann::json spec = read_json(dir / "spec.json");
    CaseData c;
    try {
        c.id = spec.at("case_id").get<std::string>();
        const auto& off = spec.at("groundtruth_offset");
        c.groundtruth_offset = {off.at(0).get<int>(), off.at(1).get<int>()};
    } catch (const nlohmann::json::exception& e) {
        throw IoError((dir / "spec.json").string() + ": " + e.what());
    }
    c.blurry = read_image(dir / "blurry.png");
    c.clean = read_image(dir / "clean.png");
    c.kernel = read_kernel_csv(dir / "kernel.csv");
    c.groundtruth = crop(*c.clean, c.groundtruth_offset, {c.blurry.height(), c.blurry.width()});
    return c;
}

CaseData resolve_inputs(const RunConfig& cfg)
{
    const PathSettings& p = cfg.paths;
    CaseData c;
    if (!p.case_dir.empty())
        c = load_case(p.case_dir);
    else if (p.input.empty())
        throw ConfigError("paths.input or paths.case_dir is required");
    if (!p.input.empty()) {
        c.blurry = read_image(p.input);
        c.id = p.input.stem().string();
    }
    if (!p.groundtruth_image.empty()) {
        c.groundtruth = read_image(p.groundtruth_image);
        if (!c.groundtruth->same_shape(c.blurry))
            throw DimensionError("groundtruth image must match the observation's size and channels");
    }
    if (!p.groundtruth_kernel.empty())
        c.kernel = read_kernel(p.groundtruth_kernel);
    if (c.groundtruth && !c.groundtruth->same_shape(c.blurry))
        c.groundtruth.reset();
    return c;
}

DeblurOutcome deblur_image(const ImageGrid& y, const RunConfig& cfg, const ImageGrid* groundtruth,
                           const Kernel* true_kernel, std::function<void(const TraceRow&)> progress)
{
    DeblurOutcome o;
    o.plan = plan_sizes({y.height(), y.width()}, cfg.kernel_size);
    RunOptions opts;
    opts.image_arch = cfg.image_arch;
    opts.kernel_arch = cfg.kernel_arch;
    opts.groundtruth = groundtruth;
    opts.progress = std::move(progress);
    o.run = run(y, o.plan, cfg.objective, cfg.solver, opts);
    auto [x_hat, placement] = locate_image(o.run.best_image, y);
    o.x_hat = std::move(x_hat);
    o.placement = placement;
    o.k_hat = locate_kernel(o.run.best_kernel, placement, o.plan);
    if (groundtruth) {
        std::optional<Kernel> aligned;
        if (true_kernel && true_kernel->rows() <= o.k_hat.rows() && true_kernel->cols() <= o.k_hat.cols())
            aligned = embed_centered(*true_kernel, o.plan.k_size);
        o.metrics = evaluate_pair(o.x_hat, *groundtruth, aligned ? &o.k_hat : nullptr, aligned ? &*aligned : nullptr);
        o.baseline = evaluate_pair(y, *groundtruth);
        if (o.run.trace.has_groundtruth() && o.run.best_iter >= 0)
            o.es_gap = es_gap_report(o.run.trace, o.run.best_iter);
    }
    return o;
}

void write_outcome(const fs::path& dir, const DeblurOutcome& o, const RunConfig& cfg)
{
    make_dir(dir);
    cfg.save(dir / "config.resolved.json");
    write_image(dir / "x_hat.png", o.x_hat, 16);
    write_kernel_csv(dir / "kernel.csv", o.k_hat);
    write_kernel_png(dir / "kernel.png", o.k_hat);
    o.run.trace.write_csv(dir / "trace.csv");

    nlohmann::json report{{"schema_version", kReportSchemaVersion},
                          {"method_hash", cfg.method_hash()},
                          {"seed", cfg.seed},
                          {"plan", plan_json(o.plan)},
                          {"placement",
                           {{"offset", size_json({o.placement.offset.rows, o.placement.offset.cols})},
                            {"score", o.placement.score}}},
                          {"best_iter", o.run.best_iter},
                          {"iterations", o.run.iterations},
                          {"stopped_early", o.run.stopped_early},
                          {"pooled_queue", o.run.trace.pooled_queue}};
    if (o.metrics)
        report["metrics"] = o.metrics->to_json();
    if (o.baseline)
        report["baseline"] = o.baseline->to_json();
    if (o.es_gap)
        report["es_gap"] = gap_json(*o.es_gap);
    write_json(dir / "report.json", report);

    if (cfg.save_checkpoint && o.run.checkpoint) {
        ImageGenerator<float> gen(o.plan.x_size, o.x_hat.channels(), cfg.solver.seed, cfg.image_arch);
        KernelField<float> field(o.plan.k_size, cfg.solver.seed, cfg.kernel_arch);
        restore(gen.parameters(), o.run.checkpoint->image_params);
        restore(field.parameters(), o.run.checkpoint->kernel_params);
        save_checkpoint(dir / "checkpoint.dblr", gen, field, {{"iter", o.run.checkpoint->iter}});
    }
}

DeblurOutcome cmd_run(const RunConfig& cfg, std::function<void(const TraceRow&)> progress)
{
    const CaseData c = resolve_inputs(cfg);
    make_dir(cfg.paths.out);
    cfg.save(cfg.paths.out / "config.resolved.json");
    try {
        DeblurOutcome o = deblur_image(c.blurry, cfg, c.groundtruth ? &*c.groundtruth : nullptr,
                                       c.kernel ? &*c.kernel : nullptr, std::move(progress));
        write_outcome(cfg.paths.out, o, cfg);
        return o;
    } catch (const RunAborted& e) {
        e.trace().write_csv(cfg.paths.out / "trace.csv");
        throw;
    }
}

std::vector<PixelSize> kernel_size_levels(PixelSize true_size, PixelSize y_size, int levels)
{
    const PixelSize half = plan_sizes(y_size).k_size;
    if (true_size.rows > half.rows || true_size.cols > half.cols)
        throw InvalidSpecification("true kernel exceeds half the observation");
    std::vector<PixelSize> out;
    for (int l = 0; l < levels; ++l) {
        const double t = levels == 1 ? 0.0 : static_cast<double>(l) / (levels - 1);
        out.push_back({static_cast<int>(std::lround(true_size.rows + t * (half.rows - true_size.rows))),
                       static_cast<int>(std::lround(true_size.cols + t * (half.cols - true_size.cols)))});
    }
    return out;
}

int worker_count()
{
    if (const char* env = std::getenv("DEBLUR_NUM_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0)
            return static_cast<int>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct SweepJob {
    std::size_t case_index = 0;
    std::string setting;
    double value = 0;
    RunConfig cfg;
    std::optional<NoiseSpec> renoise;
};

void write_sweep_csv(const fs::path& path, const std::vector<SweepRow>& rows)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "case,setting,value,seed,method_hash,status,psnr,ssim,vif,fbe0,fbe1,fbe2,fbe3,fbe4,"
           "baseline_psnr,baseline_ssim,baseline_vif,best_iter,iterations,es_gap,base_gap,error\n";
    for (const auto& r : rows) {
        out << csv_text(r.case_id) << ',' << csv_text(r.setting) << ',' << csv_num(r.setting_value) << ',' << r.seed
            << ',' << r.method_hash << ',' << r.status;
        const double nan = std::nan("");
        const MetricReport m = r.metrics.value_or(MetricReport{nan, nan, nan, std::nullopt});
        out << ',' << csv_num(m.psnr) << ',' << csv_num(m.ssim) << ',' << csv_num(m.vif);
        for (int b = 0; b < kFbeBands; ++b)
            out << ',' << (m.fbe ? csv_num((*m.fbe)[b]) : "");
        const MetricReport bl = r.baseline.value_or(MetricReport{nan, nan, nan, std::nullopt});
        out << ',' << csv_num(bl.psnr) << ',' << csv_num(bl.ssim) << ',' << csv_num(bl.vif);
        out << ',' << r.best_iter << ',' << r.iterations;
        out << ',' << (r.es_gap ? csv_num(r.es_gap->es_gap) : "") << ','
            << (r.es_gap ? csv_num(r.es_gap->base_gap) : "");
        out << ',' << csv_text(r.error) << '\n';
    }
}

} // namespace

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, int workers)
{
    std::vector<fs::path> dirs = cfg.paths.cases;
    if (dirs.empty() && !cfg.paths.case_dir.empty())
        dirs.push_back(cfg.paths.case_dir);
    if (dirs.empty())
        throw ConfigError("sweep needs paths.cases or paths.case_dir");
    std::vector<CaseData> cases;
    for (const auto& d : dirs)
        cases.push_back(load_case(d));

    const SweepSettings& sw = cfg.sweep;
    std::vector<SweepJob> jobs;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const CaseData& c = cases[ci];
        std::vector<SweepJob> settings;
        switch (sw.axis) {
        case SweepAxis::lambda:
            for (double l : sw.lambdas) {
                SweepJob j{ci, "lambda=" + csv_num(l), l, cfg, std::nullopt};
                j.cfg.objective.lambda_x = l;
                settings.push_back(std::move(j));
            }
            break;
        case SweepAxis::kernel_size_level: {
            const auto sizes = kernel_size_levels({c.kernel->rows(), c.kernel->cols()},
                                                  {c.blurry.height(), c.blurry.width()}, sw.levels);
            for (int l = 0; l < sw.levels; ++l) {
                SweepJob j{ci, "level=" + std::to_string(l + 1), static_cast<double>(l + 1), cfg, std::nullopt};
                j.cfg.kernel_size = sizes[l];
                settings.push_back(std::move(j));
            }
            break;
        }
        case SweepAxis::noise:
            for (std::size_t n = 0; n < sw.noises.size(); ++n) {
                const NoiseSpec& ns = sw.noises[n];
                double level = ns.kind == NoiseKind::gaussian ? ns.gaussian_sigma
                               : ns.kind == NoiseKind::impulse ? ns.impulse_p
                               : ns.kind == NoiseKind::shot    ? ns.shot_eta
                                                               : 0.0;
                SweepJob j{ci, to_string(ns.kind) + "=" + csv_num(level), level, cfg, ns};
                settings.push_back(std::move(j));
            }
            break;
        }
        for (const auto& s : settings)
            for (std::uint64_t seed : sw.seeds) {
                SweepJob j = s;
                j.cfg.apply_seed(seed);
                if (j.renoise)
                    j.renoise->seed = seed;
                jobs.push_back(std::move(j));
            }
    }

    make_dir(cfg.paths.out);
    cfg.save(cfg.paths.out / "config.resolved.json");
    std::vector<SweepRow> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const SweepJob& job = jobs[i];
            const CaseData& c = cases[job.case_index];
            SweepRow& row = rows[i];
            row.case_id = c.id;
            row.setting = job.setting;
            row.setting_value = job.value;
            row.seed = job.cfg.seed;
            row.method_hash = job.cfg.method_hash();
            try {
                const ImageGrid y = job.renoise ? synthesize_case(*c.clean, *c.kernel, *job.renoise) : c.blurry;
                const DeblurOutcome o = deblur_image(y, job.cfg, c.groundtruth ? &*c.groundtruth : nullptr,
                                                     c.kernel ? &*c.kernel : nullptr);
                std::string tag = c.id + "_" + job.setting + "_seed" + std::to_string(job.cfg.seed);
                std::replace(tag.begin(), tag.end(), '=', '-');
                write_outcome(cfg.paths.out / "rows" / tag, o, job.cfg);
                row.metrics = o.metrics;
                row.baseline = o.baseline;
                row.es_gap = o.es_gap;
                row.best_iter = o.run.best_iter;
                row.iterations = o.run.iterations;
            } catch (const std::exception& e) {
                row.status = "error";
                row.error = e.what();
            }
            std::lock_guard<std::mutex> lock(log_mutex);
            std::fprintf(stderr, "[sweep] %zu/%zu %s %s seed %llu: %s\n", i + 1, jobs.size(), row.case_id.c_str(),
                         row.setting.c_str(), static_cast<unsigned long long>(row.seed), row.status.c_str());
        }
    };
    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
    }
    write_sweep_csv(cfg.paths.out / "sweep.csv", rows);

    // mean +- std per setting across cases and seeds, with the blurry baseline
    std::vector<std::string> order;
    std::map<std::string, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) {
        if (!groups.count(r.setting))
            order.push_back(r.setting);
        groups[r.setting].push_back(&r);
    }
    std::ofstream summary(cfg.paths.out / "summary.csv");
    if (!summary)
        throw IoError("cannot write summary.csv");
    summary << "setting,value,n_ok,n_error,psnr_mean,psnr_std,ssim_mean,ssim_std,vif_mean,vif_std,"
               "baseline_psnr,baseline_ssim,baseline_vif\n";
    Series psnr_series{"psnr (mean +- std)", {}, {}, {}};
    std::vector<double> baseline_all;
    for (const auto& name : order) {
        std::vector<double> p, s, v, bp, bs, bv;
        int errors = 0;
        for (const SweepRow* r : groups[name]) {
            if (r->status != "ok")
                ++errors;
            if (r->metrics) {
                p.push_back(r->metrics->psnr);
                s.push_back(r->metrics->ssim);
                v.push_back(r->metrics->vif);
            }
            if (r->baseline) {
                bp.push_back(r->baseline->psnr);
                bs.push_back(r->baseline->ssim);
                bv.push_back(r->baseline->vif);
                baseline_all.push_back(r->baseline->psnr);
            }
        }
        const Stats sp = stats(p), ss = stats(s), sv = stats(v);
        summary << csv_text(name) << ',' << csv_num(groups[name].front()->setting_value) << ',' << sp.n << ','
                << errors << ',' << csv_num(sp.mean) << ',' << csv_num(sp.std) << ',' << csv_num(ss.mean) << ','
                << csv_num(ss.std) << ',' << csv_num(sv.mean) << ',' << csv_num(sv.std) << ','
                << csv_num(stats(bp).mean) << ',' << csv_num(stats(bs).mean) << ',' << csv_num(stats(bv).mean)
                << '\n';
        psnr_series.x.push_back(groups[name].front()->setting_value);
        psnr_series.y.push_back(sp.mean);
        psnr_series.err.push_back(sp.std);
    }

    LineChart chart;
    chart.title = "PSNR over " + to_string(sw.axis);
    chart.x_label = to_string(sw.axis);
    chart.y_label = "PSNR (dB)";
    chart.log_x = sw.axis == SweepAxis::lambda &&
                  std::all_of(psnr_series.x.begin(), psnr_series.x.end(), [](double x) { return x > 0; });
    chart.series.push_back(std::move(psnr_series));
    if (const Stats b = stats(baseline_all); b.n > 0)
        chart.baseline = b.mean;
    write_svg(cfg.paths.out / "psnr.svg", chart);

    Histogram gaps{"ES gap", "es_gap (dB)", {}, 20};
    for (const auto& r : rows)
        if (r.es_gap)
            gaps.values.push_back(r.es_gap->es_gap);
    if (!gaps.values.empty())
        write_svg(cfg.paths.out / "es_gap.svg", gaps);
    return rows;
}

std::vector<EvalRow> cmd_eval(const RunConfig& cfg)
{
    const fs::path& est = cfg.paths.estimates;
    const fs::path& ref = cfg.paths.groundtruth_dir;
    if (est.empty() || ref.empty())
        throw ConfigError("eval needs paths.estimates and paths.groundtruth_dir");
    auto list = [](const fs::path& dir) {
        std::set<std::string> names;
        std::error_code ec;
        for (const auto& e : fs::directory_iterator(dir, ec))
            if (e.is_regular_file() && e.path().extension() == ".png")
                names.insert(e.path().filename().string());
        if (ec)
            throw IoError("cannot list " + dir.string() + ": " + ec.message());
        return names;
    };
    const auto a = list(est), b = list(ref);
    std::vector<std::string> matched;
    for (const auto& n : a) {
        if (b.count(n))
            matched.push_back(n);
        else
            std::fprintf(stderr, "[eval] unmatched estimate %s\n", n.c_str());
    }
    for (const auto& n : b)
        if (!a.count(n))
            std::fprintf(stderr, "[eval] unmatched groundtruth %s\n", n.c_str());
    if (matched.empty())
        throw IoError("no matching file names between " + est.string() + " and " + ref.string());

    std::vector<EvalRow> rows;
    for (const auto& n : matched) {
        EvalRow r;
        r.name = n;
        try {
            const ImageGrid x = read_image(est / n), g = read_image(ref / n);
            const fs::path kn = fs::path(n).replace_extension(".csv");
            std::optional<Kernel> ke, kt;
            if (fs::exists(est / kn) && fs::exists(ref / kn)) {
                ke = read_kernel_csv(est / kn);
                kt = read_kernel_csv(ref / kn);
                if (kt->rows() <= ke->rows() && kt->cols() <= ke->cols())
                    kt = embed_centered(*kt, {ke->rows(), ke->cols()});
            }
            r.metrics = evaluate_pair(x, g, ke ? &*ke : nullptr, kt ? &*kt : nullptr);
        } catch (const std::exception& e) {
            r.status = "error";
            r.error = e.what();
        }
        rows.push_back(std::move(r));
    }

    make_dir(cfg.paths.out);
    std::ofstream out(cfg.paths.out / "metrics.csv");
    if (!out)
        throw IoError("cannot write metrics.csv");
    out << "name,status,psnr,ssim,vif,fbe0,fbe1,fbe2,fbe3,fbe4,error\n";
    std::vector<double> p, s, v;
    std::array<std::vector<double>, kFbeBands> f;
    for (const auto& r : rows) {
        out << csv_text(r.name) << ',' << r.status;
        if (r.status == "ok") {
            out << ',' << csv_num(r.metrics.psnr) << ',' << csv_num(r.metrics.ssim) << ',' << csv_num(r.metrics.vif);
            p.push_back(r.metrics.psnr);
            s.push_back(r.metrics.ssim);
            v.push_back(r.metrics.vif);
        } else {
            out << ",,,";
        }
        for (int k = 0; k < kFbeBands; ++k) {
            out << ',';
            if (r.status == "ok" && r.metrics.fbe) {
                out << csv_num((*r.metrics.fbe)[k]);
                f[k].push_back((*r.metrics.fbe)[k]);
            }
        }
        out << ',' << csv_text(r.error) << '\n';
    }
    out << "mean,aggregate," << csv_num(stats(p).mean) << ',' << csv_num(stats(s).mean) << ','
        << csv_num(stats(v).mean);
    for (int k = 0; k < kFbeBands; ++k)
        out << ',' << csv_num(stats(f[k]).mean);
    out << ",\n";
    cfg.save(cfg.paths.out / "config.resolved.json");
    return rows;
}

} // namespace deblur
