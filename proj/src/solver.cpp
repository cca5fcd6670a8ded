#include "deblur/solver.hpp"
#include "deblur/nn/adam.hpp"
#include "deblur/nn/ordered_sum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "deblur/localization.hpp"
#include "deblur/metrics.hpp"

namespace deblur {

std::string to_string(EsProfile p)
{
    return p == EsProfile::low_noise ? "low_noise" : "high_noise";
}

EsProfile es_profile_from_string(const std::string& s)
{
    if (s == "low_noise")
        return EsProfile::low_noise;
    if (s == "high_noise")
        return EsProfile::high_noise;
    throw ParameterError("unknown early-stopping profile '" + s + "' (expected low_noise or high_noise)");
}

SolverConfig SolverConfig::synthetic_profile()
{
    return SolverConfig{};
}

SolverConfig SolverConfig::real_profile()
{
    SolverConfig c;
    c.lr_image = 1e-3;
    c.lr_kernel = 1e-5;
    return c;
}

int SolverConfig::patience_for(EsProfile p)
{
    return p == EsProfile::low_noise ? 500 : 200;
}

void SolverConfig::validate() const
{
    if (!(lr_kernel > 0 && lr_image > lr_kernel))
        throw ParameterError("learning rates must satisfy lr_image > lr_kernel > 0");
    if (!(gamma > 0 && gamma < 1))
        throw ParameterError("gamma must lie in (0, 1)");
    if (window < 2)
        throw ParameterError("window must be at least 2");
    if (patience < 1)
        throw ParameterError("patience must be at least 1");
    if (max_iters < 0)
        throw ParameterError("max_iters must be nonnegative");
    if (trace_every < 1)
        throw ParameterError("trace_every must be at least 1");
    for (std::size_t i = 1; i < milestones.size(); ++i)
        if (milestones[i] <= milestones[i - 1])
            throw ParameterError("milestones must be strictly increasing");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_eps > 0))
        throw ParameterError("invalid Adam coefficients");
}

nlohmann::json SolverConfig::to_json() const
{
    return {{"lr_image", lr_image},   {"lr_kernel", lr_kernel}, {"milestones", milestones},
            {"gamma", gamma},         {"max_iters", max_iters}, {"window", window},
            {"patience", patience},   {"early_stop", early_stop}, {"seed", seed},
            {"trace_every", trace_every}, {"beta1", beta1},     {"beta2", beta2},
            {"adam_eps", adam_eps}};
}

SolverConfig SolverConfig::from_json(const nlohmann::json& j)
{
    SolverConfig c;
    c.lr_image = j.value("lr_image", c.lr_image);
    c.lr_kernel = j.value("lr_kernel", c.lr_kernel);
    c.milestones = j.value("milestones", c.milestones);
    c.gamma = j.value("gamma", c.gamma);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.window = j.value("window", c.window);
    c.patience = j.value("patience", c.patience);
    c.early_stop = j.value("early_stop", c.early_stop);
    c.seed = j.value("seed", c.seed);
    c.trace_every = j.value("trace_every", c.trace_every);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.validate();
    return c;
}

LearningRates lr_at(int iter, const SolverConfig& cfg)
{
    double m = 1.0;
    for (int s : cfg.milestones)
        if (s <= iter)
            m *= cfg.gamma;
    return {cfg.lr_image * m, cfg.lr_kernel * m};
}

WmvEvent wmv_update(ESState& state, std::span<const float> x, int iter, const std::function<Checkpoint()>& capture)
{
    if (!state.queue.empty() && state.queue.front().size() != x.size())
        throw DimensionError("early stopping: iterate size changed during the run");
    state.queue.emplace_back(x.begin(), x.end());
    while (static_cast<int>(state.queue.size()) > state.window)
        state.queue.pop_front();

    WmvEvent ev;
    if (static_cast<int>(state.queue.size()) < state.window)
        return ev;
    ev.window_full = true;

    const std::size_t n = x.size();
    std::vector<double> mean(n, 0.0);
    for (const auto& q : state.queue)
        for (std::size_t i = 0; i < n; ++i)
            mean[i] += q[i];
    const double inv_w = 1.0 / static_cast<double>(state.queue.size());
    for (double& m : mean)
        m *= inv_w;
    double total = 0;
    for (const auto& q : state.queue) {
        total += ordered_sum<double>(n, [&](std::size_t i) {
            const double d = q[i] - mean[i];
            return d * d;
        });
    }
    ev.variance = n == 0 ? 0.0 : total * inv_w / static_cast<double>(n);

    if (ev.variance < state.var_min) {
        state.var_min = ev.variance;
        state.stall = 0;
        state.best_iter = iter;
        if (capture)
            state.best = capture();
        ev.improved = true;
    } else {
        ++state.stall;
    }
    return ev;
}

std::vector<float> pool4(const Grid<float>& x)
{
    const int h = (x.height() + 3) / 4, w = (x.width() + 3) / 4;
    std::vector<float> out(static_cast<std::size_t>(x.channels()) * h * w, 0.0f);
    for (int c = 0; c < x.channels(); ++c)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double s = 0;
                int cnt = 0;
                for (int a = 4 * i; a < std::min(4 * i + 4, x.height()); ++a)
                    for (int b = 4 * j; b < std::min(4 * j + 4, x.width()); ++b) {
                        s += x(c, a, b);
                        ++cnt;
                    }
                out[(static_cast<std::size_t>(c) * h + i) * w + j] = static_cast<float>(s / cnt);
            }
    return out;
}

// ------------------------------------------------------------------ trace

bool RunTrace::has_groundtruth() const
{
    return std::any_of(rows.begin(), rows.end(), [](const TraceRow& r) { return std::isfinite(r.psnr); });
}

namespace {

std::string field(double v)
{
    if (!std::isfinite(v))
        return "";
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

double parse_field(const std::string& s)
{
    if (s.empty())
        return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

} // namespace

void RunTrace::write_csv(const std::filesystem::path& path) const
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot write trace " + path.string());
    os << "iter,objective,lr_x,lr_k,wmv,psnr\n";
    for (const TraceRow& r : rows)
        os << r.iter << ',' << field(r.objective) << ',' << field(r.lr_x) << ',' << field(r.lr_k) << ','
           << field(r.wmv) << ',' << field(r.psnr) << '\n';
    if (!os)
        throw IoError("failed while writing trace " + path.string());
}

RunTrace RunTrace::read_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot read trace " + path.string());
    RunTrace t;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ','))
            cols.push_back(c);
        cols.resize(6);
        TraceRow r;
        r.iter = std::stoi(cols[0]);
        r.objective = parse_field(cols[1]);
        r.lr_x = parse_field(cols[2]);
        r.lr_k = parse_field(cols[3]);
        r.wmv = parse_field(cols[4]);
        r.psnr = parse_field(cols[5]);
        t.rows.push_back(r);
    }
    return t;
}

EsGap es_gap_report(const RunTrace& trace, int best_iter)
{
    EsGap g;
    bool any = false;
    const TraceRow* last = nullptr;
    const TraceRow* best = nullptr;
    for (const TraceRow& r : trace.rows) {
        if (!std::isfinite(r.psnr))
            continue;
        if (!any || r.psnr > g.peak) {
            g.peak = r.psnr;
            g.peak_iter = r.iter;
        }
        any = true;
        last = &r;
        if (r.iter == best_iter)
            best = &r;
    }
    if (!any)
        throw Unavailable("trace has no groundtruth PSNR values");
    if (!best)
        throw Unavailable("trace has no PSNR value at iteration " + std::to_string(best_iter));
    g.es_gap = g.peak - best->psnr;
    g.base_gap = g.peak - last->psnr;
    return g;
}

double localized_psnr(const ImageGrid& canvas, const ImageGrid& y, const ImageGrid& groundtruth)
{
    const auto located = locate_image(canvas, y);
    return psnr(located.first, groundtruth);
}

// -------------------------------------------------------------------- run

namespace {

ImageGrid to_double(const Grid<float>& g)
{
    return g.cast<double>();
}

Kernel to_double(const BasicKernel<float>& k)
{
    return k.cast<double>();
}

} // namespace

RunResult run(const ImageGrid& y, const SizingPlan& plan, const ObjectiveConfig& obj, const SolverConfig& cfg,
              const RunOptions& options)
{
    cfg.validate();
    obj.validate();
    check_plan(plan);
    require_image_channels(y.channels());
    if (y.height() != plan.y_size.rows || y.width() != plan.y_size.cols)
        throw DimensionError("observation does not match the sizing plan");
    if (options.groundtruth && !options.groundtruth->same_shape(y))
        throw DimensionError("groundtruth must have the observation's shape");

    const Grid<float> yf = y.cast<float>();
    ImageGenerator<float> gen(plan.x_size, y.channels(), cfg.seed, options.image_arch);
    KernelField<float> field(plan.k_size, cfg.seed, options.kernel_arch);
    nn::Adam adam_x(gen.parameters(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    nn::Adam adam_k(field.parameters(), cfg.beta1, cfg.beta2, cfg.adam_eps);

    ESState es(cfg.window, cfg.patience);
    RunResult result;
    result.trace.pooled_queue = static_cast<long>(plan.x_size.rows) * plan.x_size.cols > 512L * 512L;

    if (cfg.max_iters == 0) {
        result.final_image = to_double(gen.forward());
        result.final_kernel = to_double(field.forward());
        result.best_image = result.final_image;
        result.best_kernel = result.final_kernel;
        return result;
    }

    std::vector<TraceRow> history; // every iteration, psnr only on trace rows
    history.reserve(static_cast<std::size_t>(cfg.max_iters));
    Grid<float> last_image;
    BasicKernel<float> last_kernel;

    auto psnr_of = [&](const Grid<float>& canvas) {
        return localized_psnr(to_double(canvas), y, *options.groundtruth);
    };
    auto collect_rows = [&](int last_iter) {
        std::vector<TraceRow> rows;
        for (const TraceRow& r : history)
            if (r.iter % cfg.trace_every == 0 || r.iter == last_iter || r.iter == es.best_iter)
                rows.push_back(r);
        return rows;
    };

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        adam_x.zero_grad();
        adam_k.zero_grad();
        ObjectiveTerms<float> terms = total_objective(yf, gen, field, obj, true);
        const LearningRates lr = lr_at(it, cfg);
        TraceRow row{it, terms.total, lr.image, lr.kernel};
        if (!std::isfinite(terms.total)) {
            history.push_back(row);
            RunTrace t;
            t.pooled_queue = result.trace.pooled_queue;
            t.rows = collect_rows(it);
            throw RunAborted("objective became non-finite at iteration " + std::to_string(it), std::move(t));
        }
        last_image = std::move(terms.image);
        last_kernel = std::move(terms.kernel);

        auto capture = [&] {
            return Checkpoint{it, snapshot(adam_x.params()), snapshot(adam_k.params()), last_image, last_kernel};
        };
        const WmvEvent ev = result.trace.pooled_queue
                                ? wmv_update(es, pool4(last_image), it, capture)
                                : wmv_update(es, last_image.storage(), it, capture);
        row.wmv = ev.variance;
        if (options.groundtruth && it % cfg.trace_every == 0)
            row.psnr = psnr_of(last_image);
        history.push_back(row);
        if (options.progress)
            options.progress(row);

        if (cfg.early_stop && es.should_stop()) {
            result.stopped_early = true;
            break;
        }
        adam_x.step(lr.image, it + 1);
        adam_k.step(lr.kernel, it + 1);
    }
    const int last_iter = std::min(it, cfg.max_iters - 1);
    result.iterations = result.stopped_early ? it : cfg.max_iters;

    result.final_image = to_double(last_image);
    result.final_kernel = to_double(last_kernel);
    if (es.best) {
        result.best_image = to_double(es.best->image);
        result.best_kernel = to_double(es.best->kernel);
        result.best_iter = es.best_iter;
        result.checkpoint = std::move(es.best);
    } else {
        result.best_image = result.final_image;
        result.best_kernel = result.final_kernel;
    }

    if (options.groundtruth) {
        for (TraceRow& r : history) {
            if (r.iter == last_iter && !std::isfinite(r.psnr))
                r.psnr = psnr_of(last_image);
            if (r.iter == result.best_iter && !std::isfinite(r.psnr))
                r.psnr = localized_psnr(result.best_image, y, *options.groundtruth);
        }
    }
    result.trace.rows = collect_rows(last_iter);
    return result;
}

} // namespace deblur
