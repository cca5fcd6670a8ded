// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset. Artifacts of the end-to-end runs go to
// ./acceptance_out (or $DEBLUR_ACCEPTANCE_OUT).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "deblur/config.hpp"
#include "deblur/degradation.hpp"
#include "deblur/forward_model.hpp"
#include "deblur/generators.hpp"
#include "deblur/localization.hpp"
#include "deblur/metrics.hpp"
#include "deblur/nn/adam.hpp"
#include "deblur/objective.hpp"
#include "deblur/pipeline.hpp"
#include "deblur/rng.hpp"
#include "deblur/runtime.hpp"
#include "deblur/solver.hpp"
#include "deblur/synthetic.hpp"

using namespace deblur;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path out_root()
{
    const char* env = std::getenv("DEBLUR_ACCEPTANCE_OUT");
    return env && *env ? fs::path(env) : fs::path("acceptance_out");
}

ImageGrid random_image(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0)
{
    SplitRng rng(seed, "acceptance.image");
    ImageGrid x(c, h, w);
    for (double& v : x.storage())
        v = rng.uniform(lo, hi);
    return x;
}

Kernel random_kernel(int h, int w, std::uint64_t seed)
{
    SplitRng rng(seed, "acceptance.kernel");
    Kernel k(h, w);
    double s = 0;
    for (double& v : k.storage())
        s += v = rng.uniform();
    for (double& v : k.storage())
        v /= s;
    return k;
}

double max_abs_diff(const ImageGrid& a, const ImageGrid& b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.storage()[i] - b.storage()[i]));
    return m;
}

int count_true(const std::vector<bool>& v)
{
    return static_cast<int>(std::count(v.begin(), v.end(), true));
}

// ------------------------------------------------------------------ 1

Outcome forward_model_oracles()
{
    SplitRng rng(1, "acceptance.sizes");
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
        const int h = 1 + static_cast<int>(rng.uniform() * 16), w = 1 + static_cast<int>(rng.uniform() * 16);
        const int kh = 1 + static_cast<int>(rng.uniform() * h), kw = 1 + static_cast<int>(rng.uniform() * w);
        const int c = rng.uniform() < 0.3 ? 3 : 1;
        const ImageGrid x = random_image(c, h, w, 100 + t);
        const Kernel k = random_kernel(kh, kw, 300 + t);
        const ImageGrid y = convolve_truncated(x, k);
        ImageGrid oracle(c, h - kh + 1, w - kw + 1);
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < oracle.height(); ++i)
                for (int j = 0; j < oracle.width(); ++j) {
                    double s = 0;
                    for (int a = 0; a < kh; ++a)
                        for (int b = 0; b < kw; ++b)
                            s += k(a, b) * x(ch, i + kh - 1 - a, j + kw - 1 - b);
                    oracle(ch, i, j) = s;
                }
        worst = std::max(worst, max_abs_diff(y, oracle));
    }

    // rows [x_{i+1}, x_i, x_{i-1}] of the 1-D convolution matrix
    const double xs[5] = {3, -12, 25, 7, 19}, ks[3] = {2, 5, 3};
    ImageGrid x(1, 1, 7);
    for (int i = 0; i < 5; ++i)
        x(0, 0, i + 1) = xs[i];
    Kernel k(1, 3);
    for (int a = 0; a < 3; ++a)
        k(0, a) = ks[a];
    const ImageGrid y = convolve_truncated(x, k);
    auto xv = [&](int i) { return i >= 1 && i <= 5 ? xs[i - 1] : 0.0; };
    bool exact = y.width() == 5;
    for (int i = 1; exact && i <= 5; ++i)
        exact = y(0, 0, i - 1) == xv(i + 1) * ks[0] + xv(i) * ks[1] + xv(i - 1) * ks[2];
    return {worst <= 1e-6 && exact, fmt("200 cases max |diff| %.2e, example matrix %s", worst, exact ? "exact" : "wrong")};
}

// ------------------------------------------------------------------ 2

Outcome objective_correctness()
{
    std::vector<double> r{0.05};
    const double knee = huber_loss<double>(r, 0.05);
    const bool knee_ok = std::abs(knee - 0.00125) < 1e-15;

    const ImageGrid x = random_image(1, 16, 16, 5);
    const double base = grad_sparsity(x, RegKind::l1_over_l2);
    double scale_dev = 0;
    for (double alpha : {0.5, 3.0}) {
        ImageGrid xs = x;
        for (double& v : xs.storage())
            v *= alpha;
        scale_dev = std::max(scale_dev, std::abs(grad_sparsity(xs, RegKind::l1_over_l2) - base));
    }

    GeneratorArch arch;
    arch.widths = {4, 4, 4};
    arch.kernel_sizes = {3, 3, 3};
    arch.up_kernel_sizes = {3, 3, 3};
    arch.skip_width = 2;
    arch.input_channels = 4;
    const SizingPlan plan = plan_sizes({8, 8});
    const Grid<double> y = random_image(1, 8, 8, 6, 0.2, 0.8);
    ObjectiveConfig cfg;
    cfg.lambda_x = 1e-2;
    ImageGenerator<double> gen(plan.x_size, 1, 7, arch);
    KernelField<double> field(plan.k_size, 7);
    auto params = gen.parameters();
    for (auto* p : field.parameters())
        params.push_back(p);
    zero_grad(params);
    total_objective(y, gen, field, cfg, true);
    double gmax = 0;
    for (auto* p : params)
        for (double g : p->grad)
            gmax = std::max(gmax, std::abs(g));
    const double floor = 1e-3 * gmax, h = 1e-5;
    double worst = 0;
    int checked = 0;
    for (auto* p : params) {
        const std::size_t step = std::max<std::size_t>(1, p->size() / 4);
        for (std::size_t i = 0; i < p->size(); i += step) {
            const double saved = p->value[i];
            // a kink within the step spoils one step size, a wrong gradient spoils both
            double err = std::numeric_limits<double>::infinity();
            for (double step : {h, h / 4}) {
                p->value[i] = saved + step;
                const double fp = total_objective(y, gen, field, cfg).total;
                p->value[i] = saved - step;
                const double fm = total_objective(y, gen, field, cfg).total;
                p->value[i] = saved;
                const double fd = (fp - fm) / (2 * step);
                err = std::min(err, std::abs(fd - p->grad[i]) / std::max({std::abs(fd), std::abs(p->grad[i]), floor}));
            }
            worst = std::max(worst, err);
            ++checked;
        }
    }
    return {knee_ok && scale_dev <= 1e-6 && worst < 1e-3,
            fmt("knee %.6g, scale deviation %.1e, gradient check on %d entries worst relative error %.2e", knee,
                scale_dev, checked, worst)};
}

// ------------------------------------------------------------------ 3

// textbook HLS, hue in [0, 1)
std::array<double, 3> rgb_to_hls(double r, double g, double b)
{
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double l = (mx + mn) / 2;
    if (mx == mn)
        return {0, l, 0};
    const double d = mx - mn;
    const double s = l <= 0.5 ? d / (mx + mn) : d / (2 - mx - mn);
    double h = mx == r ? (g - b) / d : mx == g ? 2 + (b - r) / d : 4 + (r - g) / d;
    h /= 6;
    return {h < 0 ? h + 1 : h, l, s};
}

double hue_channel(double m1, double m2, double h)
{
    h -= std::floor(h);
    if (h < 1.0 / 6)
        return m1 + (m2 - m1) * h * 6;
    if (h < 0.5)
        return m2;
    if (h < 2.0 / 3)
        return m1 + (m2 - m1) * (2.0 / 3 - h) * 6;
    return m1;
}

std::array<double, 3> hls_to_rgb(double h, double l, double s)
{
    if (s == 0)
        return {l, l, l};
    const double m2 = l <= 0.5 ? l * (1 + s) : l + s - l * s, m1 = 2 * l - m2;
    return {hue_channel(m1, m2, h + 1.0 / 3), hue_channel(m1, m2, h), hue_channel(m1, m2, h - 1.0 / 3)};
}

Outcome degradation_statistics()
{
    const int side = 317;
    const double n = double(side) * side;
    std::vector<std::string> failed;
    auto moments = [](const std::vector<double>& v) {
        double m = 0, q = 0;
        for (double x : v)
            m += x;
        m /= v.size();
        for (double x : v)
            q += (x - m) * (x - m);
        return std::pair{m, q / v.size()};
    };

    {
        const double sigma = 0.05;
        const ImageGrid x(1, side, side, 0.5);
        const ImageGrid y = add_gaussian(x, sigma, 11);
        std::vector<double> d(y.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = y.storage()[i] - 0.5;
        const auto [m, v] = moments(d);
        if (std::abs(m) > 3 * sigma / std::sqrt(n) || std::abs(v - sigma * sigma) > 3 * sigma * sigma * std::sqrt(2 / n))
            failed.push_back("gaussian");
    }
    {
        const double p = 0.08;
        const ImageGrid y = add_impulse(ImageGrid(1, side, side, 0.5), p, 12);
        double hit = 0, white = 0;
        for (double v : y.storage())
            if (v != 0.5) {
                hit += 1;
                white += v;
            }
        if (std::abs(hit / n - p) > 3 * std::sqrt(p * (1 - p) / n) || std::abs(white / hit - 0.5) > 3 * std::sqrt(0.25 / hit))
            failed.push_back("impulse");
    }
    {
        const double eta = 40, level = 0.5, lambda = eta * level;
        const auto [m, v] = moments(add_shot(ImageGrid(1, side, side, level), eta, 13).storage());
        const double var = lambda / (eta * eta);
        const double mu4 = lambda * (1 + 3 * lambda) / std::pow(eta, 4);
        if (std::abs(m - level) > 3 * std::sqrt(var / n) || std::abs(v - var) > 3 * std::sqrt((mu4 - var * var) / n))
            failed.push_back("shot");
    }

    const std::vector<std::array<double, 3>> px{{0.5, 0.5, 0.5}, {0.6, 0.4, 0.4}, {0.2, 0.3, 0.25}, {0.9, 0.7, 0.8},
                                                {0.1, 0.6, 0.9},  {0.3, 0.1, 0.2},  {1.0, 0.0, 0.0},   {0.8, 0.75, 0.2}};
    ImageGrid x(3, 1, static_cast<int>(px.size()));
    for (std::size_t p = 0; p < px.size(); ++p)
        for (int c = 0; c < 3; ++c)
            x(c, 0, static_cast<int>(p)) = px[p][c];
    const ImageGrid y = saturate_colors(x);
    double sat_err = 0;
    for (std::size_t p = 0; p < px.size(); ++p) {
        const auto [h, l, s] = rgb_to_hls(px[p][0], px[p][1], px[p][2]);
        const auto rgb = hls_to_rgb(h, l, std::clamp(2 * s + 0.1, 0.0, 1.0));
        for (int c = 0; c < 3; ++c)
            sat_err = std::max(sat_err, std::abs(y(c, 0, static_cast<int>(p)) - std::clamp(rgb[c], 0.0, 1.0)));
    }
    if (sat_err > 1e-12)
        failed.push_back("saturation");
    std::string detail = failed.empty() ? "moments within 3 sigma on 100489-pixel images" : "failed:";
    for (const auto& f : failed)
        detail += " " + f;
    return {failed.empty(), detail + fmt(", saturation max error %.1e", sat_err)};
}

// ------------------------------------------------------------------ 4

Outcome early_stopping_detection()
{
    ESState s(3, 10);
    const float stream[4] = {0, 0, 0, 1};
    std::vector<double> vars;
    for (int it = 0; it < 4; ++it) {
        const std::vector<float> x{stream[it]};
        const WmvEvent ev = wmv_update(s, x, it);
        if (ev.window_full)
            vars.push_back(ev.variance);
    }
    const bool hand = vars.size() == 2 && vars[0] == 0.0 && std::abs(vars[1] - 2.0 / 9.0) < 1e-15;

    std::string detail = fmt("W=3 case %s", hand ? "exact" : "wrong");
    bool ok = hand;
    for (int window : {20, 50, 100})
        for (int valley : {300, 700}) {
            ESState es(window, 100000);
            SplitRng rng(window + valley, "acceptance.valley");
            std::vector<float> phase(32);
            for (float& p : phase)
                p = static_cast<float>(rng.uniform(0.5, 1.5));
            for (int t = 0; t < 1500; ++t) {
                std::vector<float> x(phase.size());
                const float amp = 0.01f * std::abs(t - valley) + 1e-4f;
                for (std::size_t i = 0; i < x.size(); ++i)
                    x[i] = 0.5f + (t % 2 ? 1.0f : -1.0f) * amp * phase[i];
                wmv_update(es, x, t);
            }
            const bool near = std::abs(es.best_iter - valley) <= window;
            ok = ok && near;
            detail += fmt(", W=%d valley %d -> %d", window, valley, es.best_iter);
        }
    return {ok, detail};
}

// ------------------------------------------------------------------ 5

Outcome localization()
{
    SplitRng rng(5, "acceptance.offsets");
    int found = 0;
    double min_score = 1;
    for (int t = 0; t < 20; ++t) {
        const ImageGrid y = random_image(1, 24, 20, 500 + t);
        ImageGrid canvas = random_image(1, 40, 37, 600 + t);
        const Shift o{std::uniform_int_distribution<int>(0, 16)(rng), std::uniform_int_distribution<int>(0, 17)(rng)};
        for (int i = 0; i < 24; ++i)
            for (int j = 0; j < 20; ++j)
                canvas(0, o.rows + i, o.cols + j) = y(0, i, j);
        const Placement p = locate_image(canvas, y).second;
        found += p.offset == o;
        min_score = std::min(min_score, p.score);
    }

    const SizingPlan plan = plan_sizes({20, 20}, PixelSize{7, 7});
    ImageGrid x(1, 26, 26);
    const ImageGrid inner = random_image(1, 20, 20, 700);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            x(0, 3 + i, 3 + j) = inner(0, i, j);
    Kernel k(7, 7);
    const Kernel small = random_kernel(3, 3, 701);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            k(2 + i, 2 + j) = small(i, j);
    const Shift c = centered_offset(plan);
    ImageGrid templ(1, 20, 20);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            templ(0, i, j) = x(0, c.rows + i, c.cols + j);
    double round_trip = 0;
    for (int tr = -2; tr <= 2; ++tr)
        for (int tc = -2; tc <= 2; ++tc) {
            const auto [ks, xs] = shift_pair(k, x, {tr, tc});
            const Placement p = locate_image(xs, templ).second;
            const Kernel back = locate_kernel(ks, p, plan);
            for (std::size_t i = 0; i < k.size(); ++i)
                round_trip = std::max(round_trip, std::abs(back.storage()[i] - k.storage()[i]));
        }
    return {found == 20 && min_score >= 1 - 1e-9 && round_trip <= 1e-6,
            fmt("%d/20 offsets, min score 1-%.1e, round trip max error %.1e", found, 1 - min_score, round_trip)};
}

// ------------------------------------------------------------------ 6

Outcome metrics()
{
    const ImageGrid a = random_image(1, 32, 32, 800, 0.2, 0.8);
    ImageGrid b = a;
    for (double& v : b.storage())
        v += 0.1;
    const double p = psnr(a, b);

    const Kernel k = random_kernel(13, 13, 801);
    double fbe_dev = 0;
    for (double alpha : {0.5, 2.0}) {
        Kernel s = k;
        for (double& v : s.storage())
            v *= alpha;
        for (double e : fbe(k, s))
            fbe_dev = std::max(fbe_dev, std::abs(e - std::abs(1 - alpha)));
    }
    const ImageGrid img = random_image(1, 64, 64, 802);
    const double v = vif(img, img);
    return {std::abs(p - 20) <= 1e-9 && fbe_dev <= 1e-9 && std::abs(v - 1) <= 1e-6,
            fmt("psnr %.12f dB, fbe scale-law deviation %.1e, vif(a,a) = %.9f", p, fbe_dev, v)};
}

// ------------------------------------------------------- end-to-end runs

/// 128 x 128 grayscale scene blurred by a 13 x 13 motion kernel.
CaseData make_case(const std::string& name, double sigma, int size = 128, int ksize = 13, std::uint64_t seed = 7)
{
    RunConfig c;
    c.seed = seed;
    c.synth.case_id = name;
    c.synth.image_size = {size, size};
    c.synth.kernel_size = ksize;
    c.synth.kernel = ksize == 1 ? "delta" : "motion";
    c.noise = NoiseSpec{};
    if (sigma > 0) {
        c.noise.kind = NoiseKind::gaussian;
        c.noise.gaussian_sigma = sigma;
        c.noise.seed = seed;
    }
    c.paths.out = out_root() / "cases";
    return load_case(cmd_synth(c));
}

RunConfig method_config(std::uint64_t seed, int max_iters, EsProfile profile)
{
    RunConfig c;
    c.apply_es_profile(profile);
    c.apply_seed(seed);
    c.solver.max_iters = max_iters;
    c.save_checkpoint = false;
    return c;
}

DeblurOutcome run_case(const CaseData& d, const RunConfig& cfg, const std::string& tag)
{
    const auto start = std::chrono::steady_clock::now();
    DeblurOutcome o = deblur_image(d.blurry, cfg, d.groundtruth ? &*d.groundtruth : nullptr,
                                   d.kernel ? &*d.kernel : nullptr);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path dir = out_root() / tag;
    write_outcome(dir, o, cfg);
    std::ofstream(dir / "seconds.txt") << secs << '\n';
    std::fprintf(stderr, "  [%s] %.0f s, best_iter %d, iterations %d\n", tag.c_str(), secs, o.run.best_iter,
                 o.run.iterations);
    return o;
}

// ------------------------------------------------------------------ 7

Outcome end_to_end()
{
    const CaseData d = make_case("e2e_low", 0.01);
    std::vector<bool> ok;
    std::string detail;
    for (std::uint64_t seed : {0, 1, 2}) {
        RunConfig cfg = method_config(seed, 3000, EsProfile::low_noise);
        cfg.kernel_size = PixelSize{64, 64};
        cfg.solver.trace_every = 100;
        const DeblurOutcome o = run_case(d, cfg, "c7_seed" + std::to_string(seed));
        const double gain = o.metrics->psnr - o.baseline->psnr;
        ok.push_back(gain >= 2.0);
        detail += fmt("%sseed %d: %.2f dB vs blurry %.2f dB (%+.2f)", seed ? "; " : "", int(seed), o.metrics->psnr,
                      o.baseline->psnr, gain);
    }
    return {count_true(ok) >= 2, detail};
}

// ------------------------------------------------------------------ 8

Outcome overfitting()
{
    const CaseData d = make_case("e2e_high", 0.05);
    std::vector<bool> ok;
    std::string detail;
    for (std::uint64_t seed : {0, 1, 2}) {
        RunConfig cfg = method_config(seed, 3000, EsProfile::high_noise);
        cfg.kernel_size = PixelSize{64, 64};
        cfg.solver.early_stop = false;
        cfg.solver.trace_every = 25;
        const DeblurOutcome o = run_case(d, cfg, "c8_seed" + std::to_string(seed));
        const EsGap g = *o.es_gap;
        const int last = o.run.trace.rows.back().iter;
        const bool pass = g.peak_iter < last && g.es_gap < g.base_gap;
        ok.push_back(pass);
        detail += fmt("%sseed %d: peak %.2f dB at %d, es_gap %.2f, base_gap %.2f", seed ? "; " : "", int(seed), g.peak,
                      g.peak_iter, g.es_gap, g.base_gap);
    }
    return {count_true(ok) >= 2, detail};
}

// ------------------------------------------------------------------ 9

Outcome model_stability()
{
    // no blur: a 1 x 1 delta leaves the scene untouched
    const CaseData d = make_case("noise_only", 0.05, 64, 1);
    std::vector<bool> ok;
    std::string detail;
    for (std::uint64_t seed : {0, 1, 2}) {
        RunConfig cfg = method_config(seed, 3000, EsProfile::high_noise);
        cfg.solver.trace_every = 100;
        const DeblurOutcome o = run_case(d, cfg, "c9_seed" + std::to_string(seed));
        const double mass = centered_mass(o.k_hat, 1);
        ok.push_back(mass >= 0.5);
        detail += fmt("%sseed %d: centered 3x3 mass %.3f", seed ? "; " : "", int(seed), mass);
    }
    return {count_true(ok) >= 2, detail};
}

// ----------------------------------------------------------------- 10

Outcome regularizer_ablation()
{
    const CaseData d = make_case("toy_high", 0.05, 64, 13);
    std::vector<bool> ok;
    std::string detail;
    for (std::uint64_t seed : {0, 1, 2}) {
        double final_psnr[2];
        int idx = 0;
        for (RegKind reg : {RegKind::l1_over_l2, RegKind::l1}) {
            RunConfig cfg = method_config(seed, 2000, EsProfile::high_noise);
            cfg.kernel_size = PixelSize{13, 13};
            cfg.objective.reg_kind = reg;
            cfg.objective.lambda_x = 1e-5;
            cfg.solver.early_stop = false;
            cfg.solver.trace_every = 100;
            const DeblurOutcome o =
                run_case(d, cfg, "c10_" + to_string(reg) + "_seed" + std::to_string(seed));
            final_psnr[idx++] = o.run.trace.rows.back().psnr;
        }
        ok.push_back(final_psnr[0] > final_psnr[1]);
        detail += fmt("%sseed %d: l1/l2 %.2f dB, l1 %.2f dB", seed ? "; " : "", int(seed), final_psnr[0],
                      final_psnr[1]);
    }
    return {count_true(ok) >= 2, detail};
}

// ----------------------------------------------------------------- 11

/// Highest-band error after regressing a kernel field onto `target`.
double regress_kernel(const Kernel& target, KernelModel model, std::uint64_t seed, int steps, double lr)
{
    KernelFieldArch arch;
    arch.model = model;
    KernelField<float> field({target.rows(), target.cols()}, seed, arch);
    nn::Adam adam(field.parameters());
    for (int t = 1; t <= steps; ++t) {
        adam.zero_grad();
        const BasicKernel<float> k = field.forward();
        BasicKernel<float> g(k.rows(), k.cols());
        for (std::size_t i = 0; i < k.size(); ++i)
            g.storage()[i] = 2 * (k.storage()[i] - static_cast<float>(target.storage()[i]));
        field.backward(g);
        adam.step(lr, t);
    }
    const BasicKernel<float> k = field.forward();
    Kernel est(k.rows(), k.cols());
    std::copy(k.storage().begin(), k.storage().end(), est.storage().begin());
    return fbe(target, est).back();
}

Outcome kernel_model_ablation()
{
    std::vector<bool> ok;
    std::string detail;
    for (std::uint64_t seed : {0, 1, 2}) {
        const Kernel target = motion_kernel(13, 100 + seed);
        const double siren = regress_kernel(target, KernelModel::siren, seed, 2000, 1e-4);
        const double mlp = regress_kernel(target, KernelModel::mlp, seed, 2000, 1e-4);
        ok.push_back(siren < mlp);
        detail += fmt("%sseed %d: high-band fbe siren %.3f, mlp %.3f", seed ? "; " : "", int(seed), siren, mlp);
    }
    return {count_true(ok) >= 2, detail};
}

} // namespace

int main(int argc, char** argv)
{
    tune_allocator();
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, forward_model_oracles}, {2, objective_correctness}, {3, degradation_statistics},
        {4, early_stopping_detection}, {5, localization}, {6, metrics},
        {7, end_to_end}, {8, overfitting}, {9, model_stability},
        {10, regularizer_ablation}, {11, kernel_model_ablation}};
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));

    int passed = 0, ran = 0;
    fs::create_directories(out_root());
    std::ofstream results(out_root() / "results.txt");
    auto emit = [&](const std::string& line) {
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        results << line << '\n' << std::flush;
    };
    for (const auto& [id, check] : criteria) {
        if (!only.empty() && !only.count(id))
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        emit(fmt("criterion %d: %s (%s) [%.1f s]", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs));
        passed += o.pass;
        ++ran;
    }
    emit(fmt("acceptance: %d/%d criteria passed", passed, ran));
    return 0;
}
