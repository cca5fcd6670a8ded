#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "deblur/objective.hpp"

namespace deblur {

enum class EsProfile { low_noise, high_noise };

std::string to_string(EsProfile p);
EsProfile es_profile_from_string(const std::string& s);

struct SolverConfig {
    double lr_image = 1e-2;
    double lr_kernel = 1e-4;
    std::vector<int> milestones{2000, 3000, 5000, 8000};
    double gamma = 0.5;
    int max_iters = 10000;
    int window = 100;
    int patience = 500;
    /// Stop once the windowed variance has not improved for `patience`
    /// iterations. When false the run always reaches max_iters; the detector
    /// still picks the returned estimate.
    bool early_stop = true;
    std::uint64_t seed = 0;
    /// A trace row every `trace_every` iterations (plus the best and the last
    /// iteration). Groundtruth PSNR, when available, is computed on those rows.
    int trace_every = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    /// Learning rates for synthetic data (1e-2 / 1e-4) or real photographs (1e-3 / 1e-5).
    static SolverConfig synthetic_profile();
    static SolverConfig real_profile();
    /// Patience 500 (low noise) or 200 (high noise).
    static int patience_for(EsProfile p);

    /// Throws ParameterError unless lr_image > lr_kernel > 0, 0 < gamma < 1,
    /// window >= 2, patience >= 1, max_iters >= 0 and milestones strictly increase.
    void validate() const;
    nlohmann::json to_json() const;
    static SolverConfig from_json(const nlohmann::json& j);
    bool operator==(const SolverConfig&) const = default;
};

struct LearningRates {
    double image = 0;
    double kernel = 0;
};

/// Base rates times gamma^(number of milestones <= iter).
LearningRates lr_at(int iter, const SolverConfig& cfg);

/// Best iterate recorded by the early-stopping detector.
struct Checkpoint {
    int iter = -1;
    ParamSnapshot<float> image_params;
    ParamSnapshot<float> kernel_params;
    Grid<float> image;
    BasicKernel<float> kernel;
};

/// Windowed-moving-variance detector state.
struct ESState {
    int window = 100;
    int patience = 500;
    std::deque<std::vector<float>> queue; ///< last <= window iterates
    double var_min = std::numeric_limits<double>::infinity();
    int stall = 0;
    int best_iter = -1;
    std::optional<Checkpoint> best;

    ESState() = default;
    ESState(int w, int p) : window(w), patience(p) {}
    bool should_stop() const { return stall >= patience; }
};

struct WmvEvent {
    bool window_full = false;
    double variance = std::numeric_limits<double>::quiet_NaN();
    bool improved = false;
};

/// Pushes x (pops the oldest entry beyond the window). With a full window the
/// variance is the per-pixel population variance across the window averaged
/// over pixels; a new minimum records `capture()` as the best checkpoint (when
/// given) and resets the stall counter, otherwise the counter grows by one.
/// Throws DimensionError if x changes size between calls.
WmvEvent wmv_update(ESState& state, std::span<const float> x, int iter,
                    const std::function<Checkpoint()>& capture = {});

/// 4x4 average pooling (partial blocks averaged over their valid pixels),
/// used for the detector queue on canvases larger than 512 x 512.
std::vector<float> pool4(const Grid<float>& x);

struct TraceRow {
    int iter = 0;
    double objective = 0;
    double lr_x = 0;
    double lr_k = 0;
    double wmv = std::numeric_limits<double>::quiet_NaN();
    double psnr = std::numeric_limits<double>::quiet_NaN();
};

struct RunTrace {
    std::vector<TraceRow> rows;
    bool pooled_queue = false;

    bool has_groundtruth() const;
    /// Columns iter,objective,lr_x,lr_k,wmv,psnr; undefined values are empty fields.
    void write_csv(const std::filesystem::path& path) const;
    static RunTrace read_csv(const std::filesystem::path& path);
};

struct EsGap {
    double peak = 0;
    int peak_iter = 0;
    double es_gap = 0;
    double base_gap = 0;
};

/// es_gap = peak - psnr(best_iter), base_gap = peak - psnr(last row), over the
/// rows that carry a PSNR value. best_iter must have its own row. Throws
/// Unavailable when the trace has no groundtruth values or lacks best_iter.
EsGap es_gap_report(const RunTrace& trace, int best_iter);

/// A non-finite objective stopped the run. The trace up to the failure is kept.
class RunAborted : public Error {
public:
    RunAborted(const std::string& what, RunTrace trace) : Error(what), trace_(std::move(trace)) {}
    const RunTrace& trace() const { return trace_; }

private:
    RunTrace trace_;
};

struct RunOptions {
    GeneratorArch image_arch;
    KernelFieldArch kernel_arch;
    /// Aligned groundtruth (observation-sized) for PSNR tracing, if known.
    const ImageGrid* groundtruth = nullptr;
    /// Called after every iteration with the current row (psnr filled on trace rows only).
    std::function<void(const TraceRow&)> progress;
};

struct RunResult {
    ImageGrid best_image;  ///< canvas
    Kernel best_kernel;    ///< kernel canvas
    ImageGrid final_image;
    Kernel final_kernel;
    int best_iter = -1;    ///< -1 when no window was ever full (best = final)
    int iterations = 0;    ///< optimizer steps taken
    bool stopped_early = false;
    RunTrace trace;
    std::optional<Checkpoint> checkpoint; ///< parameters behind best_image
};

/// Joint Adam optimization of both generators on loss(y, k * x) + lambda R(x)
/// with milestone decay and windowed-variance early stopping. The returned
/// canvas and kernel are not localized yet. Throws RunAborted on a non-finite
/// objective.
RunResult run(const ImageGrid& y, const SizingPlan& plan, const ObjectiveConfig& obj, const SolverConfig& cfg,
              const RunOptions& options = {});

/// Groundtruth PSNR of a canvas after localization against y.
double localized_psnr(const ImageGrid& canvas, const ImageGrid& y, const ImageGrid& groundtruth);

} // namespace deblur
