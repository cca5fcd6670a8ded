#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deblur/config.hpp"
#include "deblur/localization.hpp"
#include "deblur/metrics.hpp"
#include "deblur/solver.hpp"

namespace deblur {

/// A synthesized or user-supplied case. `groundtruth` is aligned with
/// `blurry`; `clean` is the full scene canvas when known.
struct CaseData {
    std::string id;
    ImageGrid blurry;
    std::optional<ImageGrid> groundtruth;
    std::optional<ImageGrid> clean;
    std::optional<Kernel> kernel;
    Shift groundtruth_offset; ///< position of the groundtruth window in `clean`
};

/// Row offset of the scene window a kernel maps onto observation pixel (0, 0):
/// n - 1 - round(centroid) per axis.
Shift groundtruth_offset(const Kernel& k);

/// Writes case_<id>/{clean.png, kernel.png, kernel.csv, blurry.png, spec.json}
/// under paths.out and returns the case directory.
std::filesystem::path cmd_synth(const RunConfig& cfg);

/// Reads a directory written by cmd_synth.
CaseData load_case(const std::filesystem::path& dir);

/// Observation plus optional groundtruth from paths.case_dir or the explicit paths.
CaseData resolve_inputs(const RunConfig& cfg);

struct DeblurOutcome {
    SizingPlan plan;
    RunResult run;
    ImageGrid x_hat;
    Kernel k_hat;
    Placement placement;
    std::optional<MetricReport> metrics;  ///< with groundtruth only
    std::optional<MetricReport> baseline; ///< observation against groundtruth
    std::optional<EsGap> es_gap;
};

/// plan_sizes -> run -> locate_image -> locate_kernel -> evaluate_pair. The
/// true kernel, when given, is compared after embed_centered on the estimate's canvas.
DeblurOutcome deblur_image(const ImageGrid& y, const RunConfig& cfg, const ImageGrid* groundtruth = nullptr,
                           const Kernel* true_kernel = nullptr,
                           std::function<void(const TraceRow&)> progress = {});

/// Writes x_hat.png, kernel.csv, kernel.png, trace.csv, report.json and
/// config.resolved.json (plus checkpoint.dblr) into `dir`.
void write_outcome(const std::filesystem::path& dir, const DeblurOutcome& outcome, const RunConfig& cfg);

/// Full single-image command. On RunAborted the partial trace is written
/// before the exception propagates.
DeblurOutcome cmd_run(const RunConfig& cfg, std::function<void(const TraceRow&)> progress = {});

struct SweepRow {
    std::string case_id;
    std::string setting;
    double setting_value = 0;
    std::uint64_t seed = 0;
    std::string method_hash;
    std::string status = "ok"; ///< "ok" or "error"
    std::string error;
    std::optional<MetricReport> metrics;
    std::optional<MetricReport> baseline;
    std::optional<EsGap> es_gap;
    int best_iter = -1;
    int iterations = 0;
};

/// Kernel canvas per level: level 1 is the true size, level `levels` is
/// ceil(y / 2), evenly spaced (rounded) in between.
std::vector<PixelSize> kernel_size_levels(PixelSize true_size, PixelSize y_size, int levels);

/// Runs the sweep on a pool of `workers` threads and writes sweep.csv,
/// summary.csv and SVG plots under paths.out. Failed rows are recorded and
/// the sweep continues.
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, int workers);

struct EvalRow {
    std::string name;
    std::string status = "ok";
    std::string error;
    MetricReport metrics;
};

/// Matches PNG files by name across paths.estimates and paths.groundtruth_dir
/// (kernels as <name>.csv when both sides have one) and writes metrics.csv with
/// a trailing mean row. Throws IoError when no file matches.
std::vector<EvalRow> cmd_eval(const RunConfig& cfg);

/// DEBLUR_NUM_WORKERS when set to a positive integer, else the hardware concurrency.
int worker_count();

} // namespace deblur
