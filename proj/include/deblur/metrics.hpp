#pragma once

#include <array>
#include <optional>

#include "json.hpp"

#include "deblur/localization.hpp"

namespace deblur {

inline constexpr double kPsnrCap = 100.0;
inline constexpr int kReportSchemaVersion = 1;

/// -10 log10(MSE) over all entries, dynamic range 1; 100 dB when MSE < 1e-10.
double psnr(const ImageGrid& a, const ImageGrid& b);

/// Luma (0.299, 0.587, 0.114) of an RGB image; grayscale passes through.
ImageGrid to_gray(const ImageGrid& x);

/// Pixel-domain visual information fidelity over four scales (Gaussian
/// windows of 17, 9, 5, 3 taps with std = taps / 5, filter-and-decimate
/// between scales), noise variance 2 on the 0..255 intensity scale. Color
/// inputs are reduced to luma first.
double vif(const ImageGrid& ref, const ImageGrid& dist);

inline constexpr int kFbeBands = 5;
using BandErrors = std::array<double, kFbeBands>;

/// Frequency band error: |F(k) - F(k_est)| / max(|F(k)|, 1e-12) averaged
/// over five radial bands of equal width. The radius of a frequency is its
/// distance from DC in cycles per sample divided by the Nyquist rate 0.5, so
/// band b covers [b/5, (b+1)/5); corner frequencies beyond Nyquist fall into
/// the last band. The smaller kernel is zero-padded at the bottom and right.
BandErrors fbe(const Kernel& k_true, const Kernel& k_est);

struct MetricReport {
    double psnr = 0;
    double ssim = 0;
    double vif = 0;
    std::optional<BandErrors> fbe; ///< absent without a groundtruth kernel

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& j);
};

/// Parameters of every metric, stored with each report.
nlohmann::json metric_provenance();

/// Evaluates a localized estimate against groundtruth. Kernel errors are
/// skipped when either kernel is missing.
MetricReport evaluate_pair(const ImageGrid& x_est, const ImageGrid& x_true, const Kernel* k_est = nullptr,
                           const Kernel* k_true = nullptr);

} // namespace deblur
