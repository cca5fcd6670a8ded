#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "deblur/forward_model.hpp"

namespace deblur {

enum class NoiseKind { none, gaussian, impulse, shot, saturation };

std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);

/// One degradation applied after blurring. Only the parameter of the active
/// kind is read.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    double gaussian_sigma = 0.0;
    double impulse_p = 0.0;
    double shot_eta = 1.0;
    std::uint64_t seed = 0;

    /// Throws ParameterError when the active parameter is out of range.
    void validate() const;
    nlohmann::json to_json() const;
    static NoiseSpec from_json(const nlohmann::json& j);
    bool operator==(const NoiseSpec&) const = default;

    /// Named settings. Two sets of low/high impulse and shot levels circulate
    /// for the same experiment; both are available:
    ///   list_low / list_high : eta = 90 / 25, p = 0.005 / 0.08
    ///   fig_low  / fig_high  : eta = 80 / 40, p = 0.01  / 0.05
    /// Gaussian presets use sigma = 0.01 (low) and 0.05 (high) in both sets.
    static NoiseSpec preset(NoiseKind kind, const std::string& level, std::uint64_t seed = 0);
};

/// clip(x + n, 0, 1) with n ~ N(0, sigma^2) i.i.d. Throws ParameterError on sigma < 0.
ImageGrid add_gaussian(const ImageGrid& x, double sigma, std::uint64_t seed);

/// Each pixel (all channels jointly) replaced with probability p by 0 or 1 with equal chance.
ImageGrid add_impulse(const ImageGrid& x, double p, std::uint64_t seed);

/// clip(Poisson(eta * x) / eta, 0, 1) per entry. Throws ParameterError on eta <= 0.
ImageGrid add_shot(const ImageGrid& x, double eta, std::uint64_t seed);

/// Pixel saturation on RGB input: in hue/saturation/lightness space
/// s <- clip(2 s + 0.1, 0, 1), convert back and clip, then Gaussian noise with
/// sigma = 1e-4. Throws UnsupportedChannels on grayscale input.
ImageGrid saturate(const ImageGrid& x, std::uint64_t seed);

/// The deterministic part of saturate(): the saturation remap alone.
ImageGrid saturate_colors(const ImageGrid& x);

/// Dispatches on spec.kind (none returns the input unchanged).
ImageGrid apply_noise(const ImageGrid& x, const NoiseSpec& spec);

/// y = noise(convolve_truncated(x_clean, k)).
ImageGrid synthesize_case(const ImageGrid& x_clean, const Kernel& k, const NoiseSpec& noise);

/// Empirical distribution of normalized gradient magnitudes. Gradients come
/// from the 3x3 Sobel pair with replicate boundary, magnitudes are divided by
/// the image's own maximum (all zero for a constant image), and the CDF is
/// sampled at `thresholds` (1000 evenly spaced points in [0, 1]).
struct GradientCdf {
    std::vector<double> thresholds;
    std::vector<double> mean; ///< mean CDF across images
    std::vector<double> std;  ///< population std across images
};

/// Throws DimensionError on an empty list.
GradientCdf gradient_cdf(const std::vector<ImageGrid>& images, int grid_points = 1000);

} // namespace deblur
