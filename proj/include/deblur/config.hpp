#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "deblur/degradation.hpp"
#include "deblur/generators.hpp"
#include "deblur/objective.hpp"
#include "deblur/solver.hpp"

namespace deblur {

inline constexpr int kConfigSchemaVersion = 1;

/// Thrown for malformed or inconsistent configuration files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// How `synth` builds a case.
struct SynthSettings {
    std::string case_id = "0";
    /// Clean source: a PNG path or "procedural".
    std::string clean = "procedural";
    /// Observation size for procedural scenes; the clean canvas is this plus
    /// the kernel size minus one.
    PixelSize image_size{256, 256};
    /// Kernel source: a CSV/PNG path, "motion", "gaussian" or "delta".
    std::string kernel = "motion";
    int kernel_size = 13;
    double gaussian_kernel_sigma = 2.0;
    /// Scene drawn in gray or RGB (procedural scenes replicate the gray channel).
    int channels = 1;

    bool operator==(const SynthSettings&) const = default;
};

enum class SweepAxis { lambda, kernel_size_level, noise };
std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepSettings {
    SweepAxis axis = SweepAxis::lambda;
    std::vector<double> lambdas{1e-3, 1e-4, 1e-5, 1e-6};
    /// Level 1 is the true kernel size, the last level half the observation.
    int levels = 5;
    std::vector<NoiseSpec> noises;
    std::vector<std::uint64_t> seeds{0};

    bool operator==(const SweepSettings&) const = default;
};

struct PathSettings {
    std::filesystem::path input;              ///< blurry observation
    std::filesystem::path case_dir;           ///< synthesized case; fills input and groundtruth
    std::filesystem::path groundtruth_image;  ///< aligned with the observation
    std::filesystem::path groundtruth_kernel;
    std::vector<std::filesystem::path> cases; ///< sweep inputs
    std::filesystem::path estimates;          ///< eval: estimate directory
    std::filesystem::path groundtruth_dir;    ///< eval: reference directory
    std::filesystem::path out = "out";

    bool operator==(const PathSettings&) const = default;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::optional<PixelSize> kernel_size; ///< absent: half the observation size
    ObjectiveConfig objective;
    SolverConfig solver = SolverConfig::synthetic_profile();
    EsProfile es_profile = EsProfile::low_noise;
    GeneratorArch image_arch;
    KernelFieldArch kernel_arch;
    NoiseSpec noise;
    SynthSettings synth;
    SweepSettings sweep;
    PathSettings paths;
    bool save_checkpoint = true;

    /// Every field written out, defaults included.
    nlohmann::json to_json() const;
    /// Missing keys take defaults; unknown keys and bad values throw ConfigError.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Seeds and patience from command-line overrides.
    void apply_seed(std::uint64_t s);
    void apply_es_profile(EsProfile p);

    /// Hex digest of the method settings (objective, solver, architectures),
    /// used to tag result rows.
    std::string method_hash() const;

    bool operator==(const RunConfig&) const;
};

nlohmann::json to_json(const ObjectiveConfig& c);
ObjectiveConfig objective_from_json(const nlohmann::json& j);

} // namespace deblur
