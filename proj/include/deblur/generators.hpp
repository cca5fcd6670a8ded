#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "deblur/forward_model.hpp"
#include "deblur/nn/layers.hpp"

namespace deblur {

/// Encoder-decoder with skip connections. Level i holds a downsample block
/// (strided conv, BN, LeakyReLU, conv, BN, LeakyReLU), a skip block (1x1 conv,
/// BN, LeakyReLU) and an upsample block (BN, conv, BN, LeakyReLU, 1x1 conv, BN,
/// LeakyReLU) fed by the bilinearly upsampled output of level i+1.
struct GeneratorArch {
    std::vector<int> widths{16, 32, 64, 128, 128};
    std::vector<int> kernel_sizes{3, 3, 3, 5, 5};    ///< downsample block convolutions
    std::vector<int> up_kernel_sizes{3, 3, 3, 3, 5}; ///< first upsample block convolution
    int skip_width = 4;
    int input_channels = 32;
    double input_scale = 0.1; ///< seed tensor drawn from uniform[0, input_scale]

    int depth() const { return static_cast<int>(widths.size()); }
    void validate() const;
    nlohmann::json to_json() const;
    static GeneratorArch from_json(const nlohmann::json& j);
    bool operator==(const GeneratorArch&) const = default;
};

enum class KernelModel { siren, mlp };
enum class KernelNormalize { sum, none };

std::string to_string(KernelModel m);
std::string to_string(KernelNormalize n);
KernelModel kernel_model_from_string(const std::string& s);
KernelNormalize kernel_normalize_from_string(const std::string& s);

struct KernelFieldArch {
    KernelModel model = KernelModel::siren;
    KernelNormalize normalize = KernelNormalize::sum;
    int hidden_width = 64;   ///< sinusoidal layers
    int hidden_layers = 2;
    double omega = 30.0;
    int mlp_input = 200;     ///< fully connected ablation: fixed random input length
    int mlp_hidden = 1000;

    nlohmann::json to_json() const;
    static KernelFieldArch from_json(const nlohmann::json& j);
    bool operator==(const KernelFieldArch&) const = default;
};

template <typename T>
using ParamRefs = std::vector<nn::Param<T>*>;

template <typename T>
class ImageGenerator {
public:
    /// Throws ArchitectureError when the canvas is smaller than 2^depth along an axis.
    ImageGenerator(PixelSize x_size, int channels, std::uint64_t seed, GeneratorArch arch = {});

    /// One forward pass; keeps the activations needed by backward().
    Grid<T> forward();
    /// Accumulates parameter gradients for d(loss)/d(output) = grad_out.
    void backward(const Grid<T>& grad_out);

    ParamRefs<T> parameters();
    std::size_t parameter_count() const;

    const Grid<T>& seed_input() const { return seed_input_; }
    const GeneratorArch& arch() const { return arch_; }
    PixelSize output_size() const { return size_; }
    int channels() const { return channels_; }
    std::uint64_t seed() const { return seed_; }

private:
    struct Level {
        nn::Conv2d<T> down1, down2, skip, up1, up2;
        nn::BatchNorm<T> bn_down1, bn_down2, bn_skip, bn_cat, bn_up1, bn_up2;
        nn::LeakyRelu<T> act_down1, act_down2, act_skip, act_up1, act_up2;
        nn::BilinearResize<T> resize;
        int height = 0, width = 0, skip_channels = 0;
    };

    PixelSize size_;
    int channels_;
    std::uint64_t seed_;
    GeneratorArch arch_;
    Grid<T> seed_input_;
    std::vector<Level> levels_;
    nn::Conv2d<T> head_;
    nn::Sigmoid<T> out_act_;
    std::vector<Grid<T>> skip_out_;
};

/// Continuous kernel representation evaluated on a fixed coordinate lattice.
/// The default model is a sinusoidal coordinate network (two hidden sine
/// layers, sigmoid output); `KernelModel::mlp` swaps in a fully connected
/// network on a fixed random input vector. Rendering divides the sigmoid field
/// by its sum so the result lies on the simplex.
template <typename T>
class KernelField {
public:
    KernelField(PixelSize k_size, std::uint64_t seed, KernelFieldArch arch = {});

    /// Sigmoid outputs on the lattice, before normalization; entries in (0, 1).
    BasicKernel<T> evaluate();
    /// Discretized, normalized kernel. Keeps activations for backward().
    BasicKernel<T> forward();
    void backward(const BasicKernel<T>& grad_kernel);

    ParamRefs<T> parameters();
    std::size_t parameter_count() const;

    /// Lattice points: pixel centers mapped affinely onto [-1, 1] per axis, row-major.
    const nn::Matrix<T>& coordinates() const { return coords_; }
    const KernelFieldArch& arch() const { return arch_; }
    PixelSize kernel_size() const { return size_; }
    std::uint64_t seed() const { return seed_; }

private:
    nn::Matrix<T> network_forward();
    void network_backward(const nn::Matrix<T>& grad);

    PixelSize size_;
    std::uint64_t seed_;
    KernelFieldArch arch_;
    nn::Matrix<T> coords_;
    std::vector<nn::Linear<T>> linears_;
    std::vector<nn::Sine<T>> sines_;
    nn::Relu6<T> relu6_;
    nn::Matrix<T> field_;
    T field_sum_ = 0;
};

template <typename T>
BasicKernel<T> render_kernel(KernelField<T>& field)
{
    return field.forward();
}

template <typename T>
Grid<T> render_image(ImageGenerator<T>& gen)
{
    return gen.forward();
}

template <typename T>
ImageGenerator<T> init_image_generator(PixelSize x_size, int channels, std::uint64_t seed, GeneratorArch arch = {})
{
    return ImageGenerator<T>(x_size, channels, seed, std::move(arch));
}

template <typename T>
KernelField<T> init_kernel_field(PixelSize k_size, std::uint64_t seed, KernelFieldArch arch = {})
{
    return KernelField<T>(k_size, seed, std::move(arch));
}

template <typename T>
void zero_grad(const ParamRefs<T>& params)
{
    for (auto* p : params)
        p->zero_grad();
}

/// Parameter values of a network, copied out for checkpointing.
template <typename T>
using ParamSnapshot = std::vector<std::vector<T>>;

template <typename T>
ParamSnapshot<T> snapshot(const ParamRefs<T>& params)
{
    ParamSnapshot<T> s;
    s.reserve(params.size());
    for (auto* p : params)
        s.push_back(p->value);
    return s;
}

template <typename T>
void restore(const ParamRefs<T>& params, const ParamSnapshot<T>& s)
{
    if (s.size() != params.size())
        throw DimensionError("snapshot does not match parameter list");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (s[i].size() != params[i]->value.size())
            throw DimensionError("snapshot shape mismatch for " + params[i]->name);
        params[i]->value = s[i];
    }
}

/// Archive holding both generators: parameters, seed tensor, architecture and seed.
/// Layout: 8-byte magic "DBLRCKPT", uint32 format version, uint64 header length,
/// UTF-8 JSON header, then the arrays named in the header as little-endian float32.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, ImageGenerator<float>& gen, KernelField<float>& field,
                     const nlohmann::json& extra = {});

/// Restores parameters in place and returns the `extra` block. Architecture,
/// sizes and seed tensor must match the archive.
nlohmann::json load_checkpoint(const std::filesystem::path& path, ImageGenerator<float>& gen,
                               KernelField<float>& field);

} // namespace deblur
