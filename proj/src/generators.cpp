#include "deblur/generators.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace deblur {

// ------------------------------------------------------------ descriptors

void GeneratorArch::validate() const
{
    if (widths.empty())
        throw ArchitectureError("generator needs at least one level");
    if (kernel_sizes.size() != widths.size() || up_kernel_sizes.size() != widths.size())
        throw ArchitectureError("one kernel size per level is required");
    for (int w : widths)
        if (w < 1)
            throw ArchitectureError("level widths must be positive");
    for (const auto* sizes : {&kernel_sizes, &up_kernel_sizes})
        for (int k : *sizes)
            if (k < 1 || k % 2 == 0)
                throw ArchitectureError("convolution sizes must be odd and positive");
    if (skip_width < 0 || input_channels < 1 || !(input_scale > 0))
        throw ArchitectureError("invalid skip width, input channel count or input scale");
}

nlohmann::json GeneratorArch::to_json() const
{
    return {{"widths", widths},
            {"kernel_sizes", kernel_sizes},
            {"up_kernel_sizes", up_kernel_sizes},
            {"skip_width", skip_width},
            {"input_channels", input_channels},
            {"input_scale", input_scale}};
}

GeneratorArch GeneratorArch::from_json(const nlohmann::json& j)
{
    GeneratorArch a;
    a.widths = j.value("widths", a.widths);
    a.kernel_sizes = j.value("kernel_sizes", a.kernel_sizes);
    a.up_kernel_sizes = j.value("up_kernel_sizes", a.up_kernel_sizes);
    a.skip_width = j.value("skip_width", a.skip_width);
    a.input_channels = j.value("input_channels", a.input_channels);
    a.input_scale = j.value("input_scale", a.input_scale);
    a.validate();
    return a;
}

std::string to_string(KernelModel m)
{
    return m == KernelModel::siren ? "siren" : "mlp";
}

std::string to_string(KernelNormalize n)
{
    return n == KernelNormalize::sum ? "sum" : "none";
}

KernelModel kernel_model_from_string(const std::string& s)
{
    if (s == "siren")
        return KernelModel::siren;
    if (s == "mlp")
        return KernelModel::mlp;
    throw ParameterError("unknown kernel model '" + s + "' (expected siren or mlp)");
}

KernelNormalize kernel_normalize_from_string(const std::string& s)
{
    if (s == "sum")
        return KernelNormalize::sum;
    if (s == "none")
        return KernelNormalize::none;
    throw ParameterError("unknown kernel normalization '" + s + "' (expected sum or none)");
}

nlohmann::json KernelFieldArch::to_json() const
{
    return {{"model", to_string(model)},     {"normalize", to_string(normalize)},
            {"hidden_width", hidden_width}, {"hidden_layers", hidden_layers},
            {"omega", omega},               {"mlp_input", mlp_input},
            {"mlp_hidden", mlp_hidden}};
}

KernelFieldArch KernelFieldArch::from_json(const nlohmann::json& j)
{
    KernelFieldArch a;
    a.model = kernel_model_from_string(j.value("model", to_string(a.model)));
    a.normalize = kernel_normalize_from_string(j.value("normalize", to_string(a.normalize)));
    a.hidden_width = j.value("hidden_width", a.hidden_width);
    a.hidden_layers = j.value("hidden_layers", a.hidden_layers);
    a.omega = j.value("omega", a.omega);
    a.mlp_input = j.value("mlp_input", a.mlp_input);
    a.mlp_hidden = j.value("mlp_hidden", a.mlp_hidden);
    return a;
}

// -------------------------------------------------------- ImageGenerator

template <typename T>
ImageGenerator<T>::ImageGenerator(PixelSize x_size, int channels, std::uint64_t seed, GeneratorArch arch)
    : size_(x_size), channels_(channels), seed_(seed), arch_(std::move(arch))
{
    require_image_channels(channels);
    arch_.validate();
    const int factor = 1 << arch_.depth();
    if (x_size.rows < factor || x_size.cols < factor)
        throw ArchitectureError("canvas " + std::to_string(x_size.rows) + "x" + std::to_string(x_size.cols) +
                                " is smaller than the generator's downsampling factor " + std::to_string(factor));

    SplitRng input_rng(seed, "image_generator.input");
    seed_input_ = Grid<T>(arch_.input_channels, x_size.rows, x_size.cols);
    for (T& v : seed_input_.storage())
        v = static_cast<T>(input_rng.uniform(0.0, arch_.input_scale));

    SplitRng rng(seed, "image_generator.weights");
    const int depth = arch_.depth();
    levels_.resize(depth);
    int in_ch = arch_.input_channels;
    int h = x_size.rows, w = x_size.cols;
    for (int i = 0; i < depth; ++i) {
        Level& lv = levels_[i];
        const std::string p = "level" + std::to_string(i);
        const int width = arch_.widths[i];
        const int k = arch_.kernel_sizes[i];
        const int deeper = (i + 1 < depth) ? arch_.widths[i + 1] : width;
        lv.height = h;
        lv.width = w;
        lv.skip_channels = arch_.skip_width;
        lv.down1 = nn::Conv2d<T>(p + ".down1", in_ch, width, k, 2, rng);
        lv.bn_down1 = nn::BatchNorm<T>(p + ".bn_down1", width);
        lv.down2 = nn::Conv2d<T>(p + ".down2", width, width, k, 1, rng);
        lv.bn_down2 = nn::BatchNorm<T>(p + ".bn_down2", width);
        if (lv.skip_channels > 0) {
            lv.skip = nn::Conv2d<T>(p + ".skip", in_ch, lv.skip_channels, 1, 1, rng);
            lv.bn_skip = nn::BatchNorm<T>(p + ".bn_skip", lv.skip_channels);
        }
        lv.bn_cat = nn::BatchNorm<T>(p + ".bn_cat", lv.skip_channels + deeper);
        lv.up1 = nn::Conv2d<T>(p + ".up1", lv.skip_channels + deeper, width, arch_.up_kernel_sizes[i], 1, rng);
        lv.bn_up1 = nn::BatchNorm<T>(p + ".bn_up1", width);
        lv.up2 = nn::Conv2d<T>(p + ".up2", width, width, 1, 1, rng);
        lv.bn_up2 = nn::BatchNorm<T>(p + ".bn_up2", width);
        in_ch = width;
        h = nn::Conv2d<T>::output_extent(h, k, 2);
        w = nn::Conv2d<T>::output_extent(w, k, 2);
    }
    head_ = nn::Conv2d<T>("head", arch_.widths[0], channels, 1, 1, rng);
    skip_out_.resize(depth);
}

template <typename T>
Grid<T> ImageGenerator<T>::forward()
{
    Grid<T> x = seed_input_;
    const int depth = arch_.depth();
    for (int i = 0; i < depth; ++i) {
        Level& lv = levels_[i];
        if (lv.skip_channels > 0)
            skip_out_[i] = lv.act_skip.forward(lv.bn_skip.forward(lv.skip.forward(x)));
        x = lv.act_down1.forward(lv.bn_down1.forward(lv.down1.forward(x)));
        x = lv.act_down2.forward(lv.bn_down2.forward(lv.down2.forward(x)));
    }
    for (int i = depth - 1; i >= 0; --i) {
        Level& lv = levels_[i];
        Grid<T> up = lv.resize.forward(x, lv.height, lv.width);
        Grid<T> cat = lv.skip_channels > 0 ? nn::concat_channels(skip_out_[i], up) : std::move(up);
        x = lv.bn_cat.forward(cat);
        x = lv.act_up1.forward(lv.bn_up1.forward(lv.up1.forward(x)));
        x = lv.act_up2.forward(lv.bn_up2.forward(lv.up2.forward(x)));
    }
    return out_act_.forward(head_.forward(x));
}

template <typename T>
void ImageGenerator<T>::backward(const Grid<T>& grad_out)
{
    Grid<T> g = head_.backward(out_act_.backward(grad_out));
    const int depth = arch_.depth();
    std::vector<Grid<T>> grad_skip(depth);
    for (int i = 0; i < depth; ++i) {
        Level& lv = levels_[i];
        g = lv.up2.backward(lv.bn_up2.backward(lv.act_up2.backward(g)));
        g = lv.up1.backward(lv.bn_up1.backward(lv.act_up1.backward(g)));
        g = lv.bn_cat.backward(g);
        if (lv.skip_channels > 0) {
            Grid<T> gup;
            nn::split_channels(g, lv.skip_channels, grad_skip[i], gup);
            g = lv.resize.backward(gup);
        } else {
            g = lv.resize.backward(g);
        }
    }
    for (int i = depth - 1; i >= 0; --i) {
        Level& lv = levels_[i];
        g = lv.down2.backward(lv.bn_down2.backward(lv.act_down2.backward(g)));
        g = lv.down1.backward(lv.bn_down1.backward(lv.act_down1.backward(g)));
        if (lv.skip_channels > 0) {
            Grid<T> gs = lv.skip.backward(lv.bn_skip.backward(lv.act_skip.backward(grad_skip[i])));
            auto& gv = g.storage();
            const auto& sv = gs.storage();
            for (std::size_t n = 0; n < gv.size(); ++n)
                gv[n] += sv[n];
        }
    }
}

template <typename T>
ParamRefs<T> ImageGenerator<T>::parameters()
{
    ParamRefs<T> out;
    for (Level& lv : levels_) {
        for (nn::Conv2d<T>* c : {&lv.down1, &lv.down2}) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        }
        for (nn::BatchNorm<T>* b : {&lv.bn_down1, &lv.bn_down2}) {
            out.push_back(&b->gamma);
            out.push_back(&b->beta);
        }
        if (lv.skip_channels > 0) {
            out.push_back(&lv.skip.weight);
            out.push_back(&lv.skip.bias);
            out.push_back(&lv.bn_skip.gamma);
            out.push_back(&lv.bn_skip.beta);
        }
        for (nn::BatchNorm<T>* b : {&lv.bn_cat, &lv.bn_up1, &lv.bn_up2}) {
            out.push_back(&b->gamma);
            out.push_back(&b->beta);
        }
        for (nn::Conv2d<T>* c : {&lv.up1, &lv.up2}) {
            out.push_back(&c->weight);
            out.push_back(&c->bias);
        }
    }
    out.push_back(&head_.weight);
    out.push_back(&head_.bias);
    return out;
}

template <typename T>
std::size_t ImageGenerator<T>::parameter_count() const
{
    std::size_t n = 0;
    for (auto* p : const_cast<ImageGenerator*>(this)->parameters())
        n += p->size();
    return n;
}

// ----------------------------------------------------------- KernelField

template <typename T>
KernelField<T>::KernelField(PixelSize k_size, std::uint64_t seed, KernelFieldArch arch)
    : size_(k_size), seed_(seed), arch_(arch)
{
    if (k_size.rows < 1 || k_size.cols < 1)
        throw DimensionError("kernel size must be positive");
    const int n = k_size.rows * k_size.cols;
    auto axis = [](int count, int i) {
        return count == 1 ? 0.0 : -1.0 + 2.0 * i / (count - 1);
    };
    SplitRng rng(seed, "kernel_field.weights");
    if (arch_.model == KernelModel::siren) {
        if (arch_.hidden_layers < 1 || arch_.hidden_width < 1)
            throw ArchitectureError("sinusoidal field needs at least one hidden layer");
        coords_ = nn::Matrix<T>(n, 2);
        for (int i = 0; i < k_size.rows; ++i)
            for (int j = 0; j < k_size.cols; ++j) {
                coords_(i * k_size.cols + j, 0) = static_cast<T>(axis(k_size.rows, i));
                coords_(i * k_size.cols + j, 1) = static_cast<T>(axis(k_size.cols, j));
            }
        const T omega = static_cast<T>(arch_.omega);
        using Init = typename nn::Linear<T>::Init;
        linears_.emplace_back("siren.0", 2, arch_.hidden_width, Init::siren_first, omega, rng);
        sines_.emplace_back(omega);
        for (int l = 1; l < arch_.hidden_layers; ++l) {
            linears_.emplace_back("siren." + std::to_string(l), arch_.hidden_width, arch_.hidden_width,
                                  Init::siren_hidden, omega, rng);
            sines_.emplace_back(omega);
        }
        linears_.emplace_back("siren.out", arch_.hidden_width, 1, Init::siren_hidden, omega, rng);
    } else {
        SplitRng input_rng(seed, "kernel_field.input");
        coords_ = nn::Matrix<T>(1, arch_.mlp_input);
        for (T& v : coords_.data)
            v = static_cast<T>(input_rng.uniform(0.0, 0.1));
        using Init = typename nn::Linear<T>::Init;
        linears_.emplace_back("mlp.0", arch_.mlp_input, arch_.mlp_hidden, Init::uniform_fan_in, T(1), rng);
        linears_.emplace_back("mlp.out", arch_.mlp_hidden, n, Init::uniform_fan_in, T(1), rng);
    }
}

template <typename T>
nn::Matrix<T> KernelField<T>::network_forward()
{
    nn::Matrix<T> h = coords_;
    if (arch_.model == KernelModel::siren) {
        for (std::size_t l = 0; l < sines_.size(); ++l)
            h = sines_[l].forward(linears_[l].forward(h));
        h = linears_.back().forward(h);
    } else {
        h = relu6_.forward(linears_[0].forward(h));
        h = linears_[1].forward(h);
    }
    // Both models end with a sigmoid; h is n x 1 (siren) or 1 x n (mlp).
    for (T& v : h.data)
        v = T(1) / (T(1) + std::exp(-v));
    return h;
}

template <typename T>
void KernelField<T>::network_backward(const nn::Matrix<T>& grad)
{
    nn::Matrix<T> g = grad;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] *= field_.data[i] * (T(1) - field_.data[i]);
    if (arch_.model == KernelModel::siren) {
        g = linears_.back().backward(g);
        for (std::size_t l = sines_.size(); l-- > 0;)
            g = linears_[l].backward(sines_[l].backward(g));
    } else {
        g = linears_[1].backward(g);
        linears_[0].backward(relu6_.backward(g));
    }
}

template <typename T>
BasicKernel<T> KernelField<T>::evaluate()
{
    field_ = network_forward();
    BasicKernel<T> k(size_.rows, size_.cols);
    std::copy(field_.data.begin(), field_.data.end(), k.storage().begin());
    return k;
}

template <typename T>
BasicKernel<T> KernelField<T>::forward()
{
    BasicKernel<T> k = evaluate();
    if (arch_.normalize == KernelNormalize::sum) {
        T s = 0;
        for (T v : k.storage())
            s += v;
        field_sum_ = s;
        for (T& v : k.storage())
            v /= s;
    }
    return k;
}

template <typename T>
void KernelField<T>::backward(const BasicKernel<T>& grad_kernel)
{
    const auto& g = grad_kernel.storage();
    nn::Matrix<T> grad = field_;
    if (arch_.normalize == KernelNormalize::sum) {
        // k_i = f_i / S  =>  dL/df_i = (g_i - sum_j g_j k_j) / S
        T dot = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            dot += g[i] * field_.data[i];
        dot /= field_sum_;
        for (std::size_t i = 0; i < g.size(); ++i)
            grad.data[i] = (g[i] - dot) / field_sum_;
    } else {
        std::copy(g.begin(), g.end(), grad.data.begin());
    }
    network_backward(grad);
}

template <typename T>
ParamRefs<T> KernelField<T>::parameters()
{
    ParamRefs<T> out;
    for (auto& l : linears_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

template <typename T>
std::size_t KernelField<T>::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : linears_)
        n += l.weight.size() + l.bias.size();
    return n;
}

template class ImageGenerator<float>;
template class ImageGenerator<double>;
template class KernelField<float>;
template class KernelField<double>;

// ------------------------------------------------------------ checkpoint

namespace {

constexpr char kMagic[8] = {'D', 'B', 'L', 'R', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void write_array(std::ofstream& out, const std::vector<float>& v)
{
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, ImageGenerator<float>& gen, KernelField<float>& field,
                     const nlohmann::json& extra)
{
    nlohmann::json header;
    header["format"] = "deblur-checkpoint";
    header["version"] = kCheckpointVersion;
    header["image_generator"] = {{"arch", gen.arch().to_json()},
                                 {"seed", gen.seed()},
                                 {"size", {gen.output_size().rows, gen.output_size().cols}},
                                 {"channels", gen.channels()}};
    header["kernel_field"] = {{"arch", field.arch().to_json()},
                              {"seed", field.seed()},
                              {"size", {field.kernel_size().rows, field.kernel_size().cols}}};
    if (!extra.is_null())
        header["extra"] = extra;
    nlohmann::json arrays = nlohmann::json::array();
    arrays.push_back({{"name", "image_generator.seed_input"}, {"count", gen.seed_input().size()}});
    for (auto* p : gen.parameters())
        arrays.push_back({{"name", "image_generator." + p->name}, {"count", p->size()}});
    for (auto* p : field.parameters())
        arrays.push_back({{"name", "kernel_field." + p->name}, {"count", p->size()}});
    header["arrays"] = arrays;

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open checkpoint for writing: " + path.string());
    const std::string text = header.dump();
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t len = text.size();
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_array(out, gen.seed_input().storage());
    for (auto* p : gen.parameters())
        write_array(out, p->value);
    for (auto* p : field.parameters())
        write_array(out, p->value);
    if (!out)
        throw IoError("failed writing checkpoint: " + path.string());
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, ImageGenerator<float>& gen,
                               KernelField<float>& field)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open checkpoint: " + path.string());
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw IoError("not a deblur checkpoint: " + path.string());
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const nlohmann::json header = nlohmann::json::parse(text);

    if (GeneratorArch::from_json(header["image_generator"]["arch"]) != gen.arch() ||
        KernelFieldArch::from_json(header["kernel_field"]["arch"]) != field.arch() ||
        header["image_generator"]["size"] != nlohmann::json{gen.output_size().rows, gen.output_size().cols} ||
        header["kernel_field"]["size"] != nlohmann::json{field.kernel_size().rows, field.kernel_size().cols})
        throw DimensionError("checkpoint architecture does not match the target generators");

    auto read_into = [&](std::vector<float>& v, std::size_t expected) {
        if (v.size() != expected)
            throw DimensionError("checkpoint array size mismatch");
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    };
    const auto& arrays = header["arrays"];
    std::size_t idx = 0;
    std::vector<float> seed_input(gen.seed_input().size());
    read_into(seed_input, arrays.at(idx++)["count"].get<std::size_t>());
    if (seed_input != gen.seed_input().storage())
        throw DimensionError("checkpoint seed tensor differs from the generator's seed tensor");
    for (auto* p : gen.parameters())
        read_into(p->value, arrays.at(idx++)["count"].get<std::size_t>());
    for (auto* p : field.parameters())
        read_into(p->value, arrays.at(idx++)["count"].get<std::size_t>());
    if (!in)
        throw IoError("truncated checkpoint: " + path.string());
    return header.value("extra", nlohmann::json::object());
}

} // namespace deblur
