#include "deblur/objective.hpp"

#include <cmath>

namespace deblur {

std::string to_string(LossKind k)
{
    return k == LossKind::huber ? "huber" : "mse";
}

std::string to_string(RegKind k)
{
    switch (k) {
    case RegKind::l1_over_l2:
        return "l1_over_l2";
    case RegKind::l1:
        return "l1";
    case RegKind::none:
        break;
    }
    return "none";
}

LossKind loss_kind_from_string(const std::string& s)
{
    if (s == "huber")
        return LossKind::huber;
    if (s == "mse")
        return LossKind::mse;
    throw ParameterError("unknown loss kind '" + s + "' (expected huber or mse)");
}

RegKind reg_kind_from_string(const std::string& s)
{
    if (s == "l1_over_l2")
        return RegKind::l1_over_l2;
    if (s == "l1")
        return RegKind::l1;
    if (s == "none")
        return RegKind::none;
    throw ParameterError("unknown regularizer '" + s + "' (expected l1_over_l2, l1 or none)");
}

void ObjectiveConfig::validate() const
{
    if (!(huber_delta > 0))
        throw ParameterError("huber_delta must be positive");
    if (!(lambda_x >= 0))
        throw ParameterError("lambda_x must be nonnegative");
    if (!(denom_epsilon >= 0))
        throw ParameterError("denom_epsilon must be nonnegative");
}

template <typename T>
double huber_loss(std::span<const T> residual, double delta)
{
    if (!(delta > 0))
        throw ParameterError("Huber delta must be positive");
    if (residual.empty())
        return 0.0;
    double s = 0;
    for (T r : residual) {
        const double a = std::abs(static_cast<double>(r));
        s += a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
    }
    return s / static_cast<double>(residual.size());
}

template <typename T>
void huber_loss_grad(std::span<const T> residual, double delta, std::span<T> grad)
{
    if (!(delta > 0))
        throw ParameterError("Huber delta must be positive");
    const double inv_n = 1.0 / static_cast<double>(residual.size());
    for (std::size_t i = 0; i < residual.size(); ++i) {
        const double r = residual[i];
        const double d = std::abs(r) <= delta ? r : (r > 0 ? delta : -delta);
        grad[i] = static_cast<T>(d * inv_n);
    }
}

template <typename T>
double mse_loss(std::span<const T> residual)
{
    if (residual.empty())
        return 0.0;
    double s = 0;
    for (T r : residual)
        s += static_cast<double>(r) * r;
    return s / static_cast<double>(residual.size());
}

namespace {

void require_differentiable_extent(int h, int w)
{
    if (h < 2 || w < 2)
        throw DimensionError("gradient regularizer needs at least 2 pixels per dimension");
}

/// Visits every forward difference as (value, index of x(p+1), index of x(p)).
template <typename T, typename F>
void for_each_difference(const Grid<T>& x, F&& f)
{
    const int h = x.height(), w = x.width();
    const auto& v = x.storage();
    for (int c = 0; c < x.channels(); ++c) {
        const std::size_t base = c * x.plane_size();
        for (int i = 0; i < h; ++i)
            for (int j = 0; j + 1 < w; ++j) {
                const std::size_t p = base + static_cast<std::size_t>(i) * w + j;
                f(static_cast<double>(v[p + 1]) - v[p], p + 1, p);
            }
        for (int i = 0; i + 1 < h; ++i)
            for (int j = 0; j < w; ++j) {
                const std::size_t p = base + static_cast<std::size_t>(i) * w + j;
                f(static_cast<double>(v[p + w]) - v[p], p + w, p);
            }
    }
}

struct Norms {
    double l1 = 0;
    double l2 = 0;
};

template <typename T>
Norms difference_norms(const Grid<T>& x)
{
    Norms n;
    double sq = 0;
    for_each_difference(x, [&](double d, std::size_t, std::size_t) {
        n.l1 += std::abs(d);
        sq += d * d;
    });
    n.l2 = std::sqrt(sq);
    return n;
}

double sign(double d)
{
    return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
}

} // namespace

template <typename T>
double grad_sparsity(const Grid<T>& x, RegKind kind, double eps)
{
    require_differentiable_extent(x.height(), x.width());
    if (kind == RegKind::none)
        return 0.0;
    const Norms n = difference_norms(x);
    if (kind == RegKind::l1)
        return n.l1;
    return n.l1 == 0 ? 0.0 : n.l1 / (n.l2 + eps);
}

template <typename T>
void grad_sparsity_grad(const Grid<T>& x, RegKind kind, double eps, double scale, Grid<T>& grad_x)
{
    require_differentiable_extent(x.height(), x.width());
    if (kind == RegKind::none || scale == 0)
        return;
    auto& g = grad_x.storage();
    if (kind == RegKind::l1) {
        for_each_difference(x, [&](double d, std::size_t hi, std::size_t lo) {
            const double s = scale * sign(d);
            g[hi] += static_cast<T>(s);
            g[lo] -= static_cast<T>(s);
        });
        return;
    }
    const Norms n = difference_norms(x);
    if (n.l2 == 0)
        return;
    // d/dd (l1 / (l2 + eps)) = sign(d) / (l2 + eps) - l1 * d / (l2 * (l2 + eps)^2)
    const double a = 1.0 / (n.l2 + eps);
    const double b = n.l1 / (n.l2 * (n.l2 + eps) * (n.l2 + eps));
    for_each_difference(x, [&](double d, std::size_t hi, std::size_t lo) {
        const double s = scale * (sign(d) * a - b * d);
        g[hi] += static_cast<T>(s);
        g[lo] -= static_cast<T>(s);
    });
}

template <typename T>
ObjectiveTerms<T> total_objective(const Grid<T>& y, ImageGenerator<T>& gen, KernelField<T>& field,
                                  const ObjectiveConfig& cfg, bool compute_gradients)
{
    cfg.validate();
    ObjectiveTerms<T> out;
    out.image = gen.forward();
    out.kernel = field.forward();
    if (y.channels() != out.image.channels() || y.height() != out.image.height() - out.kernel.rows() + 1 ||
        y.width() != out.image.width() - out.kernel.cols() + 1)
        throw DimensionError("observation does not match the generator canvas and kernel sizes");

    Grid<T> residual = convolve_truncated(out.image, out.kernel);
    auto& r = residual.storage();
    const auto& yv = y.storage();
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] -= yv[i];

    std::span<const T> rs(r);
    out.data_term = cfg.loss_kind == LossKind::huber ? huber_loss(rs, cfg.huber_delta) : mse_loss(rs);
    out.regularizer = grad_sparsity(out.image, cfg.reg_kind, cfg.denom_epsilon);
    out.total = out.data_term + cfg.lambda_x * out.regularizer;

    if (!compute_gradients)
        return out;

    Grid<T> grad_y(residual.channels(), residual.height(), residual.width());
    if (cfg.loss_kind == LossKind::huber) {
        huber_loss_grad(rs, cfg.huber_delta, grad_y.values());
    } else {
        const double scale = 2.0 / static_cast<double>(r.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            grad_y.storage()[i] = static_cast<T>(scale * r[i]);
    }
    Grid<T> grad_x(out.image.channels(), out.image.height(), out.image.width());
    convolve_truncated_grad_image(grad_y, out.kernel, grad_x);
    grad_sparsity_grad(out.image, cfg.reg_kind, cfg.denom_epsilon, cfg.lambda_x, grad_x);
    BasicKernel<T> grad_k(out.kernel.rows(), out.kernel.cols());
    convolve_truncated_grad_kernel(grad_y, out.image, grad_k);

    gen.backward(grad_x);
    field.backward(grad_k);
    return out;
}

#define DEBLUR_OBJ_INSTANTIATE(T)                                                                        \
    template double huber_loss(std::span<const T>, double);                                              \
    template void huber_loss_grad(std::span<const T>, double, std::span<T>);                             \
    template double mse_loss(std::span<const T>);                                                        \
    template double grad_sparsity(const Grid<T>&, RegKind, double);                                      \
    template void grad_sparsity_grad(const Grid<T>&, RegKind, double, double, Grid<T>&);                 \
    template ObjectiveTerms<T> total_objective(const Grid<T>&, ImageGenerator<T>&, KernelField<T>&,      \
                                               const ObjectiveConfig&, bool);

DEBLUR_OBJ_INSTANTIATE(float)
DEBLUR_OBJ_INSTANTIATE(double)
#undef DEBLUR_OBJ_INSTANTIATE

} // namespace deblur
