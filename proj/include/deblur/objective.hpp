#pragma once

#include <span>
#include <string>

#include "deblur/generators.hpp"

namespace deblur {

enum class LossKind { huber, mse };
enum class RegKind { l1_over_l2, l1, none };

std::string to_string(LossKind k);
std::string to_string(RegKind k);
LossKind loss_kind_from_string(const std::string& s);
RegKind reg_kind_from_string(const std::string& s);

struct ObjectiveConfig {
    LossKind loss_kind = LossKind::huber;
    double huber_delta = 0.05;
    RegKind reg_kind = RegKind::l1_over_l2;
    double lambda_x = 1e-5;
    double denom_epsilon = 1e-12;

    /// Throws ParameterError on delta <= 0 or lambda < 0.
    void validate() const;
};

/// Mean over entries of the Huber penalty: u^2/2 inside [-delta, delta],
/// delta (|u| - delta/2) outside.
template <typename T>
double huber_loss(std::span<const T> residual, double delta);

/// d(huber_loss)/d(residual), written into `grad` (mean convention included).
template <typename T>
void huber_loss_grad(std::span<const T> residual, double delta, std::span<T> grad);

/// Mean of squared residuals.
template <typename T>
double mse_loss(std::span<const T> residual);

/// Sparsity of the forward-difference gradient field (replicate boundary, all
/// channels pooled): ||g||_1 / (||g||_2 + eps), ||g||_1, or 0.
template <typename T>
double grad_sparsity(const Grid<T>& x, RegKind kind, double eps = 1e-12);

/// Adds scale * d(grad_sparsity)/dx into `grad_x`.
template <typename T>
void grad_sparsity_grad(const Grid<T>& x, RegKind kind, double eps, double scale, Grid<T>& grad_x);

template <typename T>
struct ObjectiveTerms {
    double total = 0;
    double data_term = 0;
    double regularizer = 0; ///< unweighted grad_sparsity value
    Grid<T> image;          ///< rendered canvas
    BasicKernel<T> kernel;  ///< rendered kernel
};

/// loss(y, k * x) + lambda_x * grad_sparsity(x), with x and k rendered from
/// the generators. With `compute_gradients` the parameter gradients of both
/// networks are accumulated (callers zero them first).
template <typename T>
ObjectiveTerms<T> total_objective(const Grid<T>& y, ImageGenerator<T>& gen, KernelField<T>& field,
                                  const ObjectiveConfig& cfg, bool compute_gradients = false);

} // namespace deblur
