#pragma once

#include <cmath>
#include <vector>

#include "deblur/nn/layers.hpp"

namespace deblur::nn {

/// Adam over a fixed list of float parameters, with bias correction and the
/// epsilon added after the corrected square root.
class Adam {
public:
    Adam(std::vector<Param<float>*> params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps)
    {
        for (auto* q : params_) {
            m_.emplace_back(q->size(), 0.0f);
            v_.emplace_back(q->size(), 0.0f);
        }
    }

    const std::vector<Param<float>*>& params() const { return params_; }

    void zero_grad()
    {
        for (auto* p : params_)
            p->zero_grad();
    }

    /// Step number t counts from 1.
    void step(double lr, int t)
    {
        const double bc1 = 1.0 - std::pow(beta1_, t);
        const double bc2 = 1.0 - std::pow(beta2_, t);
        const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
        const float scale = static_cast<float>(lr / bc1);
        const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
        const float eps = static_cast<float>(eps_);
        for (std::size_t k = 0; k < params_.size(); ++k) {
            float* w = params_[k]->value.data();
            const float* g = params_[k]->grad.data();
            float* mk = m_[k].data();
            float* vk = v_[k].data();
            const std::size_t n = params_[k]->size();
#pragma omp simd
            for (std::size_t i = 0; i < n; ++i) {
                mk[i] = b1 * mk[i] + (1 - b1) * g[i];
                vk[i] = b2 * vk[i] + (1 - b2) * g[i] * g[i];
                w[i] -= scale * mk[i] / (std::sqrt(vk[i]) * inv_sqrt_bc2 + eps);
            }
        }
    }

private:
    std::vector<Param<float>*> params_;
    std::vector<std::vector<float>> m_, v_;
    double beta1_, beta2_, eps_;
};

} // namespace deblur::nn
