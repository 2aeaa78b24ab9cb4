#pragma once

// Diagonal-Gaussian machinery: reparameterized sampling, log-density and
// closed-form KL divergence, plus the categorical cross-entropy used for
// goal supervision. Parameters carry log-variance so sigma stays positive
// by construction.

#include "dagnet/tensor.hpp"

namespace dagnet {

inline constexpr double kLog2Pi = 1.8378770664093453; // log(2*pi)
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 10.0;

struct GaussianParams {
    Tensor mean;    // [d] or [n, d]
    Tensor log_var; // same shape, log(sigma^2)

    GaussianParams() = default;
    GaussianParams(Tensor m, Tensor lv) : mean(std::move(m)), log_var(std::move(lv)) {
        if (mean.shape() != log_var.shape())
            throw TensorError("GaussianParams: mean " + shape_str(mean.shape()) +
                              " vs log_var " + shape_str(log_var.shape()));
    }

    // splits a [n, 2d] network head output into mean and clamped log-variance
    static GaussianParams from_head(const Tensor& raw) {
        if (raw.rank() != 2 || raw.dim(1) % 2 != 0)
            throw TensorError("GaussianParams::from_head: expected [n, 2d], got " + shape_str(raw.shape()));
        const std::size_t d = raw.dim(1) / 2;
        Tensor m = slice_cols(raw, 0, d);
        Tensor lv = slice_cols(raw, d, d);
        return GaussianParams(m, clamp(lv, kLogVarMin, kLogVarMax));
    }
};

// mean + exp(log_var/2) . noise; noise is drawn by the caller so sampling
// stays deterministic and differentiable w.r.t. the parameters
inline Tensor sample_reparameterized(const GaussianParams& p, const Tensor& noise) {
    if (noise.shape() != p.mean.shape())
        throw TensorError("sample_reparameterized: noise " + shape_str(noise.shape()) +
                          " vs params " + shape_str(p.mean.shape()));
    return add(p.mean, mul(exp(mul_scalar(p.log_var, 0.5)), noise));
}

// sum_i [ -1/2 log(2 pi) - 1/2 log_var_i - (x_i - mu_i)^2 / (2 exp(log_var_i)) ]
inline Tensor log_prob(const GaussianParams& p, const Tensor& x) {
    if (x.shape() != p.mean.shape())
        throw TensorError("log_prob: x " + shape_str(x.shape()) + " vs params " +
                          shape_str(p.mean.shape()));
    Tensor diff = sub(x, p.mean);
    Tensor quad = mul(mul(diff, diff), exp(neg(p.log_var)));
    Tensor per_dim = mul_scalar(add(add_scalar(p.log_var, kLog2Pi), quad), -0.5);
    return sum(per_dim);
}

// batched rowwise variant: params and x are [n, d], result is [n]
inline Tensor log_prob_rows(const GaussianParams& p, const Tensor& x) {
    if (x.rank() != 2 || x.shape() != p.mean.shape())
        throw TensorError("log_prob_rows: x " + shape_str(x.shape()) + " vs params " +
                          shape_str(p.mean.shape()));
    Tensor diff = sub(x, p.mean);
    Tensor quad = mul(mul(diff, diff), exp(neg(p.log_var)));
    Tensor per_dim = mul_scalar(add(add_scalar(p.log_var, kLog2Pi), quad), -0.5);
    return sum_axis(per_dim, 1);
}

namespace detail {

// 1/2 [ (lp - lq) + exp(lq - lp) + (mq - mp)^2 exp(-lp) - 1 ] per dimension
inline Tensor kl_per_dim(const GaussianParams& q, const GaussianParams& p) {
    if (q.mean.shape() != p.mean.shape())
        throw TensorError("kl_divergence: dimension mismatch " + shape_str(q.mean.shape()) +
                          " vs " + shape_str(p.mean.shape()));
    Tensor dmean = sub(q.mean, p.mean);
    Tensor ratio = exp(sub(q.log_var, p.log_var));
    Tensor quad = mul(mul(dmean, dmean), exp(neg(p.log_var)));
    return mul_scalar(add_scalar(add(add(sub(p.log_var, q.log_var), ratio), quad), -1.0), 0.5);
}

} // namespace detail

inline Tensor kl_divergence(const GaussianParams& q, const GaussianParams& p) {
    return sum(detail::kl_per_dim(q, p));
}

// batched rowwise variant: [n, d] params, result [n]
inline Tensor kl_divergence_rows(const GaussianParams& q, const GaussianParams& p) {
    if (q.mean.rank() != 2)
        throw TensorError("kl_divergence_rows: expected 2-D params");
    return sum_axis(detail::kl_per_dim(q, p), 1);
}

inline void require_one_hot(const Tensor& target) {
    std::size_t ones = 0;
    for (double v : target.data()) {
        if (v == 1.0) ++ones;
        else if (v != 0.0) throw TensorError("cross_entropy: target is not one-hot");
    }
    const std::size_t rows = target.rank() == 2 ? target.dim(0) : 1;
    if (ones != rows) throw TensorError("cross_entropy: target is not one-hot");
}

// -sum_k target_k log(max(pred_k, 1e-12)); target must be one-hot
inline Tensor cross_entropy_categorical(const Tensor& target_onehot, const Tensor& predicted_probs) {
    if (target_onehot.shape() != predicted_probs.shape())
        throw TensorError("cross_entropy: target " + shape_str(target_onehot.shape()) +
                          " vs predicted " + shape_str(predicted_probs.shape()));
    require_one_hot(target_onehot);
    Tensor picked = mul(target_onehot, log(clamp_min(predicted_probs, kProbFloor)));
    return neg(sum(picked));
}

// batched rowwise variant: [n, K] target rows and prediction rows -> [n]
inline Tensor cross_entropy_rows(const Tensor& target_onehot, const Tensor& predicted_probs) {
    if (target_onehot.shape() != predicted_probs.shape() || target_onehot.rank() != 2)
        throw TensorError("cross_entropy_rows: shape mismatch");
    require_one_hot(target_onehot);
    Tensor picked = mul(target_onehot, log(clamp_min(predicted_probs, kProbFloor)));
    return neg(sum_axis(picked, 1));
}

} // namespace dagnet
