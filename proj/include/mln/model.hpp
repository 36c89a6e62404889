#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mln/errors.hpp"
#include "mln/matrix.hpp"
#include "mln/numerics.hpp"
#include "mln/rng.hpp"

namespace mln {

/// One affine layer: y = weight * x + bias, weight is out_dim x in_dim.
struct LayerParams {
    Matrix weight;
    std::vector<double> bias;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

/// Backbone MLP (tanh hidden activations) feeding three parallel head
/// projections off the last feature layer: mixture weights (pi), per-mixture
/// class logits (mu) and per-mixture scales (sigma).
struct ModelParams {
    std::vector<LayerParams> backbone;
    LayerParams pi_head;
    LayerParams mu_head;
    LayerParams sigma_head;
    std::size_t mixtures = 0;  // K
    std::size_t classes = 0;   // C
    double sigma_lo = 1.0;
    double sigma_hi = 10.0;

    std::size_t input_dim() const {
        return backbone.empty() ? pi_head.in_dim() : backbone.front().in_dim();
    }
    std::size_t feature_dim() const { return pi_head.in_dim(); }
};

/// Per-instance head output. pi sums to 1, sigma lies strictly inside
/// [sigma_lo, sigma_hi], mu holds raw logits (softmax applied by consumers).
struct MixtureOutput {
    std::vector<double> pi;  // K
    Matrix mu;               // K x C
    std::vector<double> sigma;  // K
    double sigma_lo = 1.0;
    double sigma_hi = 10.0;

    std::size_t mixtures() const { return pi.size(); }
    std::size_t classes() const { return mu.cols; }
};

/// Upstream gradients on the three head preactivations: pi logits (before
/// softmax), raw mu logits, and sigma preactivations (before the bounded
/// sigmoid).
struct HeadGradients {
    std::vector<double> d_pi_logits;  // K
    Matrix d_mu;                      // K x C
    std::vector<double> d_sigma_pre;  // K

    HeadGradients() = default;
    HeadGradients(std::size_t k, std::size_t c)
        : d_pi_logits(k, 0.0), d_mu(k, c, 0.0), d_sigma_pre(k, 0.0) {}
};

/// Forward pass cache: hidden[0] is the input, hidden[i] the post-tanh output
/// of backbone layer i-1. Needed by backward().
struct ForwardTrace {
    std::vector<std::vector<double>> hidden;
    MixtureOutput out;
};

namespace detail {

inline std::vector<double> affine(const LayerParams& layer, std::span<const double> x) {
    std::vector<double> y(layer.out_dim());
    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
        double acc = layer.bias[i];
        const double* w = layer.weight.data.data() + i * layer.in_dim();
        for (std::size_t j = 0; j < layer.in_dim(); ++j) acc += w[j] * x[j];
        y[i] = acc;
    }
    return y;
}

inline LayerParams init_layer(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
    LayerParams layer{Matrix(out_dim, in_dim), std::vector<double>(out_dim, 0.0)};
    const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    for (double& w : layer.weight.data) w = rng.uniform(-bound, bound);
    return layer;
}

inline LayerParams zeros_layer(const LayerParams& like) {
    return {Matrix(like.out_dim(), like.in_dim()), std::vector<double>(like.out_dim(), 0.0)};
}

}  // namespace detail

/// Fresh model with uniform [-a, a] weight init, a = sqrt(6/(fan_in+fan_out)),
/// zero biases. hidden_widths may be empty (heads read the raw input).
inline ModelParams init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                              std::size_t mixtures, std::size_t classes, double sigma_lo,
                              double sigma_hi, Rng& rng) {
    if (input_dim == 0) throw UsageError("init_model: input_dim must be > 0");
    if (mixtures == 0) throw UsageError("init_model: mixture count must be > 0");
    if (classes < 2) throw UsageError("init_model: need at least 2 classes");
    if (!(sigma_lo < sigma_hi)) throw UsageError("init_model: requires sigma_lo < sigma_hi");
    ModelParams params;
    params.mixtures = mixtures;
    params.classes = classes;
    params.sigma_lo = sigma_lo;
    params.sigma_hi = sigma_hi;
    std::size_t prev = input_dim;
    for (std::size_t width : hidden_widths) {
        if (width == 0) throw UsageError("init_model: hidden width must be > 0");
        params.backbone.push_back(detail::init_layer(width, prev, rng));
        prev = width;
    }
    params.pi_head = detail::init_layer(mixtures, prev, rng);
    params.mu_head = detail::init_layer(mixtures * classes, prev, rng);
    params.sigma_head = detail::init_layer(mixtures, prev, rng);
    return params;
}

/// Same shapes as `like`, all values zero. Gradient and Adam-state container.
inline ModelParams zeros_like(const ModelParams& like) {
    ModelParams z;
    z.mixtures = like.mixtures;
    z.classes = like.classes;
    z.sigma_lo = like.sigma_lo;
    z.sigma_hi = like.sigma_hi;
    for (const auto& layer : like.backbone) z.backbone.push_back(detail::zeros_layer(layer));
    z.pi_head = detail::zeros_layer(like.pi_head);
    z.mu_head = detail::zeros_layer(like.mu_head);
    z.sigma_head = detail::zeros_layer(like.sigma_head);
    return z;
}

/// Pointers to every scalar parameter in a fixed documented order:
/// backbone layers first (weights row-major, then bias), then pi, mu, sigma
/// heads. The order is the flattening contract for Adam, checkpoints and the
/// finite-difference oracle.
inline std::vector<double*> param_values(ModelParams& params) {
    std::vector<double*> ptrs;
    auto push_layer = [&ptrs](LayerParams& layer) {
        for (double& w : layer.weight.data) ptrs.push_back(&w);
        for (double& b : layer.bias) ptrs.push_back(&b);
    };
    for (auto& layer : params.backbone) push_layer(layer);
    push_layer(params.pi_head);
    push_layer(params.mu_head);
    push_layer(params.sigma_head);
    return ptrs;
}

/// Forward pass keeping the hidden activations needed by backward().
inline ForwardTrace forward_trace(const ModelParams& params, std::span<const double> x) {
    if (x.size() != params.input_dim())
        throw UsageError("forward: input has dimension " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(params.input_dim()));
    ForwardTrace trace;
    trace.hidden.reserve(params.backbone.size() + 1);
    trace.hidden.emplace_back(x.begin(), x.end());
    for (const auto& layer : params.backbone) {
        std::vector<double> h = detail::affine(layer, trace.hidden.back());
        for (double& v : h) v = std::tanh(v);
        trace.hidden.push_back(std::move(h));
    }
    const std::vector<double>& feature = trace.hidden.back();

    MixtureOutput out;
    out.sigma_lo = params.sigma_lo;
    out.sigma_hi = params.sigma_hi;
    out.pi = softmax(detail::affine(params.pi_head, feature));
    const std::vector<double> mu_flat = detail::affine(params.mu_head, feature);
    out.mu = Matrix(params.mixtures, params.classes);
    out.mu.data = mu_flat;
    const std::vector<double> sigma_pre = detail::affine(params.sigma_head, feature);
    out.sigma.resize(params.mixtures);
    for (std::size_t k = 0; k < params.mixtures; ++k)
        out.sigma[k] = bounded_sigmoid(sigma_pre[k], params.sigma_lo, params.sigma_hi);
    trace.out = std::move(out);
    return trace;
}

inline MixtureOutput forward(const ModelParams& params, std::span<const double> x) {
    return forward_trace(params, x).out;
}

/// Clean class posterior of the mixture: p_j = sum_k pi_k softmax(mu_k)_j.
inline std::vector<double> predictive_distribution(const MixtureOutput& out) {
    std::vector<double> pred(out.classes(), 0.0);
    for (std::size_t k = 0; k < out.mixtures(); ++k) {
        const std::vector<double> probs = softmax(out.mu.row(k));
        for (std::size_t c = 0; c < pred.size(); ++c) pred[c] += out.pi[k] * probs[c];
    }
    return pred;
}

/// Argmax of the predictive distribution; ties break toward the lowest index.
inline std::size_t bayes_optimal_label(const MixtureOutput& out) {
    const std::vector<double> pred = predictive_distribution(out);
    std::size_t best = 0;
    for (std::size_t c = 1; c < pred.size(); ++c)
        if (pred[c] > pred[best]) best = c;
    return best;
}

/// Accumulate into `grad` the exact gradients of a scalar loss with respect to
/// every parameter, given the upstream gradients on the head preactivations.
/// `trace` must come from forward_trace on the same (params, x).
inline void backward(const ModelParams& params, const ForwardTrace& trace,
                     const HeadGradients& upstream, ModelParams& grad) {
    const std::vector<double>& feature = trace.hidden.back();
    const std::size_t fdim = feature.size();

    std::vector<double> d_feature(fdim, 0.0);
    auto head_backward = [&](const LayerParams& head, LayerParams& head_grad,
                             std::span<const double> d_out) {
        for (std::size_t i = 0; i < head.out_dim(); ++i) {
            const double g = d_out[i];
            if (g == 0.0) continue;
            double* wgrad = head_grad.weight.data.data() + i * fdim;
            const double* w = head.weight.data.data() + i * fdim;
            for (std::size_t j = 0; j < fdim; ++j) {
                wgrad[j] += g * feature[j];
                d_feature[j] += g * w[j];
            }
            head_grad.bias[i] += g;
        }
    };
    head_backward(params.pi_head, grad.pi_head, upstream.d_pi_logits);
    head_backward(params.mu_head, grad.mu_head, upstream.d_mu.data);
    head_backward(params.sigma_head, grad.sigma_head, upstream.d_sigma_pre);

    // Backbone: d tanh(z) = 1 - h^2 recovered from the stored activation.
    std::vector<double> d_hidden = std::move(d_feature);
    for (std::size_t l = params.backbone.size(); l-- > 0;) {
        const LayerParams& layer = params.backbone[l];
        LayerParams& layer_grad = grad.backbone[l];
        const std::vector<double>& h_out = trace.hidden[l + 1];
        const std::vector<double>& h_in = trace.hidden[l];
        std::vector<double> d_prev(h_in.size(), 0.0);
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            const double dz = d_hidden[i] * (1.0 - h_out[i] * h_out[i]);
            if (dz == 0.0) continue;
            double* wgrad = layer_grad.weight.data.data() + i * h_in.size();
            const double* w = layer.weight.data.data() + i * h_in.size();
            for (std::size_t j = 0; j < h_in.size(); ++j) {
                wgrad[j] += dz * h_in[j];
                d_prev[j] += dz * w[j];
            }
            layer_grad.bias[i] += dz;
        }
        d_hidden = std::move(d_prev);
    }
}

}  // namespace mln
