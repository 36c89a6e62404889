#pragma once

// Shared helpers for the unit and acceptance suites: flattened-parameter loss
// evaluation for the finite-difference oracle, analytic full-chain gradients,
// and random mixture-output generators.

#include <cmath>
#include <span>
#include <vector>

#include "mln/loss.hpp"
#include "mln/matrix.hpp"
#include "mln/model.hpp"
#include "mln/numerics.hpp"
#include "mln/rng.hpp"

namespace mln::testing {

inline std::vector<double> flatten_params(ModelParams& params) {
    std::vector<double> flat;
    for (double* p : param_values(params)) flat.push_back(*p);
    return flat;
}

inline void restore_params(ModelParams& params, std::span<const double> flat) {
    auto ptrs = param_values(params);
    for (std::size_t i = 0; i < ptrs.size(); ++i) *ptrs[i] = flat[i];
}

/// Total loss of the model over a batch, as a function of the flattened
/// parameter vector. This is the scalar the finite-difference oracle probes.
inline double loss_at(ModelParams& params, const Matrix& inputs, const std::vector<int>& labels,
                      const LossConfig& cfg, std::span<const double> theta) {
    restore_params(params, theta);
    std::vector<MixtureOutput> outs;
    outs.reserve(inputs.rows);
    for (std::size_t i = 0; i < inputs.rows; ++i) outs.push_back(forward(params, inputs.row(i)));
    return total_loss(outs, labels, cfg);
}

/// Analytic gradient of the same scalar via total_loss_grad + backward,
/// flattened in param_values order.
inline std::vector<double> analytic_gradient(ModelParams& params, const Matrix& inputs,
                                             const std::vector<int>& labels,
                                             const LossConfig& cfg) {
    std::vector<ForwardTrace> traces;
    std::vector<MixtureOutput> outs;
    traces.reserve(inputs.rows);
    outs.reserve(inputs.rows);
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        traces.push_back(forward_trace(params, inputs.row(i)));
        outs.push_back(traces.back().out);
    }
    const std::vector<HeadGradients> head_grads = total_loss_grad(outs, labels, cfg);
    ModelParams grads = zeros_like(params);
    for (std::size_t i = 0; i < traces.size(); ++i)
        backward(params, traces[i], head_grads[i], grads);
    return flatten_params(grads);
}

/// Max relative error over coordinates where either side exceeds `floor`.
inline double max_rel_error(std::span<const double> a, std::span<const double> b,
                            double floor = 1e-8) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
        if (scale <= floor) continue;
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

/// Mixture output assembled from raw head preactivations, the same chain the
/// model applies: softmax over pi logits, bounded sigmoid over sigma.
inline MixtureOutput make_output(std::span<const double> pi_logits, Matrix mu,
                                 std::span<const double> sigma_pre, double sigma_lo = 1.0,
                                 double sigma_hi = 10.0) {
    MixtureOutput out;
    out.pi = softmax(pi_logits);
    out.mu = std::move(mu);
    out.sigma.resize(sigma_pre.size());
    for (std::size_t k = 0; k < sigma_pre.size(); ++k)
        out.sigma[k] = bounded_sigmoid(sigma_pre[k], sigma_lo, sigma_hi);
    out.sigma_lo = sigma_lo;
    out.sigma_hi = sigma_hi;
    return out;
}

/// Random mixture output with the stated K and C.
inline MixtureOutput random_output(std::size_t mixtures, std::size_t classes, Rng& rng,
                                   double sigma_lo = 1.0, double sigma_hi = 10.0) {
    std::vector<double> pi_logits(mixtures);
    for (double& v : pi_logits) v = rng.uniform(-2.0, 2.0);
    Matrix mu(mixtures, classes);
    for (double& v : mu.data) v = rng.uniform(-4.0, 4.0);
    std::vector<double> sigma_pre(mixtures);
    for (double& v : sigma_pre) v = rng.uniform(-3.0, 3.0);
    return make_output(pi_logits, std::move(mu), sigma_pre, sigma_lo, sigma_hi);
}

}  // namespace mln::testing
