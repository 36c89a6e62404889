#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mln/errors.hpp"
#include "mln/model.hpp"
#include "mln/numerics.hpp"
#include "mln/uncertainty.hpp"

namespace mln {

/// Weights of the uncertainty regularizers: the epistemic reward (lambda1)
/// and the aleatoric penalty (lambda2).
struct LossConfig {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

namespace detail {

// Guard under the square roots so the regularizer stays differentiable when a
// variance is exactly zero.
inline constexpr double kSqrtGuard = 1e-12;

inline void check_batch(std::span<const MixtureOutput> outs, std::span<const int> labels) {
    if (outs.empty()) throw UsageError("loss: empty batch");
    if (outs.size() != labels.size())
        throw UsageError("loss: batch has " + std::to_string(outs.size()) + " outputs but " +
                         std::to_string(labels.size()) + " labels");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int c_count = static_cast<int>(outs[i].classes());
        if (labels[i] < 0 || labels[i] >= c_count)
            throw UsageError("loss: label " + std::to_string(labels[i]) + " at index " +
                             std::to_string(i) + " outside [0," + std::to_string(c_count) + ")");
    }
}

}  // namespace detail

/// Cross-entropy (nats) of softmax(logits) against a class index, computed
/// from log-softmax directly.
inline double cross_entropy(std::span<const double> logits, int label) {
    return -log_softmax(logits)[static_cast<std::size_t>(label)];
}

/// Mixture of attenuated cross-entropies:
/// (1/N) sum_i sum_k pi_k(x_i) * CE(softmax(mu_k(x_i)), y_i) / sigma_k(x_i).
inline double mace_loss(std::span<const MixtureOutput> outs, std::span<const int> labels) {
    detail::check_batch(outs, labels);
    double total = 0.0;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        const MixtureOutput& out = outs[i];
        for (std::size_t k = 0; k < out.mixtures(); ++k)
            total += out.pi[k] * cross_entropy(out.mu.row(k), labels[i]) / out.sigma[k];
    }
    return total / static_cast<double>(outs.size());
}

/// MACE minus the epistemic reward plus the aleatoric penalty, both averaged
/// over the minibatch: L = MACE - lambda1 * mean_i sqrt(epistemic_i)
///                            + lambda2 * mean_i sqrt(aleatoric_i).
inline double total_loss(std::span<const MixtureOutput> outs, std::span<const int> labels,
                         const LossConfig& cfg) {
    detail::check_batch(outs, labels);
    double total = 0.0;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        const MixtureOutput& out = outs[i];
        double mace = 0.0;
        for (std::size_t k = 0; k < out.mixtures(); ++k)
            mace += out.pi[k] * cross_entropy(out.mu.row(k), labels[i]) / out.sigma[k];
        total += mace;
        total -= cfg.lambda1 * std::sqrt(epistemic(out) + detail::kSqrtGuard);
        total += cfg.lambda2 * std::sqrt(aleatoric(out) + detail::kSqrtGuard);
    }
    return total / static_cast<double>(outs.size());
}

/// Exact gradients of total_loss with respect to the head preactivations of
/// every instance: pi logits (chained through softmax), raw mu logits, and
/// sigma preactivations (chained through the bounded sigmoid). The 1/N batch
/// factor is folded in.
inline std::vector<HeadGradients> total_loss_grad(std::span<const MixtureOutput> outs,
                                                  std::span<const int> labels,
                                                  const LossConfig& cfg) {
    detail::check_batch(outs, labels);
    const double inv_n = 1.0 / static_cast<double>(outs.size());
    std::vector<HeadGradients> grads;
    grads.reserve(outs.size());

    for (std::size_t i = 0; i < outs.size(); ++i) {
        const MixtureOutput& out = outs[i];
        const std::size_t k_count = out.mixtures();
        const std::size_t c_count = out.classes();
        const int label = labels[i];
        HeadGradients g(k_count, c_count);

        std::vector<double> d_pi(k_count, 0.0);    // dL/d pi_k (pre-chain)
        std::vector<double> d_sigma(k_count, 0.0); // dL/d sigma_k (pre-chain)

        // MACE term.
        for (std::size_t k = 0; k < k_count; ++k) {
            const std::vector<double> logp = log_softmax(out.mu.row(k));
            const double ce = -logp[static_cast<std::size_t>(label)];
            const double weight = out.pi[k] / out.sigma[k];
            for (std::size_t c = 0; c < c_count; ++c) {
                const double p = std::exp(logp[c]);
                g.d_mu(k, c) += weight * (p - (static_cast<int>(c) == label ? 1.0 : 0.0));
            }
            d_pi[k] += ce / out.sigma[k];
            d_sigma[k] += -out.pi[k] * ce / (out.sigma[k] * out.sigma[k]);
        }

        // Epistemic reward: -lambda1 * sqrt(epis + eps). The pi-weighted mean
        // logit shifts with each mu row, which cancels the cross terms, so
        // d epis/d mu_k^c = 2 pi_k (mu_k^c - mean^c) and
        // d epis/d pi_k = sum_c (mu_k^c - mean^c)^2.
        if (cfg.lambda1 != 0.0) {
            std::vector<double> mean(c_count, 0.0);
            for (std::size_t k = 0; k < k_count; ++k)
                for (std::size_t c = 0; c < c_count; ++c) mean[c] += out.pi[k] * out.mu(k, c);
            double epis = 0.0;
            for (std::size_t k = 0; k < k_count; ++k)
                for (std::size_t c = 0; c < c_count; ++c) {
                    const double diff = out.mu(k, c) - mean[c];
                    epis += out.pi[k] * diff * diff;
                }
            const double scale = -cfg.lambda1 / (2.0 * std::sqrt(epis + detail::kSqrtGuard));
            for (std::size_t k = 0; k < k_count; ++k) {
                double sq = 0.0;
                for (std::size_t c = 0; c < c_count; ++c) {
                    const double diff = out.mu(k, c) - mean[c];
                    g.d_mu(k, c) += scale * 2.0 * out.pi[k] * diff;
                    sq += diff * diff;
                }
                d_pi[k] += scale * sq;
            }
        }

        // Aleatoric penalty: +lambda2 * sqrt(alea + eps).
        if (cfg.lambda2 != 0.0) {
            const double alea = aleatoric(out);
            const double scale = cfg.lambda2 / (2.0 * std::sqrt(alea + detail::kSqrtGuard));
            for (std::size_t k = 0; k < k_count; ++k) {
                d_pi[k] += scale * out.sigma[k];
                d_sigma[k] += scale * out.pi[k];
            }
        }

        // Chain pi through softmax and sigma through the bounded sigmoid.
        double pi_dot = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) pi_dot += out.pi[k] * d_pi[k];
        for (std::size_t k = 0; k < k_count; ++k) {
            g.d_pi_logits[k] = inv_n * out.pi[k] * (d_pi[k] - pi_dot);
            g.d_sigma_pre[k] =
                inv_n * d_sigma[k] * bounded_sigmoid_slope(out.sigma[k], out.sigma_lo, out.sigma_hi);
        }
        for (double& v : g.d_mu.data) v *= inv_n;
        grads.push_back(std::move(g));
    }
    return grads;
}

}  // namespace mln
