#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "mln/model.hpp"
#include "mln/numerics.hpp"

namespace mln {

/// The five per-instance uncertainty scores.
struct UncertaintyRecord {
    double aleatoric = 0.0;        // sigma_a^2, pi-weighted mean of mixture scales
    double epistemic = 0.0;        // sigma_e^2, pi-weighted logit variance
    double max_softmax = 0.0;      // 1 - top softmax prob of the dominant mixture
    double softmax_entropy = 0.0;  // entropy (nats) of the dominant mixture's softmax
    double pi_entropy = 0.0;       // entropy (nats) of the mixture weights
};

/// Pi-weighted variance of the raw logits around their pi-weighted mean:
/// sum_j sum_c pi_j (mu_j^c - sum_k pi_k mu_k^c)^2. Zero iff every mixture
/// with positive weight shares the same logit row.
inline double epistemic(const MixtureOutput& out) {
    const std::size_t k_count = out.mixtures();
    const std::size_t c_count = out.classes();
    std::vector<double> mean(c_count, 0.0);
    for (std::size_t k = 0; k < k_count; ++k)
        for (std::size_t c = 0; c < c_count; ++c) mean[c] += out.pi[k] * out.mu(k, c);
    double var = 0.0;
    for (std::size_t k = 0; k < k_count; ++k)
        for (std::size_t c = 0; c < c_count; ++c) {
            const double diff = out.mu(k, c) - mean[c];
            var += out.pi[k] * diff * diff;
        }
    return var;
}

/// Pi-weighted mean of the mixture scales: sum_k pi_k sigma_k.
inline double aleatoric(const MixtureOutput& out) {
    double acc = 0.0;
    for (std::size_t k = 0; k < out.mixtures(); ++k) acc += out.pi[k] * out.sigma[k];
    return acc;
}

namespace detail {

inline std::size_t dominant_mixture(const MixtureOutput& out) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < out.mixtures(); ++k)
        if (out.pi[k] > out.pi[best]) best = k;
    return best;
}

}  // namespace detail

/// 1 - max_c softmax(mu_k*)_c with k* the highest-weight mixture.
inline double max_softmax_score(const MixtureOutput& out) {
    const std::vector<double> probs = softmax(out.mu.row(detail::dominant_mixture(out)));
    return 1.0 - *std::max_element(probs.begin(), probs.end());
}

/// Entropy (nats) of softmax(mu_k*) with k* the highest-weight mixture.
inline double softmax_entropy_score(const MixtureOutput& out) {
    const std::vector<double> probs = softmax(out.mu.row(detail::dominant_mixture(out)));
    return entropy(probs);
}

/// Entropy (nats) of the mixture weights.
inline double pi_entropy_score(const MixtureOutput& out) {
    return entropy(out.pi);
}

inline UncertaintyRecord compute_uncertainty(const MixtureOutput& out) {
    return {aleatoric(out), epistemic(out), max_softmax_score(out), softmax_entropy_score(out),
            pi_entropy_score(out)};
}

}  // namespace mln
