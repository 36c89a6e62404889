#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mln/dataset.hpp"
#include "mln/errors.hpp"
#include "mln/model.hpp"
#include "mln/noise.hpp"

namespace mln {

/// Estimated transition matrix plus, per row, the number of subset instances
/// whose Bayes-optimal label selected that row. Rows with zero support are
/// filled with the one-hot of their own index.
struct EstimatedTransition {
    TransitionMatrix matrix;
    std::vector<std::size_t> row_support;
};

/// Anchor-free transition estimate from precomputed head outputs. Row i
/// averages, over subset instances with Bayes-optimal label i, the mixture
/// posterior sum_k pi_k softmax(mu_k); the scaled variant replaces each
/// mixture's softmax with the one-hot of its argmax (zero-temperature limit).
/// Every row sums to one by construction.
inline EstimatedTransition estimate_transition_from_outputs(
    std::span<const MixtureOutput> outs, std::size_t classes, bool scaled,
    std::span<const std::uint8_t> subset_mask = {}) {
    if (!subset_mask.empty() && subset_mask.size() != outs.size())
        throw UsageError("estimate_transition: mask length mismatch");
    Matrix sums(classes, classes);
    std::vector<std::size_t> support(classes, 0);
    bool any = false;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        if (!subset_mask.empty() && subset_mask[i] == 0) continue;
        any = true;
        const MixtureOutput& out = outs[i];
        const std::size_t row = bayes_optimal_label(out);
        ++support[row];
        for (std::size_t k = 0; k < out.mixtures(); ++k) {
            if (scaled) {
                const auto logits = out.mu.row(k);
                std::size_t best = 0;
                for (std::size_t c = 1; c < logits.size(); ++c)
                    if (logits[c] > logits[best]) best = c;
                sums(row, best) += out.pi[k];
            } else {
                const std::vector<double> probs = softmax(out.mu.row(k));
                for (std::size_t c = 0; c < classes; ++c) sums(row, c) += out.pi[k] * probs[c];
            }
        }
    }
    if (!any) throw UsageError("estimate_transition: empty subset");
    for (std::size_t i = 0; i < classes; ++i) {
        if (support[i] == 0) {
            sums(i, i) = 1.0;
            continue;
        }
        for (std::size_t j = 0; j < classes; ++j)
            sums(i, j) /= static_cast<double>(support[i]);
    }
    TransitionMatrix matrix{std::move(sums), scaled ? "estimated-scaled" : "estimated", "total"};
    return {std::move(matrix), std::move(support)};
}

/// Forward every subset instance through the model, then estimate.
inline EstimatedTransition estimate_transition(const ModelParams& params,
                                               const LabeledDataset& dataset, bool scaled,
                                               std::span<const std::uint8_t> subset_mask = {}) {
    if (!subset_mask.empty() && subset_mask.size() != dataset.size())
        throw UsageError("estimate_transition: mask length mismatch");
    std::vector<MixtureOutput> outs;
    std::vector<std::uint8_t> kept;
    outs.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!subset_mask.empty() && subset_mask[i] == 0) continue;
        outs.push_back(forward(params, dataset.features.row(i)));
    }
    return estimate_transition_from_outputs(outs, static_cast<std::size_t>(dataset.num_classes),
                                            scaled);
}

}  // namespace mln
