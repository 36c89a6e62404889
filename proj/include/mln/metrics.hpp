#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mln/errors.hpp"
#include "mln/noise.hpp"
#include "mln/uncertainty.hpp"

namespace mln {

/// Average total variation: mean over rows of half the L1 distance between
/// matching rows. In [0, 1].
inline double atv(const TransitionMatrix& truth, const TransitionMatrix& estimate) {
    const std::size_t classes = truth.classes();
    if (estimate.classes() != classes) throw UsageError("atv: matrix dimensions differ");
    double total = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < classes; ++j)
            row += std::abs(truth.entries(i, j) - estimate.entries(i, j));
        total += 0.5 * row;
    }
    return total / static_cast<double>(classes);
}

/// Kendall-tau rank distance, averaged over rows and normalized per row by
/// C(C-1)/2. A column pair counts 1 when its strict order is reversed between
/// the rows, 0.5 when exactly one of the two rows ties it, 0 otherwise.
/// Ties are exact value equality. In [0, 1].
inline double ktd(const TransitionMatrix& truth, const TransitionMatrix& estimate) {
    const std::size_t classes = truth.classes();
    if (estimate.classes() != classes) throw UsageError("ktd: matrix dimensions differ");
    const std::size_t pairs = classes * (classes - 1) / 2;
    double total = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
        // Half-unit counting keeps each row distance an exact multiple of 0.5.
        std::size_t half_units = 0;
        for (std::size_t j = 0; j < classes; ++j)
            for (std::size_t k = j + 1; k < classes; ++k) {
                const double a = truth.entries(i, j) - truth.entries(i, k);
                const double b = estimate.entries(i, j) - estimate.entries(i, k);
                const int sign_a = (a > 0.0) - (a < 0.0);
                const int sign_b = (b > 0.0) - (b < 0.0);
                if (sign_a == sign_b) continue;
                half_units += (sign_a == 0 || sign_b == 0) ? 1 : 2;
            }
        total += static_cast<double>(half_units) / (2.0 * static_cast<double>(pairs));
    }
    return total / static_cast<double>(classes);
}

/// Mann-Whitney AUROC: probability that a positive instance outscores a
/// negative one, ties half-credited. Computed via average ranks.
inline double auroc(std::span<const double> scores, std::span<const std::uint8_t> positives) {
    if (scores.size() != positives.size()) throw UsageError("auroc: length mismatch");
    std::size_t n_pos = 0;
    for (std::uint8_t flag : positives) n_pos += flag != 0 ? 1 : 0;
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UsageError("auroc: need at least one positive and one negative instance");

    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, accumulate ranks of positives.
    double pos_rank_sum = 0.0;
    std::size_t start = 0;
    while (start < idx.size()) {
        std::size_t end = start + 1;
        while (end < idx.size() && scores[idx[end]] == scores[idx[start]]) ++end;
        const double avg_rank = static_cast<double>(start + 1 + end) / 2.0;  // 1-based
        for (std::size_t i = start; i < end; ++i)
            if (positives[idx[i]] != 0) pos_rank_sum += avg_rank;
        start = end;
    }
    const double n_pos_d = static_cast<double>(n_pos);
    return (pos_rank_sum - n_pos_d * (n_pos_d + 1.0) / 2.0) /
           (n_pos_d * static_cast<double>(n_neg));
}

enum class ScoreKind { aleatoric, epistemic, max_softmax, softmax_entropy, pi_entropy };

inline std::string to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::aleatoric: return "aleatoric";
        case ScoreKind::epistemic: return "epistemic";
        case ScoreKind::max_softmax: return "max_softmax";
        case ScoreKind::softmax_entropy: return "softmax_entropy";
        case ScoreKind::pi_entropy: return "pi_entropy";
    }
    return "?";
}

inline ScoreKind score_kind_from_string(const std::string& name) {
    if (name == "aleatoric") return ScoreKind::aleatoric;
    if (name == "epistemic") return ScoreKind::epistemic;
    if (name == "max_softmax") return ScoreKind::max_softmax;
    if (name == "softmax_entropy") return ScoreKind::softmax_entropy;
    if (name == "pi_entropy") return ScoreKind::pi_entropy;
    throw UsageError("unknown uncertainty score '" + name + "'");
}

inline double pick_score(const UncertaintyRecord& record, ScoreKind kind) {
    switch (kind) {
        case ScoreKind::aleatoric: return record.aleatoric;
        case ScoreKind::epistemic: return record.epistemic;
        case ScoreKind::max_softmax: return record.max_softmax;
        case ScoreKind::softmax_entropy: return record.softmax_entropy;
        case ScoreKind::pi_entropy: return record.pi_entropy;
    }
    return 0.0;
}

/// Median of a score vector: mean of the two middle order statistics when the
/// count is even.
inline double median(std::span<const double> values) {
    if (values.empty()) throw UsageError("median: empty input");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    if (sorted.size() % 2 == 1) return sorted[mid];
    return 0.5 * (sorted[mid - 1] + sorted[mid]);
}

/// Predicted set index per instance plus the threshold that produced it.
struct PartitionResult {
    std::vector<std::uint8_t> predicted;  // 1 = ambiguous
    double threshold = 0.0;
    ScoreKind score = ScoreKind::aleatoric;
};

/// Threshold a chosen uncertainty score; instances strictly above go to the
/// ambiguous partition. The threshold defaults to the median of the score.
inline PartitionResult partition_by_uncertainty(std::span<const UncertaintyRecord> records,
                                                ScoreKind score,
                                                std::optional<double> threshold = std::nullopt) {
    if (records.empty()) throw UsageError("partition_by_uncertainty: empty batch");
    std::vector<double> scores(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) scores[i] = pick_score(records[i], score);
    PartitionResult result;
    result.score = score;
    result.threshold = threshold ? *threshold : median(scores);
    result.predicted.resize(records.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        result.predicted[i] = scores[i] > result.threshold ? 1 : 0;
    return result;
}

}  // namespace mln
