#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mln/dataset.hpp"
#include "mln/errors.hpp"
#include "mln/matrix.hpp"
#include "mln/rng.hpp"

namespace mln {

/// C x C row-stochastic matrix of label-flip probabilities, entry (i, j) being
/// the probability of clean class i carrying noisy label j.
struct TransitionMatrix {
    Matrix entries;
    std::string origin;   // "ground-truth" | "estimated" | "estimated-scaled"
    std::string set_tag;  // "total" | "clean" | "ambiguous"

    std::size_t classes() const { return entries.rows; }
};

enum class NoisePattern { symmetric, asymmetric, dual, tridiagonal };

inline std::string to_string(NoisePattern pattern) {
    switch (pattern) {
        case NoisePattern::symmetric: return "symmetric";
        case NoisePattern::asymmetric: return "asymmetric";
        case NoisePattern::dual: return "dual";
        case NoisePattern::tridiagonal: return "tridiagonal";
    }
    return "?";
}

inline NoisePattern noise_pattern_from_string(const std::string& name) {
    if (name == "symmetric") return NoisePattern::symmetric;
    if (name == "asymmetric") return NoisePattern::asymmetric;
    if (name == "dual") return NoisePattern::dual;
    if (name == "tridiagonal") return NoisePattern::tridiagonal;
    throw UsageError("unknown noise pattern '" + name + "'");
}

struct NoiseSpec {
    NoisePattern pattern = NoisePattern::symmetric;
    double rate = 0.0;
};

/// Ground-truth transition matrix for a corruption pattern:
///   symmetric:   diag 1-r, every other class r/(C-1)
///   asymmetric:  diag 1-r, class i+1 mod C gets r (pairflip)
///   dual:        diag 1-r, classes i+1 and i+2 mod C get r/2 each
///   tridiagonal: diag 1-r, classes i+1, i+2, i+3 mod C get r/3 each
inline TransitionMatrix make_transition_matrix(const NoiseSpec& spec, std::size_t classes) {
    if (classes < 2) throw UsageError("make_transition_matrix: need at least 2 classes");
    if (!(spec.rate >= 0.0 && spec.rate <= 1.0))
        throw UsageError("make_transition_matrix: rate must be in [0,1]");
    std::size_t targets = 0;
    switch (spec.pattern) {
        case NoisePattern::symmetric: targets = classes - 1; break;
        case NoisePattern::asymmetric: targets = 1; break;
        case NoisePattern::dual: targets = 2; break;
        case NoisePattern::tridiagonal: targets = 3; break;
    }
    if (targets >= classes)
        throw UsageError("make_transition_matrix: " + to_string(spec.pattern) +
                         " needs more than " + std::to_string(classes) +
                         " classes for distinct targets");
    TransitionMatrix t{Matrix(classes, classes), "ground-truth", "total"};
    for (std::size_t i = 0; i < classes; ++i) {
        t.entries(i, i) = 1.0 - spec.rate;
        if (spec.pattern == NoisePattern::symmetric) {
            for (std::size_t j = 0; j < classes; ++j)
                if (j != i) t.entries(i, j) = spec.rate / static_cast<double>(classes - 1);
        } else {
            for (std::size_t s = 1; s <= targets; ++s)
                t.entries(i, (i + s) % classes) = spec.rate / static_cast<double>(targets);
        }
    }
    return t;
}

/// Sample a noisy label for each clean label independently from the label's
/// transition-matrix row.
inline std::vector<int> corrupt_labels(std::span<const int> labels, const TransitionMatrix& t,
                                       Rng& rng) {
    const std::size_t classes = t.classes();
    std::vector<int> noisy(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw UsageError("corrupt_labels: label " + std::to_string(y) + " outside [0," +
                             std::to_string(classes) + ")");
        const double u = rng.next_double();
        double cum = 0.0;
        int drawn = static_cast<int>(classes) - 1;
        for (std::size_t j = 0; j < classes; ++j) {
            cum += t.entries(static_cast<std::size_t>(y), j);
            if (u < cum) {
                drawn = static_cast<int>(j);
                break;
            }
        }
        noisy[i] = drawn;
    }
    return noisy;
}

/// Row-normalized counting estimate: entry (i, j) = #(y=i, noisy=j) / #(y=i),
/// restricted to instances where mask is nonzero (empty mask = all).
inline TransitionMatrix empirical_transition(std::span<const int> clean_labels,
                                             std::span<const int> noisy_labels,
                                             std::size_t classes,
                                             std::span<const std::uint8_t> mask = {}) {
    if (clean_labels.size() != noisy_labels.size())
        throw UsageError("empirical_transition: label arrays differ in length");
    if (!mask.empty() && mask.size() != clean_labels.size())
        throw UsageError("empirical_transition: mask length mismatch");
    Matrix counts(classes, classes);
    std::vector<double> row_totals(classes, 0.0);
    for (std::size_t i = 0; i < clean_labels.size(); ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        counts(static_cast<std::size_t>(clean_labels[i]),
               static_cast<std::size_t>(noisy_labels[i])) += 1.0;
        row_totals[static_cast<std::size_t>(clean_labels[i])] += 1.0;
    }
    for (std::size_t i = 0; i < classes; ++i) {
        if (row_totals[i] == 0.0)
            throw UsageError("empirical_transition: no instances with clean class " +
                             std::to_string(i) + " in the subset");
        for (std::size_t j = 0; j < classes; ++j) counts(i, j) /= row_totals[i];
    }
    return {std::move(counts), "ground-truth", "total"};
}

/// Two interleaving unit half-circles in 2-D with Gaussian jitter. Label 0 is
/// the upper moon, label 1 the lower; class counts balanced within one.
/// Labels start out clean (noisy == clean).
inline LabeledDataset make_two_moons(std::size_t n, double noise_std, Rng& rng) {
    if (n < 2) throw UsageError("make_two_moons: need at least 2 points");
    LabeledDataset data;
    data.features = Matrix(n, 2);
    data.clean_labels.resize(n);
    data.num_classes = 2;
    const double pi = 3.14159265358979323846;
    const std::size_t n_upper = n / 2 + (n % 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = rng.uniform(0.0, pi);
        double x, y;
        int label;
        if (i < n_upper) {
            x = std::cos(theta);
            y = std::sin(theta);
            label = 0;
        } else {
            x = 1.0 - std::cos(theta);
            y = 0.5 - std::sin(theta);
            label = 1;
        }
        if (noise_std > 0.0) {
            x += rng.normal(0.0, noise_std);
            y += rng.normal(0.0, noise_std);
        }
        data.features(i, 0) = x;
        data.features(i, 1) = y;
        data.clean_labels[i] = label;
    }
    data.noisy_labels = data.clean_labels;
    return data;
}

enum class AmbiguateMethod { interpolate, cutmix };

inline std::string to_string(AmbiguateMethod method) {
    return method == AmbiguateMethod::interpolate ? "interpolate" : "cutmix";
}

inline AmbiguateMethod ambiguate_method_from_string(const std::string& name) {
    if (name == "interpolate") return AmbiguateMethod::interpolate;
    if (name == "cutmix") return AmbiguateMethod::cutmix;
    throw UsageError("unknown ambiguation method '" + name + "'");
}

namespace detail {

inline std::size_t infer_square_side(std::size_t dim) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
    if (side * side != dim)
        throw UsageError("cutmix: feature dimension " + std::to_string(dim) +
                         " is not reshapeable to a square grid; pass explicit height/width");
    return side;
}

}  // namespace detail

/// Corrupt a fraction of instances in feature space while keeping each
/// instance's single ground-truth label. Interpolation mixes in a donor from
/// another class with weight alpha ~ U[0.25, 0.45]; cutmix pastes a random
/// box (area ratio U[0.25, 0.5]) from the donor onto the H x W feature grid.
/// Marked instances get set_index = 1, the rest 0.
inline LabeledDataset ambiguate(const LabeledDataset& dataset, double fraction,
                                AmbiguateMethod method, Rng& rng, std::size_t grid_height = 0,
                                std::size_t grid_width = 0) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw UsageError("ambiguate: fraction must be in [0,1]");
    if (!dataset.has_clean_labels()) throw UsageError("ambiguate: clean labels required");
    const std::size_t n = dataset.size();
    LabeledDataset result = dataset;
    result.set_index.assign(n, 0);
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (count == 0) return result;

    if (method == AmbiguateMethod::cutmix) {
        if (grid_height == 0 && grid_width == 0)
            grid_height = grid_width = detail::infer_square_side(dataset.dim());
        if (grid_height * grid_width != dataset.dim())
            throw UsageError("ambiguate: grid " + std::to_string(grid_height) + "x" +
                             std::to_string(grid_width) + " does not match feature dimension " +
                             std::to_string(dataset.dim()));
    }

    // Donor pool per class: instances NOT of that class.
    std::vector<std::vector<std::size_t>> donors_by_class(
        static_cast<std::size_t>(dataset.num_classes));
    for (std::size_t c = 0; c < donors_by_class.size(); ++c)
        for (std::size_t i = 0; i < n; ++i)
            if (dataset.clean_labels[i] != static_cast<int>(c)) donors_by_class[c].push_back(i);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    for (std::size_t pick = 0; pick < count; ++pick) {
        const std::size_t i = order[pick];
        const auto& donors = donors_by_class[static_cast<std::size_t>(dataset.clean_labels[i])];
        if (donors.empty())
            throw UsageError("ambiguate: no donor instance outside class " +
                             std::to_string(dataset.clean_labels[i]));
        const std::size_t j = donors[rng.next_below(donors.size())];
        auto target = result.features.row(i);
        const auto donor = dataset.features.row(j);
        if (method == AmbiguateMethod::interpolate) {
            const double alpha = rng.uniform(0.25, 0.45);
            for (std::size_t d = 0; d < target.size(); ++d)
                target[d] = (1.0 - alpha) * target[d] + alpha * donor[d];
        } else {
            const double ratio = rng.uniform(0.25, 0.5);
            const double side_scale = std::sqrt(ratio);
            const std::size_t box_h = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(side_scale * grid_height)));
            const std::size_t box_w = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(side_scale * grid_width)));
            const std::size_t top = rng.next_below(grid_height - box_h + 1);
            const std::size_t left = rng.next_below(grid_width - box_w + 1);
            for (std::size_t r = top; r < top + box_h; ++r)
                for (std::size_t c = left; c < left + box_w; ++c)
                    target[r * grid_width + c] = donor[r * grid_width + c];
        }
        result.set_index[i] = 1;
    }
    result.noisy_labels = result.clean_labels;
    return result;
}

/// SDN dataset plus the ground-truth per-set transition matrices used to
/// corrupt it.
struct SdnDataset {
    LabeledDataset data;
    TransitionMatrix clean_truth;      // identity when the clean set is untouched
    TransitionMatrix ambiguous_truth;
};

/// Corrupt the labels of the ambiguous partition (set_index = 1) per
/// ambiguous_noise, and optionally the clean partition per clean_noise.
inline SdnDataset build_sdn_dataset(const LabeledDataset& base, const NoiseSpec& ambiguous_noise,
                                    const std::optional<NoiseSpec>& clean_noise, Rng& rng) {
    if (!base.has_set_index()) throw UsageError("build_sdn_dataset: base has no set index");
    const auto classes = static_cast<std::size_t>(base.num_classes);
    SdnDataset result{base, make_transition_matrix({NoisePattern::symmetric, 0.0}, classes),
                      make_transition_matrix(ambiguous_noise, classes)};
    if (clean_noise) result.clean_truth = make_transition_matrix(*clean_noise, classes);
    result.clean_truth.set_tag = "clean";
    result.ambiguous_truth.set_tag = "ambiguous";

    result.data.noisy_labels = base.clean_labels;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const TransitionMatrix& t =
            base.set_index[i] == 1 ? result.ambiguous_truth : result.clean_truth;
        const int label[1] = {base.clean_labels[i]};
        result.data.noisy_labels[i] = corrupt_labels(label, t, rng)[0];
    }
    return result;
}

}  // namespace mln
