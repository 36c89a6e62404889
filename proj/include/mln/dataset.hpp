#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mln/matrix.hpp"

namespace mln {

/// Features plus noisy labels, optional clean labels, and an optional
/// per-instance set index (0 = clean partition, 1 = ambiguous partition).
/// clean_labels and set_index are either empty or of length size().
struct LabeledDataset {
    Matrix features;                      // N x D
    std::vector<int> noisy_labels;        // N
    std::vector<int> clean_labels;        // N when known, empty otherwise
    std::vector<std::uint8_t> set_index;  // N when SDN, empty otherwise
    int num_classes = 0;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    bool has_clean_labels() const { return !clean_labels.empty(); }
    bool has_set_index() const { return !set_index.empty(); }
};

}  // namespace mln
