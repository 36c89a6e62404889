#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mln/dataset.hpp"
#include "mln/errors.hpp"

namespace mln {

namespace detail {

inline std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4))
        throw IoError("idx: truncated file " + path);
    return (static_cast<std::uint32_t>(bytes[0]) << 24) |
           (static_cast<std::uint32_t>(bytes[1]) << 16) |
           (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace detail

/// Load an IDX image/label file pair (the MNIST container format: big-endian
/// dimensions, magic 0x00000803 for images and 0x00000801 for labels).
/// Pixels are scaled to [0,1] and flattened row-major; labels fill both the
/// clean and noisy label arrays.
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                               std::size_t limit = 0) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw IoError("idx: cannot open " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw IoError("idx: cannot open " + labels_path);

    const std::uint32_t image_magic = detail::read_u32_be(images, images_path);
    if (image_magic != 0x00000803u)
        throw IoError("idx: bad image magic in " + images_path + " (expected 0x00000803)");
    const std::uint32_t label_magic = detail::read_u32_be(labels, labels_path);
    if (label_magic != 0x00000801u)
        throw IoError("idx: bad label magic in " + labels_path + " (expected 0x00000801)");

    const std::uint32_t image_count = detail::read_u32_be(images, images_path);
    const std::uint32_t rows = detail::read_u32_be(images, images_path);
    const std::uint32_t cols = detail::read_u32_be(images, images_path);
    const std::uint32_t label_count = detail::read_u32_be(labels, labels_path);
    if (image_count != label_count)
        throw IoError("idx: count mismatch, " + std::to_string(image_count) + " images vs " +
                      std::to_string(label_count) + " labels");

    std::size_t n = image_count;
    if (limit > 0 && limit < n) n = limit;
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;

    LabeledDataset data;
    data.features = Matrix(n, dim);
    data.clean_labels.resize(n);
    std::vector<unsigned char> pixel_row(dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (!images.read(reinterpret_cast<char*>(pixel_row.data()),
                         static_cast<std::streamsize>(dim)))
            throw IoError("idx: truncated file " + images_path);
        for (std::size_t d = 0; d < dim; ++d)
            data.features(i, d) = static_cast<double>(pixel_row[d]) / 255.0;
        unsigned char label = 0;
        if (!labels.read(reinterpret_cast<char*>(&label), 1))
            throw IoError("idx: truncated file " + labels_path);
        data.clean_labels[i] = static_cast<int>(label);
    }
    data.noisy_labels = data.clean_labels;
    int max_label = 0;
    for (int label : data.clean_labels) max_label = std::max(max_label, label);
    data.num_classes = max_label + 1;
    return data;
}

}  // namespace mln
