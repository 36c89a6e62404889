#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mln/dataset.hpp"
#include "mln/errors.hpp"
#include "mln/model.hpp"
#include "mln/noise.hpp"
#include "mln/trainer.hpp"

namespace mln {

namespace detail {

inline void write_u64_le(std::ostream& out, std::uint64_t value) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline std::uint64_t read_u64_le(std::istream& in, const std::string& path) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw IoError("truncated file " + path);
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return value;
}

inline void write_f64_le(std::ostream& out, double value) {
    write_u64_le(out, std::bit_cast<std::uint64_t>(value));
}

inline double read_f64_le(std::istream& in, const std::string& path) {
    return std::bit_cast<double>(read_u64_le(in, path));
}

inline void write_u32_le(std::ostream& out, std::uint32_t value) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

inline std::uint32_t read_u32_le(std::istream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw IoError("truncated file " + path);
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return value;
}

inline void check_magic(std::istream& in, const char (&magic)[9], const std::string& path) {
    char found[8];
    if (!in.read(found, 8)) throw IoError("truncated file " + path);
    if (std::memcmp(found, magic, 8) != 0)
        throw IoError("bad magic in " + path + " (expected " + std::string(magic, 8) + ")");
}

/// Shortest round-trip decimal rendering of a double.
inline std::string format_double(double value) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

}  // namespace detail

/// Replace `path` with `content` atomically (temp file + rename).
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Dataset binary ("MLNDS001"): header, then feature doubles, then labels.
// Layout (all integers little-endian):
//   8 bytes magic, u64 N, u64 D, u64 C, u8 has_clean, u8 has_set, 6 zero bytes,
//   N*D f64 features row-major, N u32 noisy labels,
//   [N u32 clean labels], [N u8 set indices].
// ---------------------------------------------------------------------------

inline void save_dataset(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("MLNDS001", 8);
    detail::write_u64_le(out, data.size());
    detail::write_u64_le(out, data.dim());
    detail::write_u64_le(out, static_cast<std::uint64_t>(data.num_classes));
    const char flags[2] = {data.has_clean_labels() ? char(1) : char(0),
                           data.has_set_index() ? char(1) : char(0)};
    out.write(flags, 2);
    const char pad[6] = {};
    out.write(pad, 6);
    for (double v : data.features.data) detail::write_f64_le(out, v);
    for (int label : data.noisy_labels)
        detail::write_u32_le(out, static_cast<std::uint32_t>(label));
    if (data.has_clean_labels())
        for (int label : data.clean_labels)
            detail::write_u32_le(out, static_cast<std::uint32_t>(label));
    if (data.has_set_index())
        out.write(reinterpret_cast<const char*>(data.set_index.data()),
                  static_cast<std::streamsize>(data.set_index.size()));
    if (!out) throw IoError("write failed for " + path);
}

inline LabeledDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    detail::check_magic(in, "MLNDS001", path);
    const std::uint64_t n = detail::read_u64_le(in, path);
    const std::uint64_t dim = detail::read_u64_le(in, path);
    const std::uint64_t classes = detail::read_u64_le(in, path);
    char flags[2];
    if (!in.read(flags, 2)) throw IoError("truncated file " + path);
    char pad[6];
    if (!in.read(pad, 6)) throw IoError("truncated file " + path);

    LabeledDataset data;
    data.features = Matrix(n, dim);
    data.num_classes = static_cast<int>(classes);
    for (double& v : data.features.data) v = detail::read_f64_le(in, path);
    data.noisy_labels.resize(n);
    for (int& label : data.noisy_labels)
        label = static_cast<int>(detail::read_u32_le(in, path));
    if (flags[0]) {
        data.clean_labels.resize(n);
        for (int& label : data.clean_labels)
            label = static_cast<int>(detail::read_u32_le(in, path));
    }
    if (flags[1]) {
        data.set_index.resize(n);
        if (!in.read(reinterpret_cast<char*>(data.set_index.data()),
                     static_cast<std::streamsize>(n)))
            throw IoError("truncated file " + path);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Model checkpoint ("MLNCKPT1"): u64 K, u64 C, f64 sigma_lo, f64 sigma_hi,
// u64 backbone layer count, then every layer (backbone in order, pi, mu,
// sigma heads) as u64 out_dim, u64 in_dim, out*in f64 weights row-major,
// out f64 biases. A JSON sidecar carries the hyperparameters.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_layer(std::ostream& out, const LayerParams& layer) {
    write_u64_le(out, layer.out_dim());
    write_u64_le(out, layer.in_dim());
    for (double w : layer.weight.data) write_f64_le(out, w);
    for (double b : layer.bias) write_f64_le(out, b);
}

inline LayerParams read_layer(std::istream& in, const std::string& path) {
    const std::uint64_t out_dim = read_u64_le(in, path);
    const std::uint64_t in_dim = read_u64_le(in, path);
    LayerParams layer{Matrix(out_dim, in_dim), std::vector<double>(out_dim, 0.0)};
    for (double& w : layer.weight.data) w = read_f64_le(in, path);
    for (double& b : layer.bias) b = read_f64_le(in, path);
    return layer;
}

}  // namespace detail

inline void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("MLNCKPT1", 8);
    detail::write_u64_le(out, params.mixtures);
    detail::write_u64_le(out, params.classes);
    detail::write_f64_le(out, params.sigma_lo);
    detail::write_f64_le(out, params.sigma_hi);
    detail::write_u64_le(out, params.backbone.size());
    for (const auto& layer : params.backbone) detail::write_layer(out, layer);
    detail::write_layer(out, params.pi_head);
    detail::write_layer(out, params.mu_head);
    detail::write_layer(out, params.sigma_head);
    if (!out) throw IoError("write failed for " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    detail::check_magic(in, "MLNCKPT1", path);
    ModelParams params;
    params.mixtures = detail::read_u64_le(in, path);
    params.classes = detail::read_u64_le(in, path);
    params.sigma_lo = detail::read_f64_le(in, path);
    params.sigma_hi = detail::read_f64_le(in, path);
    const std::uint64_t layers = detail::read_u64_le(in, path);
    for (std::uint64_t i = 0; i < layers; ++i)
        params.backbone.push_back(detail::read_layer(in, path));
    params.pi_head = detail::read_layer(in, path);
    params.mu_head = detail::read_layer(in, path);
    params.sigma_head = detail::read_layer(in, path);
    return params;
}

// ---------------------------------------------------------------------------
// Text artifacts.
// ---------------------------------------------------------------------------

/// Transition matrix as CSV: C rows of C comma-separated probabilities,
/// shortest round-trip formatting.
inline std::string transition_to_csv(const TransitionMatrix& t) {
    std::string out;
    for (std::size_t i = 0; i < t.classes(); ++i) {
        for (std::size_t j = 0; j < t.classes(); ++j) {
            if (j > 0) out += ',';
            out += detail::format_double(t.entries(i, j));
        }
        out += '\n';
    }
    return out;
}

inline TransitionMatrix transition_from_csv(const std::string& text, const std::string& origin,
                                            const std::string& set_tag) {
    std::vector<std::vector<double>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("transition csv: no rows");
    const std::size_t classes = rows.size();
    Matrix entries(classes, classes);
    for (std::size_t i = 0; i < classes; ++i) {
        if (rows[i].size() != classes)
            throw IoError("transition csv: row " + std::to_string(i) + " has " +
                          std::to_string(rows[i].size()) + " columns, expected " +
                          std::to_string(classes));
        for (std::size_t j = 0; j < classes; ++j) entries(i, j) = rows[i][j];
    }
    return {std::move(entries), origin, set_tag};
}

/// Value-annotated heatmap of a transition matrix. Fixed color ramp: cell
/// value v in [0,1] linearly interpolates white (#ffffff, v=0) to deep blue
/// (#08306b, v=1); text flips to white on dark cells.
inline std::string transition_to_svg(const TransitionMatrix& t) {
    const std::size_t classes = t.classes();
    const int cell = 48;
    const int margin = 36;
    const int width = margin + cell * static_cast<int>(classes) + 8;
    const int height = margin + cell * static_cast<int>(classes) + 8;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
    for (std::size_t j = 0; j < classes; ++j)
        svg << "  <text x=\"" << margin + cell * static_cast<int>(j) + cell / 2 << "\" y=\""
            << margin - 8 << "\" text-anchor=\"middle\">" << j << "</text>\n";
    for (std::size_t i = 0; i < classes; ++i)
        svg << "  <text x=\"" << margin - 8 << "\" y=\""
            << margin + cell * static_cast<int>(i) + cell / 2 + 4
            << "\" text-anchor=\"end\">" << i << "</text>\n";
    for (std::size_t i = 0; i < classes; ++i) {
        for (std::size_t j = 0; j < classes; ++j) {
            double v = t.entries(i, j);
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            const int r = static_cast<int>(255 + v * (8 - 255));
            const int g = static_cast<int>(255 + v * (48 - 255));
            const int b = static_cast<int>(255 + v * (107 - 255));
            const int x = margin + cell * static_cast<int>(j);
            const int y = margin + cell * static_cast<int>(i);
            char color[8];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", r, g, b);
            svg << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << color
                << "\" stroke=\"#888888\"/>\n";
            char label[16];
            std::snprintf(label, sizeof(label), "%.2f", t.entries(i, j));
            svg << "  <text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" text-anchor=\"middle\" fill=\"" << (v > 0.5 ? "#ffffff" : "#000000")
                << "\">" << label << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

/// TrainReport as JSON lines, one epoch per line.
inline std::string report_to_jsonl(const TrainReport& report) {
    std::string out;
    for (const EpochStats& stats : report.epochs) {
        out += "{\"epoch\":" + std::to_string(stats.epoch);
        out += ",\"train_loss\":" + detail::format_double(stats.train_loss);
        if (stats.test_accuracy >= 0.0)
            out += ",\"test_accuracy\":" + detail::format_double(stats.test_accuracy);
        out += ",\"mean_aleatoric\":" + detail::format_double(stats.mean_aleatoric);
        out += ",\"mean_epistemic\":" + detail::format_double(stats.mean_epistemic);
        out += "}\n";
    }
    return out;
}

}  // namespace mln
