#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/errors.hpp"

namespace unlearn {

// IDX image/label files: big-endian headers, magic 0x00000803 for u8 image
// cubes and 0x00000801 for u8 label vectors.
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path, const char* what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw FormatError("'" + path + "' truncated while reading " + what);
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

} // namespace detail

// Loads an image/label pair. Pixels are scaled by 1/255 into [0,1].
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError("cannot open '" + images_path + "'");
    if (detail::read_be32(img, images_path, "magic") != kIdxImageMagic) {
        throw FormatError("'" + images_path + "' has the wrong image magic");
    }
    const std::uint32_t n = detail::read_be32(img, images_path, "count");
    const std::uint32_t rows = detail::read_be32(img, images_path, "rows");
    const std::uint32_t cols = detail::read_be32(img, images_path, "cols");

    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw FormatError("cannot open '" + labels_path + "'");
    if (detail::read_be32(lbl, labels_path, "magic") != kIdxLabelMagic) {
        throw FormatError("'" + labels_path + "' has the wrong label magic");
    }
    const std::uint32_t n_labels = detail::read_be32(lbl, labels_path, "count");
    if (n_labels != n) {
        throw FormatError("label count " + std::to_string(n_labels) +
                          " does not match image count " + std::to_string(n));
    }

    const std::size_t d = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(n) * d);
    img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (img.gcount() != static_cast<std::streamsize>(pixels.size())) {
        throw FormatError("'" + images_path + "' truncated: pixel data incomplete");
    }
    std::vector<unsigned char> raw_labels(n);
    lbl.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()));
    if (lbl.gcount() != static_cast<std::streamsize>(raw_labels.size())) {
        throw FormatError("'" + labels_path + "' truncated: label data incomplete");
    }

    LabeledDataset out;
    out.source_id = images_path;
    out.features = Tensor::zeros({n, d});
    for (std::size_t k = 0; k < pixels.size(); ++k) {
        out.features.data[k] = static_cast<double>(pixels[k]) / 255.0;
    }
    out.labels.resize(n);
    int max_label = -1;
    for (std::size_t i = 0; i < n; ++i) {
        out.labels[i] = static_cast<int>(raw_labels[i]);
        max_label = std::max(max_label, out.labels[i]);
    }
    out.class_count = max_label + 1;
    out.validate();
    return out;
}

// Writes a dataset back out as an IDX pair. Features are quantized to u8
// (exact for data that came from IDX in the first place). Feature dims that
// are perfect squares are stored as square images, anything else as 1 x d.
inline void save_idx(const LabeledDataset& data, const std::string& images_path,
                     const std::string& labels_path) {
    const std::size_t d = data.dim();
    auto side = static_cast<std::uint32_t>(std::llround(std::sqrt(static_cast<double>(d))));
    std::uint32_t rows = 1, cols = static_cast<std::uint32_t>(d);
    if (static_cast<std::size_t>(side) * side == d) {
        rows = cols = side;
    }

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw FormatError("cannot open '" + images_path + "' for writing");
    detail::write_be32(img, kIdxImageMagic);
    detail::write_be32(img, static_cast<std::uint32_t>(data.size()));
    detail::write_be32(img, rows);
    detail::write_be32(img, cols);
    std::vector<unsigned char> pixels(data.features.size());
    for (std::size_t k = 0; k < pixels.size(); ++k) {
        const double v = std::clamp(data.features.data[k], 0.0, 1.0);
        pixels[k] = static_cast<unsigned char>(std::llround(v * 255.0));
    }
    img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!img) throw FormatError("write failed for '" + images_path + "'");

    std::ofstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw FormatError("cannot open '" + labels_path + "' for writing");
    detail::write_be32(lbl, kIdxLabelMagic);
    detail::write_be32(lbl, static_cast<std::uint32_t>(data.size()));
    for (int y : data.labels) {
        const auto b = static_cast<unsigned char>(y);
        lbl.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!lbl) throw FormatError("write failed for '" + labels_path + "'");
}

} // namespace unlearn
