#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "unlearn/errors.hpp"
#include "unlearn/network.hpp"

namespace unlearn {

// Model container: magic "UNLM", format version u16, length-prefixed UTF-8
// arch id, then parameters as little-endian f64 in layer order (weights
// row-major, then bias). Round-trips every parameter bit-exactly.
inline constexpr char kModelMagic[4] = {'U', 'N', 'L', 'M'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

namespace detail {

inline bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if (!host_is_little_endian()) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw FormatError(std::string("model file truncated while reading ") + what);
    if (!host_is_little_endian()) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

} // namespace detail

inline void save_model(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.write(kModelMagic, 4);
    detail::write_le<std::uint16_t>(out, kModelFormatVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.arch_id.size()));
    out.write(net.arch_id.data(), static_cast<std::streamsize>(net.arch_id.size()));
    for (const auto& l : net.layers) {
        for (double w : l.weights.data) detail::write_le<double>(out, w);
        for (double b : l.bias.data) detail::write_le<double>(out, b);
    }
    if (!out) throw FormatError("write failed for '" + path + "'");
}

inline Network load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0) {
        throw FormatError("'" + path + "' is not a model file (bad magic)");
    }
    const auto version = detail::read_le<std::uint16_t>(in, "version");
    if (version != kModelFormatVersion) {
        throw FormatError("unsupported model format version " + std::to_string(version));
    }
    const auto arch_len = detail::read_le<std::uint32_t>(in, "arch id length");
    std::string arch_id(arch_len, '\0');
    in.read(arch_id.data(), arch_len);
    if (!in) throw FormatError("model file truncated while reading arch id");

    Network net = init_network(arch_id, 0); // shapes only, parameters overwritten below
    for (auto& l : net.layers) {
        for (double& w : l.weights.data) w = detail::read_le<double>(in, "weights");
        for (double& b : l.bias.data) b = detail::read_le<double>(in, "bias");
    }
    in.peek();
    if (!in.eof()) throw FormatError("trailing bytes after model parameters");
    return net;
}

} // namespace unlearn
