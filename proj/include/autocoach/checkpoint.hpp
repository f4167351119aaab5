#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "autocoach/nn.hpp"

namespace autocoach {

// Flat binary tensor container: a header listing names and shapes, followed
// by all bodies as row-major 64-bit floats (little-endian). Vectors are
// (n x 1) tensors.
struct NamedTensor {
    std::string name;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<double> data;  // row-major
};

namespace detail {

inline constexpr char kTensorMagic[8] = {'A', 'C', 'T', 'S', '0', '0', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return static_cast<bool>(in);
}

}  // namespace detail

inline void write_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    out.write(detail::kTensorMagic, sizeof(detail::kTensorMagic));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::put<std::uint64_t>(out, t.rows);
        detail::put<std::uint64_t>(out, t.cols);
    }
    for (const NamedTensor& t : tensors)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!out) throw ConfigError("short write on checkpoint: " + path);
}

inline std::vector<NamedTensor> read_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kTensorMagic, sizeof(magic)) != 0)
        throw ConfigError("bad checkpoint magic in " + path);
    std::uint32_t count = 0;
    if (!detail::get(in, count)) throw ConfigError("truncated checkpoint header: " + path);
    std::vector<NamedTensor> tensors(count);
    for (NamedTensor& t : tensors) {
        std::uint32_t len = 0;
        if (!detail::get(in, len) || len > 4096) throw ConfigError("bad tensor name in " + path);
        t.name.resize(len);
        in.read(t.name.data(), len);
        if (!detail::get(in, t.rows) || !detail::get(in, t.cols))
            throw ConfigError("truncated checkpoint header: " + path);
    }
    for (NamedTensor& t : tensors) {
        t.data.resize(t.rows * t.cols);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw ConfigError("truncated checkpoint body: " + path);
    }
    return tensors;
}

inline NamedTensor tensor_of(const std::string& name, const nn::Matrix& m) {
    NamedTensor t{name, static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols()), {}};
    t.data.resize(static_cast<std::size_t>(m.rows() * m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            t.data[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
    return t;
}

inline NamedTensor tensor_of(const std::string& name, const nn::Vector& v) {
    NamedTensor t{name, static_cast<std::uint64_t>(v.size()), 1, {}};
    t.data.assign(v.data(), v.data() + v.size());
    return t;
}

inline nn::Matrix matrix_of(const NamedTensor& t) {
    nn::Matrix m(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
    for (std::uint64_t r = 0; r < t.rows; ++r)
        for (std::uint64_t c = 0; c < t.cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.data[r * t.cols + c];
    return m;
}

inline nn::Vector vector_of(const NamedTensor& t) {
    if (t.cols != 1) throw ConfigError("tensor '" + t.name + "' is not a vector");
    return Eigen::Map<const nn::Vector>(t.data.data(), static_cast<Eigen::Index>(t.rows));
}

inline const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
    for (const NamedTensor& t : ts)
        if (t.name == name) return t;
    throw ConfigError("checkpoint is missing tensor '" + name + "'");
}

inline void append_mlp_tensors(std::vector<NamedTensor>& out, const std::string& prefix,
                               const nn::Mlp& m) {
    out.push_back(tensor_of(prefix + ".w1", m.w1));
    out.push_back(tensor_of(prefix + ".b1", m.b1));
    out.push_back(tensor_of(prefix + ".w2", m.w2));
    out.push_back(tensor_of(prefix + ".b2", m.b2));
    for (std::size_t k = 0; k < m.head_w.size(); ++k) {
        out.push_back(tensor_of(prefix + ".head" + std::to_string(k) + ".w", m.head_w[k]));
        out.push_back(tensor_of(prefix + ".head" + std::to_string(k) + ".b", m.head_b[k]));
    }
}

inline nn::Mlp mlp_from_tensors(const std::vector<NamedTensor>& ts, const std::string& prefix,
                                int head_count) {
    nn::Mlp m;
    m.w1 = matrix_of(find_tensor(ts, prefix + ".w1"));
    m.b1 = vector_of(find_tensor(ts, prefix + ".b1"));
    m.w2 = matrix_of(find_tensor(ts, prefix + ".w2"));
    m.b2 = vector_of(find_tensor(ts, prefix + ".b2"));
    for (int k = 0; k < head_count; ++k) {
        m.head_w.push_back(matrix_of(find_tensor(ts, prefix + ".head" + std::to_string(k) + ".w")));
        m.head_b.push_back(vector_of(find_tensor(ts, prefix + ".head" + std::to_string(k) + ".b")));
    }
    return m;
}

}  // namespace autocoach
