#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "srtk/core.hpp"

namespace srtk::tensor_file {

// Portable tensor format: "SRTN", version u8 = 1, dtype u8, ndim u8,
// dims as u32 little-endian, then row-major little-endian payload.

enum class Dtype : std::uint8_t { F32 = 1, F64 = 2, U16 = 3 };

inline constexpr char kMagic[4] = {'S', 'R', 'T', 'N'};
inline constexpr std::uint8_t kVersion = 1;

struct Tensor {
    Dtype dtype = Dtype::F64;
    std::vector<std::uint32_t> dims;
    std::vector<double> values;  // canonical f64 view of the payload

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::uint32_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }
};

namespace detail {

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }

inline void put_u16(std::ostream& os, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    put_bytes(os, b, 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff),
                       static_cast<char>((v >> 24) & 0xff)};
    put_bytes(os, b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v & 0xffffffffull));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline bool get_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(is.gcount()) == n;
}

inline std::uint8_t get_u8(std::istream& is) {
    std::uint8_t v;
    if (!get_bytes(is, &v, 1)) throw IoError("tensor file: truncated header");
    return v;
}

inline std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    if (!get_bytes(is, b, 2)) throw IoError("tensor file: truncated payload");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!get_bytes(is, b, 4)) throw IoError("tensor file: truncated data");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is) {
    const std::uint64_t lo = get_u32(is);
    const std::uint64_t hi = get_u32(is);
    return lo | (hi << 32);
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const Tensor& t) {
    if (t.dims.empty()) throw DomainError("tensor file: ndim must be >= 1");
    if (t.dims.size() > 255) throw DomainError("tensor file: too many dims");
    if (t.element_count() != t.values.size())
        throw ShapeError("tensor file: dims do not match value count");
    detail::put_bytes(os, kMagic, 4);
    detail::put_u8(os, kVersion);
    detail::put_u8(os, static_cast<std::uint8_t>(t.dtype));
    detail::put_u8(os, static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) detail::put_u32(os, d);
    for (double v : t.values) {
        switch (t.dtype) {
            case Dtype::F32:
                detail::put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
                break;
            case Dtype::F64:
                detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
                break;
            case Dtype::U16:
                detail::put_u16(os, static_cast<std::uint16_t>(v));
                break;
        }
    }
    if (!os) throw IoError("tensor file: write failed");
}

inline Tensor read_tensor(std::istream& is) {
    char magic[4];
    if (!detail::get_bytes(is, magic, 4)) throw IoError("tensor file: missing magic");
    if (std::string(magic, 4) != std::string(kMagic, 4))
        throw IoError("tensor file: bad magic");
    const std::uint8_t version = detail::get_u8(is);
    if (version != kVersion)
        throw IoError("tensor file: unsupported version " + std::to_string(version));
    const std::uint8_t dtype_code = detail::get_u8(is);
    if (dtype_code < 1 || dtype_code > 3)
        throw IoError("tensor file: unknown dtype code " + std::to_string(dtype_code));
    const std::uint8_t ndim = detail::get_u8(is);
    if (ndim == 0) throw IoError("tensor file: zero-dimensional tensor");
    Tensor t;
    t.dtype = static_cast<Dtype>(dtype_code);
    t.dims.resize(ndim);
    std::size_t count = 1;
    for (auto& d : t.dims) {
        d = detail::get_u32(is);
        count *= d;
        if (count > (1ull << 31)) throw IoError("tensor file: implausible size");
    }
    t.values.resize(count);
    for (double& v : t.values) {
        switch (t.dtype) {
            case Dtype::F32: {
                const auto bits = detail::get_u32(is);
                v = static_cast<double>(std::bit_cast<float>(bits));
                break;
            }
            case Dtype::F64: {
                const auto bits = detail::get_u64(is);
                v = std::bit_cast<double>(bits);
                break;
            }
            case Dtype::U16:
                v = static_cast<double>(detail::get_u16(is));
                break;
        }
    }
    return t;
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_tensor(os, t);
}

inline Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path.string());
    return read_tensor(is);
}

// Reads tensors back-to-back until EOF (feature stacks, model files).
inline std::vector<Tensor> load_tensor_sequence(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path.string());
    std::vector<Tensor> out;
    while (true) {
        is.peek();
        if (is.eof()) break;
        out.push_back(read_tensor(is));
    }
    if (out.empty()) throw IoError("tensor file: empty stream: " + path.string());
    return out;
}

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

inline Tensor from_image(const ImageTensor& img, Dtype dtype = Dtype::F64) {
    Tensor t;
    t.dtype = dtype;
    t.dims = {static_cast<std::uint32_t>(img.height),
              static_cast<std::uint32_t>(img.width),
              static_cast<std::uint32_t>(img.channels)};
    t.values = img.data;
    return t;
}

inline ImageTensor to_image(const Tensor& t, Domain domain) {
    int h, w, c;
    if (t.dims.size() == 2) {
        h = static_cast<int>(t.dims[0]);
        w = static_cast<int>(t.dims[1]);
        c = 1;
    } else if (t.dims.size() == 3) {
        h = static_cast<int>(t.dims[0]);
        w = static_cast<int>(t.dims[1]);
        c = static_cast<int>(t.dims[2]);
    } else {
        throw ShapeError("tensor file: image tensors must be 2-D or 3-D");
    }
    ImageTensor img(h, w, c, domain);
    img.data = t.values;
    return img;
}

}  // namespace srtk::tensor_file
