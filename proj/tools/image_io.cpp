#include "image_io.hpp"

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "srtk/tensor_file.hpp"

namespace srtk_io {

using srtk::Domain;
using srtk::ImageTensor;
using srtk::IoError;

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path.string());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(is),
                                      std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// PNG via libpng
// ---------------------------------------------------------------------------

struct PngReadCtx {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
    auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
    if (ctx->pos + n > ctx->size) png_error(png, "truncated png");
    std::memcpy(out, ctx->data + ctx->pos, n);
    ctx->pos += n;
}

LoadedImage load_png(const std::vector<unsigned char>& bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw IoError("png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: allocation failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<unsigned char> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: decode error");
    }
    PngReadCtx ctx{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &ctx, png_mem_read);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if ((color_type & PNG_COLOR_MASK_ALPHA) != 0 ||
        png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    pixels.resize(rowbytes * height);
    row_ptrs.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) row_ptrs[y] = pixels.data() + y * rowbytes;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    LoadedImage out;
    out.format = "png";
    out.bit_depth = bit_depth;
    out.peak = bit_depth == 16 ? 65535.0 : 255.0;
    out.image = ImageTensor(static_cast<int>(height), static_cast<int>(width),
                            channels, Domain::RawDN);
    for (png_uint_32 y = 0; y < height; ++y) {
        const unsigned char* row = pixels.data() + y * rowbytes;
        for (png_uint_32 x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                const std::size_t i = (static_cast<std::size_t>(x) * channels + c);
                double v;
                if (bit_depth == 16)
                    v = static_cast<double>((row[2 * i] << 8) | row[2 * i + 1]);
                else
                    v = static_cast<double>(row[i]);
                out.image.at(static_cast<int>(y), static_cast<int>(x), c) = v;
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Baseline TIFF (uncompressed, chunky, 8/16-bit)
// ---------------------------------------------------------------------------

struct TiffReader {
    const std::vector<unsigned char>& b;
    bool little;

    std::uint16_t u16(std::size_t off) const {
        if (off + 2 > b.size()) throw IoError("tiff: truncated");
        return little ? static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8))
                      : static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
    }
    std::uint32_t u32(std::size_t off) const {
        if (off + 4 > b.size()) throw IoError("tiff: truncated");
        return little ? (static_cast<std::uint32_t>(b[off]) |
                         (static_cast<std::uint32_t>(b[off + 1]) << 8) |
                         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
                         (static_cast<std::uint32_t>(b[off + 3]) << 24))
                      : ((static_cast<std::uint32_t>(b[off]) << 24) |
                         (static_cast<std::uint32_t>(b[off + 1]) << 16) |
                         (static_cast<std::uint32_t>(b[off + 2]) << 8) |
                         static_cast<std::uint32_t>(b[off + 3]));
    }
};

LoadedImage load_tiff(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 8) throw IoError("tiff: truncated header");
    bool little;
    if (bytes[0] == 'I' && bytes[1] == 'I')
        little = true;
    else if (bytes[0] == 'M' && bytes[1] == 'M')
        little = false;
    else
        throw IoError("tiff: bad byte-order mark");
    TiffReader rd{bytes, little};
    if (rd.u16(2) != 42) throw IoError("tiff: bad magic");
    const std::uint32_t ifd = rd.u32(4);
    const std::uint16_t nentries = rd.u16(ifd);

    std::uint32_t width = 0, height = 0, compression = 1, spp = 1, rows_per_strip = 0;
    std::uint32_t planar = 1, sample_format = 1;
    int bits = 0;
    std::vector<std::uint32_t> strip_offsets, strip_counts;

    auto type_size = [](std::uint16_t t) -> std::size_t {
        switch (t) {
            case 1: case 2: case 6: case 7: return 1;
            case 3: case 8: return 2;
            case 4: case 9: case 11: return 4;
            default: return 8;
        }
    };
    auto read_values = [&](std::size_t entry) {
        const std::uint16_t type = rd.u16(entry + 2);
        const std::uint32_t count = rd.u32(entry + 4);
        const std::size_t sz = type_size(type);
        const std::size_t base =
            sz * count <= 4 ? entry + 8 : static_cast<std::size_t>(rd.u32(entry + 8));
        std::vector<std::uint32_t> vals(count);
        for (std::uint32_t i = 0; i < count; ++i)
            vals[i] = sz == 2 ? rd.u16(base + 2 * i)
                              : (sz == 4 ? rd.u32(base + 4 * i) : bytes.at(base + i));
        return vals;
    };

    for (std::uint16_t e = 0; e < nentries; ++e) {
        const std::size_t entry = ifd + 2 + static_cast<std::size_t>(e) * 12;
        const std::uint16_t tag = rd.u16(entry);
        switch (tag) {
            case 256: width = read_values(entry)[0]; break;
            case 257: height = read_values(entry)[0]; break;
            case 258: bits = static_cast<int>(read_values(entry)[0]); break;
            case 259: compression = read_values(entry)[0]; break;
            case 273: strip_offsets = read_values(entry); break;
            case 277: spp = read_values(entry)[0]; break;
            case 278: rows_per_strip = read_values(entry)[0]; break;
            case 279: strip_counts = read_values(entry); break;
            case 284: planar = read_values(entry)[0]; break;
            case 339: sample_format = read_values(entry)[0]; break;
            default: break;
        }
    }
    if (width == 0 || height == 0) throw IoError("tiff: missing dimensions");
    if (compression != 1) throw IoError("tiff: only uncompressed supported");
    if (planar != 1) throw IoError("tiff: only chunky layout supported");
    if (sample_format != 1) throw IoError("tiff: only unsigned samples supported");
    if (bits != 8 && bits != 16) throw IoError("tiff: only 8/16-bit supported");
    if (strip_offsets.empty()) throw IoError("tiff: missing strip offsets");
    if (rows_per_strip == 0) rows_per_strip = height;

    LoadedImage out;
    out.format = "tiff";
    out.bit_depth = bits;
    out.peak = bits == 16 ? 65535.0 : 255.0;
    out.image = ImageTensor(static_cast<int>(height), static_cast<int>(width),
                            static_cast<int>(spp), Domain::RawDN);

    const std::size_t bytes_per_sample = bits / 8;
    std::size_t sample_index = 0;
    const std::size_t total = out.image.data.size();
    for (std::size_t s = 0; s < strip_offsets.size() && sample_index < total; ++s) {
        const std::size_t off = strip_offsets[s];
        const std::size_t count =
            s < strip_counts.size()
                ? strip_counts[s]
                : static_cast<std::size_t>(rows_per_strip) * width * spp * bytes_per_sample;
        for (std::size_t p = 0; p + bytes_per_sample <= count && sample_index < total;
             p += bytes_per_sample) {
            double v;
            if (bits == 16)
                v = static_cast<double>(rd.u16(off + p));
            else
                v = static_cast<double>(bytes.at(off + p));
            out.image.data[sample_index++] = v;
        }
    }
    if (sample_index != total) throw IoError("tiff: pixel data incomplete");
    return out;
}

// ---------------------------------------------------------------------------
// Portable tensor
// ---------------------------------------------------------------------------

LoadedImage load_srtn(const std::filesystem::path& path) {
    const auto t = srtk::tensor_file::load_tensor(path);
    LoadedImage out;
    out.format = "srtn";
    if (t.dtype == srtk::tensor_file::Dtype::U16) {
        out.bit_depth = 16;
        out.peak = 65535.0;
        out.image = srtk::tensor_file::to_image(t, Domain::RawDN);
    } else {
        out.bit_depth = 0;
        out.peak = 1.0;
        out.image = srtk::tensor_file::to_image(t, Domain::Unit);
        for (double v : out.image.data)
            if (v < 0.0 || v > 1.0) {
                out.image.domain = Domain::Latent;
                break;
            }
    }
    return out;
}

}  // namespace

LoadedImage load_image(const std::filesystem::path& path, int forced_bits) {
    const auto bytes = read_file(path);
    LoadedImage out;
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' &&
        bytes[3] == 'G') {
        out = load_png(bytes);
    } else if (bytes.size() >= 4 &&
               ((bytes[0] == 'I' && bytes[1] == 'I') || (bytes[0] == 'M' && bytes[1] == 'M'))) {
        out = load_tiff(bytes);
    } else if (bytes.size() >= 4 && bytes[0] == 'S' && bytes[1] == 'R' && bytes[2] == 'T' &&
               bytes[3] == 'N') {
        out = load_srtn(path);
    } else {
        throw IoError("unrecognized image format: " + path.string());
    }
    if (forced_bits > 0 && out.image.domain == Domain::RawDN) {
        out.bit_depth = forced_bits;
        out.peak = static_cast<double>((1u << forced_bits) - 1);
    }
    return out;
}

void save_png(const std::filesystem::path& path, const ImageTensor& img,
              int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw IoError("png: bit depth must be 8 or 16");
    if (img.channels != 1 && img.channels != 3)
        throw IoError("png: only grayscale or RGB supported");
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (fp == nullptr) throw IoError("cannot open for writing: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
        if (png != nullptr) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("png: encode error");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), bit_depth,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t bps = bit_depth / 8;
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels * bps);
    const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double v = img.at(y, x, c);
                v = std::min(std::max(v, 0.0), maxval);
                const auto q = static_cast<std::uint32_t>(v + 0.5);
                const std::size_t i = (static_cast<std::size_t>(x) * img.channels + c) * bps;
                if (bit_depth == 16) {
                    row[i] = static_cast<unsigned char>(q >> 8);
                    row[i + 1] = static_cast<unsigned char>(q & 0xff);
                } else {
                    row[i] = static_cast<unsigned char>(q);
                }
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace srtk_io
