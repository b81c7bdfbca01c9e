#pragma once

#include <filesystem>
#include <string>

#include "srtk/core.hpp"

namespace srtk_io {

// A decoded image plus what we know about its sample scale.
struct LoadedImage {
    srtk::ImageTensor image;  // raw sample values (DNs for integer formats)
    double peak = 1.0;        // dynamic range ceiling of the samples
    int bit_depth = 0;        // 0 for float sources
    std::string format;       // "png", "tiff", "srtn"
};

// Dispatches on file magic: PNG, baseline TIFF, or portable tensor.
// forced_bits overrides the inferred dynamic range of integer inputs
// (e.g. 12 for 12-bit data in 16-bit containers).
LoadedImage load_image(const std::filesystem::path& path, int forced_bits = 0);

// 8- or 16-bit grayscale/RGB PNG from raw sample values in [0, 2^bits-1].
void save_png(const std::filesystem::path& path, const srtk::ImageTensor& img,
              int bit_depth);

}  // namespace srtk_io
