#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace srtk {

// Value domain of an image tensor. Unit means every sample lies in [0,1],
// Lab means 3 channels of CIELAB values, Latent is an untagged real tensor.
enum class Domain { RawDN, Unit, Lab, Latent };

inline const char* domain_name(Domain d) {
    switch (d) {
        case Domain::RawDN: return "raw-dn";
        case Domain::Unit: return "unit";
        case Domain::Lab: return "lab";
        case Domain::Latent: return "latent";
    }
    return "?";
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct KeyError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Dense H x W x C image, row-major and channel-interleaved, f64 samples.
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    Domain domain = Domain::Latent;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, Domain d, double fill = 0.0)
        : height(h), width(w), channels(c), domain(d),
          data(static_cast<std::size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || c <= 0)
            throw ShapeError("image dimensions must be positive");
    }

    std::size_t size() const { return data.size(); }

    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const ImageTensor& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                               const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch (" +
                         std::to_string(a.height) + "x" + std::to_string(a.width) +
                         "x" + std::to_string(a.channels) + " vs " +
                         std::to_string(b.height) + "x" + std::to_string(b.width) +
                         "x" + std::to_string(b.channels) + ")");
}

}  // namespace srtk
