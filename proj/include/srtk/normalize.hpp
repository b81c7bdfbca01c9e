#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "srtk/core.hpp"
#include "srtk/imgmath.hpp"

namespace srtk::normalize {

struct PercentileNormSpec {
    double p_low = 2.0;
    double p_high = 98.0;

    void validate() const {
        if (!(p_low >= 0.0 && p_high <= 100.0 && p_low < p_high))
            throw DomainError("percentile norm: need 0 <= p_low < p_high <= 100");
    }
};

struct FixedRangeSpec {
    double min_val = 0.0;
    double max_val = 3000.0;

    void validate() const {
        if (!(max_val >= min_val))
            throw DomainError("fixed range norm: max_val must be >= min_val");
    }
};

struct NormResult {
    ImageTensor image;
    std::vector<double> lo;  // per band: alpha_b, or min_val
    std::vector<double> hi;  // per band: beta_b, or max_val
    std::vector<std::string> warnings;
};

// Per-band percentile stretch to [0,1]; a band whose two percentiles
// coincide maps to all zeros.
inline NormResult percentile_normalize(const ImageTensor& img,
                                       const PercentileNormSpec& spec) {
    spec.validate();
    NormResult res;
    res.image = ImageTensor(img.height, img.width, img.channels, Domain::Unit);
    const std::size_t npix = static_cast<std::size_t>(img.height) * img.width;
    std::vector<double> band(npix);
    for (int b = 0; b < img.channels; ++b) {
        for (std::size_t i = 0; i < npix; ++i)
            band[i] = img.data[i * img.channels + b];
        const double alpha = imgmath::percentile(band, spec.p_low);
        const double beta = imgmath::percentile(band, spec.p_high);
        res.lo.push_back(alpha);
        res.hi.push_back(beta);
        if (beta == alpha) {
            res.warnings.push_back("band " + std::to_string(b) +
                                   " degenerate (beta == alpha); mapped to 0");
            for (std::size_t i = 0; i < npix; ++i)
                res.image.data[i * img.channels + b] = 0.0;
            continue;
        }
        const double inv = 1.0 / (beta - alpha);
        for (std::size_t i = 0; i < npix; ++i)
            res.image.data[i * img.channels + b] =
                std::clamp((band[i] - alpha) * inv, 0.0, 1.0);
    }
    return res;
}

inline NormResult fixed_range_normalize(const ImageTensor& img,
                                        const FixedRangeSpec& spec) {
    spec.validate();
    NormResult res;
    res.image = ImageTensor(img.height, img.width, img.channels, Domain::Unit);
    res.lo.assign(img.channels, spec.min_val);
    res.hi.assign(img.channels, spec.max_val);
    if (spec.max_val == spec.min_val) {
        res.warnings.push_back("degenerate range (max == min); mapped to 0");
        return res;
    }
    const double inv = 1.0 / (spec.max_val - spec.min_val);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        res.image.data[i] = std::clamp((img.data[i] - spec.min_val) * inv, 0.0, 1.0);
    return res;
}

}  // namespace srtk::normalize
