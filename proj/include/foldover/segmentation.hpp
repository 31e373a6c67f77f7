#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "foldover/framestore.hpp"

namespace foldover {

/// Per-frame foreground mask, same dimensions as its source frame, bits in {0,1}.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return bits[static_cast<std::size_t>(y) * width + x];
    }
};

/// One segmented object in one frame. The centroid is the first spatial
/// moment of the component's pixels (sub-pixel, frame coordinates).
struct Detection {
    int frame_index = 0;
    double cx = 0.0;
    double cy = 0.0;
    int area = 0;
    int component_id = 0; // 1-based, raster order of the component's first pixel
};

enum class Polarity {
    BrightObject, // foreground = pixels above threshold
    DarkObject,   // foreground = pixels at or below threshold
};

/// Threshold maximizing between-class variance of the 256-bin histogram;
/// ties break toward the lower value. A constant frame returns its value.
int otsu_threshold(const Frame& frame);

/// BrightObject: bit = 1 iff p > T. DarkObject: bit = 1 iff p <= T.
BinaryMask binarize(const Frame& frame, int threshold, Polarity polarity);

/// 8-connected components of 1-bits with area >= min_area. Components are
/// numbered in raster order of their first (top-left-most) pixel.
std::vector<Detection> detect(const BinaryMask& mask, int frame_index, int min_area);

/// Mask export for visual inspection: P5 PGM with values {0,255}.
void write_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask read_mask_pgm(const std::filesystem::path& path);

} // namespace foldover
