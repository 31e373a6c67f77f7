#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foldover/errors.hpp"

namespace foldover {

/// One grayscale frame. Pixels are stored row-major; (x,y) has x growing
/// rightward along columns and y growing downward along rows.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Frame() = default;
    Frame(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    bool contains(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::size_t pixel_count() const { return data.size(); }
};

/// An ordered frame sequence with a capture rate.
struct VideoSequence {
    std::vector<Frame> frames;
    double fps = 30.0;
    std::string id;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    std::size_t frame_count() const { return frames.size(); }
};

enum class SequenceFormat {
    ImageDir,   // directory of .pgm (P5) / 8-bit .png frames, sorted by filename
    RawPlanar,  // "FOLD" header + packed frames, see load_raw_planar
};

// Default capture rate used when the source carries none.
inline constexpr double kDefaultFps = 30.0;

/// Loads a frame sequence. ImageDir sources read every .pgm/.png file in
/// lexicographic filename order; 3-channel images collapse to integer luma
/// round(0.299R + 0.587G + 0.114B). RawPlanar sources carry their own fps.
/// Throws MixedDimensionsError, EmptySequenceError, MalformedHeaderError,
/// IoFailureError.
VideoSequence load_sequence(const std::filesystem::path& path, SequenceFormat format);

/// Raw planar container: little-endian header
///   magic "FOLD" | u32 width | u32 height | u32 frame_count | u32 fps_milli
/// followed by frame_count * width * height payload bytes.
VideoSequence load_raw_planar(const std::filesystem::path& path);
void write_raw_planar(const VideoSequence& seq, const std::filesystem::path& path);

/// Writes frames as P5 PGM files named frame_000000.pgm, frame_000001.pgm, ...
void write_image_dir(const VideoSequence& seq, const std::filesystem::path& dir);

// Single-image I/O.
Frame read_pgm(const std::filesystem::path& path);
Frame read_png(const std::filesystem::path& path);
void write_pgm(const Frame& frame, const std::filesystem::path& path);

/// 16-bit P5 PGM (maxval 65535, big-endian samples); values clamp at 65535.
void write_pgm16(const std::vector<std::uint32_t>& grid, int width, int height,
                 const std::filesystem::path& path);
std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& path,
                                      int& width, int& height);

} // namespace foldover
