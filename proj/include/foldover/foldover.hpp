#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "foldover/framestore.hpp"
#include "foldover/segmentation.hpp"
#include "foldover/tracking.hpp"

namespace foldover {

// Height-map accumulated over a track's lifetime: each cell counts summed
// intensity contributions from the locked object region, frame by frame.
struct Foldover {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> grid; // row-major, width*height
    int origin_x = 0;                // frame coordinates of grid cell (0,0)
    int origin_y = 0;
    int gamma = 0;                   // number of accumulated frames
    int track_id = 0;
    double start_x = 0.0, start_y = 0.0; // first centroid, frame coordinates
    double end_x = 0.0, end_y = 0.0;     // last centroid, frame coordinates

    std::uint32_t at(int x, int y) const {
        return grid[static_cast<std::size_t>(y) * width + x];
    }
    std::uint32_t& at(int x, int y) {
        return grid[static_cast<std::size_t>(y) * width + x];
    }
};

enum class Axis { X, Y, Z };

// Cumulative projection of the height-map solid along one axis.
// Row/column layout: axis Z keeps the height-map layout; for axes X and Y the
// row index is the in-plane coordinate (y respectively x, offset to the
// support start) and the column index is the height band.
struct Projection {
    Axis axis = Axis::Z;
    int width = 0;  // columns
    int height = 0; // rows
    std::vector<std::uint32_t> grid; // row-major
    int step = 1;
    int extent = 0; // support length along the projection axis

    std::uint32_t at(int col, int row) const {
        return grid[static_cast<std::size_t>(row) * width + col];
    }
};

struct FoldoverExtents {
    int x = 0;
    int y = 0;
    int z = 0;
};

// Zeroes every bit farther than r (Euclidean) from the given center.
BinaryMask lock_region(const BinaryMask& mask, double cx, double cy, double r);

// Keeps original pixel values where the lock bit is set, zero elsewhere.
Frame extract_object(const Frame& frame, const BinaryMask& lock);

// Sums the locked object region over every track point, in frame coordinates,
// then crops to the bounding box of the nonzero cells.
Foldover accumulate(const Track& track, const VideoSequence& video,
                    const std::vector<BinaryMask>& masks, double r);

// Rotates the grid about its mass centroid so the start-to-end direction
// becomes +X. Displacements below eps_disp leave the grid untouched. Sampling
// is inverse-mapping nearest-neighbour; total mass stays within 2%.
Foldover rotate_to_positive_x(const Foldover& f, double eps_disp = 1.0);

// Support lengths along X/Y (pixels) and Z (max cell value).
FoldoverExtents support_extents(const Foldover& f);

// Projects the solid {(x,y,z): 1 <= z <= grid(x,y)}. Axis Z returns the grid
// values directly; axes X and Y count occupied slabs of width `step` along the
// projection axis per (in-plane coordinate, height band) cell.
Projection project(const Foldover& f, Axis axis, int step);

const char* axis_name(Axis axis);

// 16-bit PGM (values clamped at 65535) plus a JSON sidecar carrying
// track_id, gamma, origin, the three support extents, and the step.
void write_foldover(const Foldover& f, const std::filesystem::path& pgm_path,
                    const std::filesystem::path& sidecar_path);
void write_projection(const Projection& p, const Foldover& source,
                      const std::filesystem::path& pgm_path,
                      const std::filesystem::path& sidecar_path);

} // namespace foldover
