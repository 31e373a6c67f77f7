#include "foldover/foldover.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "foldover/errors.hpp"

namespace foldover {

BinaryMask lock_region(const BinaryMask& mask, double cx, double cy, double r) {
    BinaryMask out(mask.width, mask.height);
    const double r2 = r * r;
    for (int y = 0; y < mask.height; ++y) {
        const double dy = y - cy;
        for (int x = 0; x < mask.width; ++x) {
            const double dx = x - cx;
            if (dx * dx + dy * dy <= r2)
                out.bits[static_cast<std::size_t>(y) * mask.width + x] =
                    mask.bits[static_cast<std::size_t>(y) * mask.width + x];
        }
    }
    return out;
}

Frame extract_object(const Frame& frame, const BinaryMask& lock) {
    if (frame.width != lock.width || frame.height != lock.height)
        throw DimensionMismatchError("frame and lock mask dimensions differ");
    Frame out(frame.width, frame.height);
    for (std::size_t i = 0; i < frame.data.size(); ++i)
        out.data[i] = lock.bits[i] ? frame.data[i] : 0;
    return out;
}

Foldover accumulate(const Track& track, const VideoSequence& video,
                    const std::vector<BinaryMask>& masks, double r) {
    if (track.points.empty()) throw EmptyTrackError("cannot accumulate an empty track");
    if (masks.size() != video.frames.size())
        throw DimensionMismatchError("mask count differs from frame count");
    const int fw = video.width();
    const int fh = video.height();
    for (const BinaryMask& m : masks)
        if (m.width != fw || m.height != fh)
            throw DimensionMismatchError("mask dimensions differ from frame dimensions");
    for (const TrackPoint& p : track.points)
        if (p.frame_index < 0 || p.frame_index >= static_cast<int>(video.frames.size()))
            throw ValidationError("track references frame " + std::to_string(p.frame_index) +
                                  " outside the sequence");

    // Accumulation window: union of the per-point lock disks, clamped to frame.
    int wx0 = fw, wy0 = fh, wx1 = -1, wy1 = -1;
    for (const TrackPoint& p : track.points) {
        wx0 = std::min(wx0, static_cast<int>(std::floor(p.x - r)));
        wy0 = std::min(wy0, static_cast<int>(std::floor(p.y - r)));
        wx1 = std::max(wx1, static_cast<int>(std::ceil(p.x + r)));
        wy1 = std::max(wy1, static_cast<int>(std::ceil(p.y + r)));
    }
    wx0 = std::max(wx0, 0);
    wy0 = std::max(wy0, 0);
    wx1 = std::min(wx1, fw - 1);
    wy1 = std::min(wy1, fh - 1);
    const int ww = std::max(wx1 - wx0 + 1, 1);
    const int wh = std::max(wy1 - wy0 + 1, 1);

    std::vector<std::uint32_t> buf(static_cast<std::size_t>(ww) * wh, 0);
    const double r2 = r * r;
    for (const TrackPoint& p : track.points) {
        const Frame& frame = video.frames[p.frame_index];
        const BinaryMask& mask = masks[p.frame_index];
        const int x0 = std::max(static_cast<int>(std::floor(p.x - r)), 0);
        const int x1 = std::min(static_cast<int>(std::ceil(p.x + r)), fw - 1);
        const int y0 = std::max(static_cast<int>(std::floor(p.y - r)), 0);
        const int y1 = std::min(static_cast<int>(std::ceil(p.y + r)), fh - 1);
        for (int y = y0; y <= y1; ++y) {
            const double dy = y - p.y;
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - p.x;
                if (dx * dx + dy * dy > r2) continue;
                const std::size_t fidx = static_cast<std::size_t>(y) * fw + x;
                if (!mask.bits[fidx]) continue;
                buf[static_cast<std::size_t>(y - wy0) * ww + (x - wx0)] += frame.data[fidx];
            }
        }
    }

    // Crop to the nonzero support.
    int cx0 = ww, cy0 = wh, cx1 = -1, cy1 = -1;
    for (int y = 0; y < wh; ++y)
        for (int x = 0; x < ww; ++x)
            if (buf[static_cast<std::size_t>(y) * ww + x]) {
                cx0 = std::min(cx0, x);
                cy0 = std::min(cy0, y);
                cx1 = std::max(cx1, x);
                cy1 = std::max(cy1, y);
            }

    Foldover f;
    f.gamma = static_cast<int>(track.points.size());
    f.track_id = track.id;
    f.start_x = track.front().x;
    f.start_y = track.front().y;
    f.end_x = track.back().x;
    f.end_y = track.back().y;
    if (cx1 < 0) {
        // No nonzero contribution anywhere: keep a single zero cell.
        f.width = 1;
        f.height = 1;
        f.grid.assign(1, 0);
        f.origin_x = wx0;
        f.origin_y = wy0;
        return f;
    }
    f.width = cx1 - cx0 + 1;
    f.height = cy1 - cy0 + 1;
    f.origin_x = wx0 + cx0;
    f.origin_y = wy0 + cy0;
    f.grid.resize(static_cast<std::size_t>(f.width) * f.height);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            f.at(x, y) = buf[static_cast<std::size_t>(y + cy0) * ww + (x + cx0)];
    return f;
}

Foldover rotate_to_positive_x(const Foldover& f, double eps_disp) {
    const double dx = f.end_x - f.start_x;
    const double dy = f.end_y - f.start_y;
    if (std::sqrt(dx * dx + dy * dy) < eps_disp) return f;

    double mass = 0.0, mx = 0.0, my = 0.0;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const double v = f.at(x, y);
            mass += v;
            mx += v * x;
            my += v * y;
        }
    if (mass <= 0.0) return f;
    mx /= mass;
    my /= mass;

    const double theta = std::atan2(dy, dx);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // Rotation by -theta about (mx,my): p' = Rn (p - m) + m with
    // Rn = [[c, s], [-s, c]]; the inverse map applies [[c, -s], [s, c]].
    auto fwd = [&](double px, double py, double& ox, double& oy) {
        const double rx = px - mx, ry = py - my;
        ox = c * rx + s * ry + mx;
        oy = -s * rx + c * ry + my;
    };

    double lox = 0, loy = 0, hix = 0, hiy = 0;
    bool first = true;
    const double corners[4][2] = {{0.0, 0.0},
                                  {static_cast<double>(f.width - 1), 0.0},
                                  {0.0, static_cast<double>(f.height - 1)},
                                  {static_cast<double>(f.width - 1),
                                   static_cast<double>(f.height - 1)}};
    for (const auto& p : corners) {
        double ox, oy;
        fwd(p[0], p[1], ox, oy);
        if (first) {
            lox = hix = ox;
            loy = hiy = oy;
            first = false;
        } else {
            lox = std::min(lox, ox);
            hix = std::max(hix, ox);
            loy = std::min(loy, oy);
            hiy = std::max(hiy, oy);
        }
    }
    const int ox0 = static_cast<int>(std::floor(lox));
    const int oy0 = static_cast<int>(std::floor(loy));
    const int ow = static_cast<int>(std::ceil(hix)) - ox0 + 1;
    const int oh = static_cast<int>(std::ceil(hiy)) - oy0 + 1;

    std::vector<std::uint32_t> out(static_cast<std::size_t>(ow) * oh, 0);
    for (int j = 0; j < oh; ++j) {
        for (int i = 0; i < ow; ++i) {
            const double px = ox0 + i - mx;
            const double py = oy0 + j - my;
            const double sx = c * px - s * py + mx;
            const double sy = s * px + c * py + my;
            const int ix = static_cast<int>(std::lround(sx));
            const int iy = static_cast<int>(std::lround(sy));
            if (ix >= 0 && ix < f.width && iy >= 0 && iy < f.height)
                out[static_cast<std::size_t>(j) * ow + i] = f.at(ix, iy);
        }
    }

    // Crop the bounding grid back to the rotated support.
    int cx0 = ow, cy0 = oh, cx1 = -1, cy1 = -1;
    for (int j = 0; j < oh; ++j)
        for (int i = 0; i < ow; ++i)
            if (out[static_cast<std::size_t>(j) * ow + i]) {
                cx0 = std::min(cx0, i);
                cy0 = std::min(cy0, j);
                cx1 = std::max(cx1, i);
                cy1 = std::max(cy1, j);
            }

    Foldover g;
    g.gamma = f.gamma;
    g.track_id = f.track_id;
    double sx, sy, ex, ey;
    fwd(f.start_x - f.origin_x, f.start_y - f.origin_y, sx, sy);
    fwd(f.end_x - f.origin_x, f.end_y - f.origin_y, ex, ey);
    g.start_x = sx + f.origin_x;
    g.start_y = sy + f.origin_y;
    g.end_x = ex + f.origin_x;
    g.end_y = ey + f.origin_y;
    if (cx1 < 0) {
        g.width = 1;
        g.height = 1;
        g.grid.assign(1, 0);
        g.origin_x = f.origin_x + ox0;
        g.origin_y = f.origin_y + oy0;
        return g;
    }
    g.width = cx1 - cx0 + 1;
    g.height = cy1 - cy0 + 1;
    g.origin_x = f.origin_x + ox0 + cx0;
    g.origin_y = f.origin_y + oy0 + cy0;
    g.grid.resize(static_cast<std::size_t>(g.width) * g.height);
    for (int j = 0; j < g.height; ++j)
        for (int i = 0; i < g.width; ++i)
            g.at(i, j) = out[static_cast<std::size_t>(j + cy0) * ow + (i + cx0)];
    return g;
}

FoldoverExtents support_extents(const Foldover& f) {
    int x0 = f.width, y0 = f.height, x1 = -1, y1 = -1;
    std::uint32_t zmax = 0;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const std::uint32_t v = f.at(x, y);
            if (!v) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
            zmax = std::max(zmax, v);
        }
    FoldoverExtents e;
    if (x1 >= 0) {
        e.x = x1 - x0 + 1;
        e.y = y1 - y0 + 1;
        e.z = static_cast<int>(zmax);
    }
    return e;
}

Projection project(const Foldover& f, Axis axis, int step) {
    if (step < 1) throw ValidationError("projection step must be >= 1");
    Projection p;
    p.axis = axis;
    p.step = step;

    int x0 = f.width, y0 = f.height, x1 = -1, y1 = -1;
    std::uint32_t zmax = 0;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const std::uint32_t v = f.at(x, y);
            if (!v) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
            zmax = std::max(zmax, v);
        }

    if (axis == Axis::Z) {
        p.width = f.width;
        p.height = f.height;
        p.grid = f.grid;
        p.extent = static_cast<int>(zmax);
        return p;
    }
    if (x1 < 0) return p; // empty solid: empty projection, zero extent

    const int ext_x = x1 - x0 + 1;
    const int ext_y = y1 - y0 + 1;
    const int bands = (static_cast<int>(zmax) + step - 1) / step;

    if (axis == Axis::X) {
        // rows: y over the support; cols: height band. A cell counts the
        // x-slabs of width `step` holding at least one voxel in that band.
        p.width = bands;
        p.height = ext_y;
        p.extent = ext_x;
        p.grid.assign(static_cast<std::size_t>(bands) * ext_y, 0);
        const int slabs = (ext_x + step - 1) / step;
        for (int y = y0; y <= y1; ++y) {
            for (int sidx = 0; sidx < slabs; ++sidx) {
                std::uint32_t peak = 0;
                const int sx0 = x0 + sidx * step;
                const int sx1 = std::min(sx0 + step - 1, x1);
                for (int x = sx0; x <= sx1; ++x) peak = std::max(peak, f.at(x, y));
                if (!peak) continue;
                // Slab occupies every band up to its tallest column.
                const int top_band = (static_cast<int>(peak) - 1) / step;
                for (int b = 0; b <= top_band; ++b)
                    ++p.grid[static_cast<std::size_t>(y - y0) * bands + b];
            }
        }
        return p;
    }

    // Axis::Y — rows: x over the support; cols: height band; y-slabs counted.
    p.width = bands;
    p.height = ext_x;
    p.extent = ext_y;
    p.grid.assign(static_cast<std::size_t>(bands) * ext_x, 0);
    const int slabs = (ext_y + step - 1) / step;
    for (int x = x0; x <= x1; ++x) {
        for (int sidx = 0; sidx < slabs; ++sidx) {
            std::uint32_t peak = 0;
            const int sy0 = y0 + sidx * step;
            const int sy1 = std::min(sy0 + step - 1, y1);
            for (int y = sy0; y <= sy1; ++y) peak = std::max(peak, f.at(x, y));
            if (!peak) continue;
            const int top_band = (static_cast<int>(peak) - 1) / step;
            for (int b = 0; b <= top_band; ++b)
                ++p.grid[static_cast<std::size_t>(x - x0) * bands + b];
        }
    }
    return p;
}

const char* axis_name(Axis axis) {
    switch (axis) {
        case Axis::X: return "x";
        case Axis::Y: return "y";
        default: return "z";
    }
}

namespace {

void write_sidecar(const Foldover& f, int step, const std::filesystem::path& path) {
    const FoldoverExtents e = support_extents(f);
    nlohmann::json j;
    j["track_id"] = f.track_id;
    j["gamma"] = f.gamma;
    j["origin"] = {f.origin_x, f.origin_y};
    j["extent_x"] = e.x;
    j["extent_y"] = e.y;
    j["extent_z"] = e.z;
    j["step"] = step;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailureError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

} // namespace

void write_foldover(const Foldover& f, const std::filesystem::path& pgm_path,
                    const std::filesystem::path& sidecar_path) {
    write_pgm16(f.grid, f.width, f.height, pgm_path);
    write_sidecar(f, 1, sidecar_path);
}

void write_projection(const Projection& p, const Foldover& source,
                      const std::filesystem::path& pgm_path,
                      const std::filesystem::path& sidecar_path) {
    if (p.grid.empty()) {
        // Degenerate solid: keep the artifact readable as a 1x1 zero image.
        write_pgm16(std::vector<std::uint32_t>{0}, 1, 1, pgm_path);
    } else {
        write_pgm16(p.grid, p.width, p.height, pgm_path);
    }
    write_sidecar(source, p.step, sidecar_path);
}

} // namespace foldover
