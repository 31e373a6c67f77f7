#include "foldover/segmentation.hpp"

#include <array>
#include <cstddef>

namespace foldover {

int otsu_threshold(const Frame& frame) {
    std::array<std::int64_t, 256> hist{};
    for (std::uint8_t p : frame.data) ++hist[p];
    const double total = static_cast<double>(frame.pixel_count());

    int lo = 0, hi = 255;
    while (lo < 255 && hist[lo] == 0) ++lo;
    while (hi > 0 && hist[hi] == 0) --hi;
    if (lo == hi) return lo; // constant frame

    double sum_total = 0.0;
    for (int v = 0; v < 256; ++v) sum_total += static_cast<double>(v) * hist[v];

    int best_t = lo;
    double best_var = -1.0;
    double w0 = 0.0, sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        w0 += static_cast<double>(hist[t]);
        sum0 += static_cast<double>(t) * hist[t];
        const double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_total - sum0) / w1;
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}

BinaryMask binarize(const Frame& frame, int threshold, Polarity polarity) {
    BinaryMask mask(frame.width, frame.height);
    if (polarity == Polarity::BrightObject) {
        for (std::size_t i = 0; i < frame.data.size(); ++i)
            mask.bits[i] = frame.data[i] > threshold ? 1 : 0;
    } else {
        for (std::size_t i = 0; i < frame.data.size(); ++i)
            mask.bits[i] = frame.data[i] <= threshold ? 1 : 0;
    }
    return mask;
}

std::vector<Detection> detect(const BinaryMask& mask, int frame_index, int min_area) {
    const int w = mask.width;
    const int h = mask.height;
    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, 0);
    std::vector<Detection> out;
    std::vector<std::int32_t> stack;

    std::int32_t next_label = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!mask.bits[idx] || label[idx]) continue;
            ++next_label;
            // flood fill, 8-connectivity
            std::int64_t sum_x = 0, sum_y = 0;
            int area = 0;
            stack.clear();
            stack.push_back(static_cast<std::int32_t>(idx));
            label[idx] = next_label;
            while (!stack.empty()) {
                const std::int32_t cur = stack.back();
                stack.pop_back();
                const int cx = cur % w;
                const int cy = cur / w;
                sum_x += cx;
                sum_y += cy;
                ++area;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int ny = cy + dy;
                    if (ny < 0 || ny >= h) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = cx + dx;
                        if (nx < 0 || nx >= w) continue;
                        const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                        if (mask.bits[nidx] && !label[nidx]) {
                            label[nidx] = next_label;
                            stack.push_back(static_cast<std::int32_t>(nidx));
                        }
                    }
                }
            }
            if (area >= min_area) {
                Detection d;
                d.frame_index = frame_index;
                d.cx = static_cast<double>(sum_x) / area;
                d.cy = static_cast<double>(sum_y) / area;
                d.area = area;
                out.push_back(d);
            }
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].component_id = static_cast<int>(i) + 1;
    return out;
}

void write_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path) {
    Frame f(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) f.data[i] = mask.bits[i] ? 255 : 0;
    write_pgm(f, path);
}

BinaryMask read_mask_pgm(const std::filesystem::path& path) {
    Frame f = read_pgm(path);
    BinaryMask mask(f.width, f.height);
    for (std::size_t i = 0; i < f.data.size(); ++i) mask.bits[i] = f.data[i] ? 1 : 0;
    return mask;
}

} // namespace foldover
