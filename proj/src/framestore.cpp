#include "foldover/framestore.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <png.h>

namespace fs = std::filesystem;

namespace foldover {

namespace {

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

// PNM header token reader: skips whitespace and '#' comments.
int next_pnm_token(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw MalformedHeaderError("unexpected end of PNM header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw MalformedHeaderError("non-numeric PNM header field");
    return value;
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw MalformedHeaderError("truncated raw-planar header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

} // namespace

Frame read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailureError("cannot open " + path.string());
    char m[2];
    in.read(m, 2);
    if (!in || m[0] != 'P' || m[1] != '5')
        throw MalformedHeaderError("not a P5 PGM: " + path.string());
    int w = next_pnm_token(in);
    int h = next_pnm_token(in);
    int maxval = next_pnm_token(in);
    if (w <= 0 || h <= 0) throw MalformedHeaderError("bad PGM dimensions: " + path.string());
    if (maxval <= 0 || maxval > 255)
        throw MalformedHeaderError("PGM maxval out of 8-bit range: " + path.string());
    Frame f(w, h);
    in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
    if (static_cast<std::size_t>(in.gcount()) != f.data.size())
        throw MalformedHeaderError("truncated PGM payload: " + path.string());
    return f;
}

void write_pgm(const Frame& frame, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailureError("cannot write " + path.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.data.data()),
              static_cast<std::streamsize>(frame.data.size()));
    if (!out) throw IoFailureError("write failed: " + path.string());
}

void write_pgm16(const std::vector<std::uint32_t>& grid, int width, int height,
                 const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailureError("cannot write " + path.string());
    out << "P5\n" << width << " " << height << "\n65535\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * 2);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            std::uint32_t v = grid[static_cast<std::size_t>(y) * width + x];
            std::uint16_t s = static_cast<std::uint16_t>(std::min<std::uint32_t>(v, 65535));
            row[2 * x] = static_cast<unsigned char>(s >> 8); // big-endian per PNM
            row[2 * x + 1] = static_cast<unsigned char>(s & 0xff);
        }
        out.write(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoFailureError("write failed: " + path.string());
}

std::vector<std::uint16_t> read_pgm16(const fs::path& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailureError("cannot open " + path.string());
    char m[2];
    in.read(m, 2);
    if (!in || m[0] != 'P' || m[1] != '5')
        throw MalformedHeaderError("not a P5 PGM: " + path.string());
    width = next_pnm_token(in);
    height = next_pnm_token(in);
    int maxval = next_pnm_token(in);
    if (maxval != 65535) throw MalformedHeaderError("expected 16-bit PGM: " + path.string());
    std::vector<std::uint16_t> grid(static_cast<std::size_t>(width) * height);
    std::vector<unsigned char> raw(grid.size() * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw MalformedHeaderError("truncated PGM payload: " + path.string());
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    return grid;
}

Frame read_png(const fs::path& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.string().c_str(), "rb");
    if (!ctx.fp) throw IoFailureError("cannot open " + path.string());

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw MalformedHeaderError("not a PNG: " + path.string());

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoFailureError("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoFailureError("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png)))
        throw MalformedHeaderError("corrupt PNG: " + path.string());

    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    int depth = png_get_bit_depth(ctx.png, ctx.info);
    int color = png_get_color_type(ctx.png, ctx.info);

    if (depth == 16)
        throw MalformedHeaderError("16-bit PNG not supported: " + path.string());
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    int channels = png_get_channels(ctx.png, ctx.info);
    std::vector<unsigned char> row(png_get_rowbytes(ctx.png, ctx.info));
    Frame f(static_cast<int>(w), static_cast<int>(h));
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(ctx.png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x) {
            std::uint8_t v;
            if (channels == 1) {
                v = row[x];
            } else if (channels == 2) { // gray + alpha
                v = row[2 * x];
            } else { // RGB or RGBA: integer luma
                const unsigned char* p = &row[static_cast<std::size_t>(channels) * x];
                v = static_cast<std::uint8_t>(
                    std::lround(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]));
            }
            f.at(static_cast<int>(x), static_cast<int>(y)) = v;
        }
    }
    return f;
}

VideoSequence load_raw_planar(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailureError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FOLD", 4) != 0)
        throw MalformedHeaderError("bad magic in " + path.string());
    std::uint32_t w = read_u32le(in);
    std::uint32_t h = read_u32le(in);
    std::uint32_t count = read_u32le(in);
    std::uint32_t fps_milli = read_u32le(in);
    if (w == 0 || h == 0) throw MalformedHeaderError("zero dimensions in " + path.string());
    if (count < 2) throw EmptySequenceError("raw-planar sequence has fewer than 2 frames");
    if (fps_milli == 0) throw MalformedHeaderError("zero fps in " + path.string());

    VideoSequence seq;
    seq.fps = fps_milli / 1000.0;
    seq.id = path.stem().string();
    seq.frames.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Frame f(static_cast<int>(w), static_cast<int>(h));
        in.read(reinterpret_cast<char*>(f.data.data()),
                static_cast<std::streamsize>(f.data.size()));
        if (static_cast<std::size_t>(in.gcount()) != f.data.size())
            throw MalformedHeaderError("truncated raw-planar payload: " + path.string());
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

void write_raw_planar(const VideoSequence& seq, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailureError("cannot write " + path.string());
    out.write("FOLD", 4);
    write_u32le(out, static_cast<std::uint32_t>(seq.width()));
    write_u32le(out, static_cast<std::uint32_t>(seq.height()));
    write_u32le(out, static_cast<std::uint32_t>(seq.frame_count()));
    write_u32le(out, static_cast<std::uint32_t>(std::lround(seq.fps * 1000.0)));
    for (const Frame& f : seq.frames)
        out.write(reinterpret_cast<const char*>(f.data.data()),
                  static_cast<std::streamsize>(f.data.size()));
    if (!out) throw IoFailureError("write failed: " + path.string());
}

void write_image_dir(const VideoSequence& seq, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    char name[32];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "frame_%06zu.pgm", i);
        write_pgm(seq.frames[i], dir / name);
    }
}

VideoSequence load_sequence(const fs::path& path, SequenceFormat format) {
    if (format == SequenceFormat::RawPlanar) return load_raw_planar(path);

    if (!fs::is_directory(path))
        throw IoFailureError("not a directory: " + path.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = lower_ext(entry.path());
        if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
    }
    // Ingestion order is by filename, independent of directory enumeration.
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    if (files.size() < 2)
        throw EmptySequenceError("image dir holds fewer than 2 frames: " + path.string());

    VideoSequence seq;
    seq.fps = kDefaultFps;
    seq.id = path.filename().string();
    seq.frames.reserve(files.size());
    for (const fs::path& f : files) {
        Frame frame = lower_ext(f) == ".pgm" ? read_pgm(f) : read_png(f);
        if (!seq.frames.empty() &&
            (frame.width != seq.width() || frame.height != seq.height())) {
            throw MixedDimensionsError("frame size mismatch at " + f.string());
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

} // namespace foldover
