#include "foldover/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "foldover/errors.hpp"

namespace foldover {

namespace {

double polyline_length(const std::vector<TrackPoint>& pts) {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double dx = pts[i].x - pts[i - 1].x;
        const double dy = pts[i].y - pts[i - 1].y;
        len += std::sqrt(dx * dx + dy * dy);
    }
    return len;
}

// Solves a small linear system in place by Gaussian elimination with partial
// pivoting. a is n x n row-major, b is the right-hand side.
void solve_linear(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double diag = a[col * n + col];
        if (diag == 0.0) continue; // singular direction: leave coefficient 0
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / diag;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        double sum = b[col];
        for (int c = col + 1; c < n; ++c) sum -= a[col * n + c] * b[c];
        const double diag = a[col * n + col];
        b[col] = diag != 0.0 ? sum / diag : 0.0;
    }
}

} // namespace

AveragePath fit_average_path(const Track& track) {
    AveragePath out;
    const auto& pts = track.points;
    const std::size_t n = pts.size();
    if (n < 4 || polyline_length(pts) == 0.0) {
        // Too short to fit, or the object never moved: the raw centroid path
        // is already the answer (and keeps motionless tracks exactly zero).
        out.path = pts;
        out.length = polyline_length(pts);
        return out;
    }

    // Parametric cubic in the point ordinal, scaled to [-1,1] for conditioning.
    const double scale = 2.0 / static_cast<double>(n - 1);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = static_cast<double>(i) * scale - 1.0;

    double pow_sum[7] = {0, 0, 0, 0, 0, 0, 0};
    double bx[4] = {0, 0, 0, 0};
    double by[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        double p = 1.0;
        for (int k = 0; k < 7; ++k) {
            pow_sum[k] += p;
            if (k < 4) {
                bx[k] += p * pts[i].x;
                by[k] += p * pts[i].y;
            }
            p *= u[i];
        }
    }

    std::vector<double> ax(16), ay(16), rx(bx, bx + 4), ry(by, by + 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) ax[r * 4 + c] = ay[r * 4 + c] = pow_sum[r + c];
    solve_linear(ax, rx, 4);
    solve_linear(ay, ry, 4);

    out.path.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = u[i];
        const double t2 = t * t;
        out.path[i].frame_index = pts[i].frame_index;
        out.path[i].x = rx[0] + rx[1] * t + rx[2] * t2 + rx[3] * t2 * t;
        out.path[i].y = ry[0] + ry[1] * t + ry[2] * t2 + ry[3] * t2 * t;
    }
    out.length = polyline_length(out.path);
    return out;
}

KinematicSummary kinematics(const Track& track, double extent_x, double extent_y) {
    KinematicSummary k;
    const auto& pts = track.points;
    if (pts.empty()) return k;
    const double gamma = static_cast<double>(pts.size());

    k.dist_a = polyline_length(pts);
    const double ddx = pts.back().x - pts.front().x;
    const double ddy = pts.back().y - pts.front().y;
    k.disp_b = std::sqrt(ddx * ddx + ddy * ddy);
    k.avg_path_m = fit_average_path(track).length;

    k.fps_x = extent_x / gamma;
    k.fps_y = extent_y / gamma;
    k.vcl = k.dist_a / gamma;
    k.vsl = k.disp_b / gamma;
    k.vap = k.avg_path_m / gamma;
    k.lin = k.vcl > 0.0 ? k.vsl / k.vcl : 0.0;
    k.str = k.vap > 0.0 ? k.vsl / k.vap : 0.0;
    k.wob = k.vcl > 0.0 ? k.vap / k.vcl : 0.0;
    return k;
}

DescriptorGrid conv_descriptor(const Projection& proj, int e, int passes, int d) {
    if (e < 3 || e % 2 == 0) throw ValidationError("kernel side must be odd and >= 3");
    if (passes < 1) throw ValidationError("pass count must be >= 1");
    if (d < 1) throw ValidationError("descriptor side must be >= 1");

    DescriptorGrid out;
    out.axis = proj.axis;
    out.d = d;
    out.values.assign(static_cast<std::size_t>(d) * d, 0.0);

    const int w = proj.width, h = proj.height;
    if (w <= 0 || h <= 0 || proj.grid.empty()) return out;

    std::vector<double> v(proj.grid.begin(), proj.grid.end());
    const double vmax = *std::max_element(v.begin(), v.end());
    if (vmax <= 0.0) return out;
    for (double& x : v) x /= vmax;

    const int half = e / 2;
    std::vector<double> tmp(v.size());
    for (int pass = 0; pass < passes; ++pass) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double sum = 0.0;
                int count = 0;
                for (int dy = -half; dy <= half; ++dy) {
                    const int ny = y + dy;
                    if (ny < 0 || ny >= h) continue;
                    for (int dx = -half; dx <= half; ++dx) {
                        const int nx = x + dx;
                        if (nx < 0 || nx >= w) continue;
                        sum += v[static_cast<std::size_t>(ny) * w + nx];
                        ++count;
                    }
                }
                tmp[static_cast<std::size_t>(y) * w + x] = sum / count;
            }
        }
        std::swap(v, tmp);
    }

    // Area-weighted average onto the d x d output lattice.
    const double sx = static_cast<double>(w) / d;
    const double sy = static_cast<double>(h) / d;
    for (int j = 0; j < d; ++j) {
        const double y0 = j * sy, y1 = (j + 1) * sy;
        for (int i = 0; i < d; ++i) {
            const double x0 = i * sx, x1 = (i + 1) * sx;
            double sum = 0.0;
            for (int ky = static_cast<int>(std::floor(y0)); ky < h; ++ky) {
                const double wy = std::min(y1, static_cast<double>(ky + 1)) -
                                  std::max(y0, static_cast<double>(ky));
                if (wy <= 0.0) break;
                for (int kx = static_cast<int>(std::floor(x0)); kx < w; ++kx) {
                    const double wx = std::min(x1, static_cast<double>(kx + 1)) -
                                      std::max(x0, static_cast<double>(kx));
                    if (wx <= 0.0) break;
                    sum += v[static_cast<std::size_t>(ky) * w + kx] * wx * wy;
                }
            }
            out.values[static_cast<std::size_t>(j) * d + i] = sum / (sx * sy);
        }
    }
    return out;
}

FeatureSet assemble(const KinematicSummary& kin, const DescriptorGrid& hx,
                    const DescriptorGrid& hy, const DescriptorGrid& hz) {
    if (hx.axis != Axis::X || hy.axis != Axis::Y || hz.axis != Axis::Z)
        throw AxisMismatchError("descriptor grids must arrive in X, Y, Z order");
    FeatureSet fs;
    fs.fx.axis = Axis::X;
    fs.fx.kinematic_part = {kin.fps_x};
    fs.fx.descriptor_part = hx.values;
    fs.fy.axis = Axis::Y;
    fs.fy.kinematic_part = {kin.fps_y};
    fs.fy.descriptor_part = hy.values;
    fs.fz.axis = Axis::Z;
    fs.fz.kinematic_part = {kin.dist_a,     kin.disp_b, kin.avg_path_m,
                            kin.vcl,        kin.vsl,    kin.vap,
                            kin.lin,        kin.str,    kin.wob};
    fs.fz.descriptor_part = hz.values;
    return fs;
}

char who_grade(double vcl_um_per_s) {
    if (vcl_um_per_s >= 25.0) return 'A';
    if (vcl_um_per_s > 5.0) return 'B';
    if (vcl_um_per_s > 0.0) return 'C';
    return 'D';
}

namespace {

Axis parse_axis(const std::string& s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw IoError("unknown axis in feature csv: " + s);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

void write_features_csv(const std::vector<FeatureRow>& rows,
                        const std::filesystem::path& path, bool with_labels) {
    std::size_t max_len = 0;
    for (const FeatureRow& r : rows) max_len = std::max(max_len, r.values.size());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailureError("cannot open for writing: " + path.string());
    out << "track_id,axis,len";
    if (with_labels) out << ",label";
    for (std::size_t k = 1; k <= max_len; ++k) out << ",v" << k;
    out << "\n";

    char buf[64];
    for (const FeatureRow& r : rows) {
        out << r.track_id << ',' << axis_name(r.axis) << ',' << r.values.size();
        if (with_labels) out << ',' << r.label;
        for (double v : r.values) {
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            out << ',' << buf;
        }
        for (std::size_t k = r.values.size(); k < max_len; ++k) out << ',';
        out << "\n";
    }
    if (!out) throw IoFailureError("write failed: " + path.string());
}

std::vector<FeatureRow> read_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailureError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty feature csv: " + path.string());
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "track_id" || header[1] != "axis" ||
        header[2] != "len")
        throw IoError("unexpected feature csv header in " + path.string());
    const bool with_labels = header.size() > 3 && header[3] == "label";
    const std::size_t first_value = with_labels ? 4 : 3;

    std::vector<FeatureRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() < first_value + 0 || f.size() < 3)
            throw IoError("short feature csv row at line " + std::to_string(line_no));
        FeatureRow r;
        r.track_id = std::atoi(f[0].c_str());
        r.axis = parse_axis(f[1]);
        const std::size_t len = static_cast<std::size_t>(std::atol(f[2].c_str()));
        if (with_labels) r.label = f[3];
        if (f.size() < first_value + len)
            throw IoError("feature csv row shorter than its declared length at line " +
                          std::to_string(line_no));
        r.values.resize(len);
        for (std::size_t k = 0; k < len; ++k)
            r.values[k] = std::strtod(f[first_value + k].c_str(), nullptr);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace foldover
