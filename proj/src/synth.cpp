#include "rotdef/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rotdef/rng.hpp"

namespace rotdef {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Pt {
    double x = 0.0;
    double y = 0.0;  // y grows downward
};

using Stroke = std::vector<Pt>;

void append_bezier(Stroke& s, Pt p0, Pt p1, Pt p2, int segments = 8) {
    const bool fresh = s.empty();
    for (int i = fresh ? 0 : 1; i <= segments; ++i) {
        const double t = static_cast<double>(i) / segments;
        const double u = 1.0 - t;
        s.push_back({u * u * p0.x + 2 * u * t * p1.x + t * t * p2.x,
                     u * u * p0.y + 2 * u * t * p1.y + t * t * p2.y});
    }
}

void append_arc(Stroke& s, double cx, double cy, double rx, double ry, double deg0, double deg1,
                int segments = 14) {
    const bool fresh = s.empty();
    for (int i = fresh ? 0 : 1; i <= segments; ++i) {
        const double a = (deg0 + (deg1 - deg0) * i / segments) * kPi / 180.0;
        s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
}

// Per-digit writing styles; skeletons live in the unit square, y downward.
constexpr int kStyleVariants[10] = {2, 3, 3, 2, 2, 2, 2, 3, 2, 2};

std::vector<Stroke> digit_skeleton(int digit, int variant) {
    std::vector<Stroke> strokes;
    switch (digit) {
        case 0: {
            Stroke s;
            if (variant == 0) {
                append_arc(s, 0.50, 0.50, 0.26, 0.38, -90, 270, 22);
            } else {
                append_arc(s, 0.50, 0.50, 0.20, 0.40, -90, 270, 22);
            }
            strokes.push_back(std::move(s));
            break;
        }
        case 1: {
            if (variant == 0) {
                strokes.push_back({{0.34, 0.24}, {0.54, 0.08}, {0.54, 0.92}});
            } else if (variant == 1) {
                strokes.push_back({{0.36, 0.26}, {0.52, 0.08}, {0.52, 0.92}});
                strokes.push_back({{0.38, 0.92}, {0.68, 0.92}});
            } else {
                strokes.push_back({{0.52, 0.10}, {0.52, 0.92}});
            }
            break;
        }
        case 2: {
            Stroke s;
            if (variant == 0) {
                append_bezier(s, {0.26, 0.30}, {0.50, 0.02}, {0.73, 0.30});
                append_bezier(s, {0.73, 0.30}, {0.76, 0.55}, {0.45, 0.70});
                s.push_back({0.25, 0.90});
                s.push_back({0.77, 0.90});
            } else if (variant == 1) {
                append_bezier(s, {0.27, 0.28}, {0.52, 0.02}, {0.72, 0.28});
                append_bezier(s, {0.72, 0.28}, {0.72, 0.50}, {0.46, 0.66});
                append_bezier(s, {0.46, 0.66}, {0.18, 0.86}, {0.34, 0.90});
                s.push_back({0.76, 0.88});
            } else {
                append_bezier(s, {0.28, 0.26}, {0.52, 0.04}, {0.70, 0.26});
                s.push_back({0.26, 0.90});
                s.push_back({0.76, 0.90});
            }
            strokes.push_back(std::move(s));
            break;
        }
        case 3: {
            if (variant == 0) {
                Stroke s;
                append_arc(s, 0.45, 0.29, 0.21, 0.21, -140, 90, 12);
                append_arc(s, 0.45, 0.70, 0.24, 0.21, -90, 140, 12);
                strokes.push_back(std::move(s));
            } else {
                strokes.push_back({{0.28, 0.10}, {0.70, 0.10}, {0.48, 0.38}});
                Stroke bowl;
                append_arc(bowl, 0.46, 0.66, 0.24, 0.23, -80, 140, 14);
                strokes.push_back(std::move(bowl));
            }
            break;
        }
        case 4: {
            if (variant == 0) {
                strokes.push_back({{0.58, 0.08}, {0.22, 0.60}, {0.80, 0.60}});
                strokes.push_back({{0.64, 0.34}, {0.64, 0.92}});
            } else {
                strokes.push_back({{0.32, 0.08}, {0.26, 0.52}, {0.78, 0.52}});
                strokes.push_back({{0.62, 0.10}, {0.62, 0.92}});
            }
            break;
        }
        case 5: {
            Stroke s;
            if (variant == 0) {
                s.push_back({0.72, 0.10});
                s.push_back({0.32, 0.10});
                s.push_back({0.28, 0.45});
                append_bezier(s, {0.28, 0.45}, {0.78, 0.38}, {0.70, 0.70});
                append_bezier(s, {0.70, 0.70}, {0.55, 0.95}, {0.24, 0.80});
            } else {
                s.push_back({0.70, 0.10});
                s.push_back({0.30, 0.10});
                s.push_back({0.28, 0.42});
                append_arc(s, 0.46, 0.64, 0.25, 0.23, -115, 150, 14);
            }
            strokes.push_back(std::move(s));
            break;
        }
        case 6: {
            Stroke s;
            if (variant == 0) {
                append_bezier(s, {0.62, 0.06}, {0.35, 0.18}, {0.28, 0.50});
                append_arc(s, 0.48, 0.67, 0.21, 0.21, 180, 540, 18);
            } else {
                s.push_back({0.58, 0.06});
                s.push_back({0.35, 0.42});
                append_arc(s, 0.47, 0.66, 0.21, 0.22, 160, 520, 18);
            }
            strokes.push_back(std::move(s));
            break;
        }
        case 7: {
            if (variant == 0) {
                strokes.push_back({{0.24, 0.12}, {0.76, 0.12}, {0.44, 0.92}});
            } else if (variant == 1) {
                strokes.push_back({{0.24, 0.12}, {0.76, 0.12}, {0.46, 0.92}});
                strokes.push_back({{0.34, 0.50}, {0.64, 0.50}});
            } else {
                Stroke s;
                s.push_back({0.26, 0.14});
                s.push_back({0.76, 0.12});
                append_bezier(s, {0.76, 0.12}, {0.52, 0.42}, {0.42, 0.92});
                strokes.push_back(std::move(s));
            }
            break;
        }
        case 8: {
            Stroke top, bottom;
            if (variant == 0) {
                append_arc(top, 0.50, 0.30, 0.18, 0.19, -90, 270, 16);
                append_arc(bottom, 0.50, 0.69, 0.22, 0.21, -90, 270, 16);
            } else {
                append_arc(top, 0.51, 0.28, 0.15, 0.16, -90, 270, 16);
                append_arc(bottom, 0.49, 0.68, 0.24, 0.22, -90, 270, 16);
            }
            strokes.push_back(std::move(top));
            strokes.push_back(std::move(bottom));
            break;
        }
        case 9: {
            Stroke loop;
            append_arc(loop, 0.50, 0.32, 0.20, 0.21, 0, 360, 16);
            strokes.push_back(std::move(loop));
            if (variant == 0) {
                Stroke tail;
                append_bezier(tail, {0.70, 0.35}, {0.68, 0.70}, {0.48, 0.92});
                strokes.push_back(std::move(tail));
            } else {
                strokes.push_back({{0.70, 0.36}, {0.61, 0.92}});
            }
            break;
        }
        default:
            throw ValueError("render_digit: digit " + std::to_string(digit) + " outside 0..9");
    }
    return strokes;
}

double point_segment_distance(double px, double py, Pt a, Pt b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double wx = px - a.x, wy = py - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (a.x + t * vx);
    const double dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

struct Style {
    double jitter_sigma = 0.012;
    double rotation_deg = 0.0;
    double shear = 0.0;
    double scale_x = 1.0, scale_y = 1.0;
    double shift_x = 0.0, shift_y = 0.0;  // pixels
    double thickness = 2.0;               // pixels
    double gain = 1.0;
};

Style random_style(std::mt19937_64& rng) {
    Style s;
    s.rotation_deg = std::clamp(gaussian(rng) * 13.0, -28.0, 28.0);
    s.shear = std::clamp(gaussian(rng) * 0.10, -0.30, 0.30);
    s.scale_x = uniform_in(rng, 0.78, 1.12);
    s.scale_y = uniform_in(rng, 0.78, 1.12);
    s.shift_x = uniform_in(rng, -2.0, 2.0);
    s.shift_y = uniform_in(rng, -2.0, 2.0);
    s.thickness = uniform_in(rng, 2.0, 3.1);
    s.gain = uniform_in(rng, 0.72, 1.0);
    return s;
}

constexpr double kEdgeRamp = 1.4;  // soft pen edge, pixels

// Applies jitter + affine to skeleton points and maps them into pixel space.
std::vector<Stroke> place_strokes(std::vector<Stroke> strokes, const Style& style,
                                  std::mt19937_64& rng) {
    constexpr double kContent = 20.0;  // pixels covered by the unit square
    const double center = (static_cast<double>(kImageRows) - 1.0) / 2.0;
    const double rad = style.rotation_deg * kPi / 180.0;
    const double ca = std::cos(rad), sa = std::sin(rad);
    for (Stroke& stroke : strokes) {
        for (Pt& p : stroke) {
            double x = p.x + gaussian(rng) * style.jitter_sigma - 0.5;
            double y = p.y + gaussian(rng) * style.jitter_sigma - 0.5;
            x = (x + style.shear * y) * style.scale_x;
            y = y * style.scale_y;
            const double xr = ca * x - sa * y;
            const double yr = sa * x + ca * y;
            p.x = xr * kContent + center + style.shift_x;
            p.y = yr * kContent + center + style.shift_y;
        }
    }
    return strokes;
}

// Max-composites anti-aliased strokes of the given width and peak gain.
void splat_strokes(const std::vector<Stroke>& strokes, double thickness, double gain,
                   std::array<double, kImagePixels>& value) {
    const double margin = thickness * 0.5 + kEdgeRamp + 0.5;
    for (const Stroke& stroke : strokes) {
        for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
            const Pt a = stroke[i], b = stroke[i + 1];
            const long r_lo =
                std::max(0L, static_cast<long>(std::floor(std::min(a.y, b.y) - margin)));
            const long r_hi = std::min(static_cast<long>(kImageRows) - 1,
                                       static_cast<long>(std::ceil(std::max(a.y, b.y) + margin)));
            const long c_lo =
                std::max(0L, static_cast<long>(std::floor(std::min(a.x, b.x) - margin)));
            const long c_hi = std::min(static_cast<long>(kImageCols) - 1,
                                       static_cast<long>(std::ceil(std::max(a.x, b.x) + margin)));
            for (long r = r_lo; r <= r_hi; ++r) {
                for (long c = c_lo; c <= c_hi; ++c) {
                    const double d = point_segment_distance(static_cast<double>(c),
                                                            static_cast<double>(r), a, b);
                    const double coverage =
                        std::clamp((thickness * 0.5 + kEdgeRamp - d) / (2.0 * kEdgeRamp), 0.0, 1.0);
                    double& cell = value[static_cast<std::size_t>(r) * kImageCols +
                                         static_cast<std::size_t>(c)];
                    cell = std::max(cell, gain * coverage);
                }
            }
        }
    }
}

RawGrid rasterize(int digit, int variant, const Style& style, std::mt19937_64& rng) {
    std::array<double, kImagePixels> value{};
    splat_strokes(place_strokes(digit_skeleton(digit, variant), style, rng), style.thickness,
                  style.gain, value);

    // Faint smudge curves teach the classifier that low-amplitude ink carries
    // no digit evidence.
    const int smudge_count = uniform_unit(rng) < 0.55 ? (uniform_unit(rng) < 0.35 ? 2 : 1) : 0;
    for (int g = 0; g < smudge_count; ++g) {
        const double x0 = uniform_in(rng, 5.0, 23.0);
        const double y0 = uniform_in(rng, 5.0, 23.0);
        const double heading = uniform_in(rng, 0.0, 2.0 * kPi);
        const double length = uniform_in(rng, 3.0, 8.0);
        const Pt a{x0, y0};
        const Pt b{x0 + std::cos(heading) * length, y0 + std::sin(heading) * length};
        const Pt mid{(a.x + b.x) / 2 + gaussian(rng) * 1.2, (a.y + b.y) / 2 + gaussian(rng) * 1.2};
        Stroke curve;
        append_bezier(curve, a, mid, b, 6);
        splat_strokes({curve}, uniform_in(rng, 1.5, 2.4), uniform_in(rng, 0.08, 0.30), value);
    }

    RawGrid grid{};
    for (std::size_t i = 0; i < kImagePixels; ++i) {
        double v = value[i];
        // sparse scanner-style speckle
        if (uniform_unit(rng) < 0.02) {
            v = std::max(v, uniform_in(rng, 0.04, 0.28));
        }
        grid[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
    return grid;
}

}  // namespace

RawGrid render_digit(int digit, std::uint64_t style_seed) {
    if (digit < 0 || digit > 9) {
        throw ValueError("render_digit: digit " + std::to_string(digit) + " outside 0..9");
    }
    std::mt19937_64 rng(style_seed);
    const int variant = static_cast<int>(
        uniform_index(rng, static_cast<std::uint64_t>(kStyleVariants[digit])));
    const Style style = random_style(rng);
    return rasterize(digit, variant, style, rng);
}

SynthSet generate_synth_digits(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SynthSet set;
    set.grids.reserve(count);
    set.labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int digit = static_cast<int>(uniform_index(rng, 10));
        const int variant = static_cast<int>(
            uniform_index(rng, static_cast<std::uint64_t>(kStyleVariants[digit])));
        const Style style = random_style(rng);
        set.grids.push_back(rasterize(digit, variant, style, rng));
        set.labels.push_back(digit);
    }
    return set;
}

void write_synth_dataset(const std::string& dir, std::size_t train_count, std::size_t test_count,
                         std::uint64_t seed) {
    const std::string sep = dir.empty() || dir.back() == '/' ? "" : "/";
    const MnistFileNames names;
    const SynthSet train = generate_synth_digits(train_count, seed);
    // Disjoint stream for the test split.
    const SynthSet test = generate_synth_digits(test_count, seed ^ 0x9e3779b97f4a7c15ULL);
    write_file_bytes(dir + sep + names.train_images, serialize_idx_images(train.grids));
    write_file_bytes(dir + sep + names.train_labels, serialize_idx_labels(train.labels));
    write_file_bytes(dir + sep + names.test_images, serialize_idx_images(test.grids));
    write_file_bytes(dir + sep + names.test_labels, serialize_idx_labels(test.labels));
}

}  // namespace rotdef
