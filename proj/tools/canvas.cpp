#include "canvas.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "mifno/errors.hpp"

namespace mifno::plot {

Canvas::Canvas(std::size_t width, std::size_t height, Rgb background) : w_(width), h_(height), px_(width * height * 3) {
    for (std::size_t i = 0; i < w_ * h_; ++i) std::copy(background.begin(), background.end(), px_.begin() + i * 3);
}

void Canvas::set(long x, long y, Rgb c) {
    if (x < 0 || y < 0 || x >= long(w_) || y >= long(h_)) return;
    std::copy(c.begin(), c.end(), px_.begin() + (std::size_t(y) * w_ + std::size_t(x)) * 3);
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb c) {
    const int steps = int(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double t = double(i) / steps;
        set(std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), c);
    }
}

void Canvas::rect(long x0, long y0, long x1, long y1, Rgb c) {
    for (long y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
        for (long x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
}

void Canvas::frame(long x0, long y0, long x1, long y1, Rgb c) {
    line(x0, y0, x1, y0, c);
    line(x1, y0, x1, y1, c);
    line(x1, y1, x0, y1, c);
    line(x0, y1, x0, y0, c);
}

void Canvas::series(std::span<const double> values, long x0, long y0, long x1, long y1, double lo, double hi, Rgb c) {
    if (values.size() < 2 || !(hi > lo)) return;
    auto px = [&](std::size_t i) { return x0 + double(x1 - x0) * double(i) / double(values.size() - 1); };
    auto py = [&](double v) { return y1 - double(y1 - y0) * (std::clamp(v, lo, hi) - lo) / (hi - lo); };
    for (std::size_t i = 1; i < values.size(); ++i) line(px(i - 1), py(values[i - 1]), px(i), py(values[i]), c);
}

void Canvas::write_png(const std::filesystem::path& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!f) throw DataError("plot: cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("plot: libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("plot: libpng failed writing " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, png_uint_32(w_), png_uint_32(h_), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < h_; ++y) png_write_row(png, px_.data() + y * w_ * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Rgb diverging(double v) {
    v = std::clamp(v, -1.0, 1.0);
    const auto mix = [](double a, double b, double t) { return std::uint8_t(std::lround(a + (b - a) * t)); };
    if (v < 0) return {mix(255, 30, -v), mix(255, 60, -v), mix(255, 200, -v)};
    return {mix(255, 200, v), mix(255, 30, v), mix(255, 30, v)};
}

}  // namespace mifno::plot
