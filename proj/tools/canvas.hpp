#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mifno::plot {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kRed{200, 30, 30};
inline constexpr Rgb kBlue{30, 60, 200};
inline constexpr Rgb kGrey{200, 200, 200};

/// RGB raster with (0, 0) at the top left.
class Canvas {
public:
    Canvas(std::size_t width, std::size_t height, Rgb background = kWhite);

    std::size_t width() const { return w_; }
    std::size_t height() const { return h_; }
    void set(long x, long y, Rgb c);
    void line(double x0, double y0, double x1, double y1, Rgb c);
    void rect(long x0, long y0, long x1, long y1, Rgb c);  // filled, inclusive
    void frame(long x0, long y0, long x1, long y1, Rgb c);

    /// Polyline of `values` inside the box, vertical range [lo, hi].
    void series(std::span<const double> values, long x0, long y0, long x1, long y1, double lo, double hi, Rgb c);

    void write_png(const std::filesystem::path& path) const;

private:
    std::size_t w_, h_;
    std::vector<std::uint8_t> px_;
};

/// Blue-white-red map of v in [-1, 1].
Rgb diverging(double v);

}  // namespace mifno::plot
