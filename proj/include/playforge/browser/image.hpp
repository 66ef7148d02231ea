#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace playforge::browser {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    bool operator==(const Rgb&) const = default;
};

// Parses "#rrggbb".
Rgb rgb(std::string_view hex);

// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Rgb at(int x, int y) const;
    bool operator==(const Image&) const = default;
};

Image decode_png(const std::string& bytes);
std::string encode_png(const Image& image);
std::string base64_decode(std::string_view text);

// Number of pixels of exactly `color` inside [x, x+w) x [y, y+h).
long count_color(const Image& img, Rgb color, int x, int y, int w, int h);

// Pixels that differ between two equally sized images.
long diff_pixels(const Image& a, const Image& b);

}  // namespace playforge::browser
