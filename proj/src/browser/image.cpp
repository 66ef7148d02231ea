#include "playforge/browser/image.hpp"

#include <png.h>

#include <algorithm>
#include <boost/beast/core/detail/base64.hpp>

#include "playforge/error.hpp"

namespace playforge::browser {

Rgb rgb(std::string_view hex) {
    if (hex.size() != 7 || hex[0] != '#') throw std::invalid_argument("bad colour: " + std::string(hex));
    auto byte = [&](std::size_t i) {
        return static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16));
    };
    return {byte(1), byte(3), byte(5)};
}

Rgb Image::at(int x, int y) const {
    const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
}

Image decode_png(const std::string& bytes) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
        throw Error(Errc::protocol_error, std::string("screenshot is not a PNG: ") + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    Image img;
    img.width = static_cast<int>(png.width);
    img.height = static_cast<int>(png.height);
    img.data.resize(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, img.data.data(), 0, nullptr)) {
        png_image_free(&png);
        throw Error(Errc::protocol_error, std::string("PNG decode failed: ") + png.message);
    }
    return img;
}

std::string encode_png(const Image& image) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.data.data(), 0, nullptr)) {
        throw Error(Errc::protocol_error, "PNG size query failed");
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.data.data(), 0, nullptr)) {
        throw Error(Errc::protocol_error, std::string("PNG encode failed: ") + png.message);
    }
    out.resize(size);
    return out;
}

std::string base64_decode(std::string_view text) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::decoded_size(text.size()), '\0');
    const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
    if (text.find_first_not_of('=', read) != std::string_view::npos) throw Error(Errc::protocol_error, "invalid base64 payload");
    out.resize(written);
    return out;
}

long count_color(const Image& img, Rgb color, int x, int y, int w, int h) {
    long n = 0;
    const int x1 = std::min(img.width, x + w);
    const int y1 = std::min(img.height, y + h);
    for (int yy = std::max(0, y); yy < y1; ++yy) {
        for (int xx = std::max(0, x); xx < x1; ++xx) n += img.at(xx, yy) == color;
    }
    return n;
}

long diff_pixels(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) return static_cast<long>(a.width) * a.height;
    long n = 0;
    for (std::size_t i = 0; i < a.data.size(); i += 3) {
        n += a.data[i] != b.data[i] || a.data[i + 1] != b.data[i + 1] || a.data[i + 2] != b.data[i + 2];
    }
    return n;
}

}  // namespace playforge::browser
