#pragma once

// PNG rendering of observable and latent fields. Time runs down the image,
// space runs across.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "lcs/array2d.hpp"
#include "lcs/errors.hpp"
#include "lcs/io.hpp"

namespace lcs::render {

struct Rgb {
    std::uint8_t r, g, b;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Categorical palette; state s gets kPalette[s % 16]. MARGIN renders black.
inline constexpr std::array<Rgb, 16> kPalette{{
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127},
    {188, 189, 34}, {23, 190, 207}, {174, 199, 232}, {255, 187, 120},
    {152, 223, 138}, {255, 152, 150}, {197, 176, 213}, {247, 182, 210},
}};
inline constexpr Rgb kMarginColor{0, 0, 0};
inline constexpr std::size_t kMaxStates = 254;

struct Image {
    std::size_t width = 0, height = 0;
    std::vector<Rgb> pixels; // row-major

    Image() = default;
    Image(std::size_t w, std::size_t h, Rgb fill = {255, 255, 255}) : width(w), height(h), pixels(w * h, fill) {}
    Rgb& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }

    void blit(const Image& src, std::size_t x0, std::size_t y0) {
        for (std::size_t y = 0; y < src.height; ++y)
            for (std::size_t x = 0; x < src.width; ++x) at(x0 + x, y0 + y) = src.at(x, y);
    }
};

inline std::size_t visible_sites(std::size_t cols, std::size_t sites) {
    return sites == 0 ? cols : std::min(cols, sites);
}

inline std::uint8_t gray_level(double v) {
    if (!(v > 0.0)) return 0;
    return static_cast<std::uint8_t>(std::min(255.0, std::floor(v * 256.0)));
}

// Values in [0,1) as gray levels; points with mask == 0 are black.
inline Image gray_image(const SpacetimeField& field, std::size_t sites = 0, const Array2D<std::uint8_t>& mask = {}) {
    Image img(visible_sites(field.cols(), sites), field.rows());
    for (std::size_t t = 0; t < img.height; ++t)
        for (std::size_t r = 0; r < img.width; ++r) {
            const auto g = (!mask.empty() && mask(t, r) == 0) ? std::uint8_t{0} : gray_level(field(t, r));
            img.at(r, t) = {g, g, g};
        }
    return img;
}

inline Image state_image(const StateField& states, std::size_t n_states, std::size_t sites = 0) {
    if (n_states > kMaxStates)
        throw ConfigError("render: " + std::to_string(n_states) + " states exceed the palette limit of " +
                          std::to_string(kMaxStates));
    Image img(visible_sites(states.cols(), sites), states.rows());
    for (std::size_t t = 0; t < img.height; ++t)
        for (std::size_t r = 0; r < img.width; ++r) {
            const auto s = states(t, r);
            img.at(r, t) = s == kMargin ? kMarginColor : kPalette[static_cast<std::size_t>(s) % kPalette.size()];
        }
    return img;
}

// Two rows of three panels separated by `gap` white pixels; each row is as
// tall as its tallest panel.
inline Image composite(const std::array<Image, 3>& top, const std::array<Image, 3>& bottom, std::size_t gap = 4) {
    auto row_height = [](const std::array<Image, 3>& row) {
        std::size_t h = 0;
        for (const auto& p : row) h = std::max(h, p.height);
        return h;
    };
    std::array<std::size_t, 3> widths{};
    for (std::size_t i = 0; i < 3; ++i) widths[i] = std::max(top[i].width, bottom[i].width);
    const std::size_t w = widths[0] + widths[1] + widths[2] + 2 * gap;
    const std::size_t top_h = row_height(top);
    Image img(w, top_h + gap + row_height(bottom));
    std::size_t x = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        img.blit(top[i], x, 0);
        img.blit(bottom[i], x, top_h + gap);
        x += widths[i] + gap;
    }
    return img;
}

inline std::string encode_png(const Image& img) {
    if (img.width == 0 || img.height == 0) throw ConfigError("render: empty image");
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    static_assert(sizeof(Rgb) == 3);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
        throw IoError(std::string("png: ") + image.message);
    std::string bytes(size, '\0');
    if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, img.pixels.data(), 0, nullptr))
        throw IoError(std::string("png: ") + image.message);
    bytes.resize(size);
    return bytes;
}

inline void save_png(const std::filesystem::path& path, const Image& img) { io::write_file(path, encode_png(img)); }

} // namespace lcs::render
