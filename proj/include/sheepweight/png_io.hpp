#pragma once

#include "sheepweight/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace sheepweight {

/// 8-bit interleaved RGB pixels, row-major.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Decodes an 8-bit RGB or RGBA PNG (alpha dropped). Other bit depths and
/// colour types are rejected with FormatError; a missing file raises
/// MissingInputError.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

/// (3,h,w) tensor of v/255.
Tensor to_tensor(const RgbImage& image);
/// Inverse of to_tensor: values are clamped to [0,1] and rounded to the
/// nearest 8-bit level.
RgbImage from_tensor(const Tensor& image);

Tensor load_image(const std::filesystem::path& path);
void save_image(const Tensor& image, const std::filesystem::path& path);

}  // namespace sheepweight
