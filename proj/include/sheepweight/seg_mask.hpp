#pragma once

#include "sheepweight/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sheepweight {

/// Binary sheep/background map, row-major, one byte per pixel (0 or 1).
class SegMask {
public:
    SegMask() = default;
    SegMask(std::size_t width, std::size_t height);
    SegMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return bits_.size(); }

    bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
    void set(std::size_t x, std::size_t y, bool on) { bits_[y * width_ + x] = on ? 1 : 0; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    /// Number of foreground pixels.
    std::size_t count() const noexcept;

    SegMask complement() const;
    SegMask flipped_horizontal() const;
    SegMask flipped_vertical() const;
    /// Nearest-neighbour resample to a new size.
    SegMask resized_nearest(std::size_t width, std::size_t height) const;

    /// Mask from a (1,h,w) or (1,1,h,w) tensor: pixel on iff value > threshold.
    static SegMask from_tensor(const Tensor& t, double threshold = 0.5);
    /// (1,h,w) tensor of 0/1 values.
    Tensor to_tensor() const;

    friend bool operator==(const SegMask&, const SegMask&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> bits_;
};

}  // namespace sheepweight
