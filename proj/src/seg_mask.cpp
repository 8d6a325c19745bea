#include "sheepweight/seg_mask.hpp"

#include "sheepweight/errors.hpp"

#include <algorithm>

namespace sheepweight {

SegMask::SegMask(std::size_t width, std::size_t height)
    : width_(width), height_(height), bits_(width * height, 0) {}

SegMask::SegMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
    if (bits_.size() != width_ * height_) {
        throw DimensionError("mask of " + std::to_string(width_) + "x" + std::to_string(height_) +
                             " needs " + std::to_string(width_ * height_) + " bits, got " +
                             std::to_string(bits_.size()));
    }
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t SegMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

SegMask SegMask::complement() const {
    SegMask out = *this;
    for (auto& b : out.bits_) b = b ? 0 : 1;
    return out;
}

SegMask SegMask::flipped_horizontal() const {
    SegMask out(width_, height_);
    for (std::size_t y = 0; y < height_; ++y) {
        for (std::size_t x = 0; x < width_; ++x) out.set(width_ - 1 - x, y, at(x, y));
    }
    return out;
}

SegMask SegMask::flipped_vertical() const {
    SegMask out(width_, height_);
    for (std::size_t y = 0; y < height_; ++y) {
        for (std::size_t x = 0; x < width_; ++x) out.set(x, height_ - 1 - y, at(x, y));
    }
    return out;
}

SegMask SegMask::resized_nearest(std::size_t width, std::size_t height) const {
    if (width == width_ && height == height_) return *this;
    SegMask out(width, height);
    if (width_ == 0 || height_ == 0) return out;
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t sy = std::min(height_ - 1, (y * height_ * 2 + height_) / (height * 2));
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t sx = std::min(width_ - 1, (x * width_ * 2 + width_) / (width * 2));
            out.set(x, y, at(sx, sy));
        }
    }
    return out;
}

SegMask SegMask::from_tensor(const Tensor& t, double threshold) {
    std::size_t h = 0, w = 0;
    if (t.rank() == 3 && t.dim(0) == 1) {
        h = t.dim(1);
        w = t.dim(2);
    } else if (t.rank() == 4 && t.dim(0) == 1 && t.dim(1) == 1) {
        h = t.dim(2);
        w = t.dim(3);
    } else {
        throw DimensionError("mask tensor must be (1,h,w) or (1,1,h,w), got " + shape_to_string(t.shape()));
    }
    SegMask out(w, h);
    for (std::size_t i = 0; i < t.size(); ++i) out.bits_[i] = t[i] > threshold ? 1 : 0;
    return out;
}

Tensor SegMask::to_tensor() const {
    Tensor out({1, height_, width_});
    for (std::size_t i = 0; i < bits_.size(); ++i) out[i] = bits_[i];
    return out;
}

}  // namespace sheepweight
