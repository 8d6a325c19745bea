#pragma once

#include "sheepweight/seg_mask.hpp"
#include "sheepweight/tensor.hpp"

#include <array>
#include <cstdint>

namespace sheepweight {

struct Hsv {
    double hue;         // degrees in [0, 360)
    double saturation;  // [0, 1]
    double value;       // [0, 1]
};

Hsv rgb_to_hsv(double r, double g, double b) noexcept;

/// Colour window that counts as annotation paint. Hue bounds are inclusive,
/// saturation and value bounds strict.
struct OrangeWindow {
    double hue_min = 20.0;
    double hue_max = 45.0;
    double saturation_min = 0.5;
    double value_min = 0.5;

    bool contains(const Hsv& c) const noexcept;
    void validate() const;
};

/// Paint colour used when rendering annotations; sits inside the default window.
inline constexpr std::array<std::uint8_t, 3> kAnnotationOrange{255, 165, 0};

/// (3,h,w) annotation image -> (1,h,w) tensor with 1 where the pixel is orange.
Tensor annotation_to_mask(const Tensor& annotated, const OrangeWindow& window = {});
SegMask annotation_to_segmask(const Tensor& annotated, const OrangeWindow& window = {});

}  // namespace sheepweight
