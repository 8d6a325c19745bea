#include "sheepweight/annotation.hpp"

#include "sheepweight/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sheepweight {

Hsv rgb_to_hsv(double r, double g, double b) noexcept {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    double hue = 0.0;
    if (delta > 0.0) {
        if (mx == r) {
            hue = 60.0 * std::fmod((g - b) / delta, 6.0);
        } else if (mx == g) {
            hue = 60.0 * ((b - r) / delta + 2.0);
        } else {
            hue = 60.0 * ((r - g) / delta + 4.0);
        }
        if (hue < 0.0) hue += 360.0;
    }
    const double saturation = mx > 0.0 ? delta / mx : 0.0;
    return {hue, saturation, mx};
}

bool OrangeWindow::contains(const Hsv& c) const noexcept {
    return c.hue >= hue_min && c.hue <= hue_max && c.saturation > saturation_min && c.value > value_min;
}

void OrangeWindow::validate() const {
    if (!(hue_min >= 0.0 && hue_min <= hue_max && hue_max <= 360.0)) {
        throw ValidationError("orange window: need 0 <= hue_min <= hue_max <= 360");
    }
    if (!(saturation_min >= 0.0 && saturation_min < 1.0 && value_min >= 0.0 && value_min < 1.0)) {
        throw ValidationError("orange window: saturation and value bounds must lie in [0, 1)");
    }
}

Tensor annotation_to_mask(const Tensor& annotated, const OrangeWindow& window) {
    require_rank(annotated, 3, "annotation_to_mask");
    if (annotated.dim(0) != 3) {
        throw DimensionError("annotation_to_mask: expected 3 channels, got " + shape_to_string(annotated.shape()));
    }
    const std::size_t h = annotated.dim(1), w = annotated.dim(2), plane = h * w;
    Tensor mask({1, h, w});
    for (std::size_t i = 0; i < plane; ++i) {
        const Hsv c = rgb_to_hsv(annotated[i], annotated[plane + i], annotated[2 * plane + i]);
        mask[i] = window.contains(c) ? 1.0 : 0.0;
    }
    return mask;
}

SegMask annotation_to_segmask(const Tensor& annotated, const OrangeWindow& window) {
    return SegMask::from_tensor(annotation_to_mask(annotated, window), 0.5);
}

}  // namespace sheepweight
