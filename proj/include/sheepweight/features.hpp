#pragma once

#include "sheepweight/seg_mask.hpp"
#include "sheepweight/tensor.hpp"

#include <array>
#include <span>
#include <vector>

namespace sheepweight {

/// Regressor input. Column order is fixed: area, age, gender.
struct FeatureVector {
    double area = 0.0;    // foreground pixels in original-image units
    double age = 0.0;     // months
    double gender = 0.0;  // 0 female, 1 male

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr std::array<const char*, 3> kFeatureOrder{"area", "age", "gender"};

/// Standardization stats for area and age. Gender is passed through.
struct Scaler {
    std::array<double, 2> mean{0.0, 0.0};
    std::array<double, 2> stddev{0.0, 0.0};  // population std
    bool fitted = false;

    friend bool operator==(const Scaler&, const Scaler&) = default;
};

inline constexpr double kStdFloor = 1e-12;

double pixel_area(const SegMask& mask);

void validate_features(const FeatureVector& fv);

Scaler fit_scaler(std::span<const FeatureVector> train);

/// [1, 3] row (area, age scaled; gender unchanged). A std below 1e-12 maps
/// the feature to 0.
Tensor transform(const Scaler& scaler, const FeatureVector& fv);
Tensor transform(const Scaler& scaler, std::span<const FeatureVector> rows);
FeatureVector inverse_transform(const Scaler& scaler, std::span<const double> row);

}  // namespace sheepweight
