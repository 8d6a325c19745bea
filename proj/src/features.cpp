#include "sheepweight/features.hpp"

#include "sheepweight/errors.hpp"

#include <cmath>

namespace sheepweight {
namespace {

double scale(double x, double mean, double stddev) {
    if (stddev < kStdFloor) return 0.0;
    return (x - mean) / stddev;
}

}  // namespace

double pixel_area(const SegMask& mask) {
    return static_cast<double>(mask.count());
}

void validate_features(const FeatureVector& fv) {
    if (!(fv.area >= 0.0) || !std::isfinite(fv.area)) throw ValidationError("feature area must be >= 0");
    if (!(fv.age >= 0.0) || !std::isfinite(fv.age)) throw ValidationError("feature age must be >= 0");
    if (fv.gender != 0.0 && fv.gender != 1.0) throw ValidationError("feature gender must be 0 or 1");
}

Scaler fit_scaler(std::span<const FeatureVector> train) {
    if (train.empty()) throw ValidationError("fit_scaler: no training rows");
    const double n = static_cast<double>(train.size());
    Scaler s;
    for (const FeatureVector& fv : train) {
        s.mean[0] += fv.area;
        s.mean[1] += fv.age;
    }
    s.mean[0] /= n;
    s.mean[1] /= n;
    double var_area = 0.0, var_age = 0.0;
    for (const FeatureVector& fv : train) {
        var_area += (fv.area - s.mean[0]) * (fv.area - s.mean[0]);
        var_age += (fv.age - s.mean[1]) * (fv.age - s.mean[1]);
    }
    s.stddev[0] = std::sqrt(var_area / n);
    s.stddev[1] = std::sqrt(var_age / n);
    s.fitted = true;
    return s;
}

Tensor transform(const Scaler& scaler, const FeatureVector& fv) {
    return transform(scaler, std::span<const FeatureVector>(&fv, 1));
}

Tensor transform(const Scaler& scaler, std::span<const FeatureVector> rows) {
    if (!scaler.fitted) throw ValidationError("transform: scaler is not fitted");
    Tensor out({rows.size(), 3});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.at(r, 0) = scale(rows[r].area, scaler.mean[0], scaler.stddev[0]);
        out.at(r, 1) = scale(rows[r].age, scaler.mean[1], scaler.stddev[1]);
        out.at(r, 2) = rows[r].gender;
    }
    return out;
}

FeatureVector inverse_transform(const Scaler& scaler, std::span<const double> row) {
    if (row.size() != 3) throw DimensionError("inverse_transform expects 3 values");
    auto unscale = [](double z, double mean, double stddev) {
        return stddev < kStdFloor ? mean : z * stddev + mean;
    };
    return {unscale(row[0], scaler.mean[0], scaler.stddev[0]), unscale(row[1], scaler.mean[1], scaler.stddev[1]),
            row[2]};
}

}  // namespace sheepweight
