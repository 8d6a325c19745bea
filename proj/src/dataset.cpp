#include "sheepweight/dataset.hpp"

#include "sheepweight/annotation.hpp"
#include "sheepweight/errors.hpp"
#include "sheepweight/features.hpp"
#include "sheepweight/png_io.hpp"

namespace sheepweight {
namespace {

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ", ";
        out += id;
    }
    return out;
}

}  // namespace

std::vector<std::string> missing_annotations(std::span<const SheepRecord> records) {
    std::vector<std::string> ids;
    for (const auto& r : records) {
        if (!r.annotation_path) ids.push_back(r.id);
    }
    return ids;
}

SegMask load_annotation_mask(const std::filesystem::path& path) {
    return annotation_to_segmask(load_image(path));
}

std::vector<SegSample> load_seg_samples(std::span<const SheepRecord> records, ImageSize size) {
    const auto missing = missing_annotations(records);
    if (!missing.empty()) throw ValidationError("records without annotation: " + join_ids(missing));
    std::vector<SegSample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        Tensor image = load_image(r.image_path);
        SegMask mask = load_annotation_mask(*r.annotation_path);
        if (mask.width() != image.dim(2) || mask.height() != image.dim(1)) {
            throw ValidationError("record " + r.id + ": annotation size differs from image size");
        }
        if (image.dim(1) != size.height || image.dim(2) != size.width) {
            image = resize_bilinear(image, size.height, size.width);
            mask = mask.resized_nearest(size.width, size.height);
        }
        out.push_back({std::move(image), mask.to_tensor()});
    }
    return out;
}

std::vector<LabelledFeatures> annotation_features(std::span<const SheepRecord> records) {
    std::vector<std::string> no_weight;
    for (const auto& r : records) {
        if (!r.weight_kg) no_weight.push_back(r.id);
    }
    if (!no_weight.empty()) throw ValidationError("records without weight: " + join_ids(no_weight));
    const auto missing = missing_annotations(records);
    if (!missing.empty()) throw ValidationError("records without annotation: " + join_ids(missing));
    std::vector<LabelledFeatures> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const SegMask mask = load_annotation_mask(*r.annotation_path);
        out.push_back({r.id, {pixel_area(mask), r.age_months, gender_feature(r.gender)}, *r.weight_kg});
    }
    return out;
}

SegSample to_seg_sample(const SynthSample& sample) {
    return {sample.image, sample.mask.to_tensor()};
}

}  // namespace sheepweight
