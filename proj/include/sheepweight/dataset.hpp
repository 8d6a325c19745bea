#pragma once

// Glue between on-disk records and the training APIs.

#include "sheepweight/evaluator.hpp"
#include "sheepweight/metadata.hpp"
#include "sheepweight/seg_mask.hpp"
#include "sheepweight/segmenter.hpp"
#include "sheepweight/synthgen.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sheepweight {

/// Ids of records without an annotation file, in input order.
std::vector<std::string> missing_annotations(std::span<const SheepRecord> records);

SegMask load_annotation_mask(const std::filesystem::path& path);

/// Image and annotation mask of each record at `size`. Throws
/// ValidationError naming every record that lacks an annotation.
std::vector<SegSample> load_seg_samples(std::span<const SheepRecord> records, ImageSize size);

/// Features whose area is counted on the annotation mask at original resolution.
std::vector<LabelledFeatures> annotation_features(std::span<const SheepRecord> records);

SegSample to_seg_sample(const SynthSample& sample);

}  // namespace sheepweight
