#pragma once

#include "sheepweight/features.hpp"
#include "sheepweight/metadata.hpp"
#include "sheepweight/regressor.hpp"
#include "sheepweight/segmenter.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sheepweight {

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    double ratio = 0.8;
};

/// ceil((1 - ratio) * n) test rows, at least one train row.
std::size_t test_count(std::size_t n, double ratio);

/// Seeded shuffle of 0..n-1, first test_count(n, ratio) indices go to test.
/// Both index lists are returned sorted.
SplitResult split(std::size_t n, double ratio, std::uint64_t seed);

enum class SplitName { train, test };
std::string_view split_name(SplitName s) noexcept;

struct EvalRow {
    std::string id;
    double true_kg = 0.0;
    double pred_kg = 0.0;
    SplitName split = SplitName::train;

    friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalConfig {
    double split_ratio = 0.8;
    std::uint64_t seed = 7;
    RegTrainConfig regressor{};

    void validate() const;
    std::map<std::string, std::string> snapshot() const;
};

struct EvalReport {
    double r2_train = 0.0;
    double r2_test = 0.0;
    std::vector<EvalRow> rows;  // input order
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    RegModel model;  // regressor fitted on the train split

    double train_mse_model = 0.0;
    double train_mse_mean = 0.0;  // constant train-mean predictor
};

/// Animal identity, features and target for one row.
struct LabelledFeatures {
    std::string id;
    FeatureVector features;
    double weight_kg = 0.0;
};

/// Splits, fits scaler and regressor on train rows only, predicts both splits.
EvalReport evaluate_features(std::span<const LabelledFeatures> rows, const EvalConfig& config);

/// Area of one image from the segmenter, in original-image pixels.
FeatureVector extract_features(const SegModel& seg, const Tensor& image, double age_months, Gender gender);

/// Segments each record's image, extracts features, then evaluate_features.
EvalReport evaluate_pipeline(std::span<const SheepRecord> records, const SegModel& seg, const EvalConfig& config);

std::vector<LabelledFeatures> featurize(std::span<const SheepRecord> records, const SegModel& seg);

struct RepeatedHoldout {
    std::vector<double> r2_test;
    double mean = 0.0;
    double stddev = 0.0;  // population
};

/// k independent seeded 80/20 holdouts (seeds derived from config.seed).
RepeatedHoldout repeated_holdout(std::span<const LabelledFeatures> rows, const EvalConfig& config, std::size_t folds);

/// "id,split,true_kg,pred_kg" header plus one row per animal.
std::string scatter_text(const EvalReport& report);
std::vector<EvalRow> parse_scatter(std::string_view text);
void emit_scatter(const EvalReport& report, const std::filesystem::path& path);

}  // namespace sheepweight
