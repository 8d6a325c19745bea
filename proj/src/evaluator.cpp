#include "sheepweight/evaluator.hpp"

#include "sheepweight/errors.hpp"
#include "sheepweight/file_util.hpp"
#include "sheepweight/metrics.hpp"
#include "sheepweight/numeric_text.hpp"
#include "sheepweight/png_io.hpp"
#include "sheepweight/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sheepweight {

std::size_t test_count(std::size_t n, double ratio) {
    // The 1e-9 slack absorbs representation error such as (1 - 0.7) * 10 = 3.0000000000000004.
    const double raw = (1.0 - ratio) * static_cast<double>(n);
    auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    count = std::max<std::size_t>(count, 1);
    return std::min(count, n - 1);
}

SplitResult split(std::size_t n, double ratio, std::uint64_t seed) {
    if (n < 2) throw ValidationError("split needs at least 2 rows, got " + std::to_string(n));
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split ratio must be in (0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SplitMix64 rng(seed);
    rng.shuffle(idx);
    const std::size_t n_test = test_count(n, ratio);
    SplitResult out;
    out.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.train.begin(), out.train.end());
    out.seed = seed;
    out.ratio = ratio;
    return out;
}

std::string_view split_name(SplitName s) noexcept {
    return s == SplitName::train ? "train" : "test";
}

void EvalConfig::validate() const {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ValidationError("split ratio must be in (0, 1)");
    regressor.validate();
}

std::map<std::string, std::string> EvalConfig::snapshot() const {
    return {
        {"split_ratio", format_double(split_ratio)},
        {"seed", std::to_string(seed)},
        {"reg_epochs", std::to_string(regressor.epochs)},
        {"reg_batch", std::to_string(regressor.batch_size)},
        {"reg_lr", format_double(regressor.adam.lr)},
        {"reg_l2", format_double(regressor.adam.l2_lambda)},
        {"reg_seed", std::to_string(regressor.seed)},
    };
}

EvalReport evaluate_features(std::span<const LabelledFeatures> rows, const EvalConfig& config) {
    config.validate();
    const SplitResult parts = split(rows.size(), config.split_ratio, config.seed);

    std::vector<FeatureVector> train_x;
    std::vector<double> train_y;
    for (std::size_t i : parts.train) {
        train_x.push_back(rows[i].features);
        train_y.push_back(rows[i].weight_kg);
    }
    EvalReport report;
    report.model = build_regressor(config.regressor.seed);
    train_regressor(report.model, train_x, train_y, config.regressor);

    std::vector<FeatureVector> all_x;
    all_x.reserve(rows.size());
    for (const auto& r : rows) all_x.push_back(r.features);
    const std::vector<double> preds = predict(report.model, all_x);

    report.rows.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        report.rows[i] = {rows[i].id, rows[i].weight_kg, preds[i], SplitName::train};
    }
    for (std::size_t i : parts.test) report.rows[i].split = SplitName::test;

    auto r2_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<double> y, f;
        for (std::size_t i : idx) {
            y.push_back(rows[i].weight_kg);
            f.push_back(preds[i]);
        }
        return r2_score(y, f);
    };
    report.r2_train = r2_of(parts.train);
    report.r2_test = r2_of(parts.test);

    std::vector<double> train_pred;
    for (std::size_t i : parts.train) train_pred.push_back(preds[i]);
    const double mean = std::accumulate(train_y.begin(), train_y.end(), 0.0) / static_cast<double>(train_y.size());
    report.train_mse_model = mse(train_pred, train_y).value;
    report.train_mse_mean = mse(std::vector<double>(train_y.size(), mean), train_y).value;

    report.config = config.snapshot();
    report.seed = config.seed;
    return report;
}

FeatureVector extract_features(const SegModel& seg, const Tensor& image, double age_months, Gender gender) {
    return {pixel_area(segment_any_size(seg, image)), age_months, gender_feature(gender)};
}

std::vector<LabelledFeatures> featurize(std::span<const SheepRecord> records, const SegModel& seg) {
    std::string missing;
    for (const SheepRecord& r : records) {
        if (!r.weight_kg) missing += (missing.empty() ? "" : ", ") + r.id;
    }
    if (!missing.empty()) throw ValidationError("records without a weight: " + missing);
    std::vector<LabelledFeatures> rows;
    rows.reserve(records.size());
    for (const SheepRecord& r : records) {
        rows.push_back({r.id, extract_features(seg, load_image(r.image_path), r.age_months, r.gender), *r.weight_kg});
    }
    return rows;
}

EvalReport evaluate_pipeline(std::span<const SheepRecord> records, const SegModel& seg, const EvalConfig& config) {
    const auto rows = featurize(records, seg);
    return evaluate_features(rows, config);
}

RepeatedHoldout repeated_holdout(std::span<const LabelledFeatures> rows, const EvalConfig& config, std::size_t folds) {
    if (folds < 1) throw ValidationError("folds must be >= 1");
    RepeatedHoldout out;
    for (std::size_t k = 0; k < folds; ++k) {
        EvalConfig cfg = config;
        cfg.seed = derive_seed(config.seed, k);
        out.r2_test.push_back(evaluate_features(rows, cfg).r2_test);
    }
    const double n = static_cast<double>(folds);
    out.mean = std::accumulate(out.r2_test.begin(), out.r2_test.end(), 0.0) / n;
    double var = 0.0;
    for (double r : out.r2_test) var += (r - out.mean) * (r - out.mean);
    out.stddev = std::sqrt(var / n);
    return out;
}

std::string scatter_text(const EvalReport& report) {
    std::string out = "id,split,true_kg,pred_kg\n";
    for (const EvalRow& r : report.rows) {
        if (r.id.find_first_of(",\n") != std::string::npos) {
            throw ValidationError("scatter: id '" + r.id + "' contains a comma or newline");
        }
        out += r.id + "," + std::string(split_name(r.split)) + "," + format_double(r.true_kg) + "," +
               format_double(r.pred_kg) + "\n";
    }
    return out;
}

std::vector<EvalRow> parse_scatter(std::string_view text) {
    std::vector<EvalRow> rows;
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != "id,split,true_kg,pred_kg") throw FormatError("scatter: bad header");
            continue;
        }
        std::vector<std::string_view> f;
        std::size_t s = 0;
        for (;;) {
            const std::size_t c = line.find(',', s);
            f.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
            if (c == std::string_view::npos) break;
            s = c + 1;
        }
        if (f.size() != 4) throw FormatError("scatter line " + std::to_string(line_no) + ": expected 4 fields");
        EvalRow r;
        r.id = std::string(f[0]);
        if (f[1] == "train") {
            r.split = SplitName::train;
        } else if (f[1] == "test") {
            r.split = SplitName::test;
        } else {
            throw FormatError("scatter line " + std::to_string(line_no) + ": bad split");
        }
        r.true_kg = parse_double(f[2], "true_kg");
        r.pred_kg = parse_double(f[3], "pred_kg");
        rows.push_back(std::move(r));
    }
    if (line_no == 0) throw FormatError("scatter: empty file");
    return rows;
}

void emit_scatter(const EvalReport& report, const std::filesystem::path& path) {
    write_file_atomic(path, scatter_text(report));
}

}  // namespace sheepweight
