#include "sheepweight/cli.hpp"

#include "sheepweight/dataset.hpp"
#include "sheepweight/errors.hpp"
#include "sheepweight/evaluator.hpp"
#include "sheepweight/file_util.hpp"
#include "sheepweight/metadata.hpp"
#include "sheepweight/metrics.hpp"
#include "sheepweight/model_io.hpp"
#include "sheepweight/numeric_text.hpp"
#include "sheepweight/png_io.hpp"
#include "sheepweight/regressor.hpp"
#include "sheepweight/segmenter.hpp"
#include "sheepweight/synthgen.hpp"
#include "sheepweight/verification.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <unistd.h>

namespace fs = std::filesystem;

namespace sheepweight {
namespace {

struct SegParams {
    std::size_t size = 64;
    std::size_t epochs = 150;
    std::size_t batch = 8;
    double lr = 1e-3;
    double l2 = 1e-3;

    SegTrainConfig train_config(std::uint64_t seed) const {
        SegTrainConfig c;
        c.epochs = epochs;
        c.batch_size = batch;
        c.adam.lr = lr;
        c.adam.l2_lambda = l2;
        c.seed = seed;
        c.validate();
        return c;
    }
    std::map<std::string, std::string> snapshot(std::uint64_t seed) const {
        return {{"image_size", std::to_string(size)}, {"seg_epochs", std::to_string(epochs)},
                {"seg_batch", std::to_string(batch)}, {"seg_lr", format_double(lr)},
                {"seg_l2", format_double(l2)},         {"seed", std::to_string(seed)}};
    }
};

struct RegParams {
    std::size_t epochs = 2000;
    std::size_t batch = 8;
    double lr = 1e-3;
    double l2 = 1e-3;

    RegTrainConfig train_config(std::uint64_t seed) const {
        RegTrainConfig c;
        c.epochs = epochs;
        c.batch_size = batch;
        c.adam.lr = lr;
        c.adam.l2_lambda = l2;
        c.seed = seed;
        c.validate();
        return c;
    }
};

struct SynthArgs {
    SynthSpec spec;
    std::size_t size = 64;
    std::string out;
};

struct TrainSegArgs {
    std::string data;
    std::string out;
    std::uint64_t seed = 7;
    SegParams seg;
    bool verbose = false;
};

struct TrainRegArgs {
    std::string data;
    std::string out;
    std::string seg_model;
    std::uint64_t seed = 7;
    RegParams reg;
    bool verbose = false;
};

struct PredictArgs {
    std::string seg_model;
    std::string reg_model;
    std::string image;
    double age = 0.0;
    std::string gender;
};

struct EvaluateArgs {
    std::string data;
    std::string seg_model;
    std::string scatter = "scatter.csv";
    std::uint64_t seed = 7;
    double ratio = 0.8;
    std::size_t folds = 0;
    std::size_t seg_samples = 40;
    SegParams seg;
    RegParams reg;
};

struct GradcheckArgs {
    double h = 1e-5;
    std::size_t seeds = 20;
    std::uint64_t seed = 1;
    std::size_t entries = 12;
    std::string inject_fault;
};

fs::path manifest_path(const std::string& data) {
    const fs::path p(data);
    std::error_code ec;
    if (fs::is_directory(p, ec)) return p / kManifestName;
    if (fs::exists(p, ec)) return p;
    throw MissingInputError("dataset not found: " + data);
}

void add_seg_flags(CLI::App& cmd, SegParams& s) {
    cmd.add_option("--image-size", s.size, "Square segmenter input side (multiple of 8, >= 16)")
        ->check(CLI::Range(16, 1024));
    cmd.add_option("--seg-epochs", s.epochs, "Segmenter training epochs")->check(CLI::Range(1, 100000));
    cmd.add_option("--seg-batch", s.batch, "Segmenter minibatch size")->check(CLI::Range(1, 4096));
    cmd.add_option("--seg-lr", s.lr, "Segmenter Adam learning rate")->check(CLI::PositiveNumber);
    cmd.add_option("--seg-l2", s.l2, "Segmenter L2 coefficient")->check(CLI::NonNegativeNumber);
}

void add_reg_flags(CLI::App& cmd, RegParams& r) {
    cmd.add_option("--reg-epochs", r.epochs, "Regressor training epochs")->check(CLI::Range(1, 1000000));
    cmd.add_option("--reg-batch", r.batch, "Regressor minibatch size")->check(CLI::Range(1, 4096));
    cmd.add_option("--reg-lr", r.lr, "Regressor Adam learning rate")->check(CLI::PositiveNumber);
    cmd.add_option("--reg-l2", r.l2, "Regressor L2 coefficient")->check(CLI::NonNegativeNumber);
}

double mean_holdout_iou(const SegModel& model, std::span<const SheepRecord> records) {
    double total = 0.0;
    for (const auto& r : records) {
        const Tensor image = load_image(r.image_path);
        total += iou(segment_any_size(model, image), load_annotation_mask(*r.annotation_path));
    }
    return total / static_cast<double>(records.size());
}

template <class T>
std::vector<T> pick(std::span<const T> all, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

SegModel fit_segmenter(std::span<const SheepRecord> records, const SegParams& p, std::uint64_t seed,
                       std::ostream* log, double& final_bce) {
    const ImageSize size{p.size, p.size};
    SegModel model = build_seg_model(size, seed);
    const auto config = p.train_config(seed);
    const auto samples = load_seg_samples(records, size);
    const TrainHistory history = train_seg(model, samples, config);
    if (log) {
        for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
            *log << "epoch " << (e + 1) << " bce=" << format_double(history.epoch_loss[e]) << "\n";
        }
    }
    final_bce = history.epoch_loss.empty() ? 0.0 : history.epoch_loss.back();
    return model;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    SynthSpec spec = a.spec;
    spec.image_size = {a.size, a.size};
    spec.validate();
    const fs::path target(a.out);
    std::error_code ec;
    if (fs::exists(target, ec) && !(fs::is_directory(target, ec) && fs::is_empty(target, ec))) {
        throw ValidationError("output exists and is not an empty directory: " + a.out);
    }
    const auto samples = generate(spec);
    fs::path parent = target.parent_path();
    if (parent.empty()) parent = ".";
    fs::create_directories(parent);
    const fs::path tmp = parent / ("." + target.filename().string() + ".partial-" + std::to_string(::getpid()));
    fs::remove_all(tmp, ec);
    try {
        write_dataset(samples, tmp);
        if (fs::exists(target, ec)) fs::remove(target);
        fs::rename(tmp, target);
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }
    out << "samples=" << samples.size() << "\n";
    out << "manifest=" << (target / kManifestName).string() << "\n";
    return kExitOk;
}

int cmd_train_seg(const TrainSegArgs& a, std::ostream& out) {
    const auto records = parse_metadata(manifest_path(a.data));
    if (records.empty()) throw ValidationError("dataset has no records");
    const auto missing = missing_annotations(records);
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
        throw ValidationError("records without annotation: " + ids);
    }
    std::vector<SheepRecord> train = records;
    std::vector<SheepRecord> holdout;
    if (records.size() >= 2) {
        const SplitResult s = split(records.size(), 0.9, a.seed);
        train = pick<SheepRecord>(records, s.train);
        holdout = pick<SheepRecord>(records, s.test);
    }
    double final_bce = 0.0;
    SegModel model = fit_segmenter(train, a.seg, a.seed, a.verbose ? &out : nullptr, final_bce);
    save_model(to_container(model, a.seed, a.seg.snapshot(a.seed)), a.out);
    out << "final_bce=" << format_double(final_bce) << "\n";
    if (!holdout.empty()) {
        out << "holdout_iou=" << format_double(mean_holdout_iou(model, holdout)) << "\n";
        out << "holdout_count=" << holdout.size() << "\n";
    }
    out << "model=" << a.out << "\n";
    return kExitOk;
}

int cmd_train_reg(const TrainRegArgs& a, std::ostream& out) {
    const auto records = parse_metadata(manifest_path(a.data));
    std::vector<LabelledFeatures> rows;
    if (a.seg_model.empty()) {
        rows = annotation_features(records);
    } else {
        const SegModel seg = seg_model_from_container(load_model(a.seg_model));
        rows = featurize(records, seg);
    }
    if (rows.size() < 2) throw ValidationError("need at least two weighed records");
    std::vector<FeatureVector> x;
    std::vector<double> y;
    for (const auto& r : rows) {
        x.push_back(r.features);
        y.push_back(r.weight_kg);
    }
    RegModel model = build_regressor(a.seed);
    const TrainHistory history = train_regressor(model, x, y, a.reg.train_config(a.seed));
    if (a.verbose) {
        for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
            out << "epoch " << (e + 1) << " loss=" << format_double(history.epoch_loss[e]) << "\n";
        }
    }
    const auto pred = predict(model, x);
    const double r2 = r2_score(y, pred);
    std::map<std::string, std::string> snap{{"reg_epochs", std::to_string(a.reg.epochs)},
                                            {"reg_batch", std::to_string(a.reg.batch)},
                                            {"reg_lr", format_double(a.reg.lr)},
                                            {"reg_l2", format_double(a.reg.l2)},
                                            {"seed", std::to_string(a.seed)},
                                            {"area_source", a.seg_model.empty() ? "annotation" : "segmenter"}};
    save_model(to_container(model, a.seed, std::move(snap)), a.out);
    out << "final_loss=" << format_double(history.epoch_loss.back()) << "\n";
    out << "train_r2=" << format_double(r2) << "\n";
    out << "model=" << a.out << "\n";
    return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    if (!(a.age >= 0.0)) throw ValidationError("age must be >= 0");
    const SegModel seg = seg_model_from_container(load_model(a.seg_model));
    const RegModel reg = reg_model_from_container(load_model(a.reg_model));
    const Tensor image = load_image(a.image);
    const FeatureVector fv = extract_features(seg, image, a.age, parse_gender(a.gender));
    out << "weight_kg=" << format_double(predict(reg, fv)) << "\n";
    out << "area_px=" << format_double(fv.area) << "\n";
    return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const auto records = parse_metadata(manifest_path(a.data));
    EvalConfig config;
    config.split_ratio = a.ratio;
    config.seed = a.seed;
    config.regressor = a.reg.train_config(a.seed);
    config.validate();

    SegModel seg;
    if (!a.seg_model.empty()) {
        seg = seg_model_from_container(load_model(a.seg_model));
    } else {
        // Segmenter sees only train-split scenes.
        const SplitResult s = split(records.size(), a.ratio, a.seed);
        std::vector<std::size_t> idx = s.train;
        if (a.seg_samples > 0 && idx.size() > a.seg_samples) idx.resize(a.seg_samples);
        double final_bce = 0.0;
        seg = fit_segmenter(pick<SheepRecord>(records, idx), a.seg, a.seed, nullptr, final_bce);
        out << "seg_final_bce=" << format_double(final_bce) << "\n";
    }
    const auto rows = featurize(records, seg);
    const EvalReport report = evaluate_features(rows, config);
    std::size_t n_test = 0;
    for (const auto& r : report.rows) n_test += r.split == SplitName::test ? 1 : 0;
    out << "r2_train=" << format_double(report.r2_train) << "\n";
    out << "r2_test=" << format_double(report.r2_test) << "\n";
    out << "n_train=" << (report.rows.size() - n_test) << "\n";
    out << "n_test=" << n_test << "\n";
    out << "seed=" << report.seed << "\n";
    if (a.folds > 0) {
        const RepeatedHoldout rh = repeated_holdout(rows, config, a.folds);
        out << "folds=" << a.folds << "\n";
        out << "r2_test_mean=" << format_double(rh.mean) << "\n";
        out << "r2_test_std=" << format_double(rh.stddev) << "\n";
        out << "r2_test_over_folds=" << format_double(rh.mean) << " +/- " << format_double(rh.stddev) << "\n";
    }
    emit_scatter(report, a.scatter);
    out << "scatter=" << a.scatter << "\n";
    return kExitOk;
}

std::optional<LayerKind> parse_layer_kind(const std::string& name) {
    if (name.empty()) return std::nullopt;
    for (LayerKind k : {LayerKind::dense, LayerKind::conv2d, LayerKind::activation, LayerKind::maxpool2x2,
                        LayerKind::upsample2x}) {
        if (layer_kind_name(k) == name) return k;
    }
    throw ValidationError("unknown layer kind: " + name);
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    GradcheckSuiteOptions o;
    o.h = a.h;
    o.seeds = a.seeds;
    o.base_seed = a.seed;
    o.full_segmenter_entries = a.entries;
    o.inject_fault = parse_layer_kind(a.inject_fault);
    bool all = true;
    for (const auto& c : run_gradcheck_suite(o)) {
        all = all && c.passed;
        out << (c.passed ? "PASS " : "FAIL ") << c.name << " max_rel_error=" << format_double(c.max_rel_error)
            << " tol=" << format_double(c.tolerance) << " seeds=" << c.seeds << " entries=" << c.checked
            << " skipped=" << c.skipped;
        if (!c.passed) out << " worst=" << c.worst;
        out << "\n";
    }
    out << (all ? "gradcheck: all passed" : "gradcheck: FAILED") << "\n";
    return all ? kExitOk : kExitFailure;
}

bool flag_given(const std::vector<std::string>& args, const std::string& name) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& s) { return s == name || s.starts_with(name + "="); });
}

/// Appends `--key=value` for config-file entries not already given as flags.
std::vector<std::string> merge_config(CLI::App& app, std::vector<std::string> args) {
    CLI::App* sub = nullptr;
    for (const auto& a : args) {
        if (a.starts_with("-")) continue;
        sub = app.get_subcommand_no_throw(a);
        break;
    }
    std::optional<std::string> config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        if (args[i].starts_with("--config=")) config_path = args[i].substr(9);
    }
    if (!config_path || sub == nullptr) return args;
    for (const auto& [key, value] : parse_config_text(read_file(*config_path))) {
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr || key == "config" || key == "help") {
            throw ValidationError("config " + *config_path + ": unknown key '" + key + "' for " + sub->get_name());
        }
        if (!flag_given(args, flag)) args.push_back(flag + "=" + value);
    }
    return args;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string line = trim(text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
        ++line_no;
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
        for (const auto& [k, v] : out) {
            if (k == key) throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key " + key);
        }
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sheep weight estimation from side images, age and gender"};
    app.name("sheepweight");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    std::string config_file;
    auto config_opt = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_file, "Flat key=value file; keys are long flag names");
    };

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Write a synthetic dataset with exact masks and known weights");
    config_opt(c_synth);
    c_synth->add_option("--out", synth.out, "Output directory (must not exist or be empty)")->required();
    c_synth->add_option("--n", synth.spec.n_samples, "Number of samples")->check(CLI::Range(0, 100000));
    c_synth->add_option("--seed", synth.spec.seed, "Generator seed");
    c_synth->add_option("--size", synth.size, "Square image side in pixels")->check(CLI::Range(16, 1024));
    c_synth->add_option("--noise-std", synth.spec.weight.noise_std, "Std of weight noise in kg")
        ->check(CLI::NonNegativeNumber);
    c_synth->add_option("--c-area", synth.spec.weight.c_area, "Weight coefficient per mask pixel");
    c_synth->add_option("--c-age", synth.spec.weight.c_age, "Weight coefficient per month of age");
    c_synth->add_option("--c-gender", synth.spec.weight.c_gender, "Weight offset for males");
    c_synth->add_option("--c-bias", synth.spec.weight.c_bias, "Weight intercept");
    c_synth->add_option("--background-noise", synth.spec.background_noise, "Background texture amplitude")
        ->check(CLI::Range(0.0, 0.5));

    TrainSegArgs tseg;
    auto* c_tseg = app.add_subcommand("train-seg", "Train the segmenter on annotated records");
    config_opt(c_tseg);
    c_tseg->add_option("--data", tseg.data, "Dataset directory or manifest file")->required();
    c_tseg->add_option("--out", tseg.out, "Model file to write")->required();
    c_tseg->add_option("--seed", tseg.seed, "Seed for init, shuffling and holdout");
    add_seg_flags(*c_tseg, tseg.seg);
    c_tseg->add_flag("--verbose", tseg.verbose, "Print per-epoch loss");

    TrainRegArgs treg;
    auto* c_treg = app.add_subcommand("train-reg", "Train the weight regressor on all weighed records");
    config_opt(c_treg);
    c_treg->add_option("--data", treg.data, "Dataset directory or manifest file")->required();
    c_treg->add_option("--out", treg.out, "Model file to write")->required();
    c_treg->add_option("--seg-model", treg.seg_model, "Segmenter for areas (default: annotation masks)");
    c_treg->add_option("--seed", treg.seed, "Seed for init and shuffling");
    add_reg_flags(*c_treg, treg.reg);
    c_treg->add_flag("--verbose", treg.verbose, "Print per-epoch loss");

    PredictArgs pred;
    auto* c_pred = app.add_subcommand("predict", "Estimate the weight of one animal");
    config_opt(c_pred);
    c_pred->add_option("--seg-model", pred.seg_model, "Segmenter model file")->required();
    c_pred->add_option("--reg-model", pred.reg_model, "Regressor model file")->required();
    c_pred->add_option("--image", pred.image, "Side image (8-bit RGB PNG)")->required();
    c_pred->add_option("--age", pred.age, "Age in months")->required()->check(CLI::NonNegativeNumber);
    c_pred->add_option("--gender", pred.gender, "M or F")->required()->check(CLI::IsMember({"M", "F"}));

    EvaluateArgs eval;
    auto* c_eval = app.add_subcommand("evaluate", "Holdout evaluation of the full pipeline");
    config_opt(c_eval);
    c_eval->add_option("--data", eval.data, "Dataset directory or manifest file")->required();
    c_eval->add_option("--seg-model", eval.seg_model, "Segmenter model file (default: train one on the train split)");
    c_eval->add_option("--scatter", eval.scatter, "Scatter CSV to write");
    c_eval->add_option("--seed", eval.seed, "Split and training seed");
    c_eval->add_option("--ratio", eval.ratio, "Train fraction")->check(CLI::Range(0.0, 1.0));
    c_eval->add_option("--folds", eval.folds, "Extra repeated holdouts for mean/std of test R2 (0 = off)");
    c_eval->add_option("--seg-samples", eval.seg_samples,
                       "Train-split scenes used to fit the segmenter when none is given (0 = all)");
    add_seg_flags(*c_eval, eval.seg);
    add_reg_flags(*c_eval, eval.reg);

    GradcheckArgs gc;
    auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks of every layer and both models");
    c_gc->set_help_flag("--help", "Print this help message and exit");
    config_opt(c_gc);
    c_gc->add_option("--h", gc.h, "Central-difference step")->check(CLI::Range(1e-8, 1e-1));
    c_gc->add_option("--seeds", gc.seeds, "Random cases per check")->check(CLI::Range(1, 1000));
    c_gc->add_option("--seed", gc.seed, "Base seed");
    c_gc->add_option("--entries", gc.entries, "Sampled entries per tensor for the full segmenter (0 = all)");
    c_gc->add_option("--inject-fault", gc.inject_fault, "Corrupt analytic gradients of this layer kind")
        ->group("");

    try {
        std::vector<std::string> args = merge_config(app, raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitFailure;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitFailure;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitFailure;
    } catch (const MissingInputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }

    try {
        if (*c_synth) return cmd_synth(synth, out);
        if (*c_tseg) return cmd_train_seg(tseg, out);
        if (*c_treg) return cmd_train_reg(treg, out);
        if (*c_pred) return cmd_predict(pred, out);
        if (*c_eval) return cmd_evaluate(eval, out);
        if (*c_gc) return cmd_gradcheck(gc, out);
    } catch (const MissingInputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace sheepweight
