#include "sheepweight/cli.hpp"
#include "sheepweight/errors.hpp"
#include "sheepweight/metadata.hpp"
#include "sheepweight/model_io.hpp"
#include "sheepweight/numeric_text.hpp"

#include "unit/test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

using namespace sheepweight;
using sheepweight::testing::TempDir;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

/// key=value lines of a command's output.
std::map<std::string, std::string> fields(const std::string& text) {
    std::map<std::string, std::string> m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

std::map<std::string, std::string> tree(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[e.path().lexically_relative(dir).string()] = sheepweight::testing::slurp(e.path());
    }
    return files;
}

}  // namespace

TEST(CliConfig, ParsesFlatKeyValue) {
    const auto kv = parse_config_text("# comment\n\nseed = 9\nn=3\n");
    ASSERT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"seed", "9"}));
    EXPECT_THROW(parse_config_text("novalue\n"), ValidationError);
    EXPECT_THROW(parse_config_text("a=1\na=2\n"), ValidationError);
}

TEST(CliSynth, WritesDatasetDeterministically) {
    TempDir dir("cli");
    const CliRun a = run({"synth", "--n", "200", "--seed", "7", "--out", (dir / "d1").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    const CliRun b = run({"synth", "--n", "200", "--seed", "7", "--out", (dir / "d2").string()});
    ASSERT_EQ(b.code, 0) << b.err;
    const auto records = parse_metadata(dir / "d1" / kManifestName);
    EXPECT_EQ(records.size(), 200u);
    const auto t1 = tree(dir / "d1");
    EXPECT_EQ(t1.size(), 401u);  // 200 image pairs + manifest
    EXPECT_EQ(t1, tree(dir / "d2"));
    EXPECT_EQ(fields(a.out).at("manifest"), (dir / "d1" / kManifestName).string());
}

TEST(CliSynth, EmptyDatasetAndExistingOutput) {
    TempDir dir("cli");
    const CliRun a = run({"synth", "--n", "0", "--out", (dir / "e").string()});
    EXPECT_EQ(a.code, 0) << a.err;
    EXPECT_TRUE(parse_metadata(dir / "e" / kManifestName).empty());
    const CliRun b = run({"synth", "--n", "2", "--out", (dir / "e").string()});
    EXPECT_EQ(b.code, 1);
    EXPECT_TRUE(parse_metadata(dir / "e" / kManifestName).empty());
}

TEST(CliConfig, PrecedenceFlagsOverFileOverDefaults) {
    TempDir dir("cli");
    sheepweight::testing::spit(dir / "c.cfg", "n=3\nseed=5\n");
    ASSERT_EQ(run({"synth", "--config", (dir / "c.cfg").string(), "--out", (dir / "a").string()}).code, 0);
    EXPECT_EQ(parse_metadata(dir / "a" / kManifestName).size(), 3u);
    ASSERT_EQ(run({"synth", "--config", (dir / "c.cfg").string(), "--n", "2", "--out", (dir / "b").string()}).code, 0);
    EXPECT_EQ(parse_metadata(dir / "b" / kManifestName).size(), 2u);
    ASSERT_EQ(run({"synth", "--n", "2", "--seed", "5", "--out", (dir / "c").string()}).code, 0);
    EXPECT_EQ(tree(dir / "b"), tree(dir / "c"));
    ASSERT_EQ(run({"synth", "--n", "2", "--out", (dir / "d").string()}).code, 0);
    EXPECT_NE(tree(dir / "b"), tree(dir / "d"));  // default seed differs from the file's
}

TEST(CliConfig, UnknownKeyAndBadValuesRejected) {
    TempDir dir("cli");
    sheepweight::testing::spit(dir / "bad.cfg", "n=3\ncolour=blue\n");
    const CliRun a = run({"synth", "--config", (dir / "bad.cfg").string(), "--out", (dir / "x").string()});
    EXPECT_EQ(a.code, 1);
    EXPECT_NE(a.err.find("colour"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir / "x"));
    EXPECT_EQ(run({"synth", "--n", "-4", "--out", (dir / "y").string()}).code, 1);
    EXPECT_EQ(run({"gradcheck", "--h", "0"}).code, 1);
    EXPECT_EQ(run({"synth", "--config", (dir / "none.cfg").string(), "--out", (dir / "z").string()}).code, 2);
}

TEST(CliHelp, EverySubcommandDocumentsFlagsWithDefaults) {
    const std::map<std::string, std::vector<std::string>> expected{
        {"synth", {"--n", "[200]", "--seed", "[7]", "--noise-std", "--out"}},
        {"train-seg", {"--data", "--seg-epochs", "[150]", "--seg-batch", "[8]", "--seg-lr", "[0.001]", "--seg-l2"}},
        {"train-reg", {"--reg-epochs", "[2000]", "--reg-batch", "--reg-lr", "--reg-l2", "--seg-model"}},
        {"predict", {"--seg-model", "--reg-model", "--image", "--age", "--gender"}},
        {"evaluate", {"--ratio", "[0.8]", "--folds", "[0]", "--scatter", "--seg-epochs", "--reg-epochs"}},
        {"gradcheck", {"--h", "[1e-05]", "--seeds", "[20]"}},
    };
    for (const auto& [cmd, needles] : expected) {
        const CliRun r = run({cmd, "--help"});
        EXPECT_EQ(r.code, 0) << cmd;
        for (const auto& n : needles) EXPECT_NE(r.out.find(n), std::string::npos) << cmd << " lacks " << n;
    }
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({}).code, 1);
}

TEST(CliGradcheck, DefaultPassesAndFaultFails) {
    const CliRun ok = run({"gradcheck"});
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
    const CliRun loose = run({"gradcheck", "--h", "1e-3", "--seeds", "3"});
    EXPECT_EQ(loose.code, 0) << loose.out;
    EXPECT_NE(loose.out.find("tol=0.001"), std::string::npos);
    const CliRun bad = run({"gradcheck", "--seeds", "2", "--inject-fault", "dense"});
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.out.find("FAIL dense/linear"), std::string::npos) << bad.out;
    EXPECT_NE(bad.out.find("worst=layer0."), std::string::npos) << bad.out;
}

TEST(CliPredict, ErrorsAndExitCodes) {
    TempDir dir("cli");
    const CliRun missing = run({"predict", "--seg-model", (dir / "nope.shw").string(), "--reg-model",
                             (dir / "nope2.shw").string(), "--image", "x.png", "--age", "3", "--gender", "M"});
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("nope.shw"), std::string::npos);
    const CliRun gender = run({"predict", "--seg-model", "a", "--reg-model", "b", "--image", "c", "--age", "3",
                            "--gender", "X"});
    EXPECT_EQ(gender.code, 1);
    EXPECT_NE(gender.err.find("--gender"), std::string::npos);
}

TEST(CliTrain, CorruptManifestWritesNoModel) {
    TempDir dir("cli");
    std::filesystem::create_directories(dir / "d");
    sheepweight::testing::spit(dir / "d" / kManifestName, "s01 24 F 38.5 s01.png\ns02 oops M 40 s02.png\n");
    const CliRun a = run({"train-seg", "--data", (dir / "d").string(), "--out", (dir / "seg.shw").string()});
    EXPECT_EQ(a.code, 1);
    EXPECT_NE(a.err.find("line 2"), std::string::npos) << a.err;
    EXPECT_FALSE(std::filesystem::exists(dir / "seg.shw"));
    const CliRun b = run({"train-reg", "--data", (dir / "d").string(), "--out", (dir / "reg.shw").string()});
    EXPECT_EQ(b.code, 1);
    EXPECT_FALSE(std::filesystem::exists(dir / "reg.shw"));
    EXPECT_EQ(run({"evaluate", "--data", (dir / "absent").string()}).code, 2);
}

TEST(CliTrain, MissingAnnotationsListed) {
    TempDir dir("cli");
    ASSERT_EQ(run({"synth", "--n", "3", "--out", (dir / "d").string()}).code, 0);
    auto records = parse_metadata(dir / "d" / kManifestName);
    records[0].annotation_path.reset();
    records[2].annotation_path.reset();
    for (auto& r : records) {
        r.image_path = r.image_path.filename();
        if (r.annotation_path) r.annotation_path = r.annotation_path->filename();
    }
    sheepweight::testing::spit(dir / "d" / kManifestName, write_metadata_text(records));
    const CliRun a = run({"train-seg", "--data", (dir / "d").string(), "--out", (dir / "seg.shw").string()});
    EXPECT_EQ(a.code, 1);
    EXPECT_NE(a.err.find(records[0].id), std::string::npos) << a.err;
    EXPECT_NE(a.err.find(records[2].id), std::string::npos) << a.err;
    EXPECT_EQ(a.err.find(records[1].id), std::string::npos) << a.err;
}

TEST(CliTrain, RegressorOnExactMasksWithLinearTargets) {
    TempDir dir("cli");
    ASSERT_EQ(run({"synth", "--n", "60", "--seed", "3", "--noise-std", "0", "--out", (dir / "d").string()}).code, 0);
    const CliRun r = run({"train-reg", "--data", (dir / "d").string(), "--out", (dir / "reg.shw").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GT(parse_double(fields(r.out).at("train_r2"), "train_r2"), 0.99);
    EXPECT_NO_THROW(reg_model_from_container(load_model(dir / "reg.shw")));
    const CliRun again = run({"train-reg", "--data", (dir / "d").string(), "--out", (dir / "reg2.shw").string()});
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(sheepweight::testing::slurp(dir / "reg.shw"), sheepweight::testing::slurp(dir / "reg2.shw"));
}

TEST(CliPipeline, TrainSegThenPredictAndEvaluate) {
    TempDir dir("cli");
    ASSERT_EQ(run({"synth", "--n", "30", "--seed", "11", "--out", (dir / "d").string()}).code, 0);
    const CliRun seg = run({"train-seg", "--data", (dir / "d").string(), "--out", (dir / "seg.shw").string()});
    ASSERT_EQ(seg.code, 0) << seg.err;
    const auto f = fields(seg.out);
    EXPECT_TRUE(std::filesystem::exists(dir / "seg.shw"));
    EXPECT_LT(parse_double(f.at("final_bce"), "bce"), 0.1);
    EXPECT_GT(parse_double(f.at("holdout_iou"), "iou"), 0.8);
    EXPECT_EQ(f.at("holdout_count"), "3");

    const CliRun reg = run({"train-reg", "--data", (dir / "d").string(), "--seg-model", (dir / "seg.shw").string(),
                         "--out", (dir / "reg.shw").string()});
    ASSERT_EQ(reg.code, 0) << reg.err;

    const auto records = parse_metadata(dir / "d" / kManifestName);
    const SheepRecord& r = records.front();
    const CliRun p = run({"predict", "--seg-model", (dir / "seg.shw").string(), "--reg-model",
                       (dir / "reg.shw").string(), "--image", r.image_path.string(), "--age",
                       format_double(r.age_months), "--gender", std::string(1, gender_code(r.gender))});
    ASSERT_EQ(p.code, 0) << p.err;
    const auto pf = fields(p.out);
    EXPECT_TRUE(std::isfinite(parse_double(pf.at("weight_kg"), "w")));
    EXPECT_GT(parse_double(pf.at("area_px"), "a"), 0.0);

    const CliRun e = run({"evaluate", "--data", (dir / "d").string(), "--seg-model", (dir / "seg.shw").string(),
                       "--scatter", (dir / "s.csv").string(), "--folds", "5", "--reg-epochs", "300"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto ef = fields(e.out);
    EXPECT_TRUE(ef.contains("r2_train"));
    EXPECT_TRUE(ef.contains("r2_test"));
    EXPECT_TRUE(ef.contains("r2_test_mean"));
    EXPECT_TRUE(ef.contains("r2_test_std"));
    EXPECT_EQ(ef.at("n_test"), "6");
    const std::string scatter = sheepweight::testing::slurp(dir / "s.csv");
    EXPECT_EQ(std::count(scatter.begin(), scatter.end(), '\n'), 31);
}
