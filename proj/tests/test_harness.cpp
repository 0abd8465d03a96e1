#include "onn/errors.hpp"
#include "onn/harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

using namespace onn;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const OnnError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no OnnError thrown";
    return ErrorCode::Io;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("onn_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

bool have_mnist() {
    const std::string dir = default_dataset_dir();
    return !dir.empty() && fs::exists(fs::path(dir) / "train-images-idx3-ubyte");
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
    const auto c = parse("");
    EXPECT_EQ(c.training.iterations, 500);
    EXPECT_EQ(c.training.batch_size, 240);
    EXPECT_EQ(c.device.input_bits, 4);
    EXPECT_EQ(c.master_seed, kDefaultMasterSeed);
    EXPECT_EQ(c.noise_kind, NoiseKind::none);
    EXPECT_EQ(c.arch, "onn1");
    EXPECT_EQ(c.characterize_sizes.size(), 3u);
}

TEST(Config, SetsValues) {
    const auto c = parse(
        "# comment\n"
        "training.iterations = 500\n"
        "training.mode = hybrid\n"
        "experiment.arch = onn1-mse   # trailing comment\n"
        "[device]\n"
        "camera_bits = 6\n"
        "quantization_enabled = false\n"
        "[noise]\n"
        "kind = static_additive\n"
        "sigma = 0.2\n"
        "[sweep]\n"
        "sigmas = 0, 0.1,0.2\n"
        "[characterize]\n"
        "sizes = 100x10, 100x10c\n");
    EXPECT_EQ(c.training.iterations, 500);
    EXPECT_EQ(c.training.mode, TrainMode::hybrid);
    EXPECT_EQ(c.arch, "onn1-mse");
    EXPECT_EQ(c.device.camera_bits, 6);
    EXPECT_FALSE(c.device.quantization_enabled);
    EXPECT_EQ(c.noise_kind, NoiseKind::static_additive);
    EXPECT_DOUBLE_EQ(c.noise_sigma, 0.2);
    EXPECT_EQ(c.sweep_sigmas, (std::vector<double>{0.0, 0.1, 0.2}));
    ASSERT_EQ(c.characterize_sizes.size(), 2u);
    EXPECT_EQ(c.characterize_sizes[0].inputs, 100);
    EXPECT_EQ(c.characterize_sizes[0].outputs, 10);
    EXPECT_TRUE(c.characterize_sizes[1].complex);
}

TEST(Config, ParseErrorCarriesLine) {
    try {
        parse("training.iterations = 5\n\ndevice.input_bits = banana\n");
        FAIL();
    } catch (const OnnError& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    EXPECT_EQ(code_of([] { parse("just some words\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse("training.mode = sideways\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse("experiment.arch = onn9\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse("device.quantization_enabled = maybe\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse("training.iterations = 5.5\n"); }), ErrorCode::ParseError);
}

TEST(Config, UnknownKey) {
    EXPECT_EQ(code_of([] { parse("training.momentum = 0.9\n"); }), ErrorCode::UnknownKey);
}

TEST(Config, EntriesReplayExactly) {
    auto c = parse("training.learning_rate = 0.1\nnoise.sigma = 0.30000000000000004\nexperiment.master_seed = 18446744073709551615\n");
    const auto entries = config_entries(c);
    ExperimentConfig replay;
    for (const auto& [k, v] : entries) set_config_value(replay, k, v);
    EXPECT_EQ(config_entries(replay), entries);
    EXPECT_EQ(replay.noise_sigma, 0.30000000000000004);
    EXPECT_EQ(replay.master_seed, 18446744073709551615ULL);
}

TEST(Config, LoadsManifestJson) {
    const fs::path dir = scratch("manifest");
    fs::create_directories(dir);
    std::ofstream(dir / "m.json") << R"({"tool":"onn","config":{"training.iterations":"7","noise.kind":"dynamic_additive"}})";
    const auto c = load_config(dir / "m.json");
    EXPECT_EQ(c.training.iterations, 7);
    EXPECT_EQ(c.noise_kind, NoiseKind::dynamic_additive);
    std::ofstream(dir / "bad.json") << R"({"config": )";
    EXPECT_EQ(code_of([&] { load_config(dir / "bad.json"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { load_config(dir / "missing.cfg"); }), ErrorCode::Io);
}

TEST(ExitCodes, Contract) {
    EXPECT_EQ(exit_code_for(ErrorCode::ParseError), 2);
    EXPECT_EQ(exit_code_for(ErrorCode::UnknownKey), 2);
    EXPECT_EQ(exit_code_for(ErrorCode::InvalidConfig), 2);
    EXPECT_EQ(exit_code_for(ErrorCode::Io), 3);
    EXPECT_EQ(exit_code_for(ErrorCode::BadMagic), 3);
    EXPECT_EQ(exit_code_for(ErrorCode::NonFiniteLoss), 4);
}

TEST(Commands, CharacterizeWritesScatterAndManifest) {
    const fs::path out = scratch("char");
    auto c = parse("characterize.sizes = 100x10\ncharacterize.trials = 20\n");
    std::ostringstream log;
    cmd_characterize(c, out, log);
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
    const std::string csv = slurp(out / "metrics.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "matrix_rows,matrix_cols,part,ideal,measured,error");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 201);
    EXPECT_NE(log.str().find("RMSE"), std::string::npos);

    const fs::path again = scratch("char_again");
    cmd_characterize(load_config(out / "manifest.json"), again, log);
    EXPECT_EQ(slurp(again / "metrics.csv"), csv);
}

TEST(Commands, CharacterizeLosslessPrintsZeroRmse) {
    auto c = parse("device.quantization_enabled = false\ncharacterize.sizes = 100x10\ncharacterize.trials = 10\n");
    std::ostringstream log;
    cmd_characterize(c, scratch("char_lossless"), log);
    EXPECT_NE(log.str().find("RMSE 0.00000"), std::string::npos);
}

TEST(Commands, TrainRejectsBadArchAndMissingData) {
    ExperimentConfig c;
    c.arch = "onn7";
    std::ostringstream log;
    EXPECT_EQ(exit_code_for(code_of([&] { cmd_train(c, scratch("bad_arch"), log); })), 2);
    c.arch = "onn1";
    c.dataset_dir = "/nonexistent/mnist";
    EXPECT_EQ(exit_code_for(code_of([&] { cmd_train(c, scratch("no_data"), log); })), 3);
}

TEST(Commands, TrainWritesAllArtifactsAndReplays) {
    if (!have_mnist()) GTEST_SKIP() << "MNIST not available";
    const fs::path out = scratch("train");
    auto c = parse("training.iterations = 20\ntraining.mode = hybrid\nexperiment.arch = onn2\n");
    std::ostringstream log;
    cmd_train(c, out, log);
    std::set<std::string> files;
    for (const auto& e : fs::directory_iterator(out)) files.insert(e.path().filename().string());
    EXPECT_EQ(files, (std::set<std::string>{"checkpoint.txt", "confusion.csv", "manifest.json", "metrics.csv"}));
    EXPECT_NE(log.str().find("test accuracy"), std::string::npos);

    const fs::path again = scratch("train_again");
    cmd_train(load_config(out / "manifest.json"), again, log);
    EXPECT_EQ(slurp(again / "metrics.csv"), slurp(out / "metrics.csv"));
    EXPECT_EQ(slurp(again / "confusion.csv"), slurp(out / "confusion.csv"));
    EXPECT_EQ(slurp(again / "checkpoint.txt"), slurp(out / "checkpoint.txt"));
    const auto cp = load_checkpoint((out / "checkpoint.txt").string());
    EXPECT_EQ(cp.net.arch.kind, ArchKind::onn2_hybrid);
}
