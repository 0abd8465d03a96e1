#pragma once

#include "onn/optics.hpp"
#include "onn/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace onn {

struct MatrixSize {
    int inputs = 0;
    int outputs = 0;
    bool complex = false;
};

// Flat run description. Every field maps to one dotted key, e.g. "training.iterations".
struct ExperimentConfig {
    std::string name = "experiment";
    std::string arch = "onn1";  // onn1 | onn2 | onn3 | onn1-mse
    std::uint64_t master_seed = kDefaultMasterSeed;
    std::string dataset_dir;

    DeviceConfig device;
    NoiseKind noise_kind = NoiseKind::none;
    double noise_sigma = 0.0;
    TrainConfig training;

    std::vector<MatrixSize> characterize_sizes = {{100, 10, false}, {100, 25, false}, {100, 10, true}};
    int characterize_trials = 200;
    double characterize_weight_sigma = 0.5;

    std::vector<NoiseKind> sweep_kinds = {NoiseKind::static_additive, NoiseKind::static_multiplicative,
                                          NoiseKind::dynamic_additive};
    std::vector<double> sweep_sigmas = {0.0, 0.1, 0.2, 0.3, 0.5};
};

// Default dataset directory: $ONN_DATA_DIR, else the build-time default.
std::string default_dataset_dir();

// Throws UnknownKey or ParseError (line is used in the message when > 0).
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value, int line = 0);

// Canonical key -> value text for every setting; replaying it through set_config_value is exact.
std::map<std::string, std::string> config_entries(const ExperimentConfig& config);

// key = value lines, '#' comments, optional [section] headers that prefix later keys.
ExperimentConfig parse_config(std::istream& in);
// Accepts the key=value format or a manifest.json written by a previous run.
ExperimentConfig load_config(const std::filesystem::path& path);

std::string format_size(const MatrixSize& size);  // inputs x outputs: "100x10", complex "100x10c"

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

int exit_code_for(ErrorCode code);

// Each command writes manifest.json and metrics.csv into out_dir; train adds confusion.csv and checkpoint.txt.
void cmd_characterize(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_noise_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace onn
