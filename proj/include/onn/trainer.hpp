#pragma once

#include "onn/dataset.hpp"
#include "onn/network.hpp"
#include "onn/optics.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace onn {

// hybrid: forward on the device, backward digitally.
// in_silico: digital model with the optical layer clipped like the device.
// denn: unconstrained digital twin.
enum class TrainMode { hybrid, in_silico, denn };

std::string to_string(TrainMode mode);
std::optional<TrainMode> parse_train_mode(const std::string& text);

enum class LossKind { cross_entropy, mse };

struct TrainConfig {
    long iterations = 500;
    int batch_size = 240;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double init_sigma = 0.5;
    int recalibrate_every = 50;
    int validate_every = 10;
    std::uint64_t master_seed = kDefaultMasterSeed;
    TrainMode mode = TrainMode::denn;

    void validate() const;
};

using ConfusionMatrix = std::array<std::array<long, kNumClasses>, kNumClasses>;

struct Evaluation {
    double accuracy = 0.0;
    long total = 0;
    ConfusionMatrix confusion{};  // rows = true class, cols = predicted
};

// NaN marks a quantity that was not measured at that iteration.
struct IterationRecord {
    long iteration = 0;
    double train_loss = 0.0;
    double mvm_rmse = 0.0;
    double val_accuracy = 0.0;
};

struct RunMetrics {
    std::vector<IterationRecord> history;
    double best_val_accuracy = 0.0;
    long best_iteration = 0;
    Evaluation test;
    std::optional<double> digital_test_accuracy;
    std::optional<double> device_test_accuracy;
};

struct TrainResult {
    NetworkState net;
    RunMetrics metrics;
};

// One bias-corrected Adam step followed by nothing else; the caller clips.
void adam_step(NetworkState& net, const std::vector<RealMatrix>& gradient, const TrainConfig& config);

Evaluation evaluate(const NetworkState& net, const std::vector<Sample>& samples, OpticalDevice* device,
                    long update_epoch);

// Returns the best-validation weights. Hybrid mode requires a device; the others ignore it.
TrainResult train(const Architecture& arch, const DatasetSplit& split, const TrainConfig& config,
                  OpticalDevice* device, LossKind loss = LossKind::cross_entropy);

// onn1 with MSE loss; in hybrid mode the output error is read optically.
TrainResult train_with_optical_error(const DatasetSplit& split, const TrainConfig& config, OpticalDevice* device);

// Moves digitally trained weights onto the device and evaluates the test set there.
RunMetrics transfer_to_device(const TrainResult& trained, const DatasetSplit& split, const TrainConfig& config,
                              OpticalDevice& device);

// Digital training (optical layer clipped), then transfer_to_device.
TrainResult in_silico_protocol(const Architecture& arch, const DatasetSplit& split, TrainConfig config,
                               OpticalDevice& device);

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& confusion);

}  // namespace onn
