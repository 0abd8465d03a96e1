#include "onn/trainer.hpp"

#include "onn/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace onn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double x) {
    if (std::isnan(x)) return "";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::hybrid: return "hybrid";
        case TrainMode::in_silico: return "in_silico";
        case TrainMode::denn: return "denn";
    }
    return "denn";
}

std::optional<TrainMode> parse_train_mode(const std::string& text) {
    for (auto m : {TrainMode::hybrid, TrainMode::in_silico, TrainMode::denn}) {
        if (to_string(m) == text) return m;
    }
    return std::nullopt;
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw OnnError(ErrorCode::InvalidConfig, msg); };
    if (iterations < 0) fail("iterations must be >= 0");
    if (batch_size <= 0) fail("batch_size must be positive");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1 must be in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2 must be in (0,1)");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (!(init_sigma > 0.0)) fail("init_sigma must be positive");
    if (recalibrate_every <= 0) fail("recalibrate_every must be positive");
    if (validate_every <= 0) fail("validate_every must be positive");
}

void adam_step(NetworkState& net, const std::vector<RealMatrix>& gradient, const TrainConfig& config) {
    if (gradient.size() != net.weights.size()) {
        throw OnnError(ErrorCode::ShapeMismatch, "gradient list does not match the network");
    }
    if (net.first_moment.size() != net.weights.size()) net.reset_moments();
    ++net.step;
    const double t = static_cast<double>(net.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const RealMatrix& g = gradient[l];
        net.first_moment[l] = config.beta1 * net.first_moment[l] + (1.0 - config.beta1) * g;
        net.second_moment[l] = config.beta2 * net.second_moment[l] + (1.0 - config.beta2) * g.cwiseAbs2();
        net.weights[l].array() -= config.learning_rate * (net.first_moment[l].array() / c1) /
                                  ((net.second_moment[l].array() / c2).sqrt() + config.epsilon);
    }
}

Evaluation evaluate(const NetworkState& net, const std::vector<Sample>& samples, OpticalDevice* device,
                    long update_epoch) {
    Evaluation ev;
    long correct = 0;
    for (const auto& s : samples) {
        const int predicted = argmax(infer_logits(net, s.input, device, update_epoch));
        ++ev.confusion[static_cast<std::size_t>(s.label)][static_cast<std::size_t>(predicted)];
        if (predicted == s.label) ++correct;
    }
    ev.total = static_cast<long>(samples.size());
    ev.accuracy = samples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(ev.total);
    return ev;
}

TrainResult train(const Architecture& arch, const DatasetSplit& split, const TrainConfig& config,
                  OpticalDevice* device, LossKind loss) {
    config.validate();
    arch.validate();
    const bool hybrid = config.mode == TrainMode::hybrid;
    if (hybrid && !device) throw OnnError(ErrorCode::InvalidConfig, "hybrid mode needs a device");
    if (loss == LossKind::mse && arch.kind != ArchKind::onn1_linear) {
        throw OnnError(ErrorCode::InvalidConfig, "MSE training is defined for onn1 only");
    }
    if (split.train.empty()) throw OnnError(ErrorCode::InvalidConfig, "empty training set");
    OpticalDevice* dev = hybrid ? device : nullptr;
    const bool clip = config.mode != TrainMode::denn;
    const double bound = device ? device->config().clip_bound : DeviceConfig{}.clip_bound;

    const SeedStreams seeds = SeedStreams::from_master(config.master_seed);
    Rng init_rng(seeds.init);
    Rng batch_rng(seeds.batch);

    TrainResult result;
    NetworkState& net = result.net;
    net = init_network(arch, config.init_sigma, init_rng);
    if (clip) clip_optical_layers(net, bound);
    if (dev) {
        deploy(net, *dev);
        dev->recalibrate(dev->config().probe_count, 0);
    }

    RunMetrics& metrics = result.metrics;
    NetworkState best = net;
    metrics.best_val_accuracy = -1.0;

    auto validate_now = [&](long t) {
        const double acc = evaluate(net, split.validation, dev, t + 1).accuracy;
        if (acc > metrics.best_val_accuracy) {
            metrics.best_val_accuracy = acc;
            metrics.best_iteration = t;
            best = net;
        }
        return acc;
    };
    metrics.history.push_back({0, kNaN, kNaN, validate_now(0)});

    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
    for (long t = 1; t <= config.iterations; ++t) {
        const auto batch = sample_minibatch(split, batch_size, batch_rng);
        const auto layers = digital_layers(net);
        std::vector<RealMatrix> grad;
        for (const auto& w : net.weights) grad.push_back(RealMatrix::Zero(w.rows(), w.cols()));
        double loss_sum = 0.0;
        double sq_err = 0.0;
        long err_count = 0;

        for (const auto& s : batch) {
            const ForwardRecord rec = forward(net, s.input, dev, t);
            auto [sample_loss, delta] = loss == LossKind::mse ? mse_loss_and_error(rec.logits(), s.target)
                                                              : softmax_cross_entropy(rec.logits(), s.target);
            if (loss == LossKind::mse && dev) delta = dev->optical_error(s.input, s.target, t);
            const ErrorRecord err = backward(rec, net, delta);
            for (std::size_t l = 0; l < grad.size(); ++l) grad[l] += err.gradient[l];
            loss_sum += sample_loss;
            if (dev) {
                const RealVector ideal = layers[0] * s.input;
                sq_err += ((rec.pre[0] - ideal) / dev->norm_max()).squaredNorm();
                err_count += ideal.size();
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(batch.size());
        if (!std::isfinite(mean_loss)) {
            throw OnnError(ErrorCode::NonFiniteLoss, "training loss is not finite at iteration " + std::to_string(t));
        }
        for (auto& g : grad) g /= static_cast<double>(batch.size());

        adam_step(net, grad, config);
        if (clip) clip_optical_layers(net, bound);
        if (dev) {
            deploy(net, *dev);
            if (t % config.recalibrate_every == 0) dev->recalibrate(dev->config().probe_count, t);
        }

        IterationRecord rec{t, mean_loss, dev ? std::sqrt(sq_err / static_cast<double>(err_count)) : kNaN, kNaN};
        if (t % config.validate_every == 0) rec.val_accuracy = validate_now(t);
        metrics.history.push_back(rec);
    }

    net = best;
    net.reset_moments();
    if (dev) {
        deploy(net, *dev);
        dev->recalibrate(dev->config().probe_count, config.iterations);
    }
    metrics.test = evaluate(net, split.test, dev, config.iterations + 1);
    if (dev) {
        metrics.device_test_accuracy = metrics.test.accuracy;
        metrics.digital_test_accuracy = evaluate(net, split.test, nullptr, 0).accuracy;
    } else {
        metrics.digital_test_accuracy = metrics.test.accuracy;
    }
    return result;
}

TrainResult train_with_optical_error(const DatasetSplit& split, const TrainConfig& config, OpticalDevice* device) {
    return train(Architecture::onn1(), split, config, device, LossKind::mse);
}

RunMetrics transfer_to_device(const TrainResult& trained, const DatasetSplit& split, const TrainConfig& config,
                              OpticalDevice& device) {
    RunMetrics metrics = trained.metrics;
    NetworkState net = trained.net;
    clip_optical_layers(net, device.config().clip_bound);
    deploy(net, device);
    device.recalibrate(device.config().probe_count, config.iterations);
    metrics.test = evaluate(net, split.test, &device, config.iterations + 1);
    metrics.digital_test_accuracy = trained.metrics.test.accuracy;
    metrics.device_test_accuracy = metrics.test.accuracy;
    return metrics;
}

TrainResult in_silico_protocol(const Architecture& arch, const DatasetSplit& split, TrainConfig config,
                               OpticalDevice& device) {
    config.mode = TrainMode::in_silico;
    TrainResult result = train(arch, split, config, &device);
    result.metrics = transfer_to_device(result, split, config, device);
    return result;
}

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
    out << "iteration,train_loss,mvm_rmse,val_accuracy\n";
    for (const auto& r : metrics.history) {
        out << r.iteration << ',' << format_number(r.train_loss) << ',' << format_number(r.mvm_rmse) << ','
            << format_number(r.val_accuracy) << '\n';
    }
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& confusion) {
    out << "true\\predicted";
    for (int c = 0; c < kNumClasses; ++c) out << ',' << c;
    out << '\n';
    for (int r = 0; r < kNumClasses; ++r) {
        out << r;
        for (int c = 0; c < kNumClasses; ++c) out << ',' << confusion[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        out << '\n';
    }
}

}  // namespace onn
