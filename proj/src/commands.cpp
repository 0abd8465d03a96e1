#include "onn/dataset.hpp"
#include "onn/errors.hpp"
#include "onn/harness.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

namespace onn {

namespace {

constexpr const char* kToolVersion = "1.0.0";

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string percent(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * accuracy);
    return buf;
}

std::string full(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw OnnError(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OnnError(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

ordered_json seeds_json(const SeedStreams& s) {
    return {{"master", s.master}, {"split", s.split},   {"init", s.init},
            {"batch", s.batch},   {"noise", s.noise},   {"probes", s.probes}};
}

ordered_json base_manifest(const std::string& command, const ExperimentConfig& config, const std::string& started) {
    ordered_json m;
    m["tool"] = "onn";
    m["tool_version"] = kToolVersion;
    m["command"] = command;
    m["experiment"] = config.name;
    ordered_json entries = ordered_json::object();
    for (const auto& [k, v] : config_entries(config)) entries[k] = v;
    m["config"] = entries;
    m["seeds"] = seeds_json(SeedStreams::from_master(config.master_seed));
    m["started_at"] = started;
    return m;
}

void finish_manifest(ordered_json& m, const fs::path& out_dir) {
    m["finished_at"] = utc_now();
    auto out = open_out(out_dir / "manifest.json");
    out << m.dump(2) << '\n';
}

struct LoadedData {
    DatasetSplit split;
    ordered_json description;
};

LoadedData load_data(const ExperimentConfig& config, const SeedStreams& seeds) {
    if (config.dataset_dir.empty()) {
        throw OnnError(ErrorCode::InvalidConfig, "dataset.dir is not set and ONN_DATA_DIR is empty");
    }
    const MnistFiles files = MnistFiles::in_directory(config.dataset_dir);
    ordered_json listing = ordered_json::array();
    for (const auto& p : {files.train_images, files.train_labels, files.test_images, files.test_labels}) {
        const auto bytes = read_file_bytes(p);
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64({reinterpret_cast<const char*>(bytes.data()), bytes.size()})));
        listing.push_back({{"path", p.string()}, {"bytes", bytes.size()}, {"fnv1a64", hex}});
    }
    const auto images = load_mnist(files);
    LoadedData data{make_split(images, seeds.split), {}};
    data.description = {{"dir", config.dataset_dir},
                        {"files", listing},
                        {"split_seed", seeds.split},
                        {"train", data.split.train.size()},
                        {"validation", data.split.validation.size()},
                        {"test", data.split.test.size()}};
    return data;
}

NoiseSpec noise_spec(NoiseKind kind, double sigma, const SeedStreams& seeds) { return {kind, sigma, seeds.noise}; }

OpticalDevice make_device(const ExperimentConfig& config, const Architecture& arch, NoiseSpec noise,
                          const SeedStreams& seeds) {
    return OpticalDevice(config.device, arch.optical_outputs(), arch.inputs(), noise, seeds.probes);
}


ordered_json accuracy_json(const RunMetrics& m) {
    ordered_json j;
    j["test_accuracy"] = m.test.accuracy;
    if (m.digital_test_accuracy) j["digital_test_accuracy"] = *m.digital_test_accuracy;
    if (m.device_test_accuracy) j["device_test_accuracy"] = *m.device_test_accuracy;
    j["best_val_accuracy"] = m.best_val_accuracy;
    j["best_iteration"] = m.best_iteration;
    j["test_samples"] = m.test.total;
    return j;
}

}  // namespace

void cmd_characterize(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    const std::string started = utc_now();
    config.device.validate();
    if (config.characterize_trials <= 0) throw OnnError(ErrorCode::InvalidConfig, "characterize.trials must be positive");
    if (config.characterize_sizes.empty()) throw OnnError(ErrorCode::InvalidConfig, "characterize.sizes is empty");
    prepare_dir(out_dir);
    const SeedStreams seeds = SeedStreams::from_master(config.master_seed);

    ordered_json manifest = base_manifest("characterize", config, started);
    ordered_json results = ordered_json::array();
    auto csv = open_out(out_dir / "metrics.csv");
    csv << "matrix_rows,matrix_cols,part,ideal,measured,error\n";
    for (const auto& size : config.characterize_sizes) {
        const std::uint64_t seed = derive_seed(seeds.master, "characterize/" + format_size(size));
        const auto r = characterize(config.device, size.outputs, size.inputs, size.complex, config.characterize_trials,
                                    seed, config.characterize_weight_sigma);
        for (const auto& p : r.points) {
            csv << p.matrix_rows << ',' << p.matrix_cols << ',' << p.part << ',' << full(p.ideal) << ','
                << full(p.measured) << ',' << full(p.measured - p.ideal) << '\n';
        }
        ordered_json entry = {{"size", format_size(size)}, {"trials", config.characterize_trials}};
        char line[160];
        if (size.complex) {
            entry["rmse_re"] = r.rmse_re;
            entry["rmse_im"] = r.rmse_im;
            std::snprintf(line, sizeof line, "%-8s complex  RMSE re %.5f  im %.5f\n", format_size(size).c_str(),
                          r.rmse_re, r.rmse_im);
        } else {
            entry["rmse"] = r.rmse;
            std::snprintf(line, sizeof line, "%-8s real     RMSE %.5f\n", format_size(size).c_str(), r.rmse);
        }
        log << line;
        results.push_back(entry);
    }
    if (!csv) throw OnnError(ErrorCode::Io, "write failed for metrics.csv");
    manifest["results"] = results;
    finish_manifest(manifest, out_dir);
}

void cmd_train(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    const std::string started = utc_now();
    config.device.validate();
    config.training.validate();
    const bool mse = config.arch == "onn1-mse";
    const auto kind = mse ? std::optional<ArchKind>(ArchKind::onn1_linear) : parse_arch_kind(config.arch);
    if (!kind) throw OnnError(ErrorCode::InvalidConfig, "unknown arch '" + config.arch + "'");
    const Architecture arch = Architecture::of(*kind);

    TrainConfig training = config.training;
    training.master_seed = config.master_seed;
    const SeedStreams seeds = SeedStreams::from_master(config.master_seed);
    const LoadedData data = load_data(config, seeds);
    prepare_dir(out_dir);

    OpticalDevice device = make_device(config, arch, noise_spec(config.noise_kind, config.noise_sigma, seeds), seeds);
    TrainResult result;
    if (training.mode == TrainMode::in_silico && !mse) {
        result = in_silico_protocol(arch, data.split, training, device);
    } else if (training.mode == TrainMode::in_silico) {
        result = train_with_optical_error(data.split, training, nullptr);
        result.metrics = transfer_to_device(result, data.split, training, device);
    } else {
        OpticalDevice* dev = training.mode == TrainMode::hybrid ? &device : nullptr;
        result = mse ? train_with_optical_error(data.split, training, dev) : train(arch, data.split, training, dev);
    }

    {
        auto out = open_out(out_dir / "metrics.csv");
        write_metrics_csv(out, result.metrics);
        if (!out) throw OnnError(ErrorCode::Io, "write failed for metrics.csv");
    }
    {
        auto out = open_out(out_dir / "confusion.csv");
        write_confusion_csv(out, result.metrics.test.confusion);
        if (!out) throw OnnError(ErrorCode::Io, "write failed for confusion.csv");
    }
    save_checkpoint((out_dir / "checkpoint.txt").string(), result.net, config.master_seed);

    ordered_json manifest = base_manifest("train", config, started);
    manifest["dataset"] = data.description;
    manifest["results"] = accuracy_json(result.metrics);
    finish_manifest(manifest, out_dir);

    log << config.arch << " (" << to_string(training.mode) << "): test accuracy "
        << percent(result.metrics.test.accuracy);
    if (result.metrics.digital_test_accuracy && result.metrics.device_test_accuracy) {
        log << "  [digital " << percent(*result.metrics.digital_test_accuracy) << ", device "
            << percent(*result.metrics.device_test_accuracy) << "]";
    }
    log << "  best validation " << percent(result.metrics.best_val_accuracy) << " at iteration "
        << result.metrics.best_iteration << '\n';
}

void cmd_noise_sweep(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    const std::string started = utc_now();
    config.device.validate();
    config.training.validate();
    const auto kind = parse_arch_kind(config.arch);
    if (!kind) throw OnnError(ErrorCode::InvalidConfig, "sweep needs arch onn1, onn2 or onn3");
    if (config.sweep_kinds.empty() || config.sweep_sigmas.empty()) {
        throw OnnError(ErrorCode::InvalidConfig, "sweep.kinds and sweep.sigmas must be non-empty");
    }
    const Architecture arch = Architecture::of(*kind);
    TrainConfig training = config.training;
    training.master_seed = config.master_seed;
    const SeedStreams seeds = SeedStreams::from_master(config.master_seed);
    const LoadedData data = load_data(config, seeds);
    prepare_dir(out_dir);

    // The in-silico model never sees the device, so one digital run serves every cell.
    TrainConfig digital = training;
    digital.mode = TrainMode::in_silico;
    OpticalDevice clean = make_device(config, arch, NoiseSpec{}, seeds);
    const TrainResult in_silico = train(arch, data.split, digital, &clean);
    const double denn_acc = in_silico.metrics.test.accuracy;

    auto csv = open_out(out_dir / "metrics.csv");
    csv << "kind,sigma,hybrid_acc,in_silico_acc,denn_acc\n";
    ordered_json rows = ordered_json::array();
    TrainConfig hybrid = training;
    hybrid.mode = TrainMode::hybrid;
    for (NoiseKind k : config.sweep_kinds) {
        for (double sigma : config.sweep_sigmas) {
            const NoiseSpec spec = noise_spec(k, sigma, seeds);
            OpticalDevice hybrid_device = make_device(config, arch, spec, seeds);
            const TrainResult h = train(arch, data.split, hybrid, &hybrid_device);
            OpticalDevice transfer_device = make_device(config, arch, spec, seeds);
            const RunMetrics s = transfer_to_device(in_silico, data.split, digital, transfer_device);

            csv << to_string(k) << ',' << full(sigma) << ',' << full(h.metrics.test.accuracy) << ','
                << full(s.test.accuracy) << ',' << full(denn_acc) << '\n';
            rows.push_back({{"kind", to_string(k)},
                            {"sigma", sigma},
                            {"hybrid_acc", h.metrics.test.accuracy},
                            {"in_silico_acc", s.test.accuracy},
                            {"denn_acc", denn_acc}});
            char line[160];
            std::snprintf(line, sizeof line, "%-22s sigma %-5g hybrid %6s  in-silico %6s  digital %6s\n",
                          to_string(k).c_str(), sigma, percent(h.metrics.test.accuracy).c_str(),
                          percent(s.test.accuracy).c_str(), percent(denn_acc).c_str());
            log << line << std::flush;
        }
    }
    if (!csv) throw OnnError(ErrorCode::Io, "write failed for metrics.csv");

    ordered_json manifest = base_manifest("sweep", config, started);
    manifest["dataset"] = data.description;
    manifest["results"] = rows;
    finish_manifest(manifest, out_dir);
}

}  // namespace onn
