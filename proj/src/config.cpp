#include "onn/errors.hpp"
#include "onn/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#ifndef ONN_DEFAULT_DATA_DIR
#define ONN_DEFAULT_DATA_DIR ""
#endif

namespace onn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, int line, const std::string& why) {
    std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
    throw OnnError(ErrorCode::ParseError, where + key + " = '" + value + "': " + why);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, int line) {
    T x{};
    const char* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, x);
    if (value.empty() || res.ec != std::errc() || res.ptr != end) bad_value(key, value, line, "not a number");
    return x;
}

bool parse_bool(const std::string& key, const std::string& value, int line) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(key, value, line, "expected true or false");
}

std::string number_text(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

MatrixSize parse_size(const std::string& key, const std::string& text, int line) {
    MatrixSize size;
    std::string body = text;
    if (!body.empty() && body.back() == 'c') {
        size.complex = true;
        body.pop_back();
    }
    const auto x = body.find('x');
    if (x == std::string::npos) bad_value(key, text, line, "expected INPUTSxOUTPUTS");
    size.inputs = parse_number<int>(key, body.substr(0, x), line);
    size.outputs = parse_number<int>(key, body.substr(x + 1), line);
    if (size.inputs <= 0 || size.outputs <= 0) bad_value(key, text, line, "dimensions must be positive");
    return size;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&, const std::string&, int)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field number_field(T ExperimentConfig::*member) {
    return {[member](ExperimentConfig& c, const std::string& k, const std::string& v, int line) { c.*member = parse_number<T>(k, v, line); },
            [member](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return number_text(c.*member);
                else return std::to_string(c.*member);
            }};
}

template <typename S, typename T>
Field nested_number(S ExperimentConfig::*outer, T S::*member) {
    return {[outer, member](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                (c.*outer).*member = parse_number<T>(k, v, line);
            },
            [outer, member](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return number_text((c.*outer).*member);
                else return std::to_string((c.*outer).*member);
            }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["experiment.name"] = {[](ExperimentConfig& c, const std::string&, const std::string& v, int) { c.name = v; },
                                [](const ExperimentConfig& c) { return c.name; }};
        t["experiment.arch"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                                    if (v != "onn1-mse" && !parse_arch_kind(v)) {
                                        bad_value(k, v, line, "expected onn1, onn2, onn3 or onn1-mse");
                                    }
                                    c.arch = v;
                                },
                                [](const ExperimentConfig& c) { return c.arch; }};
        t["experiment.master_seed"] = number_field(&ExperimentConfig::master_seed);
        t["dataset.dir"] = {[](ExperimentConfig& c, const std::string&, const std::string& v, int) { c.dataset_dir = v; },
                            [](const ExperimentConfig& c) { return c.dataset_dir; }};

        t["device.input_bits"] = nested_number(&ExperimentConfig::device, &DeviceConfig::input_bits);
        t["device.weight_bits"] = nested_number(&ExperimentConfig::device, &DeviceConfig::weight_bits);
        t["device.camera_bits"] = nested_number(&ExperimentConfig::device, &DeviceConfig::camera_bits);
        t["device.lo_amplitude"] = nested_number(&ExperimentConfig::device, &DeviceConfig::lo_amplitude);
        t["device.clip_bound"] = nested_number(&ExperimentConfig::device, &DeviceConfig::clip_bound);
        t["device.signal_scale"] = nested_number(&ExperimentConfig::device, &DeviceConfig::signal_scale);
        t["device.intensity_exposure"] = nested_number(&ExperimentConfig::device, &DeviceConfig::intensity_exposure);
        t["device.probe_count"] = nested_number(&ExperimentConfig::device, &DeviceConfig::probe_count);
        t["device.quantization_enabled"] = {
            [](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                c.device.quantization_enabled = parse_bool(k, v, line);
            },
            [](const ExperimentConfig& c) { return std::string(c.device.quantization_enabled ? "true" : "false"); }};

        t["noise.kind"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                               const auto kind = parse_noise_kind(v);
                               if (!kind) bad_value(k, v, line, "unknown noise kind");
                               c.noise_kind = *kind;
                           },
                           [](const ExperimentConfig& c) { return to_string(c.noise_kind); }};
        t["noise.sigma"] = number_field(&ExperimentConfig::noise_sigma);

        t["training.iterations"] = nested_number(&ExperimentConfig::training, &TrainConfig::iterations);
        t["training.batch_size"] = nested_number(&ExperimentConfig::training, &TrainConfig::batch_size);
        t["training.learning_rate"] = nested_number(&ExperimentConfig::training, &TrainConfig::learning_rate);
        t["training.beta1"] = nested_number(&ExperimentConfig::training, &TrainConfig::beta1);
        t["training.beta2"] = nested_number(&ExperimentConfig::training, &TrainConfig::beta2);
        t["training.epsilon"] = nested_number(&ExperimentConfig::training, &TrainConfig::epsilon);
        t["training.init_sigma"] = nested_number(&ExperimentConfig::training, &TrainConfig::init_sigma);
        t["training.recalibrate_every"] = nested_number(&ExperimentConfig::training, &TrainConfig::recalibrate_every);
        t["training.validate_every"] = nested_number(&ExperimentConfig::training, &TrainConfig::validate_every);
        t["training.mode"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                                  const auto m = parse_train_mode(v);
                                  if (!m) bad_value(k, v, line, "expected hybrid, in_silico or denn");
                                  c.training.mode = *m;
                              },
                              [](const ExperimentConfig& c) { return to_string(c.training.mode); }};

        t["characterize.sizes"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                                       c.characterize_sizes.clear();
                                       for (const auto& item : split_list(v)) {
                                           c.characterize_sizes.push_back(parse_size(k, item, line));
                                       }
                                   },
                                   [](const ExperimentConfig& c) {
                                       std::string out;
                                       for (const auto& s : c.characterize_sizes) {
                                           out += (out.empty() ? "" : ",") + format_size(s);
                                       }
                                       return out;
                                   }};
        t["characterize.trials"] = number_field(&ExperimentConfig::characterize_trials);
        t["characterize.weight_sigma"] = number_field(&ExperimentConfig::characterize_weight_sigma);

        t["sweep.kinds"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                                c.sweep_kinds.clear();
                                for (const auto& item : split_list(v)) {
                                    const auto kind = parse_noise_kind(item);
                                    if (!kind) bad_value(k, item, line, "unknown noise kind");
                                    c.sweep_kinds.push_back(*kind);
                                }
                            },
                            [](const ExperimentConfig& c) {
                                std::string out;
                                for (auto kind : c.sweep_kinds) out += (out.empty() ? "" : ",") + to_string(kind);
                                return out;
                            }};
        t["sweep.sigmas"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v, int line) {
                                 c.sweep_sigmas.clear();
                                 for (const auto& item : split_list(v)) {
                                     c.sweep_sigmas.push_back(parse_number<double>(k, item, line));
                                 }
                             },
                             [](const ExperimentConfig& c) {
                                 std::string out;
                                 for (double s : c.sweep_sigmas) out += (out.empty() ? "" : ",") + number_text(s);
                                 return out;
                             }};
        return t;
    }();
    return table;
}

}  // namespace

std::string default_dataset_dir() {
    if (const char* env = std::getenv("ONN_DATA_DIR"); env && *env) return env;
    return ONN_DEFAULT_DATA_DIR;
}

std::string format_size(const MatrixSize& size) {
    return std::to_string(size.inputs) + "x" + std::to_string(size.outputs) + (size.complex ? "c" : "");
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value, int line) {
    const auto it = fields().find(key);
    if (it == fields().end()) {
        std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
        throw OnnError(ErrorCode::UnknownKey, where + "unknown key '" + key + "'");
    }
    it->second.set(config, key, value, line);
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& config) {
    std::map<std::string, std::string> out;
    for (const auto& [key, field] : fields()) out[key] = field.get(config);
    return out;
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig config;
    config.dataset_dir = default_dataset_dir();
    std::string section;
    int number = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++number;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw OnnError(ErrorCode::ParseError, "line " + std::to_string(number) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw OnnError(ErrorCode::ParseError, "line " + std::to_string(number) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        set_config_value(config, key, trim(line.substr(eq + 1)), number);
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw OnnError(ErrorCode::Io, "cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
        std::istringstream lines(text);
        return parse_config(lines);
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw OnnError(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    ExperimentConfig config;
    config.dataset_dir = default_dataset_dir();
    const auto entries = doc.find("config");
    if (entries == doc.end() || !entries->is_object()) {
        throw OnnError(ErrorCode::ParseError, path.string() + ": manifest has no \"config\" object");
    }
    for (const auto& [key, value] : entries->items()) {
        if (!value.is_string()) {
            throw OnnError(ErrorCode::ParseError, path.string() + ": config value for " + key + " must be a string");
        }
        set_config_value(config, key, value.get<std::string>());
    }
    return config;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::UnknownKey:
        case ErrorCode::InvalidConfig:
            return kExitConfig;
        case ErrorCode::Io:
        case ErrorCode::BadMagic:
        case ErrorCode::Truncated:
        case ErrorCode::TrailingBytes:
        case ErrorCode::WrongCount:
            return kExitIo;
        case ErrorCode::NonFiniteLoss:
        case ErrorCode::DegenerateFit:
        case ErrorCode::SignAmbiguity:
            return kExitNumerical;
        default:
            return kExitInternal;
    }
}

}  // namespace onn
