#include "onn/optics.hpp"

#include "onn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace onn {

namespace {

// LO phasors for the four reference blocks, exact quarter turns.
const std::array<Complex, 4> kFourPhasors = {Complex(1.0, 0.0), Complex(-1.0, 0.0), Complex(0.0, 1.0),
                                             Complex(0.0, -1.0)};

double levels(int bits) { return std::ldexp(1.0, bits) - 1.0; }

}  // namespace

void DeviceConfig::validate() const {
    auto fail = [](const std::string& msg) { throw OnnError(ErrorCode::InvalidConfig, msg); };
    if (input_bits < 1 || input_bits > 24) fail("input_bits must be in [1,24]");
    if (weight_bits < 2 || weight_bits > 24) fail("weight_bits must be in [2,24] for a mid-tread quantizer");
    if (camera_bits < 1 || camera_bits > 24) fail("camera_bits must be in [1,24]");
    if (!(clip_bound > 0.0)) fail("clip_bound must be positive");
    if (!(signal_scale > 0.0)) fail("signal_scale must be positive");
    if (!(lo_amplitude > signal_scale)) fail("lo_amplitude must exceed signal_scale (E_LO > |E_s|)");
    if (!(intensity_exposure > 0.0)) fail("intensity_exposure must be positive");
    if (probe_count < 2) fail("probe_count must be >= 2");
}

double DeviceConfig::camera_lsb() const { return camera_full_scale() / levels(camera_bits); }

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::static_additive: return "static_additive";
        case NoiseKind::static_multiplicative: return "static_multiplicative";
        case NoiseKind::dynamic_additive: return "dynamic_additive";
    }
    return "none";
}

std::optional<NoiseKind> parse_noise_kind(const std::string& text) {
    for (auto k : {NoiseKind::none, NoiseKind::static_additive, NoiseKind::static_multiplicative,
                   NoiseKind::dynamic_additive}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

double round_half_up(double x) { return std::floor(x + 0.5); }

RealVector quantize_input(const RealVector& v, const DeviceConfig& config) {
    const double n = levels(config.input_bits);
    RealVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v(i);
        if (!(x >= 0.0 && x <= 1.0)) {
            throw OnnError(ErrorCode::OutOfRange, "input component " + std::to_string(i) + " outside [0,1]");
        }
        out(i) = config.quantization_enabled ? round_half_up(x * n) / n : x;
    }
    return out;
}

double quantize_weight(double w, const DeviceConfig& config) {
    const double bound = config.clip_bound;
    const double clipped = std::clamp(w, -bound, bound);
    if (!config.quantization_enabled) return clipped;
    const double half_levels = std::ldexp(1.0, config.weight_bits - 1) - 1.0;
    const double code = std::clamp(round_half_up(clipped / bound * half_levels), -half_levels, half_levels);
    return code * bound / half_levels;
}

double camera_quantize(double intensity, double full_scale, int bits) {
    const double n = levels(bits);
    const double code = std::clamp(round_half_up(intensity / full_scale * n), 0.0, n);
    return code * full_scale / n;
}

double homodyne_intensity(double lo, double signal) { return (lo + signal) * (lo + signal); }

double homodyne_recover(double lo, double intensity) { return std::sqrt(intensity) - lo; }

double interference_intensity(double lo, double phase, Complex signal) {
    return std::norm(std::polar(lo, phase) + signal);
}

Complex four_phase_recover(const std::array<double, 4>& intensities, double lo) {
    return {(intensities[0] - intensities[1]) / (4.0 * lo), (intensities[2] - intensities[3]) / (4.0 * lo)};
}

CalibrationState fit_calibration(const std::vector<double>& raw, const std::vector<double>& ideal) {
    if (raw.size() != ideal.size() || raw.size() < 2) {
        throw OnnError(ErrorCode::DegenerateFit, "need at least two paired readings");
    }
    const double n = static_cast<double>(raw.size());
    double mean_r = 0.0, mean_i = 0.0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        mean_r += raw[k];
        mean_i += ideal[k];
    }
    mean_r /= n;
    mean_i /= n;
    double var = 0.0, cov = 0.0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        var += (raw[k] - mean_r) * (raw[k] - mean_r);
        cov += (raw[k] - mean_r) * (ideal[k] - mean_i);
    }
    const double scale = std::max(1.0, mean_r * mean_r);
    if (!(var > 1e-20 * scale * n)) {
        throw OnnError(ErrorCode::DegenerateFit, "probe readings are constant");
    }
    CalibrationState c;
    c.gain = cov / var;
    c.offset = mean_i - c.gain * mean_r;
    if (!(c.gain > 0.0)) {
        throw OnnError(ErrorCode::DegenerateFit, "fitted gain is not positive");
    }
    return c;
}

double mvm_rmse(const std::vector<RealVector>& measured, const std::vector<RealVector>& ideal, double norm_max) {
    if (measured.size() != ideal.size()) {
        throw OnnError(ErrorCode::ShapeMismatch, "measured and ideal lists differ in length");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < measured.size(); ++k) {
        if (measured[k].size() != ideal[k].size()) {
            throw OnnError(ErrorCode::ShapeMismatch, "vector " + std::to_string(k) + " differs in length");
        }
        sum += ((measured[k] - ideal[k]) / norm_max).squaredNorm();
        count += static_cast<std::size_t>(measured[k].size());
    }
    return count == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(count));
}

// --- WeightNoise -------------------------------------------------------------

WeightNoise::WeightNoise(const NoiseSpec& spec, Eigen::Index rows, Eigen::Index cols)
    : spec_(spec), rng_(derive_seed(spec.noise_seed, "weight-noise")) {
    if (!(spec.sigma >= 0.0)) {
        throw OnnError(ErrorCode::InvalidConfig, "noise sigma must be >= 0");
    }
    switch (spec.kind) {
        case NoiseKind::static_additive:
            bias_ = spec.sigma * standard_normal(rows, cols);
            break;
        case NoiseKind::static_multiplicative:
            gain_ = ComplexMatrix::Constant(rows, cols, Complex(1.0, 1.0)) + spec.sigma * standard_normal(rows, cols);
            break;
        case NoiseKind::dynamic_additive:
            bias_ = ComplexMatrix::Zero(rows, cols);
            break;
        case NoiseKind::none:
            break;
    }
}

ComplexMatrix WeightNoise::standard_normal(Eigen::Index rows, Eigen::Index cols) {
    ComplexMatrix m(rows, cols);
    m.real() = gaussian_matrix(rows, cols, 1.0, rng_);
    m.imag() = gaussian_matrix(rows, cols, 1.0, rng_);
    return m;
}

bool WeightNoise::advance_to(long update_epoch) {
    if (spec_.kind != NoiseKind::dynamic_additive) return false;
    if (epoch_ && *epoch_ == update_epoch) return false;
    bias_ = spec_.sigma * standard_normal(bias_.rows(), bias_.cols());
    epoch_ = update_epoch;
    return true;
}

ComplexMatrix WeightNoise::apply(const ComplexMatrix& weights) const {
    switch (spec_.kind) {
        case NoiseKind::none:
            return weights;
        case NoiseKind::static_additive:
        case NoiseKind::dynamic_additive:
            return weights + bias_;
        case NoiseKind::static_multiplicative: {
            ComplexMatrix out(weights.rows(), weights.cols());
            out.real() = weights.real().cwiseProduct(gain_.real());
            out.imag() = weights.imag().cwiseProduct(gain_.imag());
            return out;
        }
    }
    return weights;
}

// --- OpticalDevice -----------------------------------------------------------

OpticalDevice::OpticalDevice(DeviceConfig config, Eigen::Index rows, Eigen::Index cols, NoiseSpec noise,
                             std::uint64_t probe_seed)
    : config_(config), rows_(rows), cols_(cols), probe_rng_(probe_seed) {
    config_.validate();
    if (rows <= 0 || cols <= 0) {
        throw OnnError(ErrorCode::ShapeMismatch, "device dimensions must be positive");
    }
    noise_ = WeightNoise(noise, rows, cols);
}

double OpticalDevice::output_lsb() const {
    return config_.camera_lsb() / (2.0 * config_.lo_amplitude) * norm_max() / config_.signal_scale;
}

double OpticalDevice::intensity_lsb() const {
    const double to_output = norm_max() / config_.signal_scale;
    return config_.camera_lsb() / config_.intensity_exposure * to_output * to_output;
}

void OpticalDevice::load_weights(const RealMatrix& w) {
    if (w.rows() != rows_ || w.cols() != cols_) {
        throw OnnError(ErrorCode::ShapeMismatch, "weight matrix shape does not match the device");
    }
    weights_ = ComplexMatrix::Zero(rows_, cols_);
    weights_.real() = w.unaryExpr([this](double x) { return quantize_weight(x, config_); });
    complex_ = false;
    loaded_ = true;
    effective_valid_ = false;
}

void OpticalDevice::load_weights(const ComplexMatrix& w) {
    if (w.rows() != rows_ || w.cols() != cols_) {
        throw OnnError(ErrorCode::ShapeMismatch, "weight matrix shape does not match the device");
    }
    weights_.resize(rows_, cols_);
    weights_.real() = w.real().unaryExpr([this](double x) { return quantize_weight(x, config_); });
    weights_.imag() = w.imag().unaryExpr([this](double x) { return quantize_weight(x, config_); });
    complex_ = true;
    loaded_ = true;
    effective_valid_ = false;
}

void OpticalDevice::require_loaded() const {
    if (!loaded_) throw OnnError(ErrorCode::NotLoaded, "no weights loaded on the device");
}

ComplexMatrix OpticalDevice::effective_weights(long update_epoch) { return refresh_effective(update_epoch); }

const ComplexMatrix& OpticalDevice::refresh_effective(long update_epoch) {
    require_loaded();
    last_epoch_ = update_epoch;
    const bool redrawn = noise_.advance_to(update_epoch);
    if (redrawn || !effective_valid_) {
        effective_ = noise_.apply(weights_);
        effective_valid_ = true;
    }
    return effective_;
}

ComplexVector OpticalDevice::field(const RealVector& v, long update_epoch) {
    require_loaded();
    if (v.size() != cols_) {
        throw OnnError(ErrorCode::ShapeMismatch, "input length does not match the device");
    }
    const RealVector displayed = quantize_input(v, config_);
    return (config_.signal_scale / norm_max()) * (refresh_effective(update_epoch) * displayed.cast<Complex>());
}

double OpticalDevice::detect_frame(double intensity, double full_scale) const {
    return config_.quantization_enabled ? camera_quantize(intensity, full_scale, config_.camera_bits) : intensity;
}

double OpticalDevice::detect_real(double signal_field) const {
    const double intensity = detect_frame(homodyne_intensity(config_.lo_amplitude, signal_field),
                                          config_.camera_full_scale());
    return homodyne_recover(config_.lo_amplitude, intensity) * norm_max() / config_.signal_scale;
}

RealVector OpticalDevice::real_mvm(const RealVector& v, long update_epoch) {
    require_loaded();
    if (complex_) throw OnnError(ErrorCode::ShapeMismatch, "real_mvm needs real weights; use complex_mvm");
    const ComplexVector e = field(v, update_epoch);
    RealVector out(rows_);
    for (Eigen::Index j = 0; j < rows_; ++j) {
        out(j) = calibration_.gain * detect_real(e(j).real()) + calibration_.offset;
    }
    return out;
}

ComplexVector OpticalDevice::complex_mvm(const RealVector& v, long update_epoch, HomodyneFrame* frame) {
    const ComplexVector e = field(v, update_epoch);
    const double lo = config_.lo_amplitude;
    const double k = norm_max() / (4.0 * lo * config_.signal_scale);
    if (frame) {
        frame->intensities.resize(rows_, 4);
        frame->lo_phases.assign(kFourPhases.begin(), kFourPhases.end());
    }
    ComplexVector out(rows_);
    for (Eigen::Index j = 0; j < rows_; ++j) {
        std::array<double, 4> readings{};
        for (std::size_t p = 0; p < 4; ++p) {
            readings[p] = detect_frame(std::norm(lo * kFourPhasors[p] + e(j)), config_.camera_full_scale());
            if (frame) frame->intensities(j, static_cast<Eigen::Index>(p)) = readings[p];
        }
        const double re = (readings[0] - readings[1]) * k;
        const double im = (readings[2] - readings[3]) * k;
        out(j) = Complex(calibration_.gain * re + calibration_.offset, calibration_.gain * im + calibration_.offset);
    }
    return out;
}

RealVector OpticalDevice::intensity_readout(const RealVector& v, long update_epoch) {
    const ComplexVector e = field(v, update_epoch);
    const double exposure = config_.intensity_exposure;
    const double to_output = norm_max() / config_.signal_scale;
    const double gain2 = calibration_.gain * calibration_.gain;
    RealVector out(rows_);
    for (Eigen::Index j = 0; j < rows_; ++j) {
        const double reading = detect_frame(exposure * std::norm(e(j)), config_.camera_full_scale());
        out(j) = gain2 * reading / exposure * to_output * to_output;
    }
    return out;
}

RealVector OpticalDevice::optical_error(const RealVector& v, const RealVector& target, long update_epoch) {
    require_loaded();
    if (complex_) throw OnnError(ErrorCode::ShapeMismatch, "optical_error needs real weights");
    if (target.size() != rows_) {
        throw OnnError(ErrorCode::ShapeMismatch, "target length does not match the device outputs");
    }
    const RealVector label = quantize_input(target, config_);
    const ComplexVector e = field(v, update_epoch);
    const double lo = config_.lo_amplitude;
    const double to_field = config_.signal_scale / norm_max();
    RealVector out(rows_);
    for (Eigen::Index j = 0; j < rows_; ++j) {
        // label region sits at pi relative to the reference, so it subtracts
        const double total = lo + e(j).real() - to_field * label(j);
        if (!(total > 0.0)) {
            throw OnnError(ErrorCode::SignAmbiguity,
                           "E_LO + E_s - E_label <= 0 at output " + std::to_string(j));
        }
        const double intensity = detect_frame(total * total, config_.camera_full_scale());
        out(j) = calibration_.gain * (homodyne_recover(lo, intensity) / to_field) + calibration_.offset;
    }
    return out;
}

CalibrationState OpticalDevice::recalibrate(int probe_count, long iteration) {
    require_loaded();
    if (probe_count < 2) throw OnnError(ErrorCode::DegenerateFit, "need at least two probes");
    const CalibrationState previous = calibration_;
    calibration_ = CalibrationState{};

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> raw, ideal;
    raw.reserve(static_cast<std::size_t>(probe_count * rows_ * (complex_ ? 2 : 1)));
    ideal.reserve(raw.capacity());
    try {
        for (int p = 0; p < probe_count; ++p) {
            RealVector probe(cols_);
            for (Eigen::Index i = 0; i < cols_; ++i) probe(i) = unit(probe_rng_);
            const ComplexVector known = weights_ * quantize_input(probe, config_).cast<Complex>();
            if (complex_) {
                const ComplexVector measured = complex_mvm(probe, last_epoch_);
                for (Eigen::Index j = 0; j < rows_; ++j) {
                    raw.push_back(measured(j).real());
                    ideal.push_back(known(j).real());
                    raw.push_back(measured(j).imag());
                    ideal.push_back(known(j).imag());
                }
            } else {
                const RealVector measured = real_mvm(probe, last_epoch_);
                for (Eigen::Index j = 0; j < rows_; ++j) {
                    raw.push_back(measured(j));
                    ideal.push_back(known(j).real());
                }
            }
        }
        calibration_ = fit_calibration(raw, ideal);
    } catch (...) {
        calibration_ = previous;
        throw;
    }
    calibration_.last_calibrated_iteration = iteration;
    return calibration_;
}

}  // namespace onn
