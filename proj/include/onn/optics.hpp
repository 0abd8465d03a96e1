#pragma once

#include "onn/linalg.hpp"
#include "onn/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace onn {

// ---------------------------------------------------------------------------
// Simulated coherent optical multiplier.
//
// Signal chain for one output unit (real case):
//   input  -> 4-bit DMD quantizer
//   weight -> clip to +/-clip_bound -> 10-bit mid-tread SLM quantizer -> noise
//   field  E_s = signal_scale * (w . v) / norm_max,  norm_max = inputs * clip_bound
//   camera I = (E_LO + E_s)^2, 8-bit over [0, (E_LO + signal_scale)^2]
//   output z = gain * (sqrt(I) - E_LO) * norm_max / signal_scale + offset
// ---------------------------------------------------------------------------

struct DeviceConfig {
    int input_bits = 4;
    int weight_bits = 10;
    int camera_bits = 8;
    double lo_amplitude = 1.0;
    double clip_bound = 1.0;
    double signal_scale = 0.5;
    bool quantization_enabled = true;
    // Exposure multiplier of the LO-off (intensity-only) frame relative to the homodyne frames.
    double intensity_exposure = 256.0;
    int probe_count = 16;

    // Throws InvalidConfig when an invariant is violated.
    void validate() const;

    double camera_full_scale() const { return (lo_amplitude + signal_scale) * (lo_amplitude + signal_scale); }
    double camera_lsb() const;
};

enum class NoiseKind { none, static_additive, static_multiplicative, dynamic_additive };

std::string to_string(NoiseKind kind);
std::optional<NoiseKind> parse_noise_kind(const std::string& text);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    double sigma = 0.0;
    std::uint64_t noise_seed = 0;
};

struct CalibrationState {
    double gain = 1.0;
    double offset = 0.0;
    long last_calibrated_iteration = -1;
};

// Camera readings for one output vector: rows = output units, cols = LO phases.
struct HomodyneFrame {
    RealMatrix intensities;
    std::vector<double> lo_phases;
};

// --- quantizers -------------------------------------------------------------

// floor(x + 0.5): ties go up.
double round_half_up(double x);

// Maps [0,1] onto 2^bits - 1 steps; identity when quantization is off. Throws OutOfRange.
RealVector quantize_input(const RealVector& v, const DeviceConfig& config);

// Mid-tread weight quantizer over [-clip_bound, clip_bound] (after clipping).
double quantize_weight(double w, const DeviceConfig& config);

double camera_quantize(double intensity, double full_scale, int bits);

// --- field-level homodyne relations ----------------------------------------

double homodyne_intensity(double lo, double signal);
double homodyne_recover(double lo, double intensity);
double interference_intensity(double lo, double phase, Complex signal);

inline constexpr std::array<double, 4> kFourPhases = {0.0, 3.14159265358979323846, 1.57079632679489661923,
                                                      4.71238898038468985769};

// Intensities ordered as kFourPhases (0, pi, pi/2, 3pi/2).
Complex four_phase_recover(const std::array<double, 4>& intensities, double lo);

// Least-squares fit of ideal ~ gain * raw + offset.
CalibrationState fit_calibration(const std::vector<double>& raw, const std::vector<double>& ideal);

// RMSE on the normalized [-1,1] output scale.
double mvm_rmse(const std::vector<RealVector>& measured, const std::vector<RealVector>& ideal, double norm_max);

// Applies one of the three weight-noise channels. Frozen matrices are drawn once at construction.
class WeightNoise {
public:
    WeightNoise() = default;
    WeightNoise(const NoiseSpec& spec, Eigen::Index rows, Eigen::Index cols);

    const NoiseSpec& spec() const { return spec_; }

    // Returns true when the dynamic draw changed.
    bool advance_to(long update_epoch);
    ComplexMatrix apply(const ComplexMatrix& weights) const;

    const ComplexMatrix& frozen_bias() const { return bias_; }
    const ComplexMatrix& frozen_gain() const { return gain_; }

private:
    ComplexMatrix standard_normal(Eigen::Index rows, Eigen::Index cols);

    NoiseSpec spec_;
    Rng rng_;
    ComplexMatrix bias_;
    ComplexMatrix gain_;
    std::optional<long> epoch_;
};

class OpticalDevice {
public:
    // rows = output units, cols = input units.
    OpticalDevice(DeviceConfig config, Eigen::Index rows, Eigen::Index cols, NoiseSpec noise = {},
                  std::uint64_t probe_seed = 0);

    const DeviceConfig& config() const { return config_; }
    const NoiseSpec& noise() const { return noise_.spec(); }
    const WeightNoise& noise_channel() const { return noise_; }
    const CalibrationState& calibration() const { return calibration_; }
    void set_calibration(const CalibrationState& c) { calibration_ = c; }

    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    double norm_max() const { return static_cast<double>(cols_) * config_.clip_bound; }

    // Output-unit value of one camera grey level at the LO working point (I = E_LO^2).
    double output_lsb() const;
    // Output-unit (squared) value of one grey level of the LO-off frame.
    double intensity_lsb() const;

    void load_weights(const RealMatrix& w);
    void load_weights(const ComplexMatrix& w);
    bool loaded() const { return loaded_; }
    bool complex_loaded() const { return complex_; }
    // Nominal deployed values: clipped and quantized, before noise.
    const ComplexMatrix& loaded_weights() const { return weights_; }

    ComplexMatrix effective_weights(long update_epoch);

    RealVector real_mvm(const RealVector& v, long update_epoch);
    ComplexVector complex_mvm(const RealVector& v, long update_epoch, HomodyneFrame* frame = nullptr);
    RealVector intensity_readout(const RealVector& v, long update_epoch);
    RealVector optical_error(const RealVector& v, const RealVector& target, long update_epoch);

    // Fits gain/offset from probe MVMs against the noiseless loaded weights.
    CalibrationState recalibrate(int probe_count, long iteration);

    long last_epoch() const { return last_epoch_; }

private:
    void require_loaded() const;
    const ComplexMatrix& refresh_effective(long update_epoch);
    ComplexVector field(const RealVector& v, long update_epoch);
    double detect_real(double signal_field) const;
    double detect_frame(double intensity, double full_scale) const;

    DeviceConfig config_;
    Eigen::Index rows_;
    Eigen::Index cols_;
    WeightNoise noise_;
    CalibrationState calibration_;
    Rng probe_rng_;
    ComplexMatrix weights_;
    ComplexMatrix effective_;
    bool effective_valid_ = false;
    bool loaded_ = false;
    bool complex_ = false;
    long last_epoch_ = 0;
};

// ---------------------------------------------------------------------------
// Characterization: random MVMs against the ideal product.
// ---------------------------------------------------------------------------
struct CharacterizationPoint {
    std::string part;  // real | re | im
    Eigen::Index matrix_rows = 0;
    Eigen::Index matrix_cols = 0;
    double ideal = 0.0;     // normalized by norm_max
    double measured = 0.0;  // normalized by norm_max
};

struct CharacterizationResult {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    bool complex = false;
    double rmse = 0.0;     // real case
    double rmse_re = 0.0;  // complex case
    double rmse_im = 0.0;
    std::vector<CharacterizationPoint> points;
};

// Weights ~ N(0, weight_sigma) (circular complex normal for complex), inputs ~ U[0,1].
CharacterizationResult characterize(const DeviceConfig& config, Eigen::Index rows, Eigen::Index cols, bool complex,
                                    int trials, std::uint64_t seed, double weight_sigma = 0.5);

}  // namespace onn
