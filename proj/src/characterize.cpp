#include "onn/optics.hpp"

#include <cmath>

namespace onn {

CharacterizationResult characterize(const DeviceConfig& config, Eigen::Index rows, Eigen::Index cols, bool complex,
                                    int trials, std::uint64_t seed, double weight_sigma) {
    OpticalDevice device(config, rows, cols, NoiseSpec{}, derive_seed(seed, "probes"));
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double bound = config.clip_bound;
    const double nm = device.norm_max();

    CharacterizationResult result;
    result.rows = rows;
    result.cols = cols;
    result.complex = complex;
    double sum = 0.0, sum_re = 0.0, sum_im = 0.0;
    long count = 0;

    auto record = [&](const char* part, double ideal, double measured) {
        result.points.push_back({part, rows, cols, ideal / nm, measured / nm});
        const double e = (measured - ideal) / nm;
        return e * e;
    };

    for (int trial = 0; trial < trials; ++trial) {
        RealVector v(cols);
        if (complex) {
            const ComplexMatrix w = complex_gaussian_matrix(rows, cols, weight_sigma, rng);
            for (Eigen::Index i = 0; i < cols; ++i) v(i) = unit(rng);
            ComplexMatrix clipped(rows, cols);
            clipped.real() = w.real().cwiseMax(-bound).cwiseMin(bound);
            clipped.imag() = w.imag().cwiseMax(-bound).cwiseMin(bound);
            device.load_weights(clipped);
            const ComplexVector ideal = clipped * v.cast<Complex>();
            const ComplexVector measured = device.complex_mvm(v, trial);
            for (Eigen::Index j = 0; j < rows; ++j) {
                sum_re += record("re", ideal(j).real(), measured(j).real());
                sum_im += record("im", ideal(j).imag(), measured(j).imag());
            }
        } else {
            const RealMatrix w = gaussian_matrix(rows, cols, weight_sigma, rng);
            for (Eigen::Index i = 0; i < cols; ++i) v(i) = unit(rng);
            const RealMatrix clipped = w.cwiseMax(-bound).cwiseMin(bound);
            device.load_weights(clipped);
            const RealVector ideal = clipped * v;
            const RealVector measured = device.real_mvm(v, trial);
            for (Eigen::Index j = 0; j < rows; ++j) sum += record("real", ideal(j), measured(j));
        }
        count += rows;
    }
    if (count > 0) {
        result.rmse = std::sqrt(sum / static_cast<double>(count));
        result.rmse_re = std::sqrt(sum_re / static_cast<double>(count));
        result.rmse_im = std::sqrt(sum_im / static_cast<double>(count));
    }
    if (complex) result.rmse = std::max(result.rmse_re, result.rmse_im);
    return result;
}

}  // namespace onn
