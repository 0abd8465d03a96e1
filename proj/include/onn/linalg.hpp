#pragma once

#include "onn/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>

namespace onn {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr int kNumClasses = 10;
inline constexpr int kInputDim = 100;

// Entries i.i.d. N(0, sigma), filled row-major so the draw order is layout-independent.
inline RealMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sigma, Rng& rng) {
    std::normal_distribution<double> normal(0.0, sigma);
    RealMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
    }
    return m;
}

// Circular complex normal with E|w|^2 = sigma^2: real part drawn first, then imaginary part.
inline ComplexMatrix complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sigma, Rng& rng) {
    const double quadrature_sigma = sigma / std::sqrt(2.0);
    RealMatrix re = gaussian_matrix(rows, cols, quadrature_sigma, rng);
    RealMatrix im = gaussian_matrix(rows, cols, quadrature_sigma, rng);
    ComplexMatrix m(rows, cols);
    m.real() = re;
    m.imag() = im;
    return m;
}

}  // namespace onn
