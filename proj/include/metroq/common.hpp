#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace metroq {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatD = Eigen::MatrixXd;
using VecD = Eigen::VectorXd;

// Eigenvalues below kRankCutoff * (largest eigenvalue) are treated as zero
// everywhere: purification ancilla dims, pseudo-inverses, channel ranks.
inline constexpr double kRankCutoff = 1e-10;

// Hermiticity gate: ||M - M^dag||_max <= kHermTol * ||M||_max.
inline constexpr double kHermTol = 1e-12;

[[noreturn]] inline void fail(const std::string& msg) {
    throw std::invalid_argument(msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

inline double max_abs(const MatC& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const VecC& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double max_abs(const MatD& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const MatC& m, double tol_scale = kHermTol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(max_abs(m), 1.0);
    return max_abs(MatC(m - m.adjoint())) <= tol_scale * scale;
}

// (m + m^dag)/2; use after accumulating roundoff on a logically Hermitian value.
inline MatC hermitize(const MatC& m) {
    return 0.5 * (m + m.adjoint());
}

}  // namespace metroq
