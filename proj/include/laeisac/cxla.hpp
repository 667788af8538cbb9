#pragma once

// Small dense complex linear algebra on top of Eigen. Everything the channel
// and signal code needs: products, conjugate transpose, trace, and the plain
// (non-conjugating) outer product h h^T used for the two-way sensing channel.

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace laeisac {

using cplx = std::complex<double>;
using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline CMat matmul(const CMat& a, const CMat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  return a * b;
}

inline CMat hermitian(const CMat& a) { return a.adjoint(); }

inline cplx trace(const CMat& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("trace: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  return a.trace();
}

/// h h^T without conjugation, so the result is complex symmetric rather than Hermitian.
inline CMat outer_tt(const CVec& h) { return h * h.transpose(); }

/// Sum of |a_ij|^2, i.e. tr(A^H A).
inline double frobenius_sq(const CMat& a) { return a.squaredNorm(); }

inline bool all_finite(const CMat& a) { return a.allFinite(); }

}  // namespace laeisac
