#include "felce/determinant.hpp"

#include <cmath>
#include <utility>

#include "felce/errors.hpp"

namespace felce {

double pivoted_determinant(Eigen::MatrixXd m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("determinant of non-square matrix");
  const Eigen::Index n = m.rows();
  double det = 1.0;
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    double best = std::abs(m(col, col));
    for (Eigen::Index row = col + 1; row < n; ++row) {
      if (std::abs(m(row, col)) > best) {
        best = std::abs(m(row, col));
        pivot = row;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != col) {
      m.row(col).swap(m.row(pivot));
      det = -det;
    }
    const double diag = m(col, col);
    det *= diag;
    for (Eigen::Index row = col + 1; row < n; ++row) {
      const double factor = m(row, col) / diag;
      if (factor == 0.0) continue;
      m.row(row).tail(n - col - 1) -= factor * m.row(col).tail(n - col - 1);
    }
  }
  return det;
}

}  // namespace felce
