#pragma once

#include <Eigen/Dense>

namespace felce {

// Determinant by Gaussian elimination with partial (row) pivoting.
// Exact zero pivots short-circuit to 0.
double pivoted_determinant(Eigen::MatrixXd m);

}  // namespace felce
