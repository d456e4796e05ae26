#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "felce/determinant.hpp"
#include "felce/errors.hpp"

using namespace felce;

TEST_CASE("small known determinants") {
  Eigen::MatrixXd m(3, 3);
  m << 2, -3, 1, 2, 0, -1, 1, 4, 5;
  CHECK(pivoted_determinant(m) == doctest::Approx(49.0));

  Eigen::MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(pivoted_determinant(swap) == -1.0);

  CHECK(pivoted_determinant(Eigen::MatrixXd::Identity(5, 5)) == 1.0);
  CHECK(pivoted_determinant(Eigen::MatrixXd(0, 0)) == 1.0);
}

TEST_CASE("singular matrices give zero") {
  Eigen::MatrixXd m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  CHECK(std::abs(pivoted_determinant(m)) <= 1e-12);
  CHECK(pivoted_determinant(Eigen::MatrixXd::Zero(4, 4)) == 0.0);
}

TEST_CASE("non-square input is rejected") {
  CHECK_THROWS_AS(pivoted_determinant(Eigen::MatrixXd::Ones(2, 3)), DimensionMismatch);
}

TEST_CASE("agrees with a cofactor expansion on random 4x4 matrices") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto det3 = [](const Eigen::Matrix3d& a) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  };
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) m(i, j) = u(rng);
    }
    double expansion = 0.0;
    for (int col = 0; col < 4; ++col) {
      Eigen::Matrix3d minor;
      for (int i = 1; i < 4; ++i) {
        int k = 0;
        for (int j = 0; j < 4; ++j) {
          if (j != col) minor(i - 1, k++) = m(i, j);
        }
      }
      expansion += (col % 2 == 0 ? 1.0 : -1.0) * m(0, col) * det3(minor);
    }
    CHECK(pivoted_determinant(m) == doctest::Approx(expansion).epsilon(1e-10));
  }
}

TEST_CASE("row operations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(6, 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) m(i, j) = u(rng);
  }
  const double base = pivoted_determinant(m);
  Eigen::MatrixXd scaled = m;
  scaled.row(2) *= 3.0;
  CHECK(pivoted_determinant(scaled) == doctest::Approx(3.0 * base).epsilon(1e-12));
  Eigen::MatrixXd swapped = m;
  swapped.row(0).swap(swapped.row(5));
  CHECK(pivoted_determinant(swapped) == doctest::Approx(-base).epsilon(1e-12));
  Eigen::MatrixXd sheared = m;
  sheared.row(4) += 2.5 * sheared.row(1);
  CHECK(pivoted_determinant(sheared) == doctest::Approx(base).epsilon(1e-12));
}
