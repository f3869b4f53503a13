#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedsig/rng.hpp"

namespace fedsig::predictor {

// Activations are row-major so that a (batch*steps) x channels block can be
// viewed as batch x (steps*channels) without copying.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::RowVectorXd;

struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// Uniform(-limit, limit) fill drawn in row-major order.
void fill_uniform(Mat& m, double limit, Rng& rng);

inline Mat view_rows(const Mat& m, Eigen::Index rows) {
  return Eigen::Map<const Mat>(m.data(), rows, m.size() / rows);
}

}  // namespace fedsig::predictor
