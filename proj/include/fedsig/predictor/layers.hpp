#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsig/predictor/tensor.hpp"

namespace fedsig::predictor {

// Each layer caches what its backward pass needs during forward. backward()
// adds parameter gradients into Param::grad and returns the input gradient.

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out);

  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  std::vector<Param*> params() { return {&w, &b}; }

  Param w;  // in x out
  Param b;  // 1 x out

 private:
  Mat x_;
};

class Relu {
 public:
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy) const;

 private:
  Mat x_;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) during training so
// inference is the identity.
class Dropout {
 public:
  explicit Dropout(double rate = 0.0) : rate_(rate) {}

  // rng == nullptr means inference.
  Mat forward(const Mat& x, Rng* rng);
  Mat backward(const Mat& dy) const;
  double rate() const { return rate_; }

 private:
  double rate_;
  Mat mask_;
  bool active_ = false;
};

// 1-D convolution over steps with zero "same" padding: floor((k-1)/2) steps
// on the left, the rest on the right. Input rows are (batch, step) pairs.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string& name, Eigen::Index in_channels, Eigen::Index out_channels,
         Eigen::Index kernel);

  Mat forward(const Mat& x, Eigen::Index batch);
  Mat backward(const Mat& dy);
  std::vector<Param*> params() { return {&w, &b}; }
  Eigen::Index kernel() const { return kernel_; }

  Param w;  // (kernel * in) x out, tap-major
  Param b;  // 1 x out

 private:
  Eigen::Index in_ = 0;
  Eigen::Index kernel_ = 0;
  Eigen::Index batch_ = 0;
  Eigen::Index steps_ = 0;
  Mat cols_;
};

// Non-overlapping max over `width` consecutive steps; ties go to the first.
class MaxPool1d {
 public:
  explicit MaxPool1d(Eigen::Index width = 2) : width_(width) {}

  Mat forward(const Mat& x, Eigen::Index batch);
  Mat backward(const Mat& dy) const;

 private:
  Eigen::Index width_;
  Eigen::Index in_rows_ = 0;
  std::vector<Eigen::Index> argmax_;  // source row per output element
};

// Row-wise softmax with max subtraction.
Mat softmax_rows(const Mat& logits);

// Mean categorical cross-entropy; fills dlogits when non-null.
double softmax_cross_entropy(const Mat& logits, std::span<const std::uint32_t> labels,
                             Mat* dlogits);

}  // namespace fedsig::predictor
