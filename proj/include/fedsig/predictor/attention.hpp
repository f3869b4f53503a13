#pragma once

#include <string>
#include <vector>

#include "fedsig/predictor/layers.hpp"

namespace fedsig::predictor {

// Multi-head scaled dot-product self-attention over the steps of each batch
// element: per head softmax(Q K^T / sqrt(d_head)) V, heads concatenated and
// fused by a linear output projection.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, Eigen::Index d_model, Eigen::Index heads);

  Mat forward(const Mat& x, Eigen::Index batch);
  Mat backward(const Mat& dy);
  std::vector<Param*> params();

  // Attention weights of the last forward pass: (batch*heads) blocks of
  // steps x steps, stacked by rows.
  const Mat& weights() const { return weights_; }

  Linear q, k, v, o;

 private:
  Eigen::Index d_model_ = 0;
  Eigen::Index heads_ = 1;
  Eigen::Index batch_ = 0;
  Eigen::Index steps_ = 0;
  Mat qx_, kx_, vx_;
  Mat weights_;
};

}  // namespace fedsig::predictor
