#pragma once

#include <string>
#include <vector>

#include "fedsig/predictor/tensor.hpp"

namespace fedsig::predictor {

// One LSTM direction. Gate blocks in every 4H-wide parameter are ordered
// input, forget, candidate, output:
//   i = s(.), f = s(.), g = tanh(.), o = s(.)
//   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
// with zero initial state. A reversed cell walks the steps right to left but
// writes h_t at the step it read.
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, Eigen::Index in, Eigen::Index hidden, bool reversed);

  // x rows are (batch, step) pairs; returns hidden states in the same layout.
  Mat forward(const Mat& x, Eigen::Index batch);
  Mat backward(const Mat& dh);
  std::vector<Param*> params() { return {&wx, &wh, &b}; }

  Param wx;  // in x 4H
  Param wh;  // H x 4H
  Param b;   // 1 x 4H

 private:
  Eigen::Index hidden_ = 0;
  bool reversed_ = false;
  Eigen::Index batch_ = 0;
  Eigen::Index steps_ = 0;
  // Per processing order s: inputs, gate activations, cell states, hidden.
  std::vector<Mat> x_, gates_, c_, h_;
};

// Forward and reversed cells over the same input, hidden states concatenated
// per step: [forward | backward].
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, Eigen::Index in, Eigen::Index hidden);

  Mat forward(const Mat& x, Eigen::Index batch);
  Mat backward(const Mat& dy);
  std::vector<Param*> params();

  LstmCell fwd;
  LstmCell bwd;

 private:
  Eigen::Index hidden_ = 0;
};

}  // namespace fedsig::predictor
