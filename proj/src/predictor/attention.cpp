#include "fedsig/predictor/attention.hpp"

#include <cmath>

#include "fedsig/error.hpp"

namespace fedsig::predictor {

MultiHeadAttention::MultiHeadAttention(const std::string& name, Eigen::Index d_model,
                                       Eigen::Index heads)
    : q(name + ".q", d_model, d_model),
      k(name + ".k", d_model, d_model),
      v(name + ".v", d_model, d_model),
      o(name + ".o", d_model, d_model),
      d_model_(d_model),
      heads_(heads) {
  if (heads <= 0 || d_model % heads != 0) {
    throw Error(ErrorKind::kInvalidArgument, "n_heads must divide d_model");
  }
}

std::vector<Param*> MultiHeadAttention::params() {
  return {&q.w, &q.b, &k.w, &k.b, &v.w, &v.b, &o.w, &o.b};
}

Mat MultiHeadAttention::forward(const Mat& x, Eigen::Index batch) {
  if (batch <= 0 || x.rows() % batch != 0 || x.cols() != d_model_) {
    throw Error(ErrorKind::kShapeMismatch, "attention input shape");
  }
  batch_ = batch;
  steps_ = x.rows() / batch;
  const Eigen::Index dh = d_model_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  qx_ = q.forward(x);
  kx_ = k.forward(x);
  vx_ = v.forward(x);
  weights_.resize(batch_ * heads_ * steps_, steps_);
  Mat heads_out(x.rows(), d_model_);
  for (Eigen::Index n = 0; n < batch_; ++n) {
    for (Eigen::Index h = 0; h < heads_; ++h) {
      const auto qb = qx_.block(n * steps_, h * dh, steps_, dh);
      const auto kb = kx_.block(n * steps_, h * dh, steps_, dh);
      const auto vb = vx_.block(n * steps_, h * dh, steps_, dh);
      const Mat a = softmax_rows((qb * kb.transpose()) * scale);
      weights_.block((n * heads_ + h) * steps_, 0, steps_, steps_) = a;
      heads_out.block(n * steps_, h * dh, steps_, dh) = a * vb;
    }
  }
  return o.forward(heads_out);
}

Mat MultiHeadAttention::backward(const Mat& dy) {
  const Eigen::Index dh = d_model_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Mat dheads = o.backward(dy);
  Mat dq = Mat::Zero(qx_.rows(), d_model_);
  Mat dk = Mat::Zero(kx_.rows(), d_model_);
  Mat dv = Mat::Zero(vx_.rows(), d_model_);
  for (Eigen::Index n = 0; n < batch_; ++n) {
    for (Eigen::Index h = 0; h < heads_; ++h) {
      const auto qb = qx_.block(n * steps_, h * dh, steps_, dh);
      const auto kb = kx_.block(n * steps_, h * dh, steps_, dh);
      const auto vb = vx_.block(n * steps_, h * dh, steps_, dh);
      const auto a = weights_.block((n * heads_ + h) * steps_, 0, steps_, steps_);
      const auto dout = dheads.block(n * steps_, h * dh, steps_, dh);
      const Mat da = dout * vb.transpose();
      dv.block(n * steps_, h * dh, steps_, dh) = a.transpose() * dout;
      // Softmax Jacobian per row: ds = a * (da - <da, a>).
      const Eigen::VectorXd inner = (da.array() * a.array()).rowwise().sum();
      const Mat ds = (a.array() * (da.array().colwise() - inner.array())).matrix() * scale;
      dq.block(n * steps_, h * dh, steps_, dh) = ds * kb;
      dk.block(n * steps_, h * dh, steps_, dh) = ds.transpose() * qb;
    }
  }
  Mat dx = q.backward(dq);
  dx += k.backward(dk);
  dx += v.backward(dv);
  return dx;
}

}  // namespace fedsig::predictor
