#include "fedsig/predictor/layers.hpp"

#include <cmath>

#include "fedsig/error.hpp"

namespace fedsig::predictor {

Linear::Linear(const std::string& name, Eigen::Index in, Eigen::Index out)
    : w(name + ".w", in, out), b(name + ".b", 1, out) {}

Mat Linear::forward(const Mat& x) {
  if (x.cols() != w.value.rows()) {
    throw Error(ErrorKind::kShapeMismatch, w.name + ": expected " + std::to_string(w.value.rows()) +
                                               " inputs, got " + std::to_string(x.cols()));
  }
  x_ = x;
  Mat y = x * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

Mat Linear::backward(const Mat& dy) {
  w.grad.noalias() += x_.transpose() * dy;
  b.grad.row(0) += dy.colwise().sum();
  return dy * w.value.transpose();
}

Mat Relu::forward(const Mat& x) {
  x_ = x;
  return x.cwiseMax(0.0);
}

Mat Relu::backward(const Mat& dy) const {
  return (x_.array() > 0.0).select(dy, 0.0);
}

Mat Dropout::forward(const Mat& x, Rng* rng) {
  active_ = rng != nullptr && rate_ > 0.0;
  if (!active_) return x;
  const double keep = 1.0 - rate_;
  mask_.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask_.size(); ++i) {
    mask_.data()[i] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
  }
  return x.cwiseProduct(mask_);
}

Mat Dropout::backward(const Mat& dy) const {
  return active_ ? Mat(dy.cwiseProduct(mask_)) : dy;
}

Conv1d::Conv1d(const std::string& name, Eigen::Index in_channels, Eigen::Index out_channels,
               Eigen::Index kernel)
    : w(name + ".w", kernel * in_channels, out_channels),
      b(name + ".b", 1, out_channels),
      in_(in_channels),
      kernel_(kernel) {}

Mat Conv1d::forward(const Mat& x, Eigen::Index batch) {
  if (x.cols() != in_ || batch <= 0 || x.rows() % batch != 0) {
    throw Error(ErrorKind::kShapeMismatch, w.name + ": bad input shape");
  }
  batch_ = batch;
  steps_ = x.rows() / batch;
  const Eigen::Index left = (kernel_ - 1) / 2;
  cols_ = Mat::Zero(x.rows(), kernel_ * in_);
  for (Eigen::Index n = 0; n < batch_; ++n) {
    for (Eigen::Index t = 0; t < steps_; ++t) {
      for (Eigen::Index k = 0; k < kernel_; ++k) {
        const Eigen::Index src = t + k - left;
        if (src < 0 || src >= steps_) continue;
        cols_.block(n * steps_ + t, k * in_, 1, in_) = x.row(n * steps_ + src);
      }
    }
  }
  Mat y = cols_ * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

Mat Conv1d::backward(const Mat& dy) {
  w.grad.noalias() += cols_.transpose() * dy;
  b.grad.row(0) += dy.colwise().sum();
  const Mat dcols = dy * w.value.transpose();
  const Eigen::Index left = (kernel_ - 1) / 2;
  Mat dx = Mat::Zero(batch_ * steps_, in_);
  for (Eigen::Index n = 0; n < batch_; ++n) {
    for (Eigen::Index t = 0; t < steps_; ++t) {
      for (Eigen::Index k = 0; k < kernel_; ++k) {
        const Eigen::Index src = t + k - left;
        if (src < 0 || src >= steps_) continue;
        dx.row(n * steps_ + src) += dcols.block(n * steps_ + t, k * in_, 1, in_);
      }
    }
  }
  return dx;
}

Mat MaxPool1d::forward(const Mat& x, Eigen::Index batch) {
  if (batch <= 0 || x.rows() % batch != 0 || (x.rows() / batch) % width_ != 0) {
    throw Error(ErrorKind::kShapeMismatch, "max-pool width must divide the step count");
  }
  in_rows_ = x.rows();
  const Eigen::Index out_rows = x.rows() / width_;
  Mat y(out_rows, x.cols());
  argmax_.assign(static_cast<std::size_t>(y.size()), 0);
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index best = r * width_;
      for (Eigen::Index k = 1; k < width_; ++k) {
        if (x(r * width_ + k, c) > x(best, c)) best = r * width_ + k;
      }
      y(r, c) = x(best, c);
      argmax_[static_cast<std::size_t>(r * x.cols() + c)] = best;
    }
  }
  return y;
}

Mat MaxPool1d::backward(const Mat& dy) const {
  Mat dx = Mat::Zero(in_rows_, dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    for (Eigen::Index c = 0; c < dy.cols(); ++c) {
      dx(argmax_[static_cast<std::size_t>(r * dy.cols() + c)], c) += dy(r, c);
    }
  }
  return dx;
}

Mat softmax_rows(const Mat& logits) {
  Mat p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p.row(r).array() -= p.row(r).maxCoeff();
    p.row(r) = p.row(r).array().exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

double softmax_cross_entropy(const Mat& logits, std::span<const std::uint32_t> labels,
                             Mat* dlogits) {
  const Eigen::Index n = logits.rows();
  if (static_cast<std::size_t>(n) != labels.size() || n == 0) {
    throw Error(ErrorKind::kShapeMismatch, "logits and labels differ in length");
  }
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(r)]);
    if (y >= logits.cols()) throw Error(ErrorKind::kShapeMismatch, "label outside the class range");
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    loss += lse - logits(r, y);
  }
  if (dlogits) {
    *dlogits = softmax_rows(logits);
    for (Eigen::Index r = 0; r < n; ++r) (*dlogits)(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    *dlogits /= static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

}  // namespace fedsig::predictor
