#include "fedsig/predictor/lstm.hpp"

#include "fedsig/error.hpp"

namespace fedsig::predictor {

namespace {

using Arr = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mat sigmoid(const Mat& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

LstmCell::LstmCell(const std::string& name, Eigen::Index in, Eigen::Index hidden, bool reversed)
    : wx(name + ".wx", in, 4 * hidden),
      wh(name + ".wh", hidden, 4 * hidden),
      b(name + ".b", 1, 4 * hidden),
      hidden_(hidden),
      reversed_(reversed) {}

Mat LstmCell::forward(const Mat& x, Eigen::Index batch) {
  if (batch <= 0 || x.rows() % batch != 0 || x.cols() != wx.value.rows()) {
    throw Error(ErrorKind::kShapeMismatch, wx.name + ": bad input shape");
  }
  batch_ = batch;
  steps_ = x.rows() / batch;
  const Eigen::Index H = hidden_;
  x_.assign(static_cast<std::size_t>(steps_), Mat());
  gates_ = x_;
  c_ = x_;
  h_ = x_;
  Mat out(x.rows(), H);
  Mat h_prev = Mat::Zero(batch_, H);
  Mat c_prev = Mat::Zero(batch_, H);
  for (Eigen::Index s = 0; s < steps_; ++s) {
    const Eigen::Index t = reversed_ ? steps_ - 1 - s : s;
    Mat xt(batch_, x.cols());
    for (Eigen::Index n = 0; n < batch_; ++n) xt.row(n) = x.row(n * steps_ + t);
    Mat z = xt * wx.value + h_prev * wh.value;
    z.rowwise() += b.value.row(0);
    Mat gates(batch_, 4 * H);
    gates.leftCols(2 * H) = sigmoid(z.leftCols(2 * H));
    gates.middleCols(2 * H, H) = z.middleCols(2 * H, H).array().tanh().matrix();
    gates.rightCols(H) = sigmoid(z.rightCols(H));
    const Mat c = (gates.middleCols(H, H).array() * c_prev.array() +
                   gates.leftCols(H).array() * gates.middleCols(2 * H, H).array())
                      .matrix();
    const Mat h = (gates.rightCols(H).array() * c.array().tanh()).matrix();
    for (Eigen::Index n = 0; n < batch_; ++n) out.row(n * steps_ + t) = h.row(n);
    const auto si = static_cast<std::size_t>(s);
    x_[si] = std::move(xt);
    gates_[si] = std::move(gates);
    c_[si] = c;
    h_[si] = h;
    h_prev = h;
    c_prev = c;
  }
  return out;
}

Mat LstmCell::backward(const Mat& dh_out) {
  const Eigen::Index H = hidden_;
  Mat dx(batch_ * steps_, wx.value.rows());
  Mat dh_next = Mat::Zero(batch_, H);
  Mat dc_next = Mat::Zero(batch_, H);
  for (Eigen::Index s = steps_ - 1; s >= 0; --s) {
    const Eigen::Index t = reversed_ ? steps_ - 1 - s : s;
    const auto si = static_cast<std::size_t>(s);
    Mat dh = dh_next;
    for (Eigen::Index n = 0; n < batch_; ++n) dh.row(n) += dh_out.row(n * steps_ + t);
    const Mat& g = gates_[si];
    const auto i = g.leftCols(H).array();
    const auto f = g.middleCols(H, H).array();
    const auto cand = g.middleCols(2 * H, H).array();
    const auto o = g.rightCols(H).array();
    const Arr tanh_c = c_[si].array().tanh();
    const Arr c_prev =
        s > 0 ? Arr(c_[si - 1].array()) : Arr::Zero(batch_, H);
    const Arr dc = dc_next.array() + dh.array() * o * (1.0 - tanh_c.square());
    Mat dz(batch_, 4 * H);
    dz.leftCols(H) = (dc * cand * i * (1.0 - i)).matrix();
    dz.middleCols(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.middleCols(2 * H, H) = (dc * i * (1.0 - cand.square())).matrix();
    dz.rightCols(H) = (dh.array() * tanh_c * o * (1.0 - o)).matrix();
    wx.grad.noalias() += x_[si].transpose() * dz;
    if (s > 0) wh.grad.noalias() += h_[si - 1].transpose() * dz;
    b.grad.row(0) += dz.colwise().sum();
    const Mat dxt = dz * wx.value.transpose();
    for (Eigen::Index n = 0; n < batch_; ++n) dx.row(n * steps_ + t) = dxt.row(n);
    dh_next = dz * wh.value.transpose();
    dc_next = (dc * f).matrix();
  }
  return dx;
}

BiLstm::BiLstm(const std::string& name, Eigen::Index in, Eigen::Index hidden)
    : fwd(name + ".fwd", in, hidden, false), bwd(name + ".bwd", in, hidden, true), hidden_(hidden) {}

std::vector<Param*> BiLstm::params() {
  auto p = fwd.params();
  for (auto* q : bwd.params()) p.push_back(q);
  return p;
}

Mat BiLstm::forward(const Mat& x, Eigen::Index batch) {
  Mat out(x.rows(), 2 * hidden_);
  out.leftCols(hidden_) = fwd.forward(x, batch);
  out.rightCols(hidden_) = bwd.forward(x, batch);
  return out;
}

Mat BiLstm::backward(const Mat& dy) {
  Mat dx = fwd.backward(dy.leftCols(hidden_));
  dx += bwd.backward(dy.rightCols(hidden_));
  return dx;
}

}  // namespace fedsig::predictor
