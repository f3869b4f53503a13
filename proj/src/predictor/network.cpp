#include "fedsig/predictor/network.hpp"

#include <cmath>

#include "fedsig/error.hpp"

namespace fedsig::predictor {

std::string PredictorConfig::validate() const {
  if (n_features <= 0 || n_classes <= 1) return "need at least one feature and two classes";
  if (tokens <= 0 || d_model <= 0) return "tokens and d_model must be positive";
  if (n_heads <= 0 || d_model % n_heads != 0) return "n_heads must divide d_model";
  if (pool_width <= 0 || tokens % pool_width != 0) return "pool_width must divide tokens";
  if (conv_kernel <= 0 || conv1_channels <= 0 || conv2_channels <= 0 || lstm_hidden <= 0) {
    return "layer widths must be positive";
  }
  for (auto w : fc_dims) {
    if (w <= 0) return "fc widths must be positive";
  }
  if (fc_dims.back() != n_classes) return "last fc width must equal n_classes";
  for (double r : dropout) {
    if (!(r >= 0.0 && r < 1.0)) return "dropout rates must lie in [0,1)";
  }
  if (!(signal_threshold >= 0.0 && signal_threshold <= 1.0)) return "signal_threshold outside [0,1]";
  return {};
}

Network::Network(const PredictorConfig& cfg) : cfg_(cfg), pool_(cfg.pool_width) {
  if (auto problem = cfg.validate(); !problem.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "predictor config: " + problem);
  }
  embed_ = Linear("embed", cfg.n_features, cfg.tokens * cfg.d_model);
  attention_ = MultiHeadAttention("attn", cfg.d_model, cfg.n_heads);
  conv1_ = Conv1d("conv1", cfg.d_model, cfg.conv1_channels, cfg.conv_kernel);
  conv2_ = Conv1d("conv2", cfg.conv1_channels, cfg.conv2_channels, cfg.conv_kernel);
  lstm_ = BiLstm("lstm", cfg.conv2_channels, cfg.lstm_hidden);
  Eigen::Index in = (cfg.tokens / cfg.pool_width) * 2 * cfg.lstm_hidden;
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    fc_[i] = Linear("fc" + std::to_string(i + 1), in, cfg.fc_dims[i]);
    in = cfg.fc_dims[i];
  }
  for (std::size_t i = 0; i < drop_.size(); ++i) drop_[i] = Dropout(cfg.dropout[i]);
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out = embed_.params();
  for (auto* p : attention_.params()) out.push_back(p);
  for (auto* p : conv1_.params()) out.push_back(p);
  for (auto* p : conv2_.params()) out.push_back(p);
  for (auto* p : lstm_.params()) out.push_back(p);
  for (auto& fc : fc_) {
    for (auto* p : fc.params()) out.push_back(p);
  }
  return out;
}

void Network::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (auto* p : params()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void Network::init(Rng& rng) {
  auto fan_in_limit = [&](Eigen::Index fan_in) {
    if (cfg_.init_gain <= 0.0) return cfg_.init_range;
    return cfg_.init_gain * std::sqrt(6.0 / static_cast<double>(fan_in));
  };
  for (auto* p : params()) {
    const bool is_bias = p->value.rows() == 1;
    const bool is_output = p->name.rfind("fc5.", 0) == 0;
    double limit = cfg_.init_range;
    if (!is_bias && !is_output) {
      // Every weight is stored fan_in x fan_out except LSTM recurrences,
      // whose fan-in is also the row count.
      limit = fan_in_limit(p->value.rows());
    }
    fill_uniform(p->value, limit, rng);
  }
}

Mat Network::forward(const Mat& x, Rng* dropout_rng) {
  if (x.rows() == 0) throw Error(ErrorKind::kShapeMismatch, "empty batch");
  if (x.cols() != cfg_.n_features) {
    throw Error(ErrorKind::kShapeMismatch, "expected " + std::to_string(cfg_.n_features) +
                                               " features, got " + std::to_string(x.cols()));
  }
  batch_ = x.rows();
  const Mat tokens = view_rows(embed_.forward(x), batch_ * cfg_.tokens);
  Mat h = attention_.forward(tokens, batch_);
  h = relu1_.forward(conv1_.forward(h, batch_));
  h = pool_.forward(h, batch_);
  h = relu2_.forward(conv2_.forward(h, batch_));
  h = lstm_.forward(h, batch_);
  h = view_rows(h, batch_);
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    h = fc_[i].forward(h);
    if (i < fc_relu_.size()) h = fc_relu_[i].forward(h);
    if (i < drop_.size()) h = drop_[i].forward(h, dropout_rng);
  }
  return h;
}

void Network::backward(const Mat& dlogits) {
  Mat g = dlogits;
  for (std::size_t i = fc_.size(); i-- > 0;) {
    if (i < drop_.size()) g = drop_[i].backward(g);
    if (i < fc_relu_.size()) g = fc_relu_[i].backward(g);
    g = fc_[i].backward(g);
  }
  const Eigen::Index pooled = cfg_.tokens / cfg_.pool_width;
  g = view_rows(g, batch_ * pooled);
  g = lstm_.backward(g);
  g = conv2_.backward(relu2_.backward(g));
  g = pool_.backward(g);
  g = conv1_.backward(relu1_.backward(g));
  g = attention_.backward(g);
  embed_.backward(view_rows(g, batch_));
}

double loss_and_grads(Network& net, const Mat& x, std::span<const std::uint32_t> labels,
                      Rng* dropout_rng) {
  net.zero_grad();
  const Mat logits = net.forward(x, dropout_rng);
  Mat dlogits;
  const double loss = softmax_cross_entropy(logits, labels, &dlogits);
  net.backward(dlogits);
  return loss;
}

}  // namespace fedsig::predictor
