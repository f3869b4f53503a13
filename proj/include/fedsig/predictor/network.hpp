#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsig/predictor/attention.hpp"
#include "fedsig/predictor/layers.hpp"
#include "fedsig/predictor/lstm.hpp"

namespace fedsig::predictor {

struct PredictorConfig {
  Eigen::Index n_features = 30;
  Eigen::Index n_classes = 10;
  Eigen::Index tokens = 8;  // sequence length L produced by the embedding
  Eigen::Index d_model = 32;
  Eigen::Index n_heads = 4;
  Eigen::Index conv_kernel = 4;
  Eigen::Index conv1_channels = 16;
  Eigen::Index conv2_channels = 32;
  Eigen::Index pool_width = 2;
  Eigen::Index lstm_hidden = 16;
  // FC1..FC5 output widths; the last must equal n_classes.
  std::array<Eigen::Index, 5> fc_dims{256, 128, 64, 32, 10};
  // After FC1, FC2, FC3.
  std::array<double, 3> dropout{0.5, 0.5, 0.25};
  double learning_rate = 0.03;
  int epochs = 100;
  std::uint64_t seed = 0;
  double signal_threshold = 0.9;
  // Weights ~ U(-a, a) with a = init_gain * sqrt(6 / fan_in); biases and the
  // output layer ~ U(-init_range, init_range). init_gain = 0 puts every
  // parameter on U(-init_range, init_range).
  double init_gain = 1.2;
  double init_range = 0.05;

  // Empty when consistent; otherwise the first problem found.
  std::string validate() const;
};

// ADR-signal network:
//   features -> linear tokenizer (L tokens of width d_model)
//   -> multi-head self-attention -> conv1 + ReLU -> max-pool -> conv2 + ReLU
//   -> bidirectional LSTM -> flatten -> FC1..FC4 (ReLU; dropout after 1..3)
//   -> FC5 logits.
class Network {
 public:
  explicit Network(const PredictorConfig& cfg);

  // dropout_rng == nullptr runs in inference mode.
  Mat forward(const Mat& x, Rng* dropout_rng = nullptr);
  // Back-propagates d(loss)/d(logits) of the last forward pass, adding into
  // every Param::grad.
  void backward(const Mat& dlogits);

  std::vector<Param*> params();
  void zero_grad();
  void init(Rng& rng);
  std::size_t parameter_count();

  const PredictorConfig& config() const { return cfg_; }
  MultiHeadAttention& attention() { return attention_; }

 private:
  PredictorConfig cfg_;
  Eigen::Index batch_ = 0;
  Linear embed_;
  MultiHeadAttention attention_;
  Conv1d conv1_;
  Relu relu1_;
  MaxPool1d pool_;
  Conv1d conv2_;
  Relu relu2_;
  BiLstm lstm_;
  std::array<Linear, 5> fc_;
  std::array<Relu, 4> fc_relu_;
  std::array<Dropout, 3> drop_;
};

// Mean cross-entropy of the network on (x, labels) and its gradients, which
// are left in Param::grad (zeroed first).
double loss_and_grads(Network& net, const Mat& x, std::span<const std::uint32_t> labels,
                      Rng* dropout_rng);

}  // namespace fedsig::predictor
