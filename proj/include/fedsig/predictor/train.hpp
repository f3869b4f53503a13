#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsig/domain.hpp"
#include "fedsig/predictor/network.hpp"

namespace fedsig::predictor {

struct TrainingTrace {
  // loss[e] is the inference-mode (dropout off) mean loss on the training set
  // just before update e.
  std::vector<double> loss;
  double learning_rate = 0.0;
  int epochs = 0;
};

struct SignalPrediction {
  std::uint64_t record_id = 0;
  std::vector<double> class_probs;
  std::uint32_t predicted_adr = 0;
  double p = 0.0;
  bool flagged = false;
};

Mat feature_matrix(const Dataset& d);
std::vector<std::uint32_t> label_vector(const Dataset& d);

// cfg with n_features, n_classes and the output width taken from `d`.
PredictorConfig configured_for(const Dataset& d, PredictorConfig cfg);

// cfg.epochs full-batch gradient-descent steps at cfg.learning_rate, dropout
// masks drawn from the seed's "dropout" stream. `trace` is filled as training
// runs, so it is still meaningful when NonFiniteLoss is thrown.
void fit(Network& net, const Mat& x, std::span<const std::uint32_t> labels,
         const PredictorConfig& cfg, TrainingTrace& trace);

struct TrainedModel {
  Network net;
  TrainingTrace trace;
};

// Initializes from the seed's "init" stream, then fits. Throws NonFiniteLoss.
TrainedModel train(const Dataset& clean, const PredictorConfig& cfg);

// Per record: softmax probabilities, argmax class, its probability p, and
// flagged = p >= threshold.
std::vector<SignalPrediction> predict_signals(Network& net, const Dataset& d, double threshold);
SignalPrediction make_prediction(std::uint64_t record_id, const Vec& logits, double threshold);

std::string trace_csv(const TrainingTrace& trace);
std::string predictions_csv(const std::vector<SignalPrediction>& preds);

}  // namespace fedsig::predictor
