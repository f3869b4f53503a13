#include "fedsig/predictor/train.hpp"

#include <cmath>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"

namespace fedsig::predictor {

namespace {

constexpr Eigen::Index kPredictChunk = 512;

bool all_finite(Network& net) {
  for (auto* p : net.params()) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

}  // namespace

Mat feature_matrix(const Dataset& d) {
  const auto width = static_cast<Eigen::Index>(d.schema.size());
  Mat x(static_cast<Eigen::Index>(d.size()), width);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto& f = d.records[static_cast<std::size_t>(r)].features;
    if (static_cast<Eigen::Index>(f.size()) != width) {
      throw Error(ErrorKind::kShapeMismatch, "record features do not match the schema");
    }
    for (Eigen::Index c = 0; c < width; ++c) x(r, c) = f[static_cast<std::size_t>(c)];
  }
  return x;
}

std::vector<std::uint32_t> label_vector(const Dataset& d) {
  std::vector<std::uint32_t> y;
  y.reserve(d.size());
  for (const auto& r : d.records) y.push_back(r.adr_label.value);
  return y;
}

PredictorConfig configured_for(const Dataset& d, PredictorConfig cfg) {
  cfg.n_features = static_cast<Eigen::Index>(d.schema.size());
  cfg.n_classes = static_cast<Eigen::Index>(d.adr_universe.size());
  cfg.fc_dims.back() = cfg.n_classes;
  return cfg;
}

void fit(Network& net, const Mat& x, std::span<const std::uint32_t> labels,
         const PredictorConfig& cfg, TrainingTrace& trace) {
  trace.loss.clear();
  trace.learning_rate = cfg.learning_rate;
  trace.epochs = cfg.epochs;
  Rng dropout_rng = Rng(cfg.seed).fork("dropout");
  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = softmax_cross_entropy(net.forward(x), labels, nullptr);
    trace.loss.push_back(loss);
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::kNonFiniteLoss, "loss " + csv::format_double(loss) + " at epoch " +
                                                 std::to_string(e) + " (learning rate " +
                                                 csv::format_double(cfg.learning_rate) + ")");
    }
    loss_and_grads(net, x, labels, &dropout_rng);
    for (auto* p : net.params()) p->value -= cfg.learning_rate * p->grad;
  }
  if (!all_finite(net)) {
    throw Error(ErrorKind::kNonFiniteLoss, "parameters became non-finite in the last update");
  }
}

TrainedModel train(const Dataset& clean, const PredictorConfig& cfg) {
  if (clean.records.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot train on an empty dataset");
  const auto full = configured_for(clean, cfg);
  TrainedModel model{Network(full), {}};
  Rng init_rng = Rng(full.seed).fork("init");
  model.net.init(init_rng);
  const Mat x = feature_matrix(clean);
  const auto y = label_vector(clean);
  fit(model.net, x, y, full, model.trace);
  return model;
}

SignalPrediction make_prediction(std::uint64_t record_id, const Vec& logits, double threshold) {
  SignalPrediction s;
  s.record_id = record_id;
  const Mat probs = softmax_rows(logits);
  s.class_probs.assign(probs.data(), probs.data() + probs.size());
  Eigen::Index best = 0;
  s.p = probs.row(0).maxCoeff(&best);
  s.predicted_adr = static_cast<std::uint32_t>(best);
  s.flagged = s.p >= threshold;
  return s;
}

std::vector<SignalPrediction> predict_signals(Network& net, const Dataset& d, double threshold) {
  std::vector<SignalPrediction> out;
  out.reserve(d.size());
  const Mat x = feature_matrix(d);
  for (Eigen::Index start = 0; start < x.rows(); start += kPredictChunk) {
    const Eigen::Index rows = std::min(kPredictChunk, x.rows() - start);
    const Mat logits = net.forward(x.middleRows(start, rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
      out.push_back(make_prediction(d.records[static_cast<std::size_t>(start + r)].record_id,
                                    logits.row(r), threshold));
    }
  }
  return out;
}

std::string trace_csv(const TrainingTrace& trace) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < trace.loss.size(); ++e) {
    out += std::to_string(e) + "," + csv::format_double(trace.loss[e]) + "\n";
  }
  return out;
}

std::string predictions_csv(const std::vector<SignalPrediction>& preds) {
  std::string out = "record_id,predicted_adr,p,flagged\n";
  for (const auto& s : preds) {
    out += std::to_string(s.record_id) + "," + std::to_string(s.predicted_adr) + "," +
           csv::format_double(s.p) + "," + (s.flagged ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace fedsig::predictor
