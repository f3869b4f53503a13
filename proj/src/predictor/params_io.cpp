#include "fedsig/predictor/params_io.hpp"

#include <bit>
#include <cstring>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"

namespace fedsig::predictor {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'P', 'A', 'R', 'A', 'M', '1'};

static_assert(std::endian::native == std::endian::little, "params IO assumes little-endian");

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorKind::kParse, "params file truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    take(&v, 4);
    return v;
  }
  std::string str(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

nlohmann::json config_to_json(const PredictorConfig& c) {
  return nlohmann::json{{"n_features", c.n_features},
                        {"n_classes", c.n_classes},
                        {"tokens", c.tokens},
                        {"d_model", c.d_model},
                        {"n_heads", c.n_heads},
                        {"conv_kernel", c.conv_kernel},
                        {"conv1_channels", c.conv1_channels},
                        {"conv2_channels", c.conv2_channels},
                        {"pool_width", c.pool_width},
                        {"lstm_hidden", c.lstm_hidden},
                        {"fc_dims", c.fc_dims},
                        {"dropout", c.dropout},
                        {"learning_rate", c.learning_rate},
                        {"epochs", c.epochs},
                        {"seed", c.seed},
                        {"signal_threshold", c.signal_threshold},
                        {"init_gain", c.init_gain},
                        {"init_range", c.init_range}};
}

PredictorConfig config_from_json(const nlohmann::json& j, PredictorConfig c) {
  try {
    c.n_features = j.value("n_features", c.n_features);
    c.n_classes = j.value("n_classes", c.n_classes);
    c.tokens = j.value("tokens", c.tokens);
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
    c.conv1_channels = j.value("conv1_channels", c.conv1_channels);
    c.conv2_channels = j.value("conv2_channels", c.conv2_channels);
    c.pool_width = j.value("pool_width", c.pool_width);
    c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
    c.fc_dims = j.value("fc_dims", c.fc_dims);
    c.dropout = j.value("dropout", c.dropout);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.signal_threshold = j.value("signal_threshold", c.signal_threshold);
    c.init_gain = j.value("init_gain", c.init_gain);
    c.init_range = j.value("init_range", c.init_range);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("predictor config: ") + e.what());
  }
  return c;
}

std::string serialize_params(Network& net) {
  std::string out(kMagic, sizeof(kMagic));
  const auto cfg = config_to_json(net.config()).dump();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  const auto params = net.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
  }
  for (const auto* p : params) {
    out.append(reinterpret_cast<const char*>(p->value.data()),
               static_cast<std::size_t>(p->value.size()) * sizeof(double));
  }
  return out;
}

Network deserialize_params(const std::string& bytes) {
  Reader in(bytes);
  if (in.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw Error(ErrorKind::kParse, "not a predictor params file");
  }
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(in.str(in.u32()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("params config: ") + e.what());
  }
  Network net(config_from_json(cfg_json));
  auto params = net.params();
  if (in.u32() != params.size()) throw Error(ErrorKind::kShapeMismatch, "params tensor count");
  for (auto* p : params) {
    const auto name = in.str(in.u32());
    const auto rows = in.u32();
    const auto cols = in.u32();
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw Error(ErrorKind::kShapeMismatch, "params tensor '" + name + "' does not match " + p->name);
    }
  }
  for (auto* p : params) in.take(p->value.data(), static_cast<std::size_t>(p->value.size()) * sizeof(double));
  if (!in.done()) throw Error(ErrorKind::kParse, "trailing bytes in params file");
  return net;
}

void save_params(Network& net, const std::string& path) { csv::write_file(path, serialize_params(net)); }

Network load_params(const std::string& path) { return deserialize_params(csv::read_file(path)); }

}  // namespace fedsig::predictor
