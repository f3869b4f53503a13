#include "fedsig/predictor/tensor.hpp"

namespace fedsig::predictor {

void fill_uniform(Mat& m, double limit, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
}

}  // namespace fedsig::predictor
