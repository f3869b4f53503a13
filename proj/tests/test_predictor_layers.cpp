#include <doctest.h>

#include <cmath>

#include "fedsig/predictor/attention.hpp"
#include "fedsig/predictor/layers.hpp"
#include "fedsig/predictor/lstm.hpp"
#include "gradcheck.hpp"

using namespace fedsig;
using namespace fedsig::predictor;

TEST_CASE("every layer class passes the finite-difference check") {
  for (std::uint64_t seed : {1, 2, 3}) {
    for (const auto& layer : testing::layer_gradient_checks(seed)) {
      for (const auto& t : layer.tensors) {
        INFO(layer.layer << " " << t.tensor << " rel " << t.max_rel << " abs " << t.max_abs);
        CHECK(t.max_rel < 1e-4);
      }
    }
  }
}

TEST_CASE("attention hand case") {
  MultiHeadAttention a("attn", 1, 1);
  for (auto* l : {&a.q, &a.k, &a.v, &a.o}) {
    l->w.value.setOnes();
    l->b.value.setZero();
  }
  Mat x(2, 1);
  x << 1, 0;
  const Mat y = a.forward(x, 1);
  const double e = std::exp(1.0);
  CHECK(y(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-15));
  CHECK(y(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  const Mat& w = a.weights();
  CHECK(w(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-15));
  CHECK(w(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-15));
  CHECK(w(1, 0) == 0.5);
  CHECK(w(1, 1) == 0.5);
}

TEST_CASE("attention is permutation equivariant over steps") {
  Rng rng(8);
  MultiHeadAttention a("attn", 4, 2);
  for (auto* p : a.params()) fill_uniform(p->value, 0.7, rng);
  const Eigen::Index steps = 5;
  Mat x(steps, 4);
  fill_uniform(x, 1.0, rng);
  std::vector<Eigen::Index> perm{3, 0, 4, 1, 2};
  Mat px(steps, 4);
  for (Eigen::Index s = 0; s < steps; ++s) px.row(s) = x.row(perm[s]);
  const Mat y = a.forward(x, 1);
  const Mat py = a.forward(px, 1);
  for (Eigen::Index s = 0; s < steps; ++s) {
    for (Eigen::Index c = 0; c < 4; ++c) CHECK(py(s, c) == doctest::Approx(y(perm[s], c)).epsilon(1e-14));
  }
}

TEST_CASE("conv1d keeps the step count and pooling halves it") {
  Rng rng(4);
  Conv1d c("conv", 2, 3, 4);
  for (auto* p : c.params()) fill_uniform(p->value, 0.5, rng);
  Mat x(2 * 8, 2);
  fill_uniform(x, 1.0, rng);
  CHECK(c.forward(x, 2).rows() == 16);
  CHECK(c.forward(x, 2).cols() == 3);
  MaxPool1d pool(2);
  Mat p(4, 1);
  p << 1, 3, 2, 2;
  const Mat y = pool.forward(p, 1);
  CHECK(y(0, 0) == 3);
  CHECK(y(1, 0) == 2);
  Mat dy(2, 1);
  dy << 1, 1;
  const Mat dx = pool.backward(dy);
  CHECK(dx(0, 0) == 0);
  CHECK(dx(1, 0) == 1);
  CHECK(dx(2, 0) == 1);  // ties go to the first
  CHECK(dx(3, 0) == 0);
}

TEST_CASE("softmax is stable for large logits") {
  Mat logits(2, 3);
  logits << 1000, 999, -1000, -1e3, -1e3, -1e3;
  const Mat p = softmax_rows(logits);
  for (Eigen::Index r = 0; r < 2; ++r) {
    CHECK(std::abs(p.row(r).sum() - 1.0) < 1e-9);
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(std::isfinite(p(r, c)));
      CHECK(p(r, c) >= 0.0);
    }
  }
  CHECK(p(0, 0) == doctest::Approx(1 / (1 + std::exp(-1.0))));
}

TEST_CASE("uniform logits give cross-entropy ln 10") {
  const Mat logits = Mat::Zero(4, 10);
  const std::vector<std::uint32_t> labels{0, 3, 9, 9};
  CHECK(std::abs(softmax_cross_entropy(logits, labels, nullptr) - std::log(10.0)) <= 1e-12);
}

TEST_CASE("inverted dropout preserves the expected pre-activation") {
  Rng rng(10);
  Linear next("next", 16, 4);
  fill_uniform(next.w.value, 0.5, rng);
  Mat x(3, 16);
  fill_uniform(x, 1.0, rng);
  x = x.cwiseAbs();
  const Mat ref = next.forward(x);
  Dropout drop(0.5);
  Mat sum = Mat::Zero(ref.rows(), ref.cols());
  const int masks = 10000;
  for (int i = 0; i < masks; ++i) sum += next.forward(drop.forward(x, &rng));
  const Mat mean = sum / masks;
  CHECK((mean - ref).norm() / ref.norm() < 0.02);
  CHECK(drop.forward(x, nullptr) == x);
}
