#include <doctest.h>

#include <cmath>
#include <random>

#include "autograph/autodiff.hpp"
#include "autograph/error.hpp"
#include "grad_cases.hpp"
#include "oracles.hpp"

using namespace autograph;
using ad::Tensor;

TEST_CASE("central differences agree with backward for every op, layer and loss") {
  for (const auto& c : gradcases::all_cases()) {
    CAPTURE(c.name);
    CHECK(c.max_rel_error() <= 1e-4);
  }
}

TEST_CASE("backward accumulates into leaves and resets interior nodes") {
  Tensor a = Tensor::parameter(Matrix(1, 1, 3.0));
  Tensor b = Tensor::parameter(Matrix(1, 1, 2.0));
  auto f = [&] { return ad::matmul(a, ad::add(a, b)); };  // a^2 + a b
  ad::backward(f());
  CHECK(a.grad()(0, 0) == doctest::Approx(8.0));
  CHECK(b.grad()(0, 0) == doctest::Approx(3.0));
  ad::backward(f());
  CHECK(a.grad()(0, 0) == doctest::Approx(16.0));
  a.zero_grad();
  CHECK(a.grad()(0, 0) == 0.0);
}

TEST_CASE("topological order lists parents before children") {
  Tensor a = Tensor::parameter(Matrix(2, 2, 1.0));
  Tensor c = Tensor::constant(Matrix(2, 2, 1.0));
  Tensor y = ad::relu(ad::add(ad::matmul(a, c), a));
  const auto order = ad::topological_order(y);
  REQUIRE(order.size() == 4);
  CHECK(order.front() == a.node().get());
  CHECK(order.back() == y.node().get());
  CHECK(ad::topological_order(c).empty());
}

TEST_CASE("softmax rows are stable and sum to one") {
  Matrix logits(2, 3);
  logits.data = {1000.0, 1001.0, 1002.0, -5.0, 0.0, 5.0};
  const Matrix p = ad::softmax_rows(logits);
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 3; ++j) s += p(i, j);
    CHECK(s == doctest::Approx(1.0));
  }
  const double z = 1.0 + std::exp(1.0) + std::exp(2.0);
  CHECK(p(0, 2) == doctest::Approx(std::exp(2.0) / z));
}

TEST_CASE("cross entropy matches a hand computation") {
  Matrix logits(3, 2);
  logits.data = {0.0, 0.0, 2.0, 0.0, 0.0, 5.0};
  std::vector<int> labels{0, 1, 1};
  Mask mask{1, 1, 0};
  Tensor x = Tensor::parameter(logits);
  Tensor loss = ad::masked_softmax_cross_entropy(x, labels, mask);
  const double expect = (std::log(2.0) + (2.0 + std::log(1.0 + std::exp(-2.0)))) / 2.0;
  CHECK(loss.value()(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  ad::backward(loss);
  CHECK(x.grad()(2, 0) == 0.0);
  CHECK(x.grad()(0, 0) == doctest::Approx((0.5 - 1.0) / 2.0));
}

TEST_CASE("dropout: identity at eval, inverted scaling in training") {
  std::mt19937_64 rng(5);
  Tensor x = Tensor::parameter(Matrix(200, 50, 1.0));
  CHECK(ad::dropout(x, 0.5, false, rng).node() == x.node());
  Tensor y = ad::dropout(x, 0.3, true, rng);
  std::size_t kept = 0;
  for (double v : y.value().data) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.7)));
    kept += v != 0.0;
  }
  CHECK(static_cast<double>(kept) / 10000.0 == doctest::Approx(0.7).epsilon(0.05));
  CHECK_THROWS_AS(ad::dropout(x, 1.0, true, rng), ContractViolation);
}

TEST_CASE("sparse constant dropout reproduces dense dropout of the same input") {
  std::mt19937_64 gen(11);
  Matrix dense = gradcases::random_matrix(30, 17, gen);
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (i % 3) dense.data[i] = 0.0;
  const auto sc = ad::SparseConstant::from_dense(dense);
  CHECK(sc.to_dense() == dense);
  CHECK(sc.density() == doctest::Approx(static_cast<double>(sc.nnz()) / dense.size()));
  std::mt19937_64 r1(4), r2(4);
  const Matrix from_dense = ad::dropout(Tensor::constant(dense), 0.5, true, r1).value();
  const Matrix from_sparse = sc.dropout(0.5, r2).to_dense();
  CHECK(from_dense == from_sparse);
  CHECK(r1() == r2());

  Matrix w = gradcases::random_matrix(17, 4, gen);
  auto sp = std::make_shared<const ad::SparseConstant>(sc);
  const Matrix y = ad::sparse_matmul(sp, Tensor::constant(w)).value();
  CHECK(oracle::max_abs_diff(y, oracle::matmul(dense, w)) < 1e-12);
}

TEST_CASE("adam: first step moves each coordinate by lr against the gradient sign") {
  Tensor p = Tensor::parameter(Matrix(1, 3));
  p.value().data = {1.0, -2.0, 0.5};
  p.grad().data = {0.3, -4.0, 0.0};
  std::vector<Tensor> params{p};
  ad::AdamState s;
  s.lr = 0.1;
  ad::adam_step(params, s);
  CHECK(p.value()(0, 0) == doctest::Approx(0.9));
  CHECK(p.value()(0, 1) == doctest::Approx(-1.9));
  CHECK(p.value()(0, 2) == 0.5);

  // Second step with the same gradient keeps the same unit-scaled direction.
  ad::adam_step(params, s);
  CHECK(p.value()(0, 0) == doctest::Approx(0.8));
  CHECK(s.step == 2);
}

TEST_CASE("adam: decoupled decay shrinks the value, coupled l2 enters the gradient") {
  {
    Tensor p = Tensor::parameter(Matrix(1, 1, 2.0));
    std::vector<Tensor> params{p};
    ad::AdamState s;
    s.lr = 0.1;
    s.weight_decay = 0.5;
    ad::adam_step(params, s);  // zero gradient: only the decay acts
    CHECK(p.value()(0, 0) == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
  }
  {
    Tensor p = Tensor::parameter(Matrix(1, 1, 2.0));
    std::vector<Tensor> params{p};
    ad::AdamState s;
    s.lr = 0.1;
    s.l2 = 0.5;
    ad::adam_step(params, s);  // effective gradient 1.0
    CHECK(p.value()(0, 0) == doctest::Approx(1.9));
  }
}

TEST_CASE("adam: matches a scalar reference over many steps") {
  Tensor p = Tensor::parameter(Matrix(1, 1, 1.0));
  std::vector<Tensor> params{p};
  ad::AdamState s;
  s.lr = 0.05;
  double x = 1.0, m = 0, v = 0;
  for (int t = 1; t <= 50; ++t) {
    const double g = 2.0 * x - 0.3;
    p.grad()(0, 0) = g;
    ad::adam_step(params, s);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.05 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  CHECK(p.value()(0, 0) == doctest::Approx(x).epsilon(1e-12));
}
