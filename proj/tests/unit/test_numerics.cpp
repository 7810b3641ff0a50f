#include <cmath>
#include <vector>

#include "audet/numerics/grad_check.hpp"
#include "audet/numerics/init.hpp"
#include "audet/numerics/ops.hpp"
#include "audet/numerics/sgd.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace audet;
using test::random_tensor;
using test::vec;

TEST_SUITE("numerics") {

TEST_CASE("tensor rejects bad shapes") {
  CHECK_THROWS_AS(Tensor<double>({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor<double>({2, 0}, {}), ShapeError);
  CHECK_THROWS_AS(Tensor<double>(Shape{}, {1}), ShapeError);
  CHECK_THROWS_AS(Tensor<double>({3}, {1, 2, 3}).item(), ShapeError);
}

TEST_CASE("linear with identity weight returns its input") {
  const auto x = vec({1, 2});
  const Tensor<double> w({2, 2}, {1, 0, 0, 1});
  const auto y = ops::linear(x, w, vec({0, 0}));
  CHECK(y.vec() == std::vector<double>{1, 2});
}

TEST_CASE("linear on rows matches a hand loop") {
  Rng rng(3);
  const auto x = random_tensor({4, 3}, rng);
  const auto w = random_tensor({5, 3}, rng);
  const auto b = random_tensor({5}, rng);
  const auto y = ops::linear(x, w, b);
  REQUIRE(y.shape() == Shape{4, 5});
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t o = 0; o < 5; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < 3; ++i) acc += w[o * 3 + i] * x[r * 3 + i];
      CHECK(y[r * 5 + o] == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("scalar activations") {
  CHECK(ops::sigmoid(vec({0})).item() == 0.5);
  CHECK(ops::relu(vec({-1})).item() == 0.0);
  const auto s = ops::softmax(vec({0, 0}));
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);
}

TEST_CASE("conv1x1 is a per-pixel dot product") {
  const Tensor<double> x({2, 1, 1}, {3, 4});
  const Tensor<double> w({1, 2}, {1, 1});
  const auto y = ops::conv1x1(x, w, vec({0}));
  CHECK(y.shape() == Shape{1, 1, 1});
  CHECK(y.item() == 7.0);
}

TEST_CASE("conv2d matches a direct loop") {
  Rng rng(11);
  for (std::size_t stride : {1u, 2u}) {
    const std::size_t C = 2, O = 3, H = 6, W = 6, k = 3, pad = 1;
    const auto x = random_tensor({C, H, W}, rng);
    const auto w = random_tensor({O, C, k, k}, rng);
    const auto b = random_tensor({O}, rng);
    const auto y = ops::conv2d(x, w, b, stride, pad);
    const std::size_t Ho = (H + 2 * pad - k) / stride + 1, Wo = (W + 2 * pad - k) / stride + 1;
    REQUIRE(y.shape() == Shape{O, Ho, Wo});
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
          double acc = b[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t u = 0; u < k; ++u)
              for (std::size_t v = 0; v < k; ++v) {
                const long yy = long(i * stride + u) - long(pad), xx = long(j * stride + v) - long(pad);
                if (yy < 0 || xx < 0 || yy >= long(H) || xx >= long(W)) continue;
                acc += w[((o * C + c) * k + u) * k + v] * x[(c * H + yy) * W + xx];
              }
          CHECK(y[(o * Ho + i) * Wo + j] == doctest::Approx(acc).epsilon(1e-12));
        }
  }
}

TEST_CASE("softmax rows sum to one and sigmoid stays inside (0,1)") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_tensor({3, 7}, rng, -30, 30);
    const auto s = ops::softmax(x);
    for (std::size_t r = 0; r < 3; ++r) {
      double total = 0;
      for (std::size_t c = 0; c < 7; ++c) total += s[r * 7 + c];
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
    const auto g = ops::sigmoid(random_tensor({20}, rng, -15, 15));
    for (double v : g.vec()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("layer_norm matches the textbook formula") {
  Rng rng(8);
  const auto x = random_tensor({2, 5}, rng);
  const auto gamma = random_tensor({5}, rng);
  const auto beta = random_tensor({5}, rng);
  const auto y = ops::layer_norm(x, gamma, beta);
  for (std::size_t r = 0; r < 2; ++r) {
    double mu = 0, var = 0;
    for (std::size_t c = 0; c < 5; ++c) mu += x[r * 5 + c] / 5;
    for (std::size_t c = 0; c < 5; ++c) var += (x[r * 5 + c] - mu) * (x[r * 5 + c] - mu) / 5;
    for (std::size_t c = 0; c < 5; ++c) {
      const double ref = (x[r * 5 + c] - mu) / std::sqrt(var + 1e-5) * gamma[c] + beta[c];
      CHECK(y[r * 5 + c] == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("pooling, channel max, broadcast and shape ops") {
  const Tensor<double> x({2, 1, 2}, {1, 5, 4, 2});
  CHECK(ops::global_avg_pool(x).vec() == std::vector<double>{3, 3});
  CHECK(ops::channel_max(x).vec() == std::vector<double>{4, 5});
  const Tensor<double> m({1, 1, 2}, {10, 100});
  CHECK(ops::mul(x, m).vec() == std::vector<double>{10, 500, 40, 200});
  CHECK(ops::add(x, m).vec() == std::vector<double>{11, 105, 14, 102});
  CHECK(ops::sub(x, x).vec() == std::vector<double>{0, 0, 0, 0});
  CHECK(ops::affine(x, 2.0, 1.0).vec() == std::vector<double>{3, 11, 9, 5});
  const auto c = ops::concat<double>({vec({1, 2}), vec({3, 4})});
  CHECK(c.shape() == Shape{2, 2});
  CHECK(ops::slice_rows(c, 1, 1).vec() == std::vector<double>{3, 4});
  CHECK(ops::reshape(c, {4}).shape() == Shape{4});
  CHECK(ops::sum(c).item() == 10.0);
  CHECK(ops::mean(c).item() == 2.5);
  const Tensor<double> a({2, 2}, {1, 2, 3, 4});
  CHECK(ops::matmul(a, a).vec() == std::vector<double>{7, 10, 15, 22});
}

TEST_CASE("shape mismatch errors name the primitive and both shapes") {
  const Tensor<double> a({2, 3}, std::vector<double>(6, 1.0));
  const Tensor<double> b({3, 2}, std::vector<double>(6, 1.0));
  try {
    ops::add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("(2, 3)") != std::string::npos);
    CHECK(msg.find("(3, 2)") != std::string::npos);
  }
  CHECK_THROWS_AS(ops::matmul(a, a), ShapeError);
  CHECK_THROWS_AS(ops::conv1x1(Tensor<double>({2, 1, 1}, {1, 1}), Tensor<double>({1, 3}, {1, 1, 1}), vec({0})),
                  ShapeError);
}

TEST_CASE("non-finite output is a numeric error") {
  CHECK_THROWS_AS(ops::affine(vec({1e308}), 10.0), NumericError);
}

TEST_CASE("single-head attention matches a hand computation") {
  Rng rng(21);
  const auto q = random_tensor({3, 4}, rng), k = random_tensor({3, 4}, rng), v = random_tensor({3, 4}, rng);
  std::vector<double> weights;
  const auto y = ops::attention(q, k, v, 1, &weights);
  REQUIRE(weights.size() == 9);
  for (std::size_t i = 0; i < 3; ++i) {
    double s[3], mx = -1e300, z = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      s[j] = 0;
      for (std::size_t c = 0; c < 4; ++c) s[j] += q[i * 4 + c] * k[j * 4 + c];
      s[j] /= 2.0;  // sqrt(4)
      mx = std::max(mx, s[j]);
    }
    for (double& e : s) z += (e = std::exp(e - mx));
    for (std::size_t j = 0; j < 3; ++j) CHECK(weights[i * 3 + j] == doctest::Approx(s[j] / z).epsilon(1e-12));
    for (std::size_t c = 0; c < 4; ++c) {
      double acc = 0;
      for (std::size_t j = 0; j < 3; ++j) acc += s[j] / z * v[j * 4 + c];
      CHECK(y[i * 4 + c] == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("sigmoid derivative at zero is one quarter") {
  Tape<double> tape;
  const auto x = tape.input(vec({0}));
  tape.backward(ops::sigmoid(x));
  CHECK(tape.grad(x)[0] == 0.25);
}

TEST_CASE("gradient of sum(Wx) has rows equal to x") {
  Parameter<double> w("w", Tensor<double>({3, 2}, {1, 2, 3, 4, 5, 6}));
  Tape<double> tape;
  tape.backward(ops::sum(ops::linear(vec({1, 2}), use(w, &tape))));
  CHECK(w.grad == std::vector<double>{1, 2, 1, 2, 1, 2});
}

TEST_CASE("backward visits nodes in reverse recording order") {
  Tape<double> tape;
  const auto x = tape.input(vec({0.3, -0.2}));
  const auto y = ops::sigmoid(x);
  const auto z = ops::affine(y, 3.0);
  const auto l = ops::sum(z);
  tape.backward(l);
  CHECK(tape.visit_order() == std::vector<std::size_t>{l.node(), z.node(), y.node(), x.node()});
}

TEST_CASE("watching a parameter twice accumulates into one gradient") {
  Parameter<double> p("p", vec({2.0}));
  Tape<double> tape;
  tape.backward(ops::mul(use(p, &tape), use(p, &tape)));
  CHECK(p.grad[0] == 4.0);
}

TEST_CASE("tape misuse is a usage error") {
  Tape<double> a, b;
  const auto x = a.input(vec({1, 2}));
  const auto y = b.input(vec({1, 2}));
  CHECK_THROWS_AS(b.backward(ops::sum(x)), UsageError);
  CHECK_THROWS_AS(ops::add(x, y), UsageError);
  CHECK_THROWS_AS(a.backward(x), UsageError);  // not scalar
  const auto l = ops::sum(x);
  a.backward(l);
  CHECK_THROWS_AS(a.backward(l), UsageError);
}

TEST_CASE("sgd_step follows the definition") {
  Parameter<double> w("w", vec({1.0, 2.0}));
  w.grad = {0.5, 0.0};
  std::vector<Parameter<double>*> params{&w};
  sgd_step<double>(params, 0.1);
  CHECK(w.value[0] == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(w.value[1] == 2.0);
  CHECK(w.grad == std::vector<double>{0, 0});
}

TEST_CASE("sgd_step rejects non-finite gradients without touching any parameter") {
  Parameter<double> a("a", vec({1.0})), b("b", vec({1.0}));
  a.grad = {1.0};
  b.grad = {std::nan("")};
  std::vector<Parameter<double>*> params{&a, &b};
  CHECK_THROWS_AS(sgd_step<double>(params, 0.1), NumericError);
  CHECK(a.value[0] == 1.0);
  CHECK_THROWS_AS(sgd_step<double>(params, 0.0), UsageError);
}

TEST_CASE("grad_check on a linear layer and a sigmoid chain") {
  Rng rng(4);
  const auto w = random_tensor({3, 4}, rng);
  const auto b = random_tensor({3}, rng);
  const auto lin = [&](const Tensor<double>& x) { return ops::sum(ops::linear(x, w, b)); };
  CHECK(grad_check(lin, random_tensor({4}, rng)).max_rel_error <= 1e-6);
  const auto chain = [](const Tensor<double>& x) {
    return ops::sum(ops::sigmoid(ops::affine(ops::sigmoid(x), 2.0, -1.0)));
  };
  CHECK(grad_check(chain, random_tensor({6}, rng)).max_rel_error <= 1e-6);
}

TEST_CASE("grad_check on a constant function reports zero") {
  const auto constant = [](const Tensor<double>&) { return Tensor<double>::scalar(3.0); };
  const auto report = grad_check(constant, vec({1, 2, 3}));
  CHECK(report.valid);
  CHECK(report.max_rel_error == 0.0);
  CHECK(report.coordinates == 3);
}

TEST_CASE("grad_check flags non-deterministic functions and bad eps") {
  Rng noise(1);
  const auto flaky = [&](const Tensor<double>& x) { return ops::affine(ops::sum(x), 1.0, noise.uniform()); };
  CHECK_FALSE(grad_check(flaky, vec({1})).valid);
  const auto f = [](const Tensor<double>& x) { return ops::sum(x); };
  CHECK_THROWS_AS(grad_check(f, vec({1}), {.eps = 1.0}), UsageError);
}

TEST_CASE("forward results are bit-identical across runs") {
  const auto run = [] {
    Rng rng(77);
    const auto x = random_tensor<float>({4, 8, 8}, rng);
    auto w = init::fan_in_uniform<float>("w", {6, 4, 3, 3}, 36, rng);
    return ops::conv2d(x, w.value, Tensor<float>::zeros({6}), 2, 1);
  };
  CHECK(bitwise_equal(run(), run()));
}

TEST_CASE("rng streams are reproducible and forks are independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng root(9);
  Rng c0 = Rng(9).fork(0), c1 = root.fork(1);
  CHECK(c0.next() != c1.next());
  Rng u(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK((v >= 0.0 && v < 1.0));
    CHECK(u.below(7) < 7);
  }
}

}  // TEST_SUITE
