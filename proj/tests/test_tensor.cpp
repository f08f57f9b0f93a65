#include <doctest.h>

#include <cmath>

#include "moflp/errors.hpp"
#include "moflp/rng.hpp"
#include "moflp/tensor.hpp"

using namespace moflp;

TEST_CASE("linear layer basics") {
  SUBCASE("identity weights reproduce the input") {
    Tensor2 x(2, 3);
    x.data = {1, 2, 3, 4, 5, 6};
    Tensor2 w(3, 3);
    w.at(0, 0) = w.at(1, 1) = w.at(2, 2) = 1.0;
    const Tensor2 y = linear(x, w, Tensor2(1, 3));
    CHECK(y.data == x.data);
  }
  SUBCASE("zero input broadcasts the bias") {
    Tensor2 b(1, 2);
    b.data = {0.5, -0.5};
    const Tensor2 y = linear(Tensor2(3, 4), Tensor2(4, 2), b);
    for (int r = 0; r < 3; ++r) {
      CHECK(y.at(r, 0) == 0.5);
      CHECK(y.at(r, 1) == -0.5);
    }
  }
  SUBCASE("scalar case") {
    Tensor2 x(1, 1, 2.0);
    Tensor2 w(1, 1, 3.0);
    Tensor2 b(1, 1, 1.0);
    CHECK(linear(x, w, b).at(0, 0) == 7.0);
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(linear(Tensor2(2, 3), Tensor2(4, 2), Tensor2(1, 2)), ShapeError);
  }
}

TEST_CASE("batch norm train mode") {
  SUBCASE("already-normalized input passes through") {
    BatchNorm bn("bn", 1);
    Tensor2 x(2, 1);
    x.data = {-1.0, 1.0};  // mean 0, variance 1
    BnCache cache;
    const Tensor2 y = bn.forward_train(x, cache);
    CHECK(y.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(y.at(1, 0) == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("zero gamma collapses to beta") {
    BatchNorm bn("bn", 2);
    bn.gamma.value.zero();
    bn.beta.value.data = {3.0, -2.0};
    Tensor2 x(4, 2);
    Rng rng(1);
    for (double& v : x.data) v = rng.uniform(-5, 5);
    BnCache cache;
    const Tensor2 y = bn.forward_train(x, cache);
    for (int r = 0; r < 4; ++r) {
      CHECK(y.at(r, 0) == 3.0);
      CHECK(y.at(r, 1) == -2.0);
    }
  }
  SUBCASE("constant columns normalize to zero") {
    BatchNorm bn("bn", 1);
    Tensor2 x(5, 1, 42.0);
    BnCache cache;
    const Tensor2 y = bn.forward_train(x, cache);
    for (int r = 0; r < 5; ++r) CHECK(y.at(r, 0) == 0.0);
  }
  SUBCASE("zero rows rejected") {
    BatchNorm bn("bn", 1);
    BnCache cache;
    CHECK_THROWS_AS(bn.forward_train(Tensor2(0, 1), cache), DomainError);
  }
}

TEST_CASE("batch norm eval mode uses running statistics") {
  BatchNorm bn("bn", 1);
  BnCache cache;
  Tensor2 x(4, 1);
  x.data = {1.0, 2.0, 3.0, 4.0};
  // Several train passes move the running stats toward the batch stats.
  for (int k = 0; k < 200; ++k) bn.forward_train(x, cache);
  const Tensor2 y = bn.forward_eval(x);
  // With converged running stats eval matches train-mode normalization.
  const Tensor2 t = bn.forward_train(x, cache);
  for (int r = 0; r < 4; ++r) CHECK(y.at(r, 0) == doctest::Approx(t.at(r, 0)).epsilon(1e-6));
}

TEST_CASE("batch norm backward matches finite differences") {
  const int rows = 7;
  const int cols = 3;
  BatchNorm bn("bn", cols);
  Rng rng(33);
  for (double& v : bn.gamma.value.data) v = rng.uniform(0.5, 1.5);
  for (double& v : bn.beta.value.data) v = rng.uniform(-0.5, 0.5);

  Param x("x", rows, cols);
  for (double& v : x.value.data) v = rng.uniform(-2, 2);
  Tensor2 weights(rows, cols);
  for (double& v : weights.data) v = rng.uniform(-1, 1);

  auto loss = [&]() {
    BnCache cache;
    const Tensor2 y = bn.forward_train(x.value, cache);
    double total = 0.0;
    for (std::size_t k = 0; k < y.data.size(); ++k) total += y.data[k] * weights.data[k];
    return total;
  };

  BnCache cache;
  bn.forward_train(x.value, cache);
  bn.gamma.zero_grad();
  bn.beta.zero_grad();
  x.grad = bn.backward(weights, cache);

  std::vector<Param*> params{&x, &bn.gamma, &bn.beta};
  CHECK(max_rel_grad_error(loss, params, 1e-6, 400, 9) < 1e-6);
}

TEST_CASE("column softmax") {
  SUBCASE("constant columns become uniform") {
    const Tensor2 p = softmax_columns(Tensor2(4, 2, 3.7));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) CHECK(p.at(i, j) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("log-ratio column") {
    Tensor2 z(2, 1);
    z.data = {std::log(1.0), std::log(3.0)};
    const Tensor2 p = softmax_columns(z);
    CHECK(p.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.at(1, 0) == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("columns sum to one for random inputs") {
    Rng rng(77);
    Tensor2 z(6, 9);
    for (double& v : z.data) v = rng.uniform(-30, 30);
    const Tensor2 p = softmax_columns(z);
    for (int j = 0; j < 9; ++j) {
      double col = 0.0;
      for (int i = 0; i < 6; ++i) {
        CHECK(p.at(i, j) > 0.0);
        CHECK(p.at(i, j) < 1.0);
        col += p.at(i, j);
      }
      CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam updates") {
  SUBCASE("zero gradients leave parameters unchanged") {
    Param p("p", 2, 2);
    p.value.data = {1, 2, 3, 4};
    AdamState state;
    state.init({&p});
    adam_step({&p}, state);
    CHECK(p.value.data == std::vector<double>{1, 2, 3, 4});
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves by roughly -lr * sign(g)") {
    Param p("p", 1, 3);
    p.value.data = {0.0, 0.0, 0.0};
    p.grad.data = {0.5, -2.0, 1e-3};
    AdamState state;
    state.init({&p});
    adam_step({&p}, state);
    CHECK(p.value.data[0] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(p.value.data[1] == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(p.value.data[2] == doctest::Approx(-1e-3).epsilon(1e-4));
  }
  SUBCASE("identical calls from identical state agree bitwise") {
    Rng rng(4);
    Param a("a", 3, 3);
    for (double& v : a.value.data) v = rng.uniform(-1, 1);
    for (double& v : a.grad.data) v = rng.uniform(-1, 1);
    Param b = a;
    AdamState sa;
    sa.init({&a});
    AdamState sb;
    sb.init({&b});
    adam_step({&a}, sa);
    adam_step({&b}, sb);
    CHECK(a.value.data == b.value.data);
  }
  SUBCASE("shape mismatch throws") {
    Param p("p", 2, 2);
    AdamState state;
    state.init({&p});
    p.grad = Tensor2(3, 2);
    CHECK_THROWS_AS(adam_step({&p}, state), ShapeError);
  }
}

TEST_CASE("gradient checker validates an exact quadratic") {
  Param x("x", 1, 5);
  Rng rng(8);
  for (double& v : x.value.data) v = rng.uniform(-2, 2);
  auto loss = [&]() {
    double total = 0.0;
    for (double v : x.value.data) total += 0.5 * v * v;
    return total;
  };
  x.grad.data = x.value.data;  // exact gradient of the quadratic
  CHECK(max_rel_grad_error(loss, {&x}, 1e-5, 100, 3) < 1e-8);
}

TEST_CASE("gradient checker flags a wrong gradient") {
  Param x("x", 1, 3);
  x.value.data = {1.0, 2.0, 3.0};
  auto loss = [&]() {
    double total = 0.0;
    for (double v : x.value.data) total += 0.5 * v * v;
    return total;
  };
  x.grad.data = {1.0, 2.0, 0.0};  // last entry deliberately wrong
  CHECK(max_rel_grad_error(loss, {&x}, 1e-5, 100, 3) > 0.5);
}

TEST_CASE("relu and helpers") {
  Tensor2 x(1, 4);
  x.data = {-1.0, 0.0, 2.0, -0.5};
  const Tensor2 y = relu(x);
  CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0, 0.0});
  Tensor2 dy(1, 4, 1.0);
  const Tensor2 dx = relu_backward(dy, x);
  CHECK(dx.data == std::vector<double>{0.0, 0.0, 1.0, 0.0});

  Tensor2 bad(2, 2, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(ensure_finite(bad, "bad"), DomainError);
}
