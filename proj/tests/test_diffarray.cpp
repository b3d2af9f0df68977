#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "gradcheck.hpp"
#include "latentmath/rng.hpp"
#include "latentmath/tensor.hpp"

using namespace latentmath;

TEST_CASE("shape contracts and basic forwards") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_data({3, 4}, std::vector<float>(12, 1.0f));
  Tensor c = matmul(a, b);
  CHECK(c.shape() == std::vector<int>{2, 4});
  CHECK(c.data()[0] == doctest::Approx(6.0f));
  CHECK(c.data()[4] == doctest::Approx(15.0f));

  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);

  // softmax of an all-equal vector is uniform
  Tensor s = softmax_last(Tensor::from_data({1, 5}, std::vector<float>(5, 3.0f)));
  for (int i = 0; i < 5; ++i) CHECK(s.data()[i] == doctest::Approx(0.2f));

  // cosine of a vector with itself is 1
  Tensor v = Tensor::from_data({1, 4}, {0.3f, -1.2f, 2.0f, 0.7f});
  CHECK(cosine_rowwise(v, v).data()[0] == doctest::Approx(1.0f));
}

TEST_CASE("backward basics") {
  // loss = x^2 at x = 3 -> grad 6
  Tensor x = Tensor::from_data({1}, {3.0f}, true);
  {
    Tape tape;
    Tensor loss = sum_all(mul(x, x));
    backward(loss);
  }
  CHECK(x.grad()[0] == doctest::Approx(6.0f));

  // errors
  Tensor y = Tensor::from_data({2}, {1.0f, 2.0f}, true);
  {
    Tape tape;
    Tensor out = mul(y, y);
    CHECK_THROWS_AS(backward(out), ShapeError);  // not scalar
  }
  Tensor z = Tensor::from_data({1}, {1.0f}, true);
  CHECK_THROWS_AS(backward(z), Error);  // no tape
}

TEST_CASE("gradients of every primitive match float64 finite differences") {
  auto res = gradcheck::sweep(20);
  CAPTURE(res.worst_case);
  CHECK(res.worst_err <= 1e-4);
}

TEST_CASE("cosine similarity gradient example") {
  Rng rng(123);
  for (int rep = 0; rep < 20; ++rep) {
    auto cases = gradcheck::build_cases(rng);
    for (auto& c : cases)
      if (c.name == "cosine_rowwise") {
        double err = gradcheck::max_rel_err(c, rng);
        CHECK(err <= 1e-4);
      }
  }
}

TEST_CASE("determinism: identical seeds give bit-identical forward and grads") {
  auto run = [] {
    Rng rng(777);
    Tensor a = gradcheck::rand_tensor(rng, {8, 16});
    Tensor w = gradcheck::rand_tensor(rng, {16, 12});
    std::vector<float> out;
    Tape tape;
    Tensor y = tanh_t(matmul(a, w));
    Tensor loss = sum_all(mul(y, y));
    backward(loss);
    out = y.vec();
    auto g = w.impl()->grad;
    out.insert(out.end(), g.begin(), g.end());
    return out;
  };
  auto r1 = run();
  auto r2 = run();
  REQUIRE(r1.size() == r2.size());
  CHECK(std::memcmp(r1.data(), r2.data(), r1.size() * sizeof(float)) == 0);
}

TEST_CASE("no NaN/Inf under normal ranges") {
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    Tensor x = gradcheck::rand_tensor(rng, {4, 8}, -5.0f, 5.0f);
    Tensor g = Tensor::full({8}, 1.0f);
    Tensor b = Tensor::zeros({8});
    for (const Tensor& t : {softmax_last(x), layer_norm_last(x, g, b), normalize_rows(x)})
      for (float v : t.vec()) REQUIRE(std::isfinite(v));
  }
  // layer_norm of a constant row stays finite thanks to the epsilon
  Tensor flat = Tensor::full({2, 8}, 3.25f);
  Tensor g = Tensor::full({8}, 1.0f);
  Tensor b = Tensor::zeros({8});
  for (float v : layer_norm_last(flat, g, b).vec()) CHECK(std::isfinite(v));
}

TEST_CASE("adam_step") {
  // zero grads: params unchanged, timestep advances
  Tensor p = Tensor::from_data({3}, {1.0f, -2.0f, 0.5f}, true);
  p.grad();  // allocate zeros
  std::vector<Tensor> params{p};
  AdamState state;
  adam_step(params, state, 0.1f);
  CHECK(state.step == 1);
  CHECK(p.data()[0] == doctest::Approx(1.0f));
  CHECK(p.data()[1] == doctest::Approx(-2.0f));

  // single step on f(x) = x^2 from x=1 decreases x
  Tensor x = Tensor::from_data({1}, {1.0f}, true);
  std::vector<Tensor> px{x};
  AdamState sx;
  {
    Tape tape;
    backward(sum_all(mul(x, x)));
  }
  adam_step(px, sx, 0.1f);
  CHECK(x.data()[0] < 1.0f);

  // 200 steps on a convex quadratic reach |grad| < 1e-3
  Tensor q = Tensor::from_data({4}, {2.0f, -3.0f, 1.5f, 0.7f}, true);
  std::vector<Tensor> pq{q};
  AdamState sq;
  float gnorm = 1e9f;
  for (int it = 0; it < 200; ++it) {
    zero_grads(pq);
    {
      Tape tape;
      backward(sum_all(mul(q, q)));
    }
    double t = 0;
    for (int i = 0; i < 4; ++i) t += (double)q.grad()[i] * q.grad()[i];
    gnorm = (float)std::sqrt(t);
    adam_step(pq, sq, 0.05f);
  }
  CHECK(gnorm < 1e-3f);
}

TEST_CASE("clip_global_norm") {
  Tensor p = Tensor::from_data({2}, {0.0f, 0.0f}, true);
  p.grad()[0] = 3.0f;
  p.grad()[1] = 4.0f;
  std::vector<Tensor> params{p};
  float before = clip_global_norm(params, 1.0f);
  CHECK(before == doctest::Approx(5.0f));
  CHECK(p.grad()[0] == doctest::Approx(0.6f));
  CHECK(p.grad()[1] == doctest::Approx(0.8f));
}
