#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nw/checkpoint.hpp"
#include "nw/common.hpp"
#include "nw/optim.hpp"
#include "nw/rng.hpp"

using namespace nw;

namespace {

ParamStore make_store(double init, int64_t n = 4) {
  ParamStore ps;
  ps.create("w", Tensor::full({n}, init));
  return ps;
}

void set_grad(ParamStore& ps, const std::string& name, double g) {
  Tensor& grad = ps.at(name).grad;
  for (int64_t i = 0; i < grad.numel(); ++i) grad[i] = g;
}

}  // namespace

TEST_CASE("plain gradient descent: momentum 0, decay 0") {
  auto ps = make_store(1.0);
  set_grad(ps, "w", 0.25);
  sgd_step(ps, 0.1, 0.0, 0.0);
  for (int64_t i = 0; i < 4; ++i)
    CHECK(ps.at("w").value[i] == doctest::Approx(1.0 - 0.1 * 0.25).epsilon(1e-15));
  // gradient buffer cleared
  CHECK(ps.at("w").grad[0] == 0.0);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  auto ps = make_store(0.7);
  sgd_step(ps, 0.5, 0.9, 0.0);
  for (int64_t i = 0; i < 4; ++i) CHECK(ps.at("w").value[i] == 0.7);
}

TEST_CASE("momentum 0.9 second step applies 1.9x the constant gradient") {
  // v <- 0.9 v + g: v1 = g, v2 = 1.9 g, so delta2 = -lr * 1.9 * g
  auto ps = make_store(0.0);
  const double g = 0.5, lr = 0.01;
  set_grad(ps, "w", g);
  sgd_step(ps, lr, 0.9, 0.0);
  const double after1 = ps.at("w").value[0];
  CHECK(after1 == doctest::Approx(-lr * g).epsilon(1e-15));
  set_grad(ps, "w", g);
  sgd_step(ps, lr, 0.9, 0.0);
  CHECK(ps.at("w").value[0] - after1 == doctest::Approx(-lr * 1.9 * g).epsilon(1e-12));
}

TEST_CASE("non-finite gradient rejects the whole step") {
  auto ps = make_store(1.0);
  set_grad(ps, "w", 1.0);
  ps.at("w").grad[2] = std::nan("");
  CHECK_THROWS_WITH_AS(sgd_step(ps, 0.1, 0.0, 0.0),
                       doctest::Contains("non-finite gradient"), Error);
  for (int64_t i = 0; i < 4; ++i) CHECK(ps.at("w").value[i] == 1.0);
}

TEST_CASE("rmsprop single step from zero state") {
  auto ps = make_store(0.0, 1);
  const double g = 0.3, lr = 1e-3, rho = 0.99, eps = 1e-8;
  set_grad(ps, "w", g);
  rmsprop_step(ps, lr, rho, eps);
  const double expect = -lr * g / std::sqrt((1.0 - rho) * g * g + eps);
  CHECK(ps.at("w").value[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("rmsprop: zero gradient means no movement") {
  auto ps = make_store(0.4);
  rmsprop_step(ps, 1e-3);
  for (int64_t i = 0; i < 4; ++i) CHECK(ps.at("w").value[i] == 0.4);
}

TEST_CASE("rmsprop step magnitude converges toward lr under constant gradient") {
  auto ps = make_store(0.0, 1);
  const double lr = 1e-3;
  double prev = 0.0, delta = 0.0;
  for (int i = 0; i < 2000; ++i) {
    set_grad(ps, "w", 1.0);
    prev = ps.at("w").value[0];
    rmsprop_step(ps, lr, 0.99, 1e-8);
    delta = std::abs(ps.at("w").value[0] - prev);
  }
  CHECK(delta == doctest::Approx(lr).epsilon(1e-3));
}

TEST_CASE("clip_parameters clamps and is idempotent") {
  ParamStore ps;
  ps.create("w", Tensor({3}, {0.05, -0.2, 0.003}));
  clip_parameters(ps, 0.01);
  CHECK(ps.at("w").value[0] == 0.01);
  CHECK(ps.at("w").value[1] == -0.01);
  CHECK(ps.at("w").value[2] == 0.003);

  Tensor before = ps.at("w").value;
  clip_parameters(ps, 0.01);
  for (int64_t i = 0; i < 3; ++i) CHECK(ps.at("w").value[i] == before[i]);
}

TEST_CASE("clip leaves in-range tensors bit-exact") {
  ParamStore ps;
  Rng rng(5);
  ps.create("w", Tensor::randn({64}, rng, 0.001));
  Tensor before = ps.at("w").value;
  clip_parameters(ps, 0.01);
  for (int64_t i = 0; i < 64; ++i) CHECK(ps.at("w").value[i] == before[i]);
}

TEST_CASE("checkpoint round trip, including running statistics") {
  ParamStore a;
  Rng rng(17);
  a.create("conv.w", Tensor::randn({4, 3, 3, 3}, rng));
  a.create("bn.gamma", Tensor::full({4}, 1.0));
  a.create("bn.running_mean", Tensor::randn({4}, rng), /*trainable=*/false);

  const std::string path = "ckpt_test.nwck";
  save_checkpoint(a, path);

  ParamStore b;
  b.create("conv.w", Tensor::zeros({4, 3, 3, 3}));
  b.create("bn.gamma", Tensor::zeros({4}));
  b.create("bn.running_mean", Tensor::zeros({4}), /*trainable=*/false);
  load_checkpoint(b, path);
  CHECK(a.values_equal(b));
  std::remove(path.c_str());
}

TEST_CASE("checkpoint error diagnostics are distinct") {
  ParamStore a;
  a.create("w", Tensor::full({2}, 1.5));
  const std::string path = "ckpt_err.nwck";
  save_checkpoint(a, path);

  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
    f.close();
    ParamStore b;
    b.create("w", Tensor::zeros({2}));
    CHECK_THROWS_WITH_AS(load_checkpoint(b, path), doctest::Contains("magic"), Error);
  }
  SUBCASE("bad version") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    char v[4] = {9, 0, 0, 0};
    f.write(v, 4);
    f.close();
    ParamStore b;
    b.create("w", Tensor::zeros({2}));
    CHECK_THROWS_WITH_AS(load_checkpoint(b, path), doctest::Contains("version"), Error);
  }
  SUBCASE("truncation") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
    out.close();
    ParamStore b;
    b.create("w", Tensor::zeros({2}));
    CHECK_THROWS_WITH_AS(load_checkpoint(b, path), doctest::Contains("truncated"), Error);
  }
  std::remove(path.c_str());
}
