#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "nw/common.hpp"
#include "nw/grad_check.hpp"
#include "nw/layers.hpp"
#include "nw/ops.hpp"
#include "nw/rng.hpp"

using namespace nw;

namespace {

Tensor randn(std::vector<int64_t> shape, uint64_t seed, double std = 1.0) {
  Rng rng(seed);
  return Tensor::randn(std::move(shape), rng, std);
}

}  // namespace

TEST_CASE("conv2d shape arithmetic matches the stride-2 halving convention") {
  auto spec = LayerSpec::conv("c", 1, 16, 3, 2, 1);
  auto out = layer_out_shape(spec, {1, 1, 64, 64});
  CHECK(out == std::vector<int64_t>{1, 16, 32, 32});
}

TEST_CASE("dropout is the identity in eval mode") {
  Graph g(Mode::kEval);
  int x = g.input(randn({3, 5}, 1));
  int y = ops::dropout(g, x, 0.5);
  CHECK(y == x);  // same node, bit-identical by construction
}

TEST_CASE("softmax of all-equal logits is uniform") {
  Graph g(Mode::kEval);
  int x = g.input(Tensor::zeros({1, 7}));
  int y = ops::softmax(g, x);
  for (int64_t j = 0; j < 7; ++j)
    CHECK(g.val(y)[j] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("backward of sum gives all-ones gradient") {
  ParamStore ps;
  ps.create("w", randn({4, 3}, 2));
  Graph g(Mode::kTrain);
  int w = g.param(ps, "w");
  int loss = ops::sum(g, w);
  g.backward(loss);
  for (int64_t i = 0; i < 12; ++i) CHECK(ps.at("w").grad[i] == 1.0);
}

TEST_CASE("backward of half squared norm reproduces the parameter") {
  ParamStore ps;
  ps.create("w", randn({10}, 3));
  Graph g(Mode::kTrain);
  int w = g.param(ps, "w");
  int loss = ops::scale(g, ops::sum_squares(g, w), 0.5);
  g.backward(loss);
  for (int64_t i = 0; i < 10; ++i)
    CHECK(ps.at("w").grad[i] == doctest::Approx(ps.at("w").value[i]).epsilon(1e-15));
}

TEST_CASE("two backward passes accumulate additively") {
  ParamStore ps;
  ps.create("w", randn({6}, 4));
  Graph g(Mode::kTrain);
  int w = g.param(ps, "w");
  int loss = ops::sum_squares(g, w);
  g.backward(loss);
  Tensor once = ps.at("w").grad;
  g.backward(loss);
  for (int64_t i = 0; i < 6; ++i)
    CHECK(ps.at("w").grad[i] == 2.0 * once[i]);
}

TEST_CASE("backward on an eval graph is rejected") {
  ParamStore ps;
  ps.create("w", randn({3}, 5));
  Graph g(Mode::kEval);
  int w = g.param(ps, "w");
  int loss = ops::sum(g, w);
  CHECK_THROWS_AS(g.backward(loss), Error);
}

TEST_CASE("backward requires a scalar loss") {
  ParamStore ps;
  ps.create("w", randn({3}, 6));
  Graph g(Mode::kTrain);
  int w = g.param(ps, "w");
  CHECK_THROWS_AS(g.backward(w), Error);
}

TEST_CASE("grad_check: dense+tanh+dense") {
  ParamStore ps;
  Rng rng(11);
  std::vector<LayerSpec> net{
      LayerSpec::dense_layer("fc1", 6, 8),
      LayerSpec::tanh_layer(),
      LayerSpec::dense_layer("fc2", 8, 3),
  };
  init_stack_params(net, ps, rng);
  Tensor input = randn({4, 6}, 12);

  auto build = [&](Graph& g) {
    int x = g.input(input);
    x = forward_stack(g, x, net, ps);
    return ops::sum_squares(g, x);
  };
  auto rep = grad_check(ps, build, 1e-3, 20);
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("grad_check: conv2d + batch-norm (train stats) + relu") {
  ParamStore ps;
  Rng rng(21);
  std::vector<LayerSpec> net{
      LayerSpec::conv("c1", 3, 4, 3, 2, 1),
      LayerSpec::batch_norm("bn1", 4),
      LayerSpec::relu_layer(),
  };
  init_stack_params(net, ps, rng);
  Tensor input = randn({2, 3, 8, 8}, 22);

  auto build = [&](Graph& g) {
    int x = g.input(input);
    x = forward_stack(g, x, net, ps);
    return ops::sum_squares(g, x);
  };
  auto rep = grad_check(ps, build, 1e-3, 20);
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("grad_check: identity network has zero error") {
  ParamStore ps;
  ps.create("w", randn({5}, 31));
  auto build = [&](Graph& g) { return ops::sum(g, g.param(ps, "w")); };
  auto rep = grad_check(ps, build, 1e-3, 5);
  CHECK(rep.max_rel_err <= 1e-12);
}

TEST_CASE("grad_check: transpose conv, max-pool, softmax, focal, residual") {
  ParamStore ps;
  Rng rng(41);
  std::vector<LayerSpec> net{
      LayerSpec::tconv("t1", 3, 4, 3, 2, 1, 1),
      LayerSpec::max_pool(2),
      LayerSpec::residual("r1", 4, 2),
  };
  init_stack_params(net, ps, rng);
  init_layer_params(LayerSpec::dense_layer("head", 4 * 4 * 4, 5), ps, rng);
  // zero-init biases leave dead transpose-conv cells exactly on the relu
  // kink and tie pooling windows; jitter them off the non-smooth points
  ps.for_each([&](const std::string& name, Param& p) {
    if (name.ends_with(".b"))
      for (int64_t i = 0; i < p.value.numel(); ++i) p.value[i] = 0.1 * rng.normal();
  });
  Tensor input = randn({2, 3, 4, 4}, 42);

  auto build = [&](Graph& g) {
    int x = g.input(input);
    x = forward_stack(g, x, net, ps);
    x = ops::reshape(g, x, {2, 4 * 4 * 4});
    x = forward_layer(g, x, LayerSpec::dense_layer("head", 4 * 4 * 4, 5), ps);
    x = ops::softmax(g, x);
    int l = ops::focal_nll(g, x, {1, 3}, 2.0);
    return ops::sum(g, l);
  };
  auto rep = grad_check(ps, build, 1e-3, 20);
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("grad_check: dropout runs against a pinned mask") {
  ParamStore ps;
  Rng rng(51);
  init_layer_params(LayerSpec::dense_layer("fc", 4, 4), ps, rng);
  Tensor input = randn({3, 4}, 52);

  auto build = [&](Graph& g) -> int {
    int x = g.input(input);
    x = forward_layer(g, x, LayerSpec::dense_layer("fc", 4, 4), ps);
    x = ops::dropout(g, x, 0.3);  // mask comes from grad_check's fixed stream
    return ops::sum_squares(g, x);
  };
  auto rep = grad_check(ps, build, 1e-3, 8);
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("grad_check rejects a non-deterministic forward") {
  ParamStore ps;
  ps.create("w", randn({3}, 61));
  int counter = 0;
  auto build = [&](Graph& g) {
    int w = g.param(ps, "w");
    int noise = g.input(Tensor::scalar(1e-3 * (counter++)));
    int s = ops::sum(g, w);
    return ops::add(g, s, noise);
  };
  CHECK_THROWS_AS(grad_check(ps, build, 1e-3, 3), Error);
}

TEST_CASE("shape algebra is a pure function over randomized specs") {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t n = 1 + rng.uniform_int(3);
    const int64_t c = 1 + rng.uniform_int(4);
    const int64_t side = 4 + 2 * rng.uniform_int(7);  // even, 4..16
    std::vector<int64_t> in{n, c, side, side};

    const int which = static_cast<int>(rng.uniform_int(4));
    LayerSpec spec = [&] {
      switch (which) {
        case 0: {
          int k = 1 + 2 * static_cast<int>(rng.uniform_int(2));  // 1 or 3
          int s = 1 + static_cast<int>(rng.uniform_int(2));
          return LayerSpec::conv("x", static_cast<int>(c), 3, k, s, k / 2);
        }
        case 1:
          return LayerSpec::tconv("x", static_cast<int>(c), 3, 3, 2, 1, 1);
        case 2:
          return LayerSpec::max_pool(2);
        default:
          return LayerSpec::residual("x", static_cast<int>(c));
      }
    }();

    auto predicted = layer_out_shape(spec, in);
    // run the layer and compare the actual output shape
    ParamStore ps;
    Rng ir(1000 + trial);
    init_layer_params(spec, ps, ir);
    Graph g(Mode::kEval);
    int x = g.input(Tensor::zeros(in));
    int y = forward_layer(g, x, spec, ps);
    CHECK(g.val(y).shape() == predicted);
  }
}

TEST_CASE("layer errors name the layer and shapes") {
  auto spec = LayerSpec::conv("enc.conv1", 3, 8, 3, 2, 1);
  try {
    layer_out_shape(spec, {1, 4, 16, 16});
    FAIL("expected error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("enc.conv1") != std::string::npos);
    CHECK(msg.find("[1,4,16,16]") != std::string::npos);
  }
}

TEST_CASE("forward is deterministic under identical seeds") {
  auto run = [](uint64_t seed) {
    ParamStore ps;
    Rng rng(seed);
    std::vector<LayerSpec> net{
        LayerSpec::conv("c1", 1, 4, 3, 2, 1),
        LayerSpec::batch_norm("b1", 4),
        LayerSpec::leaky_relu_layer(),
        LayerSpec::conv("c2", 4, 2, 3, 2, 1),
    };
    init_stack_params(net, ps, rng);
    Rng drop(seed + 1);
    Graph g(Mode::kTrain, &drop);
    int x = g.input(randn({2, 1, 16, 16}, 9));
    x = forward_stack(g, x, net, ps);
    int loss = ops::sum_squares(g, x);
    g.backward(loss);
    return std::pair<double, Tensor>(g.scalar(loss), ps.at("c1.w").grad);
  };
  auto [l1, g1] = run(123);
  auto [l2, g2] = run(123);
  CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
  for (int64_t i = 0; i < g1.numel(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("batch-norm eval output depends only on running statistics") {
  ParamStore ps;
  Rng rng(81);
  auto bn = LayerSpec::batch_norm("bn", 2);
  init_layer_params(bn, ps, rng);
  ps.at("bn.running_mean").value[0] = 0.5;
  ps.at("bn.running_mean").value[1] = -0.25;
  ps.at("bn.running_var").value[0] = 2.0;
  ps.at("bn.running_var").value[1] = 0.5;

  Tensor a = randn({1, 2, 4, 4}, 82);
  Tensor b = randn({5, 2, 4, 4}, 83);
  // same leading element normalized identically regardless of batch content
  for (int64_t i = 0; i < 16; ++i) b[i] = a[i];
  for (int64_t i = 0; i < 16; ++i) b[16 + i] = a[16 + i];

  Graph g1(Mode::kEval), g2(Mode::kEval);
  int y1 = forward_layer(g1, g1.input(a), bn, ps);
  int y2 = forward_layer(g2, g2.input(b), bn, ps);
  for (int64_t i = 0; i < 32; ++i) CHECK(g1.val(y1)[i] == g2.val(y2)[i]);
}

TEST_CASE("train-mode batch norm updates running stats with momentum 0.9") {
  ParamStore ps;
  Rng rng(91);
  auto bn = LayerSpec::batch_norm("bn", 1);
  init_layer_params(bn, ps, rng);

  Tensor x = Tensor::full({1, 1, 2, 2}, 3.0);
  Graph g(Mode::kTrain);
  forward_layer(g, g.input(x), bn, ps);
  // batch mean 3, var 0: run_mean = 0.9*0 + 0.1*3, run_var = 0.9*1 + 0.1*0
  CHECK(ps.at("bn.running_mean").value[0] == doctest::Approx(0.3));
  CHECK(ps.at("bn.running_var").value[0] == doctest::Approx(0.9));
}
