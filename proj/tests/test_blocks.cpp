#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ggan/nn/attention.hpp"
#include "ggan/nn/blocks.hpp"
#include "ggan/nn/layers.hpp"
#include "ggan/nn/mlp.hpp"
#include "testutil.hpp"

using namespace ggan;
using testutil::finite_difference;
using testutil::grad_rel_error;
using testutil::randomize;

namespace {

constexpr double kTol = 1e-3;

/// Forward (Frozen), probe with a fixed random cotangent, and compare the
/// analytic input/parameter gradients against central differences.
template <typename Fwd, typename Bwd>
void check_gradients(Fwd fwd, Bwd bwd, std::vector<Tensor<double>*> inputs,
                     ParamRefs<double> params, std::vector<Tensor<double>> expected_from_bwd
                     = {}) {
  (void)expected_from_bwd;
  Rng rng(4242);
  Tensor<double> y = fwd();
  Tensor<double> r(y.shape());
  randomize(r, rng);
  for (auto* p : params) p->zero_grad();
  std::vector<Tensor<double>> gx = bwd(r);
  auto probe = [&] {
    Tensor<double> t = fwd();
    double s = 0;
    for (std::size_t i = 0; i < t.numel(); ++i) s += t[i] * r[i];
    return s;
  };
  REQUIRE(gx.size() == inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor<double> fd = finite_difference(probe, *inputs[i]);
    CHECK_MESSAGE(grad_rel_error(gx[i], fd) < kTol, "input gradient ", i);
  }
  for (auto* p : params) {
    Tensor<double> fd = finite_difference(probe, p->value);
    CHECK_MESSAGE(grad_rel_error(p->grad, fd) < kTol, "param gradient ", p->name);
  }
}

}  // namespace

TEST_CASE("dense layer gradients, with and without spectral norm") {
  for (bool sn : {false, true}) {
    Rng rng(11);
    Dense<double> layer(3, 4, sn, rng, "fc");
    Tensor<double> x({2, 3});
    randomize(x, rng);
    ParamRefs<double> ps;
    layer.params(ps);
    check_gradients([&] { return layer.forward(x, Mode::Frozen); },
                    [&](const Tensor<double>& r) {
                      return std::vector<Tensor<double>>{layer.backward(r)};
                    },
                    {&x}, ps);
  }
}

TEST_CASE("conv2d gradients, 3x3 and 1x1, with spectral norm") {
  for (std::size_t k : {std::size_t(3), std::size_t(1)}) {
    Rng rng(12);
    Conv2d<double> layer(k, 2, 3, true, rng, "conv");
    Tensor<double> x({2, 4, 2, 2});
    randomize(x, rng);
    ParamRefs<double> ps;
    layer.params(ps);
    check_gradients([&] { return layer.forward(x, Mode::Frozen); },
                    [&](const Tensor<double>& r) {
                      return std::vector<Tensor<double>>{layer.backward(r)};
                    },
                    {&x}, ps);
  }
}

TEST_CASE("batch norm gradients through batch statistics") {
  Rng rng(13);
  BatchNorm<double> bn(3, "bn");
  randomize(bn.gamma().value, rng, 0.5, 1.0);
  randomize(bn.beta().value, rng, 0.3);
  Tensor<double> x({2, 4, 2, 3});
  randomize(x, rng, 1.5);
  ParamRefs<double> ps;
  bn.params(ps);
  check_gradients([&] { return bn.forward(x, Mode::Frozen); },
                  [&](const Tensor<double>& r) {
                    return std::vector<Tensor<double>>{bn.backward(r)};
                  },
                  {&x}, ps);
}

TEST_CASE("batch norm normalizes to zero mean unit variance pre-affine") {
  Rng rng(14);
  BatchNorm<double> bn(4, "bn");
  Tensor<double> x({8, 4, 2, 4});
  randomize(x, rng, 2.0, 0.7);
  Tensor<double> y = bn.forward(x, Mode::Stats);  // gamma=1, beta=0
  const std::size_t C = 4, count = y.numel() / C;
  for (std::size_t c = 0; c < C; ++c) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < count; ++i) m += y[i * C + c];
    m /= count;
    for (std::size_t i = 0; i < count; ++i) v += (y[i * C + c] - m) * (y[i * C + c] - m);
    v /= count;
    CHECK(std::abs(m) < 1e-10);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("conditional batch norm gradients (x, embedding, params)") {
  Rng rng(15);
  ConditionalBatchNorm<double> cbn(4, 3, "cbn");
  randomize(cbn.wg().value, rng, 0.4);
  randomize(cbn.wb().value, rng, 0.4);
  Tensor<double> x({2, 2, 2, 4}), e({2, 3});
  randomize(x, rng, 1.2);
  randomize(e, rng);
  ParamRefs<double> ps;
  cbn.params(ps);
  Tensor<double> ge_store;
  check_gradients([&] { return cbn.forward(x, e, Mode::Frozen); },
                  [&](const Tensor<double>& r) {
                    auto [gx, ge] = cbn.backward(r);
                    return std::vector<Tensor<double>>{std::move(gx), std::move(ge)};
                  },
                  {&x, &e}, ps);
}

TEST_CASE("conditional batch norm: degenerate and distinct embeddings") {
  Rng rng(16);
  ConditionalBatchNorm<double> cbn(3, 2, "cbn");
  randomize(cbn.wg().value, rng, 0.5);
  randomize(cbn.wb().value, rng, 0.5);
  Tensor<double> x({2, 2, 2, 3});
  randomize(x, rng);
  // identical embeddings for both samples -> identical per-sample transforms
  Tensor<double> e_same({2, 2});
  e_same.at(0, 0) = 0.3; e_same.at(0, 1) = -0.2;
  e_same.at(1, 0) = 0.3; e_same.at(1, 1) = -0.2;
  Tensor<double> x_same = x;
  for (std::size_t j = 0; j < x.row_stride(); ++j) x_same[x.row_stride() + j] = x[j];
  Tensor<double> y = cbn.forward(x_same, e_same, Mode::Stats);
  for (std::size_t j = 0; j < y.row_stride(); ++j)
    CHECK(y[j] == doctest::Approx(y[y.row_stride() + j]));
  // different embeddings on the same content -> different outputs
  Tensor<double> e_diff = e_same;
  e_diff.at(1, 0) = -1.1;
  Tensor<double> y2 = cbn.forward(x_same, e_diff, Mode::Stats);
  double diff = 0;
  for (std::size_t j = 0; j < y2.row_stride(); ++j)
    diff += std::abs(y2[y2.row_stride() + j] - y[y.row_stride() + j]);
  CHECK(diff > 1e-3);
}

TEST_CASE("non-local block is the identity at initialization") {
  Rng rng(17);
  NonLocalBlock<double> attn(8, true, rng, "attn");
  Tensor<double> x({2, 2, 4, 8});
  randomize(x, rng);
  Tensor<double> y = attn.forward(x, Mode::Eval);
  CHECK(testutil::bit_equal(x, y));
}

TEST_CASE("non-local block attention rows sum to one") {
  Rng rng(18);
  NonLocalBlock<double> attn(8, false, rng, "attn");
  attn.gate().value[0] = 0.5;
  Tensor<double> x({2, 2, 4, 8});
  randomize(x, rng);
  Tensor<double> a = attn.attention_matrix(x);
  const std::size_t p = 8;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < p; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < p; ++j) s += a[n * p * p + i * p + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("non-local block gradients") {
  Rng rng(19);
  NonLocalBlock<double> attn(8, true, rng, "attn");
  attn.gate().value[0] = 0.7;  // move off the zero gate so all paths carry signal
  Tensor<double> x({1, 2, 2, 8});
  randomize(x, rng);
  ParamRefs<double> ps;
  attn.params(ps);
  check_gradients([&] { return attn.forward(x, Mode::Frozen); },
                  [&](const Tensor<double>& r) {
                    return std::vector<Tensor<double>>{attn.backward(r)};
                  },
                  {&x}, ps);
}

TEST_CASE("resblock up doubles spatial dims for all small sizes") {
  Rng rng(20);
  for (std::size_t h : {1, 2, 4, 8})
    for (std::size_t w : {1, 2, 4, 8}) {
      ResBlockUp<double> block(2, 3, false, 0, true, rng, "up");
      Tensor<double> x({1, h, w, 2});
      randomize(x, rng);
      Tensor<double> y = block.forward(x, Mode::Stats);
      CHECK(y.dim(1) == 2 * h);
      CHECK(y.dim(2) == 2 * w);
      CHECK(y.dim(3) == 3);
    }
}

TEST_CASE("resblock up: zero input with zero convs stays zero") {
  Rng rng(21);
  ResBlockUp<double> block(2, 3, false, 0, false, rng, "up");
  ParamRefs<double> ps;
  block.params(ps);
  for (auto* p : ps)
    if (p->name.find("conv") != std::string::npos || p->name.find(".sc") != std::string::npos)
      p->value.fill(0.0);
  Tensor<double> x({2, 4, 2, 2});
  Tensor<double> y = block.forward(x, Mode::Stats);
  for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y[i] == 0.0);
}

TEST_CASE("resblock up rejects mismatched conditioning") {
  Rng rng(22);
  ResBlockUp<double> uncond(2, 2, false, 0, false, rng, "u");
  ResBlockUp<double> cond(2, 2, true, 3, false, rng, "c");
  Tensor<double> x({1, 2, 2, 2}), e({1, 3});
  CHECK_THROWS_AS(uncond.forward(x, e, Mode::Stats), std::invalid_argument);
  CHECK_THROWS_AS(cond.forward(x, Mode::Stats), std::invalid_argument);
}

TEST_CASE("resblock up gradients, unconditional and conditional") {
  Rng rng(23);
  {
    ResBlockUp<double> block(2, 3, false, 0, true, rng, "up");
    Tensor<double> x({2, 2, 2, 2});
    randomize(x, rng);
    ParamRefs<double> ps;
    block.params(ps);
    check_gradients([&] { return block.forward(x, Mode::Frozen); },
                    [&](const Tensor<double>& r) {
                      return std::vector<Tensor<double>>{block.backward(r)};
                    },
                    {&x}, ps);
  }
  {
    ResBlockUp<double> block(2, 2, true, 3, true, rng, "cup");
    Tensor<double> x({2, 2, 2, 2}), e({2, 3});
    randomize(x, rng);
    randomize(e, rng);
    ParamRefs<double> ps;
    block.params(ps);
    check_gradients([&] { return block.forward(x, e, Mode::Frozen); },
                    [&](const Tensor<double>& r) {
                      auto [gx, ge] = block.backward_cond(r);
                      return std::vector<Tensor<double>>{std::move(gx), std::move(ge)};
                    },
                    {&x, &e}, ps);
  }
}

TEST_CASE("resblock down halves spatial dims and rejects odd input") {
  Rng rng(24);
  ResBlockDown<double> block(2, 3, ResBlockDown<double>::Kind::Down, true, rng, "down");
  Tensor<double> x({1, 4, 2, 2});
  randomize(x, rng);
  Tensor<double> y = block.forward(x, Mode::Stats);
  CHECK(y.dim(1) == 2);
  CHECK(y.dim(2) == 1);
  CHECK(y.dim(3) == 3);
  Tensor<double> odd({1, 3, 2, 2});
  CHECK_THROWS_AS(block.forward(odd, Mode::Stats), std::invalid_argument);
}

TEST_CASE("no-shortcut resblock preserves spatial dims") {
  Rng rng(25);
  ResBlockDown<double> block(3, 3, ResBlockDown<double>::Kind::NoShortcut, true, rng, "tail");
  Tensor<double> x({2, 4, 2, 3});
  randomize(x, rng);
  Tensor<double> y = block.forward(x, Mode::Stats);
  CHECK(y.shape() == x.shape());
}

TEST_CASE("resblock down gradients, both kinds") {
  Rng rng(26);
  for (auto kind : {ResBlockDown<double>::Kind::Down, ResBlockDown<double>::Kind::NoShortcut}) {
    ResBlockDown<double> block(2, 2, kind, true, rng, "down");
    Tensor<double> x({2, 4, 2, 2});
    randomize(x, rng, 1.0, 0.2);
    ParamRefs<double> ps;
    block.params(ps);
    check_gradients([&] { return block.forward(x, Mode::Frozen); },
                    [&](const Tensor<double>& r) {
                      return std::vector<Tensor<double>>{block.backward(r)};
                    },
                    {&x}, ps);
  }
}

TEST_CASE("mlp gradients") {
  Rng rng(27);
  Mlp<double> mlp({3, 5, 4, 2}, true, rng, "mlp");
  Tensor<double> x({3, 3});
  randomize(x, rng, 1.0, 0.1);
  ParamRefs<double> ps;
  mlp.params(ps);
  check_gradients([&] { return mlp.forward(x, Mode::Frozen); },
                  [&](const Tensor<double>& r) {
                    return std::vector<Tensor<double>>{mlp.backward(r)};
                  },
                  {&x}, ps);
}

TEST_CASE("spectral norm converges to unit top singular value on diag(3,1)") {
  Rng rng(28);
  Dense<double> layer(2, 2, true, rng, "sn");
  layer.weight().value.fill(0.0);
  layer.weight().value.at(0, 0) = 3.0;
  layer.weight().value.at(1, 1) = 1.0;
  Tensor<double> x({1, 2});
  x.at(0, 0) = 0.5;
  x.at(0, 1) = -0.5;
  for (int i = 0; i < 200; ++i) (void)layer.forward(x, Mode::Train);
  Tensor<double> wn = layer.effective_weight();
  // diagonal stays diagonal; top singular value of the normalized weight
  const double smax = std::max(std::abs(wn.at(0, 0)), std::abs(wn.at(1, 1)));
  CHECK(smax == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("spectral norm is a fixed point on already-normalized weights") {
  Rng rng(29);
  Dense<double> layer(2, 2, true, rng, "sn");
  layer.weight().value.fill(0.0);
  layer.weight().value.at(0, 0) = 1.0;
  layer.weight().value.at(1, 1) = 0.25;
  Tensor<double> x({1, 2});
  x.fill(1.0);
  for (int i = 0; i < 200; ++i) (void)layer.forward(x, Mode::Train);
  Tensor<double> wn = layer.effective_weight();
  CHECK(std::abs(wn.at(0, 0)) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(wn.at(1, 1)) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("spectral norm is scale invariant after convergence") {
  Rng rng(30);
  Dense<double> a(3, 2, true, rng, "a");
  Rng rng2(30);
  Dense<double> b(3, 2, true, rng2, "b");
  for (std::size_t i = 0; i < b.weight().value.numel(); ++i)
    b.weight().value[i] = 5.0 * a.weight().value[i];
  Tensor<double> x({1, 3});
  x.fill(0.3);
  for (int i = 0; i < 300; ++i) {
    (void)a.forward(x, Mode::Train);
    (void)b.forward(x, Mode::Train);
  }
  Tensor<double> wa = a.effective_weight(), wb = b.effective_weight();
  for (std::size_t i = 0; i < wa.numel(); ++i) CHECK(wa[i] == doctest::Approx(wb[i]).epsilon(0.01));
}

TEST_CASE("spectral norm guards the zero weight") {
  Rng rng(31);
  Dense<double> layer(2, 2, true, rng, "sn");
  layer.weight().value.fill(0.0);
  Tensor<double> x({1, 2});
  x.fill(1.0);
  Tensor<double> y = layer.forward(x, Mode::Train);
  CHECK(std::isfinite(y.at(0, 0)));
  Tensor<double> wn = layer.effective_weight();
  for (std::size_t i = 0; i < wn.numel(); ++i) CHECK(wn[i] == 0.0);
}

TEST_CASE("frozen backward leaves parameter gradients untouched") {
  Rng rng(32);
  Dense<double> layer(3, 3, false, rng, "fc");
  Tensor<double> x({2, 3});
  randomize(x, rng);
  Tensor<double> y = layer.forward(x, Mode::Frozen);
  Tensor<double> r(y.shape());
  randomize(r, rng);
  layer.weight().zero_grad();
  layer.bias().zero_grad();
  {
    NoParamGrads guard;
    (void)layer.backward(r);
  }
  for (std::size_t i = 0; i < layer.weight().grad.numel(); ++i)
    CHECK(layer.weight().grad[i] == 0.0);
}
