#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ggan/losses.hpp"
#include "ggan/nets/biggan.hpp"
#include "ggan/nets/ggan.hpp"
#include "testutil.hpp"
#include "walk_expected.hpp"

using namespace ggan;
using testutil::randomize;

namespace {

Tensor<float> random_f(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor<float> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(-scale, scale));
  return t;
}

Tensor<float> onehot_f(const std::vector<int>& labels, std::size_t k) {
  Tensor<float> t({labels.size(), k});
  for (std::size_t i = 0; i < labels.size(); ++i) t.at(i, labels[i]) = 1.0f;
  return t;
}

}  // namespace

TEST_CASE("generator trace matches the table rows at micro and toy scale") {
  for (auto [h, ch] : std::vector<std::pair<std::size_t, std::size_t>>{{16, 1}, {64, 2}}) {
    Rng rng(51);
    Generator<float> g(h, ch, false, 0, 0, true, rng, "g");
    std::vector<TraceRow> trace;
    g.set_trace(&trace);
    Tensor<float> z = random_f({1, 128}, rng);
    Tensor<float> y = g.forward(z, Mode::Eval);
    g.set_trace(nullptr);
    CHECK(testutil::rows_match(trace, testutil::generator_rows(h, ch)));
    CHECK(y.dim(1) == h);
    CHECK(y.dim(2) == h / 2);
    CHECK(y.dim(3) == 1);
    // tanh range; float saturates to exactly +-1 for large pre-activations
    for (std::size_t i = 0; i < y.numel(); ++i) {
      CHECK(y[i] >= -1.0f);
      CHECK(y[i] <= 1.0f);
    }
  }
}

TEST_CASE("trunk trace matches the table rows at micro and toy scale") {
  for (auto [h, ch] : std::vector<std::pair<std::size_t, std::size_t>>{{16, 1}, {64, 4}}) {
    Rng rng(52);
    DTrunk<float> d(h, ch, true, rng, "d");
    std::vector<TraceRow> trace;
    d.set_trace(&trace);
    Tensor<float> x = random_f({2, h, h / 2, 1}, rng);
    Tensor<float> feat = d.forward(x, Mode::Eval);
    d.set_trace(nullptr);
    CHECK(testutil::rows_match(trace, testutil::trunk_rows(h, ch)));
    CHECK(feat.dim(0) == 2);
    CHECK(feat.dim(1) == 16 * ch);
  }
}

TEST_CASE("ggan model wires the documented dimensions") {
  GganModel<float> m(32, 2, 10, 7);
  // encoder: (128 + 10) -> 128
  CHECK(m.encoder.in_features() == 138);
  CHECK(m.encoder.out_features() == 128);
  CHECK(m.c_e.out_features() == 10);
  CHECK(m.c_x.out_features() == 10);
  CHECK(m.d_prime.in_features() == 16 * 2);
  CHECK(m.d_prime.out_features() == 1);
  CHECK(m.f.in_features() == 16 * 2);
  CHECK(m.f.out_features() == 128);

  Rng rng(53);
  Tensor<float> z = random_f({3, 128}, rng);
  Tensor<float> c = onehot_f({1, 0, 9}, 10);
  Tensor<float> ze = m.encode(z, c, Mode::Eval);
  CHECK(ze.dim(0) == 3);
  CHECK(ze.dim(1) == 128);

  Tensor<float> xhat = m.gen.forward(ze, Mode::Eval);
  CHECK(xhat.dim(1) == 32);
  CHECK(xhat.dim(2) == 16);

  Tensor<float> dx = m.d.forward(xhat, Mode::Eval);
  CHECK(dx.dim(1) == 32);
  Tensor<float> score = m.d_prime.forward(dx, Mode::Eval);
  CHECK(score.dim(1) == 1);
  Tensor<float> fx = m.f.forward(dx, Mode::Eval);
  CHECK(fx.dim(1) == 128);
  Tensor<float> logits = m.probe_logits(xhat, Mode::Eval);
  CHECK(logits.dim(1) == 10);

  Tensor<float> sdf = m.d_f.forward(fx, xhat, Mode::Eval);
  CHECK(sdf.dim(1) == 1);
}

TEST_CASE("df concat width equals trunk features plus latent dim") {
  Rng rng(54);
  DFNet<float> df(32, 2, 128, true, rng, "df");
  std::vector<TraceRow> trace;
  df.set_trace(&trace);
  Tensor<float> feat = random_f({1, 128}, rng);
  Tensor<float> x = random_f({1, 32, 16, 1}, rng);
  (void)df.forward(feat, x, Mode::Eval);
  df.set_trace(nullptr);
  bool found = false;
  for (const auto& row : trace)
    if (row.name == "Concat with input feature") {
      found = true;
      CHECK(row.dims == std::vector<std::size_t>{16 * 2 + 128});
    }
  CHECK(found);
  // swapping the feature argument changes the score
  Tensor<float> feat2 = feat;
  feat2[0] += 1.0f;
  Tensor<float> s1 = df.forward(feat, x, Mode::Eval);
  Tensor<float> s2 = df.forward(feat2, x, Mode::Eval);
  CHECK(s1.at(0, 0) != s2.at(0, 0));
}

TEST_CASE("zero-parameter networks give zero outputs") {
  GganModel<float> m(16, 1, 4, 11);
  for (Param<float>* p : m.params_all()) p->value.fill(0.0f);
  Rng rng(55);
  Tensor<float> z = random_f({2, 128}, rng);
  Tensor<float> c = onehot_f({0, 2}, 4);
  Tensor<float> ze = m.encode(z, c, Mode::Eval);
  for (std::size_t i = 0; i < ze.numel(); ++i) CHECK(ze[i] == 0.0f);
  Tensor<float> logits = m.c_e.forward(ze, Mode::Eval);
  for (std::size_t i = 0; i < logits.numel(); ++i) CHECK(logits[i] == 0.0f);
  // uniform softmax over zero logits
  Tensor<float> p(logits.shape());
  ops::softmax_rows(logits, p);
  for (std::size_t i = 0; i < p.numel(); ++i) CHECK(p[i] == doctest::Approx(0.25f));
  Tensor<float> x = random_f({2, 16, 8, 1}, rng);
  Tensor<float> s = m.d2.forward(x, Mode::Eval);
  for (std::size_t i = 0; i < s.numel(); ++i) CHECK(s[i] == 0.0f);
}

TEST_CASE("eval forward is deterministic and row-independent") {
  GganModel<float> m(16, 1, 4, 13);
  Rng rng(56);
  Tensor<float> z = random_f({4, 128}, rng);
  Tensor<float> c = onehot_f({0, 1, 2, 3}, 4);
  Tensor<float> ze = m.encode(z, c, Mode::Eval);
  Tensor<float> a = m.gen.forward(ze, Mode::Eval);
  Tensor<float> b = m.gen.forward(ze, Mode::Eval);
  CHECK(testutil::bit_equal(a, b));
  // perturb one latent row; other rows of the output must be bit-identical
  Tensor<float> ze2 = ze;
  for (std::size_t j = 0; j < 128; ++j) ze2.at(2, j) += 0.25f;
  Tensor<float> y2 = m.gen.forward(ze2, Mode::Eval);
  const std::size_t stride = a.row_stride();
  for (std::size_t n : {std::size_t(0), std::size_t(1), std::size_t(3)})
    for (std::size_t j = 0; j < stride; ++j) CHECK(a[n * stride + j] == y2[n * stride + j]);
  double moved = 0;
  for (std::size_t j = 0; j < stride; ++j) moved += std::abs(a[2 * stride + j] - y2[2 * stride + j]);
  CHECK(moved > 0.0);
}

TEST_CASE("gradients reach the encoder and feature extractor (no detached subgraphs)") {
  GganModel<float> m(16, 1, 4, 17);
  Rng rng(57);
  const std::size_t n = 3;
  Tensor<float> z = random_f({n, 128}, rng);
  Tensor<float> c = onehot_f({0, 1, 2}, 4);

  // generator-side path: CE(C_x(F(D(G(E(z,c))))), c) into E's parameters
  for (Param<float>* p : m.params_all()) p->zero_grad();
  Tensor<float> ze = m.encode(z, c, Mode::Train);
  Tensor<float> xhat = m.gen.forward(ze, Mode::Train);
  Tensor<float> dx = m.d.forward(xhat, Mode::Frozen);
  Tensor<float> fx = m.f.forward(dx, Mode::Frozen);
  Tensor<float> logits = m.c_x.forward(fx, Mode::Frozen);
  Tensor<float> dlogits;
  (void)loss::cross_entropy(logits, c, &dlogits);
  Tensor<float> gfx = m.c_x.backward(dlogits);
  Tensor<float> gdx = m.f.backward(gfx);
  Tensor<float> gxhat = m.d.backward(gdx);
  Tensor<float> gze = m.gen.backward(gxhat);
  (void)m.encoder.backward(gze);
  double enc_grad = 0;
  ParamRefs<float> eps;
  m.encoder.params(eps);
  for (Param<float>* p : eps)
    for (std::size_t i = 0; i < p->grad.numel(); ++i) enc_grad += std::abs(p->grad[i]);
  CHECK(enc_grad > 0.0);

  // feature-side path: FG = -Df(F(D(x)), x) into F's parameters
  for (Param<float>* p : m.params_all()) p->zero_grad();
  Tensor<float> x = random_f({n, 16, 8, 1}, rng);
  Tensor<float> dxr = m.d.forward(x, Mode::Stats);
  Tensor<float> fxr = m.f.forward(dxr, Mode::Train);
  Tensor<float> sdf = m.d_f.forward(fxr, x, Mode::Frozen);
  Tensor<float> dsdf;
  (void)loss::gen_hinge_mean(sdf, &dsdf);
  Tensor<float> gfeat = m.d_f.backward_feature(dsdf);
  (void)m.f.backward(gfeat);
  double f_grad = 0;
  ParamRefs<float> fps;
  m.f.params(fps);
  for (Param<float>* p : fps)
    for (std::size_t i = 0; i < p->grad.numel(); ++i) f_grad += std::abs(p->grad[i]);
  CHECK(f_grad > 0.0);
}

TEST_CASE("supervised and unsupervised baselines differ only in conditioning") {
  auto sup = build_supervised_biggan<float>(16, 1, 4, 19);
  auto uns = build_unsupervised_biggan<float>(16, 1, 19);
  Rng rng(58);
  Tensor<float> z = random_f({2, 128}, rng);
  std::vector<int> y = {1, 3};
  Tensor<float> xs = sup.gen.forward(z, y, Mode::Eval);
  Tensor<float> xu = uns.gen.forward(z, Mode::Eval);
  CHECK(xs.shape() == xu.shape());

  // supervised discriminator score includes the projection term
  Tensor<float> x = random_f({2, 16, 8, 1}, rng);
  Tensor<float> s0 = sup.disc.forward(x, {0, 0}, Mode::Eval);
  Tensor<float> s1 = sup.disc.forward(x, {1, 1}, Mode::Eval);
  double diff = 0;
  for (std::size_t i = 0; i < s0.numel(); ++i) diff += std::abs(s0[i] - s1[i]);
  CHECK(diff > 0.0);

  // with a zero embedding table the projection term vanishes
  sup.disc.embedding().table().value.fill(0.0f);
  Tensor<float> sa = sup.disc.forward(x, {0, 1}, Mode::Eval);
  Tensor<float> sb = sup.disc.forward(x, {3, 2}, Mode::Eval);
  for (std::size_t i = 0; i < sa.numel(); ++i) CHECK(sa[i] == doctest::Approx(sb[i]));
}

TEST_CASE("projection head arithmetic") {
  Rng rng(59);
  ProjectionDiscriminator<float> d(16, 1, 4, false, rng, "pd");
  const std::size_t f = 16;
  // hand case: embed(y) = e1, pooled = (2, 0, ...), dense = 0 -> output 2
  d.dense_head().weight().value.fill(0.0f);
  d.dense_head().bias().value.fill(0.0f);
  d.embedding().table().value.fill(0.0f);
  d.embedding().table().value.at(1, 0) = 1.0f;
  Tensor<float> pooled({1, f});
  pooled.at(0, 0) = 2.0f;
  Tensor<float> s = d.head_only(pooled, {1}, Mode::Eval);
  CHECK(s.at(0, 0) == doctest::Approx(2.0f));
  // pooled = 0 -> dense bias only
  d.dense_head().bias().value[0] = 0.75f;
  Tensor<float> zero({1, f});
  CHECK(d.head_only(zero, {1}, Mode::Eval).at(0, 0) == doctest::Approx(0.75f));
  // out-of-range label
  CHECK_THROWS_AS(d.head_only(pooled, {7}, Mode::Eval), std::out_of_range);
}

TEST_CASE("classifier softmax rows sum to one") {
  GganModel<float> m(16, 1, 10, 23);
  Rng rng(60);
  Tensor<float> v = random_f({5, 128}, rng);
  Tensor<float> logits = m.c_e.forward(v, Mode::Eval);
  CHECK(logits.dim(1) == 10);
  Tensor<float> p(logits.shape());
  ops::softmax_rows(logits, p);
  for (std::size_t n = 0; n < 5; ++n) {
    double s = 0;
    for (std::size_t k = 0; k < 10; ++k) s += p.at(n, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}
