#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ggan/ops/conv.hpp"
#include "ggan/ops/eltwise.hpp"
#include "ggan/ops/gemm.hpp"
#include "ggan/ops/pool.hpp"
#include "testutil.hpp"

using namespace ggan;
using testutil::bit_equal;

namespace {

Tensor<float> random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor<float> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

}  // namespace

TEST_CASE("matmul variants match serial references bit-exactly") {
  Rng rng(1);
  const std::size_t M = 17, N = 23, K = 31;
  Tensor<float> a = random_tensor({M, K}, rng);
  Tensor<float> b = random_tensor({K, N}, rng);
  Tensor<float> bt = random_tensor({N, K}, rng);
  Tensor<float> at = random_tensor({K, M}, rng);

  Tensor<float> c1({M, N}), c2({M, N});
  ops::matmul_nn(M, N, K, a.data(), b.data(), c1.data());
  ops::serial::matmul_nn(M, N, K, a.data(), b.data(), c2.data());
  CHECK(bit_equal(c1, c2));

  ops::matmul_nt(M, N, K, a.data(), bt.data(), c1.data());
  ops::serial::matmul_nt(M, N, K, a.data(), bt.data(), c2.data());
  CHECK(bit_equal(c1, c2));

  ops::matmul_tn(M, N, K, at.data(), b.data(), c1.data());
  ops::serial::matmul_tn(M, N, K, at.data(), b.data(), c2.data());
  CHECK(bit_equal(c1, c2));
}

TEST_CASE("matmul_nn against hand-computed 2x2") {
  // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
  Tensor<float> a({2, 2}), b({2, 2}), c({2, 2});
  a[0] = 1; a[1] = 2; a[2] = 3; a[3] = 4;
  b[0] = 5; b[1] = 6; b[2] = 7; b[3] = 8;
  ops::matmul_nn<float>(2, 2, 2, a.data(), b.data(), c.data());
  CHECK(c[0] == doctest::Approx(19));
  CHECK(c[1] == doctest::Approx(22));
  CHECK(c[2] == doctest::Approx(43));
  CHECK(c[3] == doctest::Approx(50));
}

TEST_CASE("conv2d forward matches serial reference bit-exactly") {
  Rng rng(2);
  for (int k : {1, 3}) {
    Tensor<float> x = random_tensor({3, 8, 6, 5}, rng);
    Tensor<float> w = random_tensor({std::size_t(k), std::size_t(k), 5, 7}, rng);
    Tensor<float> bias = random_tensor({7}, rng);
    Tensor<float> y1({3, 8, 6, 7}), y2({3, 8, 6, 7});
    ops::conv2d_forward(x, w, bias.data(), k / 2, y1);
    ops::serial::conv2d_forward(x, w, bias.data(), k / 2, y2);
    CHECK(bit_equal(y1, y2));
  }
}

TEST_CASE("conv2d backward kernels match serial references bit-exactly") {
  Rng rng(3);
  Tensor<float> x = random_tensor({2, 6, 4, 3}, rng);
  Tensor<float> w = random_tensor({3, 3, 3, 4}, rng);
  Tensor<float> gy = random_tensor({2, 6, 4, 4}, rng);

  Tensor<float> gx1({2, 6, 4, 3}), gx2({2, 6, 4, 3});
  ops::conv2d_backward_input(gy, w, 1, gx1);
  ops::serial::conv2d_backward_input(gy, w, 1, gx2);
  CHECK(bit_equal(gx1, gx2));

  Tensor<float> gw1({3, 3, 3, 4}), gw2({3, 3, 3, 4});
  Tensor<float> gb1({4}), gb2({4});
  ops::conv2d_backward_weights(x, gy, 1, gw1, gb1.data());
  ops::serial::conv2d_backward_weights(x, gy, 1, gw2, gb2.data());
  // the chunked parallel path sums in a different (fixed) tree; compare to
  // tolerance rather than bitwise
  CHECK(testutil::max_abs_diff(gw1, gw2) < 1e-4);
  CHECK(bit_equal(gb1, gb2));
}

TEST_CASE("conv2d 1x1 equals per-position matmul") {
  Rng rng(4);
  Tensor<float> x = random_tensor({2, 4, 4, 3}, rng);
  Tensor<float> w = random_tensor({1, 1, 3, 5}, rng);
  Tensor<float> y({2, 4, 4, 5});
  ops::conv2d_forward(x, w, static_cast<const float*>(nullptr), 0, y);
  Tensor<float> ymm({2 * 4 * 4, 5});
  ops::matmul_nn<float>(2 * 4 * 4, 5, 3, x.data(), w.data(), ymm.data());
  CHECK(testutil::max_abs_diff(y, ymm.reshaped({2, 4, 4, 5})) == 0.0);
}

TEST_CASE("pooling and upsampling match serial and invert shapes") {
  Rng rng(5);
  Tensor<float> x = random_tensor({2, 6, 4, 3}, rng);
  Tensor<float> up({2, 12, 8, 3}), up2({2, 12, 8, 3});
  ops::upsample_nearest2x_forward(x, up);
  ops::serial::upsample_nearest2x_forward(x, up2);
  CHECK(bit_equal(up, up2));

  Tensor<float> down({2, 6, 4, 3});
  ops::avgpool2x2_forward(up, down);
  // nearest-up then avgpool is the identity
  CHECK(testutil::max_abs_diff(x, down) < 1e-6);

  Tensor<float> down2({2, 3, 2, 3}), down3({2, 3, 2, 3});
  ops::avgpool2x2_forward(x, down2);
  ops::serial::avgpool2x2_forward(x, down3);
  CHECK(bit_equal(down2, down3));
}

TEST_CASE("avgpool rejects odd spatial dims") {
  Tensor<float> x({1, 3, 4, 1}), y({1, 1, 2, 1});
  CHECK_THROWS_AS(ops::avgpool2x2_forward(x, y), std::invalid_argument);
}

TEST_CASE("global sum pooling is linear in activations") {
  Rng rng(6);
  Tensor<float> x = random_tensor({2, 3, 3, 4}, rng);
  Tensor<float> y({2, 4}), y2({2, 4});
  ops::global_sum_pool_forward(x, y);
  Tensor<float> xs = x;
  xs *= 2.0f;
  ops::global_sum_pool_forward(xs, y2);
  for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y2[i] == doctest::Approx(2 * y[i]));
}

TEST_CASE("softmax rows sum to one and backward matches finite differences") {
  Rng rng(7);
  Tensor<double> x({4, 6});
  testutil::randomize(x, rng, 2.0);
  Tensor<double> p(x.shape());
  ops::softmax_rows(x, p);
  for (std::size_t n = 0; n < 4; ++n) {
    double s = 0;
    for (std::size_t k = 0; k < 6; ++k) s += p.at(n, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  // probe scalar: sum(P .* R)
  Tensor<double> r({4, 6});
  testutil::randomize(r, rng);
  auto probe = [&] {
    Tensor<double> q(x.shape());
    ops::softmax_rows(x, q);
    double s = 0;
    for (std::size_t i = 0; i < q.numel(); ++i) s += q[i] * r[i];
    return s;
  };
  Tensor<double> gx(x.shape());
  ops::softmax_rows_backward(r, p, gx);
  Tensor<double> fd = testutil::finite_difference(probe, x);
  CHECK(testutil::grad_rel_error(gx, fd) < 1e-6);
}

TEST_CASE("relu and tanh backward match finite differences") {
  Rng rng(8);
  Tensor<double> x({3, 5});
  testutil::randomize(x, rng, 1.0, 0.3);  // keep away from the relu kink
  Tensor<double> r({3, 5});
  testutil::randomize(r, rng);

  Tensor<double> y(x.shape());
  ops::relu_forward(x, y);
  Tensor<double> gx(x.shape());
  ops::relu_backward(r, x, gx);
  auto probe_relu = [&] {
    Tensor<double> t(x.shape());
    ops::relu_forward(x, t);
    double s = 0;
    for (std::size_t i = 0; i < t.numel(); ++i) s += t[i] * r[i];
    return s;
  };
  CHECK(testutil::grad_rel_error(gx, testutil::finite_difference(probe_relu, x)) < 1e-6);

  ops::tanh_forward(x, y);
  ops::tanh_backward(r, y, gx);
  auto probe_tanh = [&] {
    Tensor<double> t(x.shape());
    ops::tanh_forward(x, t);
    double s = 0;
    for (std::size_t i = 0; i < t.numel(); ++i) s += t[i] * r[i];
    return s;
  };
  CHECK(testutil::grad_rel_error(gx, testutil::finite_difference(probe_tanh, x)) < 1e-6);
}
