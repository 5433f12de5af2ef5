#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "ggan/spectro/dataset.hpp"
#include "testutil.hpp"

using namespace ggan;
using namespace ggan::spectro;

namespace {

Dataset tiny_pool(std::size_t n, std::size_t n_classes, std::uint64_t seed) {
  // fabricated pool with recognizable contents, no audio synthesis
  Dataset ds;
  ds.cfg = SpectroConfig::toy();
  ds.cfg.height = 8;
  ds.cfg.width = 4;
  ds.n_classes = n_classes;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    LabelledSample s;
    s.values = Tensor<float>({8, 4, 1});
    s.values.fill(static_cast<float>(i) / n);
    s.label = static_cast<int>(i % n_classes);
    ds.train.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < 16; ++i) {
    LabelledSample s;
    s.values = Tensor<float>({8, 4, 1});
    s.label = static_cast<int>(i % n_classes);
    ds.test.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

TEST_CASE("guidance split size and determinism") {
  Dataset pool = tiny_pool(1000, 10, 5);
  DatasetSplit a = make_guidance_split(pool, 0.05, 7);
  CHECK(a.labelled_size() == 50);
  CHECK(a.unlabelled_size() == 950);
  DatasetSplit b = make_guidance_split(pool, 0.05, 7);
  CHECK(a.labelled_indices == b.labelled_indices);
  CHECK(a.unlabelled_indices == b.unlabelled_indices);
  // labelled and unlabelled are disjoint and cover the pool
  std::set<std::size_t> all(a.labelled_indices.begin(), a.labelled_indices.end());
  for (std::size_t i : a.unlabelled_indices) CHECK(all.insert(i).second);
  CHECK(all.size() == 1000);
}

TEST_CASE("guidance split rejects empty outcomes") {
  Dataset pool = tiny_pool(100, 4, 6);
  CHECK_THROWS_AS(make_guidance_split(pool, 0.001, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_guidance_split(pool, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_guidance_split(pool, 1.5, 1), std::invalid_argument);
}

TEST_CASE("five seeds give five distinct subsets with hypergeometric overlap") {
  Dataset pool = tiny_pool(1000, 10, 8);
  std::vector<std::set<std::size_t>> subsets;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DatasetSplit s = make_guidance_split(pool, 0.01, seed);
    CHECK(s.labelled_size() == 10);
    subsets.emplace_back(s.labelled_indices.begin(), s.labelled_indices.end());
  }
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) CHECK(subsets[i] != subsets[j]);

  // expected pairwise overlap k^2/N = 0.1; estimate over many seed pairs
  double total_overlap = 0;
  const int pairs = 500;
  for (int p = 0; p < pairs; ++p) {
    DatasetSplit s1 = make_guidance_split(pool, 0.01, 1000 + 2 * p);
    DatasetSplit s2 = make_guidance_split(pool, 0.01, 1001 + 2 * p);
    std::set<std::size_t> a(s1.labelled_indices.begin(), s1.labelled_indices.end());
    int overlap = 0;
    for (std::size_t i : s2.labelled_indices) overlap += a.count(i);
    total_overlap += overlap;
  }
  const double mean = total_overlap / pairs;
  CHECK(mean > 0.04);
  CHECK(mean < 0.2);
}

TEST_CASE("toy dataset is reproducible, balanced and in range") {
  ToyConfig cfg;
  cfg.n_classes = 4;
  cfg.per_class = 12;
  Dataset a = make_toy_dataset(cfg, 42);
  Dataset b = make_toy_dataset(cfg, 42);
  REQUIRE(a.train.size() == b.train.size());
  CHECK(a.train.size() + a.test.size() == 48);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].label == b.train[i].label);
    CHECK(testutil::bit_equal(a.train[i].values, b.train[i].values));
  }
  std::vector<int> counts(4, 0);
  for (const auto& s : a.train) {
    ++counts[s.label];
    CHECK(s.values.shape() == std::vector<std::size_t>{64, 32, 1});
    for (std::size_t i = 0; i < s.values.numel(); ++i) {
      CHECK(s.values[i] >= -1.0f);
      CHECK(s.values[i] <= 1.0f);
    }
  }
  for (int c : counts) CHECK(c > 0);
  Dataset c = make_toy_dataset(cfg, 43);
  CHECK(!testutil::bit_equal(a.train[0].values, c.train[0].values));
}

TEST_CASE("dataset directory round trip") {
  ToyConfig cfg;
  cfg.n_classes = 3;
  cfg.per_class = 4;
  cfg.spectro.height = 16;
  cfg.spectro.width = 8;
  cfg.spectro.hop = 8;
  Dataset ds = make_toy_dataset(cfg, 9);
  const std::string dir =
      (std::filesystem::temp_directory_path() / "ggan_ds_test").string();
  std::filesystem::remove_all(dir);
  save_dataset(dir, ds);
  Dataset r = load_dataset(dir);
  CHECK(r.n_classes == 3);
  REQUIRE(r.train.size() == ds.train.size());
  REQUIRE(r.test.size() == ds.test.size());
  for (std::size_t i = 0; i < r.train.size(); ++i) {
    CHECK(r.train[i].label == ds.train[i].label);
    CHECK(testutil::bit_equal(r.train[i].values, ds.train[i].values));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("batch sampler: event determinism, one-hot conditions, latent range") {
  Dataset pool = tiny_pool(200, 4, 10);
  DatasetSplit split = make_guidance_split(pool, 0.1, 3);
  BatchSampler sampler(split, 8, 4, LatentKind::Uniform, 77);
  MinibatchSet a = sampler.sample(5);
  MinibatchSet b = sampler.sample(5);
  CHECK(testutil::bit_equal(a.z, b.z));
  CHECK(testutil::bit_equal(a.x, b.x));
  CHECK(a.c_idx == b.c_idx);
  CHECK(a.y_idx == b.y_idx);
  MinibatchSet c = sampler.sample(6);
  CHECK(!testutil::bit_equal(a.z, c.z));

  CHECK(a.z.shape() == std::vector<std::size_t>{16, 128});
  CHECK(a.x.shape() == std::vector<std::size_t>{16, 8, 4, 1});
  CHECK(a.xl.dim(0) == 8);
  for (std::size_t i = 0; i < a.z.numel(); ++i) {
    CHECK(a.z[i] >= -1.0f);
    CHECK(a.z[i] <= 1.0f);
  }
  for (std::size_t i = 0; i < 8; ++i) {
    float sum = 0;
    int ones = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      sum += a.c_onehot.at(i, k);
      ones += a.c_onehot.at(i, k) == 1.0f;
    }
    CHECK(sum == 1.0f);
    CHECK(ones == 1);
  }
}

TEST_CASE("condition frequencies are uniform within three sigmas") {
  Dataset pool = tiny_pool(100, 10, 11);
  DatasetSplit split = make_guidance_split(pool, 0.2, 4);
  BatchSampler sampler(split, 50, 10, LatentKind::Uniform, 123);
  std::vector<int> counts(10, 0);
  const int events = 200;  // 200 * 50 = 1e4 conditions
  for (int e = 0; e < events; ++e) {
    MinibatchSet b = sampler.sample(e);
    for (int c : b.c_idx) ++counts[c];
  }
  const double n = events * 50.0, p = 0.1;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - n * p) < 3 * sigma);
}

TEST_CASE("labelled minibatches draw with replacement from small guidance sets") {
  Dataset pool = tiny_pool(100, 4, 12);
  DatasetSplit split = make_guidance_split(pool, 0.02, 5);  // 2 labelled samples
  BatchSampler sampler(split, 16, 4, LatentKind::Uniform, 9);
  MinibatchSet b = sampler.sample(0);  // m=16 from 2 -> must repeat
  CHECK(b.xl.dim(0) == 16);
}

TEST_CASE("prefetch produces the same event sequence as direct sampling") {
  Dataset pool = tiny_pool(120, 4, 13);
  DatasetSplit split = make_guidance_split(pool, 0.1, 6);
  BatchSampler sampler(split, 4, 4, LatentKind::Uniform, 55);
  Prefetcher pf(sampler, 0, 3);
  for (std::uint64_t e = 0; e < 10; ++e) {
    MinibatchSet direct = sampler.sample(e);
    MinibatchSet queued = pf.next();
    CHECK(testutil::bit_equal(direct.z, queued.z));
    CHECK(testutil::bit_equal(direct.xl, queued.xl));
    CHECK(direct.y_idx == queued.y_idx);
  }
}

TEST_CASE("cross-dataset sampler takes labels only from the guidance corpus") {
  Dataset pool = tiny_pool(60, 2, 14);
  Dataset guidance = tiny_pool(30, 2, 15);
  for (auto& s : guidance.train) s.values.fill(7.0f);  // recognizable provenance
  CrossSplit cross{&pool, &guidance};
  BatchSampler sampler(cross, 6, 2, LatentKind::Uniform, 33);
  MinibatchSet b = sampler.sample(1);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(b.xl.at(i, 0, 0, 0) == 7.0f);
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(b.x.at(i, 0, 0, 0) != 7.0f);

  Dataset mismatched = tiny_pool(30, 3, 16);
  CrossSplit badcross{&pool, &mismatched};
  CHECK_THROWS_AS(BatchSampler(badcross, 6, 2, LatentKind::Uniform, 1), std::invalid_argument);
}
