#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ggan/spectro/dataset.hpp"
#include "train/trainer.hpp"
#include "testutil.hpp"

using namespace ggan;
using namespace ggan::train;
using namespace ggan::spectro;

namespace {

Dataset micro_dataset(std::uint64_t seed) {
  ToyConfig tc;
  tc.n_classes = 3;
  tc.per_class = 12;
  tc.spectro.height = 16;
  tc.spectro.width = 8;
  tc.spectro.hop = 8;
  return make_toy_dataset(tc, seed);
}

TrainingConfig micro_config() {
  TrainingConfig cfg;
  cfg.k = 2;
  cfg.batch = 4;
  cfg.ch = 1;
  cfg.n_classes = 3;
  cfg.height = 16;
  cfg.total_iters = 3;
  cfg.seed = 21;
  cfg.checkpoint_every = 0;
  cfg.sample_every = 0;
  cfg.guidance_fraction = 0.25;
  return cfg;
}

std::vector<loss::Bundle<float>> run_iters(GganTrainer& t, std::size_t n) {
  std::vector<loss::Bundle<float>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(t.iterate_once());
  return out;
}

bool bundles_equal(const loss::Bundle<float>& a, const loss::Bundle<float>& b) {
  return a.ec == b.ec && a.g1 == b.g1 && a.g2 == b.g2 && a.gc == b.gc && a.mg == b.mg &&
         a.ecg == b.ecg && a.fg == b.fg && a.cl == b.cl && a.cg == b.cg && a.fc == b.fc &&
         a.d1 == b.d1 && a.d2 == b.d2 && a.df == b.df;
}

}  // namespace

TEST_CASE("each phase updates exactly its own parameter partition") {
  Dataset ds = micro_dataset(31);
  DatasetSplit split = make_guidance_split(ds, 0.25, 1);
  TrainingConfig cfg = micro_config();
  GganTrainer t(cfg, split);
  auto& m = t.model();

  auto hash_groups = [&] {
    return std::array<std::uint64_t, 5>{
        param_bytes_hash(m.params_d1()), param_bytes_hash(m.params_d2()),
        param_bytes_hash(m.params_df()), param_bytes_hash(m.params_ecg()),
        param_bytes_hash(m.params_fc())};
  };
  MinibatchSet b = t.sampler().sample(0);
  loss::Bundle<float> frag;

  auto before = hash_groups();
  t.discriminator_phase(b, frag);
  auto after = hash_groups();
  CHECK(after[0] != before[0]);
  CHECK(after[1] != before[1]);
  CHECK(after[2] != before[2]);
  CHECK(after[3] == before[3]);  // E, C_e, G untouched
  CHECK(after[4] == before[4]);  // F, C_x untouched

  before = after;
  t.generator_phase(b, frag);
  after = hash_groups();
  CHECK(after[0] == before[0]);
  CHECK(after[1] == before[1]);
  CHECK(after[2] == before[2]);
  CHECK(after[3] != before[3]);
  CHECK(after[4] == before[4]);

  before = after;
  t.feature_phase(b, frag);
  after = hash_groups();
  CHECK(after[0] == before[0]);
  CHECK(after[1] == before[1]);
  CHECK(after[2] == before[2]);
  CHECK(after[3] == before[3]);
  CHECK(after[4] != before[4]);
}

TEST_CASE("one iteration consumes exactly k+2 sampling events") {
  Dataset ds = micro_dataset(32);
  DatasetSplit split = make_guidance_split(ds, 0.25, 2);
  TrainingConfig cfg = micro_config();
  GganTrainer t(cfg, split);
  CHECK(t.sampling_events() == 0);
  (void)t.iterate_once();
  CHECK(t.sampling_events() == cfg.k + 2);
  (void)t.iterate_once();
  CHECK(t.sampling_events() == 2 * (cfg.k + 2));
}

TEST_CASE("loss bundle honors the loss-module invariants every iteration") {
  Dataset ds = micro_dataset(33);
  DatasetSplit split = make_guidance_split(ds, 0.25, 3);
  TrainingConfig cfg = micro_config();
  GganTrainer t(cfg, split);
  for (const auto& b : run_iters(t, 4)) {
    CHECK(b.all_finite());
    CHECK(b.mg >= 1.0f);
    CHECK(b.d1 >= 0.0f);  // hinge plus cross entropy, both nonnegative
    CHECK(b.d2 >= 0.0f);
    CHECK(b.df >= 0.0f);
    CHECK(b.ec >= 0.0f);
    CHECK(b.gc >= 0.0f);
    CHECK(b.cl >= 0.0f);
    CHECK(b.cg >= 0.0f);
  }
}

TEST_CASE("identical config and seed give identical loss sequences") {
  Dataset ds = micro_dataset(34);
  DatasetSplit split = make_guidance_split(ds, 0.25, 4);
  TrainingConfig cfg = micro_config();
  GganTrainer a(cfg, split), b(cfg, split);
  auto la = run_iters(a, 3), lb = run_iters(b, 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(bundles_equal(la[i], lb[i]));
}

TEST_CASE("prefetch does not change the training trajectory") {
  Dataset ds = micro_dataset(35);
  DatasetSplit split = make_guidance_split(ds, 0.25, 5);
  TrainingConfig cfg = micro_config();
  GganTrainer a(cfg, split);
  TrainingConfig cfg_pf = cfg;
  cfg_pf.prefetch = true;
  GganTrainer b(cfg_pf, split);
  auto la = run_iters(a, 2), lb = run_iters(b, 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(bundles_equal(la[i], lb[i]));
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run bit-exactly") {
  Dataset ds = micro_dataset(36);
  DatasetSplit split = make_guidance_split(ds, 0.25, 6);
  TrainingConfig cfg = micro_config();

  GganTrainer full(cfg, split);
  auto reference = run_iters(full, 6);

  const std::string path =
      (std::filesystem::temp_directory_path() / "ggan_ckpt_test.ggck").string();
  GganTrainer first(cfg, split);
  (void)run_iters(first, 3);
  first.save(path);

  GganTrainer resumed(cfg, split);
  resumed.load(path);
  CHECK(resumed.iteration() == 3);
  auto tail = run_iters(resumed, 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(bundles_equal(tail[i], reference[3 + i]));
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint refuses mismatched configs and truncated files") {
  Dataset ds = micro_dataset(37);
  DatasetSplit split = make_guidance_split(ds, 0.25, 7);
  TrainingConfig cfg = micro_config();
  GganTrainer t(cfg, split);
  (void)t.iterate_once();
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "ggan_ckpt_test2.ggck").string();
  t.save(path);

  TrainingConfig other = cfg;
  other.seed = 999;
  GganTrainer t2(other, split);
  CHECK_THROWS_AS(t2.load(path), std::runtime_error);

  // truncate and retry
  std::ifstream is(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  is.close();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 3));
  os.close();
  GganTrainer t3(cfg, split);
  CHECK_THROWS_AS(t3.load(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("zero gradients leave parameters unchanged through the optimizer") {
  Param<float> p("p", {4});
  p.value.fill(0.75f);
  Adam<float> opt({&p}, 1e-3);
  opt.zero_grad();
  opt.step();
  for (std::size_t i = 0; i < 4; ++i) CHECK(p.value[i] == 0.75f);
}

TEST_CASE("classification loss overfits a single repeated labelled batch") {
  Dataset ds = micro_dataset(38);
  DatasetSplit split = make_guidance_split(ds, 0.5, 8);
  TrainingConfig cfg = micro_config();
  GganTrainer t(cfg, split);
  MinibatchSet b = t.sampler().sample(0);
  loss::Bundle<float> frag;
  float cl = 1e9f;
  for (int step = 0; step < 400 && cl > 0.05f; ++step) {
    t.discriminator_phase(b, frag);
    t.feature_phase(b, frag);
    cl = frag.cl;
  }
  CHECK(cl < 0.1f);
}

TEST_CASE("training halts with a diagnostic checkpoint on non-finite loss") {
  Dataset ds = micro_dataset(39);
  DatasetSplit split = make_guidance_split(ds, 0.25, 9);
  TrainingConfig cfg = micro_config();
  cfg.total_iters = 2;
  GganTrainer t(cfg, split);
  // poison the classifier head bias; the NaN reaches the labelled
  // cross-entropy term of the first discriminator loss
  ParamRefs<float> ps = t.model().params_fc();
  ps.back()->value[0] = std::numeric_limits<float>::quiet_NaN();
  const std::string dir =
      (std::filesystem::temp_directory_path() / "ggan_nan_run").string();
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(t.train(dir), std::runtime_error);
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "ckpt_diagnostic.ggck"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("train writes config, metrics log and sample grids") {
  Dataset ds = micro_dataset(40);
  DatasetSplit split = make_guidance_split(ds, 0.25, 10);
  TrainingConfig cfg = micro_config();
  cfg.total_iters = 2;
  cfg.checkpoint_every = 2;
  cfg.sample_every = 2;
  cfg.samples_per_class = 1;
  GganTrainer t(cfg, split);
  const std::string dir = (std::filesystem::temp_directory_path() / "ggan_run_test").string();
  std::filesystem::remove_all(dir);
  t.train(dir);
  namespace fs = std::filesystem;
  CHECK(fs::exists(fs::path(dir) / "config.txt"));
  CHECK(fs::exists(fs::path(dir) / "metrics.log"));
  CHECK(fs::exists(fs::path(dir) / "ckpt_2.ggck"));
  CHECK(fs::exists(fs::path(dir) / "ckpt_latest.ggck"));
  CHECK(fs::exists(fs::path(dir) / "samples" / "iter2_c0_0.ggsp"));
  // one structured record per iteration with all 13 loss fields
  std::ifstream log(fs::path(dir) / "metrics.log");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    ++lines;
    for (const char* field : {"iter=", " ec=", " g1=", " g2=", " gc=", " mg=", " ecg=", " fg=",
                              " cl=", " cg=", " fc=", " d1=", " d2=", " df=", " wall_ms="})
      CHECK(line.find(field) != std::string::npos);
  }
  CHECK(lines == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("baseline trainers run and keep finite losses") {
  Dataset ds = micro_dataset(41);
  DatasetSplit full_labels = full_split(ds);
  TrainingConfig cfg = micro_config();
  cfg.total_iters = 2;
  const auto dir = std::filesystem::temp_directory_path();

  auto sup = build_supervised_biggan<float>(cfg.height, cfg.ch, cfg.n_classes, 77);
  const std::string sdir = (dir / "ggan_sup_test").string();
  std::filesystem::remove_all(sdir);
  BaselineResult rs = train_supervised_biggan(cfg, full_labels, sup, sdir);
  CHECK(std::isfinite(rs.final_d));
  CHECK(std::isfinite(rs.final_g));
  std::filesystem::remove_all(sdir);

  auto uns = build_unsupervised_biggan<float>(cfg.height, cfg.ch, 78);
  const std::string udir = (dir / "ggan_uns_test").string();
  std::filesystem::remove_all(udir);
  BaselineResult ru = train_unsupervised_biggan(cfg, full_labels, uns, udir);
  CHECK(std::isfinite(ru.final_d));
  CHECK(std::isfinite(ru.final_g));
  std::filesystem::remove_all(udir);
}

TEST_CASE("config text round trip and validation") {
  TrainingConfig cfg = micro_config();
  cfg.equal_lr = true;
  TrainingConfig back = TrainingConfig::from_text(cfg.to_text());
  CHECK(back.hash() == cfg.hash());
  CHECK(back.effective_lr_disc() == cfg.lr_other);

  TrainingConfig bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.batch = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(TrainingConfig::from_text("nonsense_key=3\n"), std::invalid_argument);
}
