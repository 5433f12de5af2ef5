#include "train/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "ggan/spectro/spectrogram.hpp"
#include "train/checkpoint.hpp"

namespace fs = std::filesystem;

namespace ggan::train {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSampleGridStream = 7;

Tensor<float> onehot(const std::vector<int>& labels, std::size_t n) {
  Tensor<float> t({labels.size(), n});
  for (std::size_t i = 0; i < labels.size(); ++i) t.at(i, labels[i]) = 1.0f;
  return t;
}

void add_rows(Tensor<float>& dst, std::size_t row, const Tensor<float>& src) {
  const std::size_t stride = dst.row_stride();
  float* d = dst.data() + row * stride;
  for (std::size_t i = 0; i < src.numel(); ++i) d[i] += src[i];
}

}  // namespace

GganTrainer::GganTrainer(const TrainingConfig& cfg, const spectro::DatasetSplit& split)
    : cfg_(cfg),
      model_(cfg.height, cfg.ch, cfg.n_classes, mix_seed(cfg.seed, kInitStream)),
      sampler_(split, cfg.batch, cfg.n_classes, cfg.latent, cfg.seed) {
  cfg_.validate();
  init_optimizers();
}

GganTrainer::GganTrainer(const TrainingConfig& cfg, const spectro::CrossSplit& split)
    : cfg_(cfg),
      model_(cfg.height, cfg.ch, cfg.n_classes, mix_seed(cfg.seed, kInitStream)),
      sampler_(split, cfg.batch, cfg.n_classes, cfg.latent, cfg.seed) {
  cfg_.validate();
  init_optimizers();
}

void GganTrainer::init_optimizers() {
  const double lrd = cfg_.effective_lr_disc();
  opt_d1_ = Adam<float>(model_.params_d1(), lrd, cfg_.beta1, cfg_.beta2);
  opt_d2_ = Adam<float>(model_.params_d2(), lrd, cfg_.beta1, cfg_.beta2);
  opt_df_ = Adam<float>(model_.params_df(), lrd, cfg_.beta1, cfg_.beta2);
  opt_ecg_ = Adam<float>(model_.params_ecg(), cfg_.lr_other, cfg_.beta1, cfg_.beta2);
  opt_fc_ = Adam<float>(model_.params_fc(), cfg_.lr_other, cfg_.beta1, cfg_.beta2);
}

spectro::MinibatchSet GganTrainer::next_batch() {
  if (cfg_.prefetch && !prefetcher_)
    prefetcher_ = std::make_unique<spectro::Prefetcher>(sampler_, next_event_, 3);
  spectro::MinibatchSet b = prefetcher_ ? prefetcher_->next() : sampler_.sample(next_event_);
  ++next_event_;
  return b;
}

void GganTrainer::discriminator_phase(const spectro::MinibatchSet& b, loss::Bundle<float>& out) {
  const std::size_t m = cfg_.batch;
  // synthesize fakes; generator side carries no gradient here
  Tensor<float> zc = concat_cols(b.z.rows(0, m), b.c_onehot);
  Tensor<float> ze = model_.encoder.forward(zc, Mode::Stats);
  Tensor<float> xhat = model_.gen.forward(ze, Mode::Stats);
  Tensor<float> x = b.x.rows(0, m);

  // --- D1: trunk + discrimination head, plus labelled classification ---
  opt_d1_.zero_grad();
  Tensor<float> din = concat_rows<float>({&x, &xhat, &b.xl});
  Tensor<float> feat = model_.d.forward(din, Mode::Train);
  Tensor<float> feat_rf = feat.rows(0, 2 * m);
  Tensor<float> scores = model_.d_prime.forward(feat_rf, Mode::Train);
  Tensor<float> real = scores.rows(0, m), fake = scores.rows(m, 2 * m);
  Tensor<float> dreal, dfake;
  const float hinge = loss::disc_hinge_mean(real, fake, &dreal, &dfake);

  Tensor<float> gfeat({3 * m, model_.d.feat_dim()});
  float cl_d;
  {
    // Cl_loss drives D's trunk through the current F and C_x without
    // updating them
    Tensor<float> fl = feat.rows(2 * m, 3 * m);
    Tensor<float> fxl = model_.f.forward(fl, Mode::Frozen);
    Tensor<float> logits = model_.c_x.forward(fxl, Mode::Frozen);
    Tensor<float> dlogits;
    cl_d = loss::cross_entropy(logits, b.y_onehot, &dlogits);
    NoParamGrads guard;
    Tensor<float> gfl = model_.f.backward(model_.c_x.backward(dlogits));
    gfeat.set_rows(2 * m, gfl);
  }
  Tensor<float> dscores = concat_rows<float>({&dreal, &dfake});
  Tensor<float> gfeat_s = model_.d_prime.backward(dscores);
  gfeat.set_rows(0, gfeat_s);
  (void)model_.d.backward(gfeat);
  opt_d1_.step();
  out.d1 = hinge + cl_d;

  // --- D2 ---
  opt_d2_.zero_grad();
  Tensor<float> x2 = concat_rows<float>({&x, &xhat});
  Tensor<float> s2 = model_.d2.forward(x2, Mode::Train);
  Tensor<float> r2 = s2.rows(0, m), f2 = s2.rows(m, 2 * m);
  Tensor<float> dr2, df2;
  out.d2 = loss::disc_hinge_mean(r2, f2, &dr2, &df2);
  Tensor<float> ds2 = concat_rows<float>({&dr2, &df2});
  (void)model_.d2.backward(ds2);
  opt_d2_.step();

  // --- Df: real pair (z_e, xhat), fake pair (f_x, x) ---
  opt_df_.zero_grad();
  Tensor<float> fx;
  {
    Tensor<float> dxr = model_.d.forward(x, Mode::Stats);
    fx = model_.f.forward(dxr, Mode::Stats);
  }
  Tensor<float> feats = concat_rows<float>({&ze, &fx});
  Tensor<float> xin = concat_rows<float>({&xhat, &x});
  Tensor<float> sdf = model_.d_f.forward(feats, xin, Mode::Train);
  Tensor<float> rdf = sdf.rows(0, m), fdf = sdf.rows(m, 2 * m);
  Tensor<float> drdf, dfdf;
  out.df = loss::disc_hinge_mean(rdf, fdf, &drdf, &dfdf);
  Tensor<float> dsdf = concat_rows<float>({&drdf, &dfdf});
  (void)model_.d_f.backward(dsdf);
  opt_df_.step();
}

void GganTrainer::generator_phase(const spectro::MinibatchSet& b, loss::Bundle<float>& out) {
  const std::size_t m = cfg_.batch;
  const std::size_t fdim = model_.d.feat_dim();
  opt_ecg_.zero_grad();

  // pairs (i, m+i) share condition i
  Tensor<float> c2({2 * m, cfg_.n_classes});
  c2.set_rows(0, b.c_onehot);
  c2.set_rows(m, b.c_onehot);
  Tensor<float> zin = concat_cols(b.z, c2);
  Tensor<float> ze = model_.encoder.forward(zin, Mode::Train);
  Tensor<float> xhat = model_.gen.forward(ze, Mode::Train);

  Tensor<float> dxh = model_.d.forward(xhat, Mode::Frozen);
  Tensor<float> dxh_m = dxh.rows(0, m);

  Tensor<float> s1 = model_.d_prime.forward(dxh_m, Mode::Frozen);
  Tensor<float> ds1;
  const float g1 = loss::gen_hinge_mean(s1, &ds1);

  Tensor<float> xhat_m = xhat.rows(0, m);
  Tensor<float> s2 = model_.d2.forward(xhat_m, Mode::Frozen);
  Tensor<float> ds2;
  const float g2 = loss::gen_hinge_mean(s2, &ds2);

  Tensor<float> fxh = model_.f.forward(dxh_m, Mode::Frozen);
  Tensor<float> logits_gc = model_.c_x.forward(fxh, Mode::Frozen);
  Tensor<float> dgc;
  const float gc = loss::cross_entropy(logits_gc, b.c_onehot, &dgc);

  Tensor<float> ze_m = ze.rows(0, m);
  Tensor<float> logits_ec = model_.c_e.forward(ze_m, Mode::Train);
  Tensor<float> dec;
  const float ec = loss::cross_entropy(logits_ec, b.c_onehot, &dec);

  // mode divergence over (real pair, fake pair) features from D
  Tensor<float> dxr = model_.d.forward(b.x, Mode::Stats);
  Tensor<float> g_dxh1, g_dxh2;
  const float mg = loss::mode_divergence_mean<float>(
      dxr.rows(0, m), dxr.rows(m, 2 * m), dxh.rows(0, m), dxh.rows(m, 2 * m),
      static_cast<float>(cfg_.alpha), nullptr, nullptr, &g_dxh1, &g_dxh2);

  out.g1 = g1;
  out.g2 = g2;
  out.gc = gc;
  out.ec = ec;
  out.mg = mg;
  out.ecg = loss::ecg_loss(g1, g2, mg, ec, gc);

  // ----- backward -----
  const float third = 1.0f / 3.0f;
  Tensor<float> gfeat({2 * m, fdim});
  {
    NoParamGrads guard;
    // GC path (coefficient 1)
    Tensor<float> gfxh = model_.c_x.backward(dgc);
    Tensor<float> gdx_gc = model_.f.backward(gfxh);
    add_rows(gfeat, 0, gdx_gc);
    // G1 path (coefficient 1/3)
    ds1 *= third;
    Tensor<float> gdx_s1 = model_.d_prime.backward(ds1);
    add_rows(gfeat, 0, gdx_s1);
  }
  // MG path (coefficient 1/3)
  g_dxh1 *= third;
  g_dxh2 *= third;
  add_rows(gfeat, 0, g_dxh1);
  add_rows(gfeat, m, g_dxh2);

  Tensor<float> gxhat;
  {
    NoParamGrads guard;
    gxhat = model_.d.backward(gfeat);
    // G2 path (coefficient 1/3) straight into the sample
    ds2 *= third;
    Tensor<float> gx2 = model_.d2.backward(ds2);
    add_rows(gxhat, 0, gx2);
  }
  Tensor<float> gze = model_.gen.backward(gxhat);
  Tensor<float> gec = model_.c_e.backward(dec);
  add_rows(gze, 0, gec);
  (void)model_.encoder.backward(gze);
  opt_ecg_.step();
}

void GganTrainer::feature_phase(const spectro::MinibatchSet& b, loss::Bundle<float>& out) {
  const std::size_t m = cfg_.batch;
  opt_fc_.zero_grad();

  Tensor<float> zc = concat_cols(b.z.rows(0, m), b.c_onehot);
  Tensor<float> ze = model_.encoder.forward(zc, Mode::Stats);
  Tensor<float> xhat = model_.gen.forward(ze, Mode::Stats);
  Tensor<float> x = b.x.rows(0, m);

  // D features consumed without updating D
  Tensor<float> dxl = model_.d.forward(b.xl, Mode::Stats);
  Tensor<float> dxh = model_.d.forward(xhat, Mode::Stats);
  Tensor<float> dxr = model_.d.forward(x, Mode::Stats);
  Tensor<float> fin = concat_rows<float>({&dxl, &dxh, &dxr});
  Tensor<float> fall = model_.f.forward(fin, Mode::Train);

  Tensor<float> logits = model_.c_x.forward(fall.rows(0, 2 * m), Mode::Train);
  Tensor<float> dcl, dcg;
  const float cl = loss::cross_entropy(logits.rows(0, m), b.y_onehot, &dcl);
  const float cg = loss::cross_entropy(logits.rows(m, 2 * m), b.c_onehot, &dcg);

  Tensor<float> sdf = model_.d_f.forward(fall.rows(2 * m, 3 * m), x, Mode::Frozen);
  Tensor<float> dsdf;
  const float fg = loss::gen_hinge_mean(sdf, &dsdf);

  out.cl = cl;
  out.cg = cg;
  out.fg = fg;
  out.fc = loss::fc_loss(cl, cg, fg);

  Tensor<float> dlogits = concat_rows<float>({&dcl, &dcg});
  Tensor<float> gf01 = model_.c_x.backward(dlogits);
  Tensor<float> gf2;
  {
    NoParamGrads guard;
    gf2 = model_.d_f.backward_feature(dsdf);
  }
  Tensor<float> gf = concat_rows<float>({&gf01, &gf2});
  (void)model_.f.backward(gf);
  opt_fc_.step();
}

loss::Bundle<float> GganTrainer::iterate_once() {
  loss::Bundle<float> bundle;
  for (std::size_t j = 0; j < cfg_.k; ++j) {
    spectro::MinibatchSet b = next_batch();
    discriminator_phase(b, bundle);
  }
  {
    spectro::MinibatchSet b = next_batch();
    generator_phase(b, bundle);
  }
  {
    spectro::MinibatchSet b = next_batch();
    feature_phase(b, bundle);
  }
  ++iteration_;
  return bundle;
}

Tensor<float> GganTrainer::sample_class_grid(int label, std::size_t count,
                                             std::uint64_t stream) {
  Rng rng(mix_seed(cfg_.seed, kSampleGridStream + stream));
  Tensor<float> z({count, 128});
  for (std::size_t i = 0; i < z.numel(); ++i)
    z[i] = static_cast<float>(cfg_.latent == spectro::LatentKind::Uniform ? rng.uniform(-1, 1)
                                                                          : rng.normal());
  Tensor<float> c({count, cfg_.n_classes});
  for (std::size_t i = 0; i < count; ++i) c.at(i, label) = 1.0f;
  Tensor<float> ze = model_.encode(z, c, Mode::Eval);
  return model_.gen.forward(ze, Mode::Eval);
}

void GganTrainer::save(const std::string& path) const {
  auto& self = const_cast<GganTrainer&>(*this);
  CheckpointMeta meta{cfg_.hash(), iteration_, next_event_};
  save_checkpoint(path, meta, self.model_.params_all(), self.model_.state_all(),
                  {&self.opt_d1_, &self.opt_d2_, &self.opt_df_, &self.opt_ecg_, &self.opt_fc_});
}

void GganTrainer::load(const std::string& path) {
  CheckpointMeta meta =
      load_checkpoint(path, cfg_.hash(), model_.params_all(), model_.state_all(),
                      {&opt_d1_, &opt_d2_, &opt_df_, &opt_ecg_, &opt_fc_});
  iteration_ = meta.iteration;
  next_event_ = meta.next_event;
  prefetcher_.reset();  // restart prefetch at the restored event counter
}

void GganTrainer::train(const std::string& run_dir) {
  fs::create_directories(fs::path(run_dir) / "samples");
  {
    std::ofstream cfg_out(fs::path(run_dir) / "config.txt");
    cfg_out << cfg_.to_text();
  }
  std::ofstream log(fs::path(run_dir) / "metrics.log", std::ios::app);
  log.precision(9);

  while (iteration_ < cfg_.total_iters) {
    const auto t0 = std::chrono::steady_clock::now();
    loss::Bundle<float> b = iterate_once();
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!b.all_finite()) {
      save((fs::path(run_dir) / "ckpt_diagnostic.ggck").string());
      throw std::runtime_error("training halted: non-finite loss at iteration " +
                               std::to_string(iteration_) + " (diagnostic checkpoint written)");
    }
    log << "iter=" << iteration_ << " ec=" << b.ec << " g1=" << b.g1 << " g2=" << b.g2
        << " gc=" << b.gc << " mg=" << b.mg << " ecg=" << b.ecg << " fg=" << b.fg
        << " cl=" << b.cl << " cg=" << b.cg << " fc=" << b.fc << " d1=" << b.d1
        << " d2=" << b.d2 << " df=" << b.df << " wall_ms=" << wall_ms << "\n";
    log.flush();

    const bool last = iteration_ == cfg_.total_iters;
    if (cfg_.checkpoint_every > 0 && (iteration_ % cfg_.checkpoint_every == 0 || last)) {
      save((fs::path(run_dir) / ("ckpt_" + std::to_string(iteration_) + ".ggck")).string());
      save((fs::path(run_dir) / "ckpt_latest.ggck").string());
    }
    if (cfg_.sample_every > 0 && (iteration_ % cfg_.sample_every == 0 || last)) {
      for (std::size_t c = 0; c < cfg_.n_classes; ++c) {
        Tensor<float> grid = sample_class_grid(static_cast<int>(c), cfg_.samples_per_class,
                                               iteration_);
        for (std::size_t j = 0; j < cfg_.samples_per_class; ++j) {
          spectro::Spectrogram spec;
          spec.meta.height = cfg_.height;
          spec.meta.width = cfg_.height / 2;
          spec.values = grid.rows(j, j + 1).reshaped({cfg_.height, cfg_.height / 2, 1});
          std::ostringstream name;
          name << "iter" << iteration_ << "_c" << c << "_" << j << ".ggsp";
          write_spectrogram((fs::path(run_dir) / "samples" / name.str()).string(), spec);
        }
      }
    }
  }
}

namespace {

/// Shared skeleton for the two baseline hinge-GAN trainers.
template <typename DiscFwd, typename DiscBwd, typename GenFwd, typename GenBwd>
BaselineResult baseline_loop(const TrainingConfig& cfg, spectro::BatchSampler& sampler,
                             Adam<float>& opt_d, Adam<float>& opt_g,
                             const std::string& run_dir, DiscFwd disc_fwd, DiscBwd disc_bwd,
                             GenFwd gen_fwd, GenBwd gen_bwd) {
  fs::create_directories(run_dir);
  std::ofstream log(fs::path(run_dir) / "metrics.log", std::ios::app);
  log.precision(9);
  std::uint64_t event = 0;
  BaselineResult res;
  for (std::uint64_t iter = 1; iter <= cfg.total_iters; ++iter) {
    float d_loss = 0;
    for (std::size_t j = 0; j < cfg.k; ++j) {
      spectro::MinibatchSet b = sampler.sample(event++);
      opt_d.zero_grad();
      d_loss = disc_fwd(b);
      disc_bwd();
      opt_d.step();
    }
    spectro::MinibatchSet b = sampler.sample(event++);
    opt_g.zero_grad();
    const float g_loss = gen_fwd(b);
    gen_bwd();
    opt_g.step();
    if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
      throw std::runtime_error("baseline training halted: non-finite loss");
    log << "iter=" << iter << " d=" << d_loss << " g=" << g_loss << "\n";
    res.final_d = d_loss;
    res.final_g = g_loss;
  }
  return res;
}

}  // namespace

BaselineResult train_supervised_biggan(const TrainingConfig& cfg,
                                       const spectro::DatasetSplit& split,
                                       SupervisedBigGan<float>& model,
                                       const std::string& run_dir) {
  spectro::BatchSampler sampler(split, cfg.batch, cfg.n_classes, cfg.latent, cfg.seed);
  Adam<float> opt_d(model.params_disc(), cfg.effective_lr_disc(), cfg.beta1, cfg.beta2);
  Adam<float> opt_g(model.params_gen(), cfg.lr_other, cfg.beta1, cfg.beta2);
  const std::size_t m = cfg.batch;

  Tensor<float> dreal, dfake, dgen;
  std::vector<int> fake_labels;
  auto disc_fwd = [&](const spectro::MinibatchSet& b) {
    fake_labels = b.c_idx;
    Tensor<float> xhat = model.gen.forward(b.z.rows(0, m), fake_labels, Mode::Stats);
    // real and fake scored in one concatenated batch so the trunk caches
    // cover both for the backward pass
    Tensor<float> xin = concat_rows<float>({&b.xl, &xhat});
    std::vector<int> labels = b.y_idx;
    labels.insert(labels.end(), fake_labels.begin(), fake_labels.end());
    Tensor<float> s = model.disc.forward(xin, labels, Mode::Train);
    Tensor<float> real = s.rows(0, m), fake = s.rows(m, 2 * m);
    return loss::disc_hinge_mean(real, fake, &dreal, &dfake);
  };
  auto disc_bwd = [&] {
    Tensor<float> ds = concat_rows<float>({&dreal, &dfake});
    (void)model.disc.backward(ds);
  };
  auto gen_fwd = [&](const spectro::MinibatchSet& b) {
    fake_labels = b.c_idx;
    Tensor<float> xhat = model.gen.forward(b.z.rows(0, m), fake_labels, Mode::Train);
    Tensor<float> s = model.disc.forward(xhat, fake_labels, Mode::Frozen);
    return loss::gen_hinge_mean(s, &dgen);
  };
  auto gen_bwd = [&] {
    Tensor<float> gx;
    {
      NoParamGrads guard;
      gx = model.disc.backward(dgen);
    }
    (void)model.gen.backward(gx);
  };
  return baseline_loop(cfg, sampler, opt_d, opt_g, run_dir, disc_fwd, disc_bwd, gen_fwd,
                       gen_bwd);
}

BaselineResult train_unsupervised_biggan(const TrainingConfig& cfg,
                                         const spectro::DatasetSplit& split,
                                         UnsupervisedBigGan<float>& model,
                                         const std::string& run_dir) {
  spectro::BatchSampler sampler(split, cfg.batch, cfg.n_classes, cfg.latent, cfg.seed);
  Adam<float> opt_d(model.params_disc(), cfg.effective_lr_disc(), cfg.beta1, cfg.beta2);
  Adam<float> opt_g(model.params_gen(), cfg.lr_other, cfg.beta1, cfg.beta2);
  const std::size_t m = cfg.batch;

  Tensor<float> dreal, dfake, dgen;
  auto disc_fwd = [&](const spectro::MinibatchSet& b) {
    Tensor<float> xhat = model.gen.forward(b.z.rows(0, m), Mode::Stats);
    Tensor<float> x = b.x.rows(0, m);
    Tensor<float> xin = concat_rows<float>({&x, &xhat});
    Tensor<float> s = model.disc.forward(xin, Mode::Train);
    Tensor<float> real = s.rows(0, m), fake = s.rows(m, 2 * m);
    return loss::disc_hinge_mean(real, fake, &dreal, &dfake);
  };
  auto disc_bwd = [&] {
    Tensor<float> ds = concat_rows<float>({&dreal, &dfake});
    (void)model.disc.backward(ds);
  };
  auto gen_fwd = [&](const spectro::MinibatchSet& b) {
    Tensor<float> xhat = model.gen.forward(b.z.rows(0, m), Mode::Train);
    Tensor<float> s = model.disc.forward(xhat, Mode::Frozen);
    return loss::gen_hinge_mean(s, &dgen);
  };
  auto gen_bwd = [&] {
    Tensor<float> gx;
    {
      NoParamGrads guard;
      gx = model.disc.backward(dgen);
    }
    (void)model.gen.backward(gx);
  };
  return baseline_loop(cfg, sampler, opt_d, opt_g, run_dir, disc_fwd, disc_bwd, gen_fwd,
                       gen_bwd);
}

}  // namespace ggan::train
