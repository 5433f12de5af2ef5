#include <omp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ggan/spectro/stft.hpp"
#include "ggan/spectro/wav.hpp"
#include "harness/experiments.hpp"
#include "metrics/evaluate.hpp"
#include "train/checkpoint.hpp"
#include "train/classifier.hpp"
#include "train/trainer.hpp"

namespace fs = std::filesystem;
using namespace ggan;

namespace {

/// Training options shared by train/sweep/cross-guidance. Values from a
/// --config file are overridden by explicitly passed flags.
struct TrainOpts {
  std::string config_path;
  train::TrainingConfig cfg;

  CLI::Option *o_k = nullptr, *o_batch = nullptr, *o_lrd = nullptr, *o_lro = nullptr,
              *o_eq = nullptr, *o_alpha = nullptr, *o_ch = nullptr, *o_classes = nullptr,
              *o_height = nullptr, *o_iters = nullptr, *o_seed = nullptr, *o_frac = nullptr,
              *o_strat = nullptr, *o_ckpt_every = nullptr, *o_sample_every = nullptr,
              *o_prefetch = nullptr, *o_toy = nullptr, *o_gauss = nullptr;
  std::size_t k = 2, batch = 64, ch = 16, n_classes = 10, height = 256, total_iters = 2000;
  std::size_t checkpoint_every = 500, sample_every = 500;
  double lr_disc = 2e-4, lr_other = 5e-4, alpha = 1e-4, fraction = 0.05;
  std::uint64_t seed = 1;
  bool equal_lr = false, stratified = false, prefetch = false, toy = false, gaussian = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value config file");
    o_k = app->add_option("--k", k, "discriminator steps per iteration");
    o_batch = app->add_option("--batch", batch, "minibatch size m");
    o_lrd = app->add_option("--lr-disc", lr_disc, "discriminator learning rate");
    o_lro = app->add_option("--lr-other", lr_other, "learning rate for E, C_e, G, F, C_x");
    o_eq = app->add_flag("--equal-lr", equal_lr, "tie discriminator lr to the others");
    o_alpha = app->add_option("--alpha", alpha, "mode-divergence denominator guard");
    o_ch = app->add_option("--ch", ch, "channel multiplier");
    o_classes = app->add_option("--classes", n_classes, "number of condition classes");
    o_height = app->add_option("--height", height, "spectrogram height (width = height/2)");
    o_iters = app->add_option("--iters", total_iters, "training iterations");
    o_seed = app->add_option("--seed", seed, "master seed");
    o_frac = app->add_option("--fraction", fraction, "guidance label fraction");
    o_strat = app->add_flag("--stratified", stratified, "stratified guidance sampling");
    o_ckpt_every = app->add_option("--checkpoint-every", checkpoint_every, "checkpoint period");
    o_sample_every = app->add_option("--sample-every", sample_every, "sample-grid period");
    o_prefetch = app->add_flag("--prefetch", prefetch, "background minibatch prefetch");
    o_toy = app->add_flag("--toy-preset", toy, "desk-scale preset (ch=4, 64x32, 4 classes)");
    o_gauss = app->add_flag("--gaussian-latent", gaussian, "gaussian latent distribution");
  }

  train::TrainingConfig resolve() {
    train::TrainingConfig c;
    if (!config_path.empty()) c = train::TrainingConfig::from_file(config_path);
    if (o_toy->count() && toy) c.apply_toy_preset();
    if (o_k->count()) c.k = k;
    if (o_batch->count()) c.batch = batch;
    if (o_lrd->count()) c.lr_disc = lr_disc;
    if (o_lro->count()) c.lr_other = lr_other;
    if (o_eq->count()) c.equal_lr = equal_lr;
    if (o_alpha->count()) c.alpha = alpha;
    if (o_ch->count()) c.ch = ch;
    if (o_classes->count()) c.n_classes = n_classes;
    if (o_height->count()) c.height = height;
    if (o_iters->count()) c.total_iters = total_iters;
    if (o_seed->count()) c.seed = seed;
    if (o_frac->count()) c.guidance_fraction = fraction;
    if (o_strat->count()) c.stratified_guidance = stratified;
    if (o_ckpt_every->count()) c.checkpoint_every = checkpoint_every;
    if (o_sample_every->count()) c.sample_every = sample_every;
    if (o_prefetch->count()) c.prefetch = prefetch;
    if (o_gauss->count() && gaussian) c.latent = spectro::LatentKind::Gaussian;
    c.validate();
    return c;
  }
};

train::TrainingConfig config_of_run(const std::string& run_dir) {
  return train::TrainingConfig::from_file((fs::path(run_dir) / "config.txt").string());
}

std::string default_ckpt(const std::string& run_dir) {
  return (fs::path(run_dir) / "ckpt_latest.ggck").string();
}

/// Rebuild a trainer around a finished run and load its checkpoint.
train::GganTrainer restore_trainer(const train::TrainingConfig& cfg,
                                   const spectro::Dataset& pool, const std::string& ckpt) {
  spectro::DatasetSplit split = spectro::make_guidance_split(
      pool, cfg.guidance_fraction, cfg.seed, cfg.stratified_guidance);
  train::GganTrainer trainer(cfg, split);
  trainer.load(ckpt);
  return trainer;
}

void write_grid(const Tensor<float>& grid, const spectro::SpectroConfig& meta,
                const std::string& dir, const std::string& prefix, bool wav,
                std::size_t invert_iters) {
  fs::create_directories(dir);
  for (std::size_t j = 0; j < grid.dim(0); ++j) {
    spectro::Spectrogram spec;
    spec.meta = meta;
    spec.values = grid.rows(j, j + 1).reshaped({meta.height, meta.width, 1});
    const std::string base = prefix + "_" + std::to_string(j);
    spectro::write_spectrogram((fs::path(dir) / (base + ".ggsp")).string(), spec);
    if (wav) {
      spectro::Waveform w = spectro::invert_spectrogram(spec, invert_iters);
      spectro::write_wav((fs::path(dir) / (base + ".wav")).string(), w);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided adversarial spectrogram synthesis and representation learning"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");

  // ---- prepare-data ----
  auto* prep = app.add_subcommand("prepare-data", "build a dataset directory");
  std::string prep_out, prep_wav_dir, prep_style = "harmonic";
  bool prep_toy = false;
  std::size_t prep_classes = 4, prep_per_class = 512, prep_height = 64, prep_hop = 0;
  double prep_test_fraction = 0.2;
  std::uint64_t prep_seed = 1;
  prep->add_option("--out", prep_out, "output dataset directory")->required();
  prep->add_flag("--toy", prep_toy, "synthesize the toy corpus");
  prep->add_option("--wav-dir", prep_wav_dir, "ingest digit-labelled .wav files");
  prep->add_option("--classes", prep_classes, "toy class count");
  prep->add_option("--per-class", prep_per_class, "toy samples per class");
  prep->add_option("--height", prep_height, "spectrogram height (width = height/2)");
  prep->add_option("--hop", prep_hop, "analysis hop (default height/2)");
  prep->add_option("--style", prep_style, "toy style: harmonic | centroid");
  prep->add_option("--test-fraction", prep_test_fraction, "held-out fraction");
  prep->add_option("--seed", prep_seed, "seed");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train the guided model or a baseline");
  TrainOpts topts;
  std::string tr_data, tr_out, tr_model = "ggan", tr_resume;
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out, "run directory")->required();
  tr->add_option("--model", tr_model, "ggan | biggan-sup | biggan-uns");
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");
  topts.attach(tr);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "per-condition sample grids from a run");
  std::string gen_run, gen_data, gen_out, gen_ckpt;
  std::size_t gen_per_class = 8, gen_invert = 60;
  bool gen_wav = false;
  std::uint64_t gen_seed = 1;
  gen->add_option("--run", gen_run, "run directory")->required();
  gen->add_option("--data", gen_data, "dataset directory")->required();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--ckpt", gen_ckpt, "checkpoint (default ckpt_latest in run)");
  gen->add_option("--per-class", gen_per_class, "samples per condition");
  gen->add_flag("--wav", gen_wav, "also reconstruct audio");
  gen->add_option("--invert-iters", gen_invert, "phase reconstruction iterations");
  gen->add_option("--seed", gen_seed, "latent seed");

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "inception score / FID / probe report");
  std::string ev_run, ev_data, ev_ckpt, ev_model = "ggan", ev_classifier;
  std::size_t ev_samples = 10000, ev_invert = 60, ev_clf_epochs = 8;
  std::uint64_t ev_seed = 1;
  ev->add_option("--run", ev_run, "run directory")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--ckpt", ev_ckpt, "checkpoint (default ckpt_latest, or ckpt_final for baselines)");
  ev->add_option("--model", ev_model, "ggan | biggan-sup | biggan-uns");
  ev->add_option("--classifier", ev_classifier, "evaluation classifier file (trained if absent)");
  ev->add_option("--classifier-epochs", ev_clf_epochs, "classifier training epochs");
  ev->add_option("--n-samples", ev_samples, "generated sample count");
  ev->add_option("--invert-iters", ev_invert, "phase reconstruction iterations");
  ev->add_option("--seed", ev_seed, "evaluation seed");

  // ---- probe ----
  auto* pr = app.add_subcommand("probe", "representation-probe accuracy on the test set");
  std::string pr_run, pr_data, pr_ckpt;
  pr->add_option("--run", pr_run, "run directory")->required();
  pr->add_option("--data", pr_data, "dataset directory")->required();
  pr->add_option("--ckpt", pr_ckpt, "checkpoint (default ckpt_latest)");

  // ---- sweep ----
  auto* sw = app.add_subcommand("sweep", "guidance-fraction sweep with baseline comparison");
  TrainOpts sopts;
  std::string sw_data, sw_out;
  std::vector<double> sw_fractions{0.01, 0.02, 0.03, 0.04, 0.05};
  std::size_t sw_repeats = 5, sw_cnn_epochs = 40;
  sw->add_option("--data", sw_data, "dataset directory")->required();
  sw->add_option("--out", sw_out, "sweep output directory")->required();
  sw->add_option("--fractions", sw_fractions, "guidance fractions")->delimiter(',');
  sw->add_option("--repeats", sw_repeats, "independent resamplings per fraction");
  sw->add_option("--cnn-epochs", sw_cnn_epochs, "baseline CNN epochs");
  sopts.attach(sw);

  // ---- interpolate ----
  auto* ip = app.add_subcommand("interpolate", "linear interpolation in representation space");
  std::string ip_run, ip_data, ip_out, ip_from = "test", ip_ckpt;
  std::size_t ip_a = 0, ip_b = 1, ip_steps = 8;
  ip->add_option("--run", ip_run, "run directory")->required();
  ip->add_option("--data", ip_data, "dataset directory")->required();
  ip->add_option("--out", ip_out, "output directory")->required();
  ip->add_option("--a", ip_a, "index of the first endpoint sample");
  ip->add_option("--b", ip_b, "index of the second endpoint sample");
  ip->add_option("--steps", ip_steps, "interpolation steps");
  ip->add_option("--from", ip_from, "endpoint source: test | train");
  ip->add_option("--ckpt", ip_ckpt, "checkpoint (default ckpt_latest)");

  // ---- export-embeddings ----
  auto* ex = app.add_subcommand("export-embeddings", "dump (feature, label) rows");
  std::string ex_run, ex_data, ex_out, ex_split = "test", ex_ckpt;
  ex->add_option("--run", ex_run, "run directory")->required();
  ex->add_option("--data", ex_data, "dataset directory")->required();
  ex->add_option("--out", ex_out, "output .tsv path")->required();
  ex->add_option("--split", ex_split, "test | train");
  ex->add_option("--ckpt", ex_ckpt, "checkpoint (default ckpt_latest)");

  // ---- cross-guidance ----
  auto* cg = app.add_subcommand("cross-guidance",
                                "train with labels from a foreign corpus");
  TrainOpts copts;
  std::string cg_data, cg_guidance, cg_out;
  std::size_t cg_grid = 16;
  cg->add_option("--data", cg_data, "unlabelled pool dataset directory")->required();
  cg->add_option("--guidance", cg_guidance, "foreign labelled dataset directory")->required();
  cg->add_option("--out", cg_out, "run directory")->required();
  cg->add_option("--grid", cg_grid, "samples per condition grid");
  copts.attach(cg);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*prep) {
      spectro::Dataset ds;
      if (!prep_wav_dir.empty()) {
        spectro::SpectroConfig sc;
        sc.height = prep_height == 64 ? 256 : prep_height;  // wav corpora default to full scale
        sc.width = sc.height / 2;
        sc.hop = prep_hop ? prep_hop : 64;
        ds = spectro::load_wav_directory(prep_wav_dir, sc, prep_test_fraction, prep_seed);
      } else {
        spectro::ToyConfig tc;
        tc.n_classes = prep_classes;
        tc.per_class = prep_per_class;
        tc.test_fraction = prep_test_fraction;
        tc.spectro.height = prep_height;
        tc.spectro.width = prep_height / 2;
        tc.spectro.hop = prep_hop ? prep_hop : prep_height / 2;
        tc.style = prep_style == "centroid" ? spectro::ToyConfig::Style::Centroid
                                            : spectro::ToyConfig::Style::Harmonic;
        ds = spectro::make_toy_dataset(tc, prep_seed);
      }
      spectro::save_dataset(prep_out, ds);
      std::cout << "dataset written to " << prep_out << ": " << ds.train.size() << " train, "
                << ds.test.size() << " test, " << ds.n_classes << " classes, "
                << ds.cfg.height << "x" << ds.cfg.width << "\n";
    }

    if (*tr) {
      train::TrainingConfig cfg = topts.resolve();
      spectro::Dataset pool = spectro::load_dataset(tr_data);
      if (cfg.n_classes != pool.n_classes && tr_model != "biggan-uns") {
        std::cerr << "note: overriding config n_classes with dataset value "
                  << pool.n_classes << "\n";
        cfg.n_classes = pool.n_classes;
      }
      if (cfg.height != pool.cfg.height) {
        std::cerr << "note: overriding config height with dataset value " << pool.cfg.height
                  << "\n";
        cfg.height = pool.cfg.height;
      }
      if (tr_model == "ggan") {
        spectro::DatasetSplit split = spectro::make_guidance_split(
            pool, cfg.guidance_fraction, cfg.seed, cfg.stratified_guidance);
        train::GganTrainer trainer(cfg, split);
        if (!tr_resume.empty()) trainer.load(tr_resume);
        trainer.train(tr_out);
        std::cout << "run complete: " << tr_out << " (" << trainer.iteration()
                  << " iterations)\n";
      } else if (tr_model == "biggan-sup" || tr_model == "biggan-uns") {
        spectro::DatasetSplit split = spectro::full_split(pool);
        fs::create_directories(tr_out);
        {
          std::ofstream cfg_out(fs::path(tr_out) / "config.txt");
          cfg_out << cfg.to_text();
        }
        if (tr_model == "biggan-sup") {
          auto model = build_supervised_biggan<float>(cfg.height, cfg.ch, cfg.n_classes,
                                                      mix_seed(cfg.seed, 1));
          train::train_supervised_biggan(cfg, split, model, tr_out);
          ParamRefs<float> params = model.params_gen();
          for (auto* p : model.params_disc()) params.push_back(p);
          train::save_checkpoint((fs::path(tr_out) / "ckpt_final.ggck").string(),
                                 {cfg.hash(), cfg.total_iters, 0}, params, model.state_all(),
                                 {});
          Rng rng(mix_seed(cfg.seed, 7));
          for (std::size_t c = 0; c < cfg.n_classes; ++c) {
            Tensor<float> z({4, 128});
            for (std::size_t i = 0; i < z.numel(); ++i)
              z[i] = static_cast<float>(rng.uniform(-1, 1));
            Tensor<float> grid =
                model.gen.forward(z, std::vector<int>(4, static_cast<int>(c)), Mode::Eval);
            write_grid(grid, pool.cfg, (fs::path(tr_out) / "samples").string(),
                       "final_c" + std::to_string(c), false, 0);
          }
        } else {
          auto model =
              build_unsupervised_biggan<float>(cfg.height, cfg.ch, mix_seed(cfg.seed, 1));
          train::train_unsupervised_biggan(cfg, split, model, tr_out);
          ParamRefs<float> params = model.params_gen();
          for (auto* p : model.params_disc()) params.push_back(p);
          train::save_checkpoint((fs::path(tr_out) / "ckpt_final.ggck").string(),
                                 {cfg.hash(), cfg.total_iters, 0}, params, model.state_all(),
                                 {});
          Rng rng(mix_seed(cfg.seed, 7));
          Tensor<float> z({16, 128});
          for (std::size_t i = 0; i < z.numel(); ++i)
            z[i] = static_cast<float>(rng.uniform(-1, 1));
          Tensor<float> grid = model.gen.forward(z, Mode::Eval);
          write_grid(grid, pool.cfg, (fs::path(tr_out) / "samples").string(), "final", false,
                     0);
        }
        std::cout << "baseline run complete: " << tr_out << "\n";
      } else {
        throw std::invalid_argument("unknown --model " + tr_model);
      }
    }

    if (*gen) {
      train::TrainingConfig cfg = config_of_run(gen_run);
      spectro::Dataset pool = spectro::load_dataset(gen_data);
      train::GganTrainer trainer =
          restore_trainer(cfg, pool, gen_ckpt.empty() ? default_ckpt(gen_run) : gen_ckpt);
      for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        Tensor<float> grid =
            trainer.sample_class_grid(static_cast<int>(c), gen_per_class, gen_seed);
        write_grid(grid, pool.cfg, gen_out, "c" + std::to_string(c), gen_wav, gen_invert);
      }
      std::cout << "wrote " << cfg.n_classes * gen_per_class << " samples to " << gen_out
                << "\n";
    }

    if (*ev) {
      train::TrainingConfig cfg = config_of_run(ev_run);
      spectro::Dataset pool = spectro::load_dataset(ev_data);
      train::ConvClassifier clf =
          !ev_classifier.empty() && fs::exists(ev_classifier)
              ? train::ConvClassifier::load_file(ev_classifier)
              : train::train_eval_classifier(pool, ev_clf_epochs, ev_seed);
      if (!ev_classifier.empty() && !fs::exists(ev_classifier)) clf.save(ev_classifier);

      metrics::MetricReport report;
      if (ev_model == "ggan") {
        train::GganTrainer trainer =
            restore_trainer(cfg, pool, ev_ckpt.empty() ? default_ckpt(ev_run) : ev_ckpt);
        report = metrics::evaluate_generation(trainer.model(), clf, pool, ev_samples,
                                              ev_invert, ev_seed);
      } else {
        const std::string ckpt =
            ev_ckpt.empty() ? (fs::path(ev_run) / "ckpt_final.ggck").string() : ev_ckpt;
        if (ev_model == "biggan-sup") {
          auto model = build_supervised_biggan<float>(cfg.height, cfg.ch, cfg.n_classes,
                                                      mix_seed(cfg.seed, 1));
          ParamRefs<float> params = model.params_gen();
          for (auto* p : model.params_disc()) params.push_back(p);
          train::load_checkpoint(ckpt, cfg.hash(), params, model.state_all(), {});
          metrics::SampleFn fn = [&](std::size_t m, Rng& rng) {
            Tensor<float> z({m, 128});
            for (std::size_t i = 0; i < z.numel(); ++i)
              z[i] = static_cast<float>(rng.uniform(-1, 1));
            std::vector<int> labels(m);
            for (auto& l : labels) l = static_cast<int>(rng.below(cfg.n_classes));
            return model.gen.forward(z, labels, Mode::Eval);
          };
          report = metrics::evaluate_samples(fn, clf, pool, ev_samples, ev_invert, ev_seed);
        } else if (ev_model == "biggan-uns") {
          auto model =
              build_unsupervised_biggan<float>(cfg.height, cfg.ch, mix_seed(cfg.seed, 1));
          ParamRefs<float> params = model.params_gen();
          for (auto* p : model.params_disc()) params.push_back(p);
          train::load_checkpoint(ckpt, cfg.hash(), params, model.state_all(), {});
          metrics::SampleFn fn = [&](std::size_t m, Rng& rng) {
            Tensor<float> z({m, 128});
            for (std::size_t i = 0; i < z.numel(); ++i)
              z[i] = static_cast<float>(rng.uniform(-1, 1));
            return model.gen.forward(z, Mode::Eval);
          };
          report = metrics::evaluate_samples(fn, clf, pool, ev_samples, ev_invert, ev_seed);
        } else {
          throw std::invalid_argument("unknown --model " + ev_model);
        }
      }
      std::cout << "checkpoint=" << (ev_ckpt.empty() ? "latest" : ev_ckpt) << " "
                << report.to_line() << "\n";
      std::ofstream out(fs::path(ev_run) / "metric_reports.txt", std::ios::app);
      out << report.to_line() << "\n";
    }

    if (*pr) {
      train::TrainingConfig cfg = config_of_run(pr_run);
      spectro::Dataset pool = spectro::load_dataset(pr_data);
      train::GganTrainer trainer =
          restore_trainer(cfg, pool, pr_ckpt.empty() ? default_ckpt(pr_run) : pr_ckpt);
      std::cout << "probe_accuracy=" << harness::probe_representation(trainer.model(), pool.test)
                << " n_test=" << pool.test.size() << "\n";
    }

    if (*sw) {
      harness::SweepSpec spec;
      spec.base = sopts.resolve();
      spec.fractions = sw_fractions;
      spec.repeats = sw_repeats;
      spec.cnn_epochs = sw_cnn_epochs;
      spec.base_seed = spec.base.seed;
      spectro::Dataset pool = spectro::load_dataset(sw_data);
      spec.base.n_classes = pool.n_classes;
      spec.base.height = pool.cfg.height;
      fs::create_directories(sw_out);
      auto rows = harness::run_guidance_sweep(spec, pool, sw_out, &std::cout);
      const std::string table = (fs::path(sw_out) / "sweep.tsv").string();
      harness::write_sweep_table(rows, table);
      std::cout << "fraction\tggan_mean\tggan_std\tcnn_mean\tcnn_std\n";
      for (const auto& r : rows)
        std::cout << r.fraction << "\t" << r.ggan_mean << "\t" << r.ggan_std << "\t"
                  << r.cnn_mean << "\t" << r.cnn_std << "\n";
      std::cout << "table written to " << table << "\n";
    }

    if (*ip) {
      train::TrainingConfig cfg = config_of_run(ip_run);
      spectro::Dataset pool = spectro::load_dataset(ip_data);
      train::GganTrainer trainer =
          restore_trainer(cfg, pool, ip_ckpt.empty() ? default_ckpt(ip_run) : ip_ckpt);
      const auto& src = ip_from == "train" ? pool.train : pool.test;
      if (ip_a >= src.size() || ip_b >= src.size())
        throw std::invalid_argument("interpolate: endpoint index out of range");
      Tensor<float> xa = train::batch_of(src, ip_a, ip_a + 1);
      Tensor<float> xb = train::batch_of(src, ip_b, ip_b + 1);
      Tensor<float> seq = harness::interpolate_latent(trainer.model(), xa, xb, ip_steps);
      write_grid(seq, pool.cfg, ip_out, "step", false, 0);
      std::cout << "wrote " << ip_steps << " interpolation steps to " << ip_out << "\n";
    }

    if (*ex) {
      train::TrainingConfig cfg = config_of_run(ex_run);
      spectro::Dataset pool = spectro::load_dataset(ex_data);
      train::GganTrainer trainer =
          restore_trainer(cfg, pool, ex_ckpt.empty() ? default_ckpt(ex_run) : ex_ckpt);
      const auto& src = ex_split == "train" ? pool.train : pool.test;
      harness::export_embeddings(trainer.model(), src, ex_out);
      std::cout << "wrote " << src.size() << " embedding rows to " << ex_out << "\n";
    }

    if (*cg) {
      train::TrainingConfig cfg = copts.resolve();
      spectro::Dataset pool = spectro::load_dataset(cg_data);
      spectro::Dataset guidance = spectro::load_dataset(cg_guidance);
      cfg.n_classes = guidance.n_classes;
      cfg.height = pool.cfg.height;
      harness::CrossGuidanceResult res =
          harness::cross_dataset_guidance(cfg, pool, guidance, cg_out, cg_grid);
      std::cout << "cross-guidance run: " << res.run_dir << "\n";
      for (std::size_t c = 0; c < res.centroid_mean.size(); ++c)
        std::cout << "condition " << c << ": centroid mean " << res.centroid_mean[c]
                  << " bins, std " << res.centroid_std[c] << "\n";
      std::cout << "separation (gap / max within-condition std) = " << res.separation << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
