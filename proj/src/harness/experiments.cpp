#include "harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ggan/spectro/spectrogram.hpp"
#include "metrics/evaluate.hpp"
#include "train/classifier.hpp"
#include "train/trainer.hpp"

namespace fs = std::filesystem;

namespace ggan::harness {

double probe_representation(GganModel<float>& model,
                            const std::vector<spectro::LabelledSample>& test) {
  if (test.empty()) throw std::invalid_argument("probe: empty test set");
  std::size_t correct = 0;
  const std::size_t batch = 64;
  for (std::size_t begin = 0; begin < test.size(); begin += batch) {
    const std::size_t end = std::min(test.size(), begin + batch);
    Tensor<float> x = train::batch_of(test, begin, end);
    Tensor<float> logits = model.probe_logits(x, Mode::Eval);
    for (std::size_t i = 0; i < end - begin; ++i) {
      std::size_t arg = 0;
      for (std::size_t k = 1; k < logits.dim(1); ++k)
        if (logits.at(i, k) > logits.at(i, arg)) arg = k;
      correct += static_cast<int>(arg) == test[begin + i].label;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double baseline_cnn(const std::vector<spectro::LabelledSample>& labelled,
                    const std::vector<spectro::LabelledSample>& test, std::size_t input_h,
                    std::size_t ch, std::size_t n_classes, std::size_t epochs,
                    std::uint64_t seed) {
  train::ConvClassifier clf =
      train::train_classifier(labelled, input_h, ch, n_classes, epochs, 32, 1e-3, seed, 0.0);
  return clf.accuracy(test);
}

std::vector<SweepRow> run_guidance_sweep(const SweepSpec& spec, const spectro::Dataset& pool,
                                         const std::string& out_dir, std::ostream* progress) {
  if (spec.repeats < 1) throw std::invalid_argument("sweep: repeats must be >= 1");
  for (double f : spec.fractions)
    if (f <= 0 || f > 1) throw std::invalid_argument("sweep: fractions must be in (0,1]");
  std::vector<double> fractions = spec.fractions;
  std::sort(fractions.begin(), fractions.end());

  std::vector<SweepRow> rows;
  for (double fraction : fractions) {
    std::vector<double> ggan_acc, cnn_acc;
    for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
      const std::uint64_t seed = spec.base_seed + rep;
      train::TrainingConfig cfg = spec.base;
      cfg.seed = seed;
      cfg.guidance_fraction = fraction;
      spectro::DatasetSplit split =
          spectro::make_guidance_split(pool, fraction, seed, cfg.stratified_guidance);
      train::GganTrainer trainer(cfg, split);
      std::ostringstream run_name;
      run_name << "sweep_f" << fraction << "_r" << rep;
      trainer.train((fs::path(out_dir) / run_name.str()).string());
      const double probe = probe_representation(trainer.model(), pool.test);
      std::vector<spectro::LabelledSample> labelled;
      for (std::size_t idx : split.labelled_indices) labelled.push_back(pool.train[idx]);
      const double cnn =
          baseline_cnn(labelled, pool.test, cfg.height, cfg.ch, cfg.n_classes,
                       spec.cnn_epochs, seed);
      ggan_acc.push_back(probe);
      cnn_acc.push_back(cnn);
      if (progress)
        *progress << "fraction " << fraction << " repeat " << rep << ": probe " << probe
                  << " cnn " << cnn << "\n";
    }
    auto stats = [](const std::vector<double>& v) {
      double mean = 0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size());
      return std::pair<double, double>(mean, std::sqrt(var));
    };
    SweepRow row;
    row.fraction = fraction;
    std::tie(row.ggan_mean, row.ggan_std) = stats(ggan_acc);
    std::tie(row.cnn_mean, row.cnn_std) = stats(cnn_acc);
    row.repeats = spec.repeats;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_table(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("sweep: cannot open " + path);
  os << "fraction\tggan_probe_mean\tggan_probe_std\tcnn_mean\tcnn_std\trepeats\n";
  os.precision(6);
  for (const SweepRow& r : rows)
    os << r.fraction << "\t" << r.ggan_mean << "\t" << r.ggan_std << "\t" << r.cnn_mean << "\t"
       << r.cnn_std << "\t" << r.repeats << "\n";
}

Tensor<float> interpolate_latent(GganModel<float>& model, const Tensor<float>& x_a,
                                 const Tensor<float>& x_b, std::size_t steps) {
  if (steps < 2) throw std::invalid_argument("interpolate: need at least two steps");
  Tensor<float> fa = model.represent(x_a, Mode::Eval);
  Tensor<float> fb = model.represent(x_b, Mode::Eval);
  Tensor<float> lerped({steps, 128});
  for (std::size_t s = 0; s < steps; ++s) {
    const float t = static_cast<float>(s) / static_cast<float>(steps - 1);
    for (std::size_t j = 0; j < 128; ++j)
      lerped.at(s, j) = (1.0f - t) * fa.at(0, j) + t * fb.at(0, j);
  }
  return model.gen.forward(lerped, Mode::Eval);
}

void export_embeddings(GganModel<float>& model,
                       const std::vector<spectro::LabelledSample>& samples,
                       const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export: cannot open " + path);
  os.precision(8);
  const std::size_t batch = 64;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch) {
    const std::size_t end = std::min(samples.size(), begin + batch);
    Tensor<float> x = train::batch_of(samples, begin, end);
    Tensor<float> f = model.represent(x, Mode::Eval);
    for (std::size_t i = 0; i < end - begin; ++i) {
      for (std::size_t j = 0; j < f.dim(1); ++j) os << f.at(i, j) << "\t";
      os << samples[begin + i].label << "\n";
    }
  }
}

double spectral_centroid(const Tensor<float>& values, const spectro::SpectroConfig& cfg) {
  spectro::Spectrogram spec(cfg);
  std::copy(values.data(), values.data() + values.numel(), spec.values.data());
  Tensor<float> db = spectro::denormalize(spec);
  double num = 0, den = 0;
  for (std::size_t h = 0; h < cfg.height; ++h)
    for (std::size_t t = 0; t < cfg.width; ++t) {
      const double mag = std::pow(10.0, static_cast<double>(db.at(h, t, 0)) / 20.0);
      const double e = mag * mag;
      num += static_cast<double>(h) * e;
      den += e;
    }
  return den > 0 ? num / den : 0.0;
}

CrossGuidanceResult cross_dataset_guidance(const train::TrainingConfig& cfg,
                                           const spectro::Dataset& pool,
                                           const spectro::Dataset& guidance,
                                           const std::string& run_dir,
                                           std::size_t grid_per_condition) {
  if (guidance.n_classes != cfg.n_classes)
    throw std::invalid_argument("cross guidance: class count mismatch (guidance has " +
                                std::to_string(guidance.n_classes) + ", config wants " +
                                std::to_string(cfg.n_classes) + ")");
  spectro::CrossSplit split{&pool, &guidance};
  train::GganTrainer trainer(cfg, split);
  trainer.train(run_dir);

  CrossGuidanceResult result;
  result.run_dir = run_dir;
  fs::create_directories(fs::path(run_dir) / "grids");
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    Tensor<float> grid = trainer.sample_class_grid(static_cast<int>(c), grid_per_condition, 0);
    std::vector<double> centroids;
    for (std::size_t j = 0; j < grid_per_condition; ++j) {
      Tensor<float> one =
          grid.rows(j, j + 1).reshaped({cfg.height, cfg.height / 2, 1});
      centroids.push_back(spectral_centroid(one, pool.cfg));
      spectro::Spectrogram spec;
      spec.meta = pool.cfg;
      spec.values = one;
      std::ostringstream name;
      name << "cond" << c << "_" << j << ".ggsp";
      spectro::write_spectrogram((fs::path(run_dir) / "grids" / name.str()).string(), spec);
    }
    double mean = 0;
    for (double v : centroids) mean += v;
    mean /= static_cast<double>(centroids.size());
    double var = 0;
    for (double v : centroids) var += (v - mean) * (v - mean);
    var /= static_cast<double>(centroids.size());
    result.centroid_mean.push_back(mean);
    result.centroid_std.push_back(std::sqrt(var));
  }
  double gap = 0;
  for (double m : result.centroid_mean) {
    gap = std::max(gap, m);
  }
  double lo = gap;
  for (double m : result.centroid_mean) lo = std::min(lo, m);
  double maxstd = 1e-9;
  for (double s : result.centroid_std) maxstd = std::max(maxstd, s);
  result.separation = (gap - lo) / maxstd;
  return result;
}

}  // namespace ggan::harness
