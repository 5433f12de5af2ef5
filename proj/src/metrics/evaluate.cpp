#include "metrics/evaluate.hpp"

#include <algorithm>
#include <sstream>

#include "ggan/spectro/stft.hpp"
#include "metrics/scores.hpp"

namespace ggan::metrics {

std::string MetricReport::to_line() const {
  std::ostringstream os;
  os.precision(6);
  os << "is_mean=" << is_mean << " is_std=" << is_std << " fid=" << fid
     << " probe_acc=" << probe_accuracy << " n_samples=" << n_samples
     << " classifier=" << classifier_id << " seed=" << seed;
  return os.str();
}

Tensor<float> round_trip_batch(const Tensor<float>& values, const spectro::SpectroConfig& cfg,
                               std::size_t invert_iters) {
  Tensor<float> out(values.shape());
  const std::size_t n = values.dim(0);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    spectro::Spectrogram spec(cfg);
    std::copy(values.data() + i * values.row_stride(),
              values.data() + (i + 1) * values.row_stride(), spec.values.data());
    spectro::Waveform wav = spectro::invert_spectrogram(spec, invert_iters);
    spectro::Spectrogram again = spectro::stft_log_magnitude(wav, cfg);
    std::copy(again.values.data(), again.values.data() + again.values.numel(),
              out.data() + i * out.row_stride());
  }
  return out;
}

namespace {

constexpr std::uint64_t kEvalStream = 9001;

double probe_accuracy_of(GganModel<float>& model,
                         const std::vector<spectro::LabelledSample>& test) {
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
  return test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

MetricReport evaluate_samples(const SampleFn& sample, train::ConvClassifier& classifier,
                              const spectro::Dataset& reference, std::size_t n_samples,
                              std::size_t invert_iters, std::uint64_t seed) {
  const std::size_t d = classifier.feature_dim();
  if (n_samples < d + 1)
    throw std::invalid_argument("evaluate: n_samples " + std::to_string(n_samples) +
                                " below covariance rank requirement d+1=" +
                                std::to_string(d + 1));
  const std::size_t n_ref = std::min(reference.test.size(), n_samples);
  if (n_ref < d + 1)
    throw std::invalid_argument("evaluate: reference set too small for FID");

  Rng rng(mix_seed(seed, kEvalStream));
  const std::size_t chunk = 32;
  Tensor<double> fake_probs({n_samples, classifier.n_classes()});
  Tensor<double> fake_feats({n_samples, d});
  for (std::size_t begin = 0; begin < n_samples; begin += chunk) {
    const std::size_t end = std::min(n_samples, begin + chunk);
    const std::size_t m = end - begin;
    Tensor<float> xhat = sample(m, rng);
    Tensor<float> rt = round_trip_batch(xhat, reference.cfg, invert_iters);
    Tensor<float> probs = classifier.probabilities(rt);
    Tensor<float> feats = classifier.features(rt);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < classifier.n_classes(); ++k)
        fake_probs.at(begin + i, k) = probs.at(i, k);
      for (std::size_t k = 0; k < d; ++k) fake_feats.at(begin + i, k) = feats.at(i, k);
    }
  }

  Tensor<double> ref_feats({n_ref, d});
  for (std::size_t begin = 0; begin < n_ref; begin += chunk) {
    const std::size_t end = std::min(n_ref, begin + chunk);
    Tensor<float> x = train::batch_of(reference.test, begin, end);
    Tensor<float> rt = round_trip_batch(x, reference.cfg, invert_iters);
    Tensor<float> feats = classifier.features(rt);
    for (std::size_t i = 0; i < end - begin; ++i)
      for (std::size_t k = 0; k < d; ++k) ref_feats.at(begin + i, k) = feats.at(i, k);
  }

  MetricReport report;
  auto [is_mean, is_std] = inception_score(fake_probs, 10);
  report.is_mean = is_mean;
  report.is_std = is_std;
  report.fid = fid(ref_feats, fake_feats);
  report.n_samples = n_samples;
  report.classifier_id = classifier.id();
  report.seed = seed;
  return report;
}

MetricReport evaluate_generation(GganModel<float>& model, train::ConvClassifier& classifier,
                                 const spectro::Dataset& reference, std::size_t n_samples,
                                 std::size_t invert_iters, std::uint64_t seed) {
  SampleFn sample = [&](std::size_t m, Rng& rng) {
    Tensor<float> z({m, 128});
    for (std::size_t i = 0; i < z.numel(); ++i) z[i] = static_cast<float>(rng.uniform(-1, 1));
    Tensor<float> c({m, model.n_classes});
    for (std::size_t i = 0; i < m; ++i)
      c.at(i, static_cast<std::size_t>(rng.below(model.n_classes))) = 1.0f;
    Tensor<float> ze = model.encode(z, c, Mode::Eval);
    return model.gen.forward(ze, Mode::Eval);
  };
  MetricReport report =
      evaluate_samples(sample, classifier, reference, n_samples, invert_iters, seed);
  report.probe_accuracy = probe_accuracy_of(model, reference.test);
  return report;
}

}  // namespace ggan::metrics
