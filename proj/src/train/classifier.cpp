#include "train/classifier.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ggan/losses.hpp"
#include "ggan/ops/eltwise.hpp"
#include "train/checkpoint.hpp"

namespace ggan::train {

ConvClassifier::ConvClassifier(std::size_t input_h, std::size_t ch, std::size_t n_classes,
                               std::uint64_t init_seed)
    : ch_(ch), n_(n_classes) {
  Rng rng(init_seed);
  trunk_ = DTrunk<float>(input_h, ch, false, rng, "clf.trunk");
  head_ = Dense<float>(16 * ch, n_classes, false, rng, "clf.head");
}

Tensor<float> ConvClassifier::logits(const Tensor<float>& x, Mode mode) {
  return head_.forward(trunk_.forward(x, mode), mode);
}

Tensor<float> ConvClassifier::probabilities(const Tensor<float>& x) {
  Tensor<float> l = logits(x, Mode::Eval);
  Tensor<float> p(l.shape());
  ops::softmax_rows(l, p);
  return p;
}

Tensor<float> ConvClassifier::features(const Tensor<float>& x) {
  return trunk_.forward(x, Mode::Eval);
}

double ConvClassifier::accuracy(const std::vector<spectro::LabelledSample>& samples,
                                std::size_t batch) {
  if (samples.empty()) throw std::invalid_argument("classifier accuracy: empty sample set");
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch) {
    const std::size_t end = std::min(samples.size(), begin + batch);
    Tensor<float> x = batch_of(samples, begin, end);
    Tensor<float> l = logits(x, Mode::Eval);
    for (std::size_t i = 0; i < end - begin; ++i) {
      std::size_t arg = 0;
      for (std::size_t k = 1; k < n_; ++k)
        if (l.at(i, k) > l.at(i, arg)) arg = k;
      correct += static_cast<int>(arg) == samples[begin + i].label;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

std::string ConvClassifier::id() const {
  std::ostringstream os;
  os << "conv-trunk-h" << trunk_.input_h() << "-ch" << ch_ << "-n" << n_;
  return os.str();
}

ParamRefs<float> ConvClassifier::params() {
  ParamRefs<float> p;
  trunk_.params(p);
  head_.params(p);
  return p;
}

void ConvClassifier::save(const std::string& path) const {
  auto& self = const_cast<ConvClassifier&>(*this);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("classifier: cannot open for write: " + path);
  os.write("GGCL", 4);
  const std::uint64_t dims[3] = {self.trunk_.input_h(), self.ch_, self.n_};
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (Param<float>* p : self.params()) {
    const std::uint64_t n = p->value.numel();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
  }
}

ConvClassifier ConvClassifier::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("classifier: cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "GGCL")
    throw std::runtime_error("classifier: bad magic in " + path);
  std::uint64_t dims[3];
  if (!is.read(reinterpret_cast<char*>(dims), sizeof(dims)))
    throw std::runtime_error("classifier: truncated header");
  ConvClassifier clf(dims[0], dims[1], dims[2], 0);
  for (Param<float>* p : clf.params()) {
    std::uint64_t n = 0;
    if (!is.read(reinterpret_cast<char*>(&n), sizeof(n)) || n != p->value.numel())
      throw std::runtime_error("classifier: size mismatch in " + path);
    if (!is.read(reinterpret_cast<char*>(p->value.data()),
                 static_cast<std::streamsize>(n * sizeof(float))))
      throw std::runtime_error("classifier: truncated payload in " + path);
  }
  return clf;
}

Tensor<float> batch_of(const std::vector<spectro::LabelledSample>& samples, std::size_t begin,
                       std::size_t end) {
  const auto& shape = samples[begin].values.shape();
  Tensor<float> x({end - begin, shape[0], shape[1], shape[2]});
  for (std::size_t i = begin; i < end; ++i) {
    std::copy(samples[i].values.data(), samples[i].values.data() + samples[i].values.numel(),
              x.data() + (i - begin) * x.row_stride());
  }
  return x;
}

ConvClassifier train_classifier(const std::vector<spectro::LabelledSample>& data,
                                std::size_t input_h, std::size_t ch, std::size_t n_classes,
                                std::size_t epochs, std::size_t batch, double lr,
                                std::uint64_t seed, double required_train_accuracy) {
  if (data.empty()) throw std::invalid_argument("train_classifier: no labelled data");
  ConvClassifier clf(input_h, ch, n_classes, mix_seed(seed, 11));
  Adam<float> opt(clf.params(), lr, 0.9, 0.999);
  Rng order(mix_seed(seed, 12));
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    order.shuffle(idx);
    for (std::size_t begin = 0; begin < idx.size(); begin += batch) {
      const std::size_t end = std::min(idx.size(), begin + batch);
      Tensor<float> x({end - begin, data[0].values.dim(0), data[0].values.dim(1), 1});
      Tensor<float> y({end - begin, n_classes});
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = data[idx[i]];
        std::copy(s.values.data(), s.values.data() + s.values.numel(),
                  x.data() + (i - begin) * x.row_stride());
        y.at(i - begin, s.label) = 1.0f;
      }
      opt.zero_grad();
      Tensor<float> l = clf.logits(x, Mode::Train);
      Tensor<float> dl;
      (void)loss::cross_entropy(l, y, &dl);
      Tensor<float> gfeat = clf.head_.backward(dl);
      (void)clf.trunk_.backward(gfeat);
      opt.step();
    }
  }
  if (required_train_accuracy > 0.0) {
    const double acc = clf.accuracy(data);
    if (acc < required_train_accuracy) {
      std::ostringstream os;
      os << "classifier failed to converge: train accuracy " << acc << " < "
         << required_train_accuracy;
      throw std::runtime_error(os.str());
    }
  }
  return clf;
}

ConvClassifier train_eval_classifier(const spectro::Dataset& ds, std::size_t epochs,
                                     std::uint64_t seed) {
  return train_classifier(ds.train, ds.cfg.height, 4, ds.n_classes, epochs, 64, 1e-3, seed,
                          0.95);
}

}  // namespace ggan::train
