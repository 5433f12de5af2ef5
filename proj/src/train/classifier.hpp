#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ggan/nets/trunk.hpp"
#include "ggan/nn/adam.hpp"
#include "ggan/spectro/dataset.hpp"

namespace ggan::train {

/// Convolutional classifier built from the discriminator feature trunk plus
/// a dense softmax head. Serves as the local evaluation network (scores and
/// features for the generation metrics) and, at the model's channel width,
/// as the supervised baseline.
class ConvClassifier {
 public:
  ConvClassifier() = default;
  ConvClassifier(std::size_t input_h, std::size_t ch, std::size_t n_classes,
                 std::uint64_t init_seed);

  /// Class probabilities, rows summing to one.
  Tensor<float> probabilities(const Tensor<float>& x);
  /// Penultimate features (the pooled trunk output).
  Tensor<float> features(const Tensor<float>& x);
  Tensor<float> logits(const Tensor<float>& x, Mode mode);

  double accuracy(const std::vector<spectro::LabelledSample>& samples, std::size_t batch = 64);

  /// Identity string recorded in metric reports.
  std::string id() const;

  std::size_t n_classes() const { return n_; }
  std::size_t feature_dim() const { return trunk_.feat_dim(); }
  std::size_t input_h() const { return trunk_.input_h(); }

  void save(const std::string& path) const;
  static ConvClassifier load_file(const std::string& path);

  ParamRefs<float> params();
  DTrunk<float>& trunk() { return trunk_; }

  friend ConvClassifier train_classifier(const std::vector<spectro::LabelledSample>& data,
                                         std::size_t input_h, std::size_t ch,
                                         std::size_t n_classes, std::size_t epochs,
                                         std::size_t batch, double lr, std::uint64_t seed,
                                         double required_train_accuracy);

 private:
  DTrunk<float> trunk_;
  Dense<float> head_;
  std::size_t ch_ = 0, n_ = 0;
};

/// Adam + cross-entropy training over the given labelled samples. Throws if
/// the final training accuracy falls short of `required_train_accuracy`
/// (non-convergence is reported, not papered over).
ConvClassifier train_classifier(const std::vector<spectro::LabelledSample>& data,
                                std::size_t input_h, std::size_t ch, std::size_t n_classes,
                                std::size_t epochs, std::size_t batch, double lr,
                                std::uint64_t seed, double required_train_accuracy = 0.0);

/// The evaluation classifier of the measurement protocol: trunk at ch=4,
/// trained on the full labelled training split.
ConvClassifier train_eval_classifier(const spectro::Dataset& ds, std::size_t epochs,
                                     std::uint64_t seed);

Tensor<float> batch_of(const std::vector<spectro::LabelledSample>& samples, std::size_t begin,
                       std::size_t end);

}  // namespace ggan::train
