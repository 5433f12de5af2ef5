#include "ggan/spectro/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ggan/spectro/stft.hpp"
#include "ggan/spectro/wav.hpp"

namespace fs = std::filesystem;

namespace ggan::spectro {

namespace {

constexpr double kPi = 3.14159265358979323846;

// stream ids for deriving independent rng streams from one seed
constexpr std::uint64_t kSplitStream = 101;
constexpr std::uint64_t kToyStream = 201;
constexpr std::uint64_t kIngestStream = 301;
constexpr std::uint64_t kEventStreamBase = 1u << 20;

}  // namespace

DatasetSplit make_guidance_split(const Dataset& pool, double fraction, std::uint64_t seed,
                                 bool stratified) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("guidance split: fraction must be in (0,1]");
  if (pool.train.empty()) throw std::invalid_argument("guidance split: empty pool");
  const std::size_t n = pool.train.size();
  Rng rng(mix_seed(seed, kSplitStream));
  std::vector<std::size_t> chosen;
  if (stratified) {
    std::vector<std::vector<std::size_t>> per_class(pool.n_classes);
    for (std::size_t i = 0; i < n; ++i) per_class[pool.train[i].label].push_back(i);
    for (auto& bucket : per_class) {
      rng.shuffle(bucket);
      const std::size_t kc =
          static_cast<std::size_t>(std::llround(fraction * static_cast<double>(bucket.size())));
      chosen.insert(chosen.end(), bucket.begin(), bucket.begin() + kc);
    }
  } else {
    const std::size_t k =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    chosen.assign(idx.begin(), idx.begin() + k);
  }
  if (chosen.empty())
    throw std::invalid_argument("guidance split: fraction " + std::to_string(fraction) +
                                " yields zero labelled samples");
  std::sort(chosen.begin(), chosen.end());
  DatasetSplit split;
  split.pool = &pool;
  split.fraction = fraction;
  split.seed = seed;
  split.labelled_indices = chosen;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next < chosen.size() && chosen[next] == i)
      ++next;
    else
      split.unlabelled_indices.push_back(i);
  }
  return split;
}

DatasetSplit full_split(const Dataset& pool) {
  DatasetSplit split;
  split.pool = &pool;
  split.fraction = 1.0;
  split.labelled_indices.resize(pool.train.size());
  for (std::size_t i = 0; i < pool.train.size(); ++i) split.labelled_indices[i] = i;
  split.unlabelled_indices = split.labelled_indices;
  return split;
}

Waveform toy_waveform(const ToyConfig& cfg, int label, Rng& rng) {
  const std::size_t len = cfg.spectro.required_samples();
  const double sr = static_cast<double>(cfg.spectro.sample_rate);
  Waveform wav;
  wav.sample_rate = cfg.spectro.sample_rate;
  wav.samples.assign(len, 0.0);

  double f0, band_lo, band_hi;
  std::size_t n_harm;
  if (cfg.style == ToyConfig::Style::Harmonic) {
    // distinct harmonic stacks with a class-specific noise band
    f0 = (300.0 + 400.0 * label) * (1.0 + rng.uniform(-0.03, 0.03));
    band_lo = 2000.0 + 700.0 * label;
    band_hi = band_lo + 400.0;
    n_harm = 5;
  } else {
    // two spectral-centroid styles (a coarse "gender" analogue)
    f0 = (label == 0 ? 160.0 : 420.0) * (1.0 + rng.uniform(-0.05, 0.05));
    band_lo = label == 0 ? 300.0 : 1600.0;
    band_hi = label == 0 ? 1200.0 : 3600.0;
    n_harm = 7;
  }

  const double nyq = sr / 2.0;
  for (std::size_t j = 1; j <= n_harm; ++j) {
    const double f = f0 * static_cast<double>(j);
    if (f >= nyq * 0.95) break;
    const double amp = (0.5 / static_cast<double>(j)) * (1.0 + rng.uniform(-0.2, 0.2));
    const double phase = rng.uniform(0, 2 * kPi);
    for (std::size_t i = 0; i < len; ++i)
      wav.samples[i] += amp * std::sin(2 * kPi * f * static_cast<double>(i) / sr + phase);
  }
  // band noise as a sparse sum of random tones
  for (int t = 0; t < 24; ++t) {
    const double f = rng.uniform(band_lo, std::min(band_hi, nyq * 0.95));
    const double phase = rng.uniform(0, 2 * kPi);
    const double amp = 0.02 * (1.0 + rng.uniform(0, 1));
    for (std::size_t i = 0; i < len; ++i)
      wav.samples[i] += amp * std::sin(2 * kPi * f * static_cast<double>(i) / sr + phase);
  }
  // gentle random fade envelope so frames are not identical
  const double fade = rng.uniform(0.3, 1.0);
  for (std::size_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(len);
    wav.samples[i] *= 0.25 * (fade + (1.0 - fade) * std::sin(kPi * t));
  }
  return wav;
}

Dataset make_toy_dataset(const ToyConfig& cfg, std::uint64_t seed) {
  Dataset ds;
  ds.cfg = cfg.spectro;
  ds.n_classes = cfg.n_classes;
  Rng rng(mix_seed(seed, kToyStream));
  const std::size_t test_per_class =
      static_cast<std::size_t>(std::llround(cfg.test_fraction * cfg.per_class));
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    for (std::size_t i = 0; i < cfg.per_class; ++i) {
      Waveform wav = toy_waveform(cfg, static_cast<int>(c), rng);
      Spectrogram spec = stft_log_magnitude(wav, cfg.spectro);
      LabelledSample s{std::move(spec.values), static_cast<int>(c)};
      if (i < test_per_class)
        ds.test.push_back(std::move(s));
      else
        ds.train.push_back(std::move(s));
    }
  }
  // interleave classes rather than leaving them grouped
  Rng shuffler(mix_seed(seed, kToyStream + 1));
  shuffler.shuffle(ds.train);
  shuffler.shuffle(ds.test);
  return ds;
}

Dataset load_wav_directory(const std::string& root, const SpectroConfig& cfg,
                           double test_fraction, std::uint64_t seed) {
  std::vector<std::pair<std::string, int>> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".wav") continue;
    const std::string name = entry.path().filename().string();
    const std::string parent = entry.path().parent_path().filename().string();
    int label = -1;
    if (parent.size() == 1 && parent[0] >= '0' && parent[0] <= '9')
      label = parent[0] - '0';
    else if (!name.empty() && name[0] >= '0' && name[0] <= '9' &&
             (name.size() < 2 || name[1] == '_'))
      label = name[0] - '0';
    if (label >= 0) files.emplace_back(entry.path().string(), label);
  }
  if (files.empty()) throw std::runtime_error("no labelled .wav files found under " + root);
  std::sort(files.begin(), files.end());
  Rng rng(mix_seed(seed, kIngestStream));
  rng.shuffle(files);

  Dataset ds;
  ds.cfg = cfg;
  int max_label = 0;
  const std::size_t n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(files.size())));
  for (std::size_t i = 0; i < files.size(); ++i) {
    Waveform wav = read_wav(files[i].first);
    if (wav.samples.size() < cfg.fft_size()) continue;  // too short to analyze
    Spectrogram spec = stft_log_magnitude(wav, cfg);
    LabelledSample s{std::move(spec.values), files[i].second};
    max_label = std::max(max_label, files[i].second);
    if (i < n_test)
      ds.test.push_back(std::move(s));
    else
      ds.train.push_back(std::move(s));
  }
  ds.n_classes = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

void save_dataset(const std::string& dir, const Dataset& ds) {
  fs::create_directories(fs::path(dir) / "train");
  fs::create_directories(fs::path(dir) / "test");
  {
    std::ofstream meta(fs::path(dir) / "meta.txt");
    meta << "n_classes=" << ds.n_classes << "\n"
         << "height=" << ds.cfg.height << "\n"
         << "width=" << ds.cfg.width << "\n"
         << "sample_rate=" << ds.cfg.sample_rate << "\n"
         << "hop=" << ds.cfg.hop << "\n"
         << "min_db=" << ds.cfg.min_db << "\n"
         << "max_db=" << ds.cfg.max_db << "\n";
  }
  auto dump = [&](const std::vector<LabelledSample>& set, const std::string& sub) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      Spectrogram spec;
      spec.values = set[i].values;
      spec.meta = ds.cfg;
      std::ostringstream name;
      name << i << "_" << set[i].label << ".ggsp";
      write_spectrogram((fs::path(dir) / sub / name.str()).string(), spec);
    }
  };
  dump(ds.train, "train");
  dump(ds.test, "test");
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  std::ifstream meta(fs::path(dir) / "meta.txt");
  if (!meta) throw std::runtime_error("dataset: missing meta.txt under " + dir);
  std::string line;
  std::map<std::string, std::string> kv;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ds.n_classes = std::stoul(kv.at("n_classes"));
  ds.cfg.height = std::stoul(kv.at("height"));
  ds.cfg.width = std::stoul(kv.at("width"));
  ds.cfg.sample_rate = std::stoul(kv.at("sample_rate"));
  ds.cfg.hop = std::stoul(kv.at("hop"));
  ds.cfg.min_db = std::stod(kv.at("min_db"));
  ds.cfg.max_db = std::stod(kv.at("max_db"));
  auto slurp = [&](const std::string& sub, std::vector<LabelledSample>& out) {
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(fs::path(dir) / sub))
      if (e.path().extension() == ".ggsp") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end(), [](const fs::path& a, const fs::path& b) {
      // numeric order on the index prefix
      return std::stoul(a.filename().string()) < std::stoul(b.filename().string());
    });
    for (const auto& p : paths) {
      Spectrogram spec = read_spectrogram(p.string());
      const std::string stem = p.stem().string();
      const auto us = stem.rfind('_');
      LabelledSample s{std::move(spec.values), std::stoi(stem.substr(us + 1))};
      out.push_back(std::move(s));
    }
  };
  slurp("train", ds.train);
  slurp("test", ds.test);
  return ds;
}

BatchSampler::BatchSampler(const DatasetSplit& split, std::size_t m, std::size_t n_classes,
                           LatentKind latent, std::uint64_t seed)
    : pool_(split.pool), labelled_indices_(split.labelled_indices),
      unlabelled_indices_(split.unlabelled_indices), m_(m), n_(n_classes), latent_(latent),
      seed_(seed) {
  h_ = pool_->cfg.height;
  w_ = pool_->cfg.width;
  if (labelled_indices_.empty() || unlabelled_indices_.empty())
    throw std::invalid_argument("sampler: split has an empty side");
}

BatchSampler::BatchSampler(const CrossSplit& split, std::size_t m, std::size_t n_classes,
                           LatentKind latent, std::uint64_t seed)
    : pool_(split.pool), guidance_(split.guidance), m_(m), n_(n_classes), latent_(latent),
      seed_(seed) {
  h_ = pool_->cfg.height;
  w_ = pool_->cfg.width;
  if (guidance_->cfg.height != h_ || guidance_->cfg.width != w_)
    throw std::invalid_argument("sampler: guidance corpus resolution mismatch");
  if (guidance_->n_classes != n_classes)
    throw std::invalid_argument("sampler: guidance corpus class count mismatch");
  labelled_indices_.resize(guidance_->train.size());
  for (std::size_t i = 0; i < labelled_indices_.size(); ++i) labelled_indices_[i] = i;
  unlabelled_indices_.resize(pool_->train.size());
  for (std::size_t i = 0; i < unlabelled_indices_.size(); ++i) unlabelled_indices_[i] = i;
}

const Tensor<float>& BatchSampler::unlabelled_at(std::size_t i) const {
  return pool_->train[unlabelled_indices_[i]].values;
}

const LabelledSample& BatchSampler::labelled_at(std::size_t i) const {
  const Dataset* src = guidance_ ? guidance_ : pool_;
  return src->train[labelled_indices_[i]];
}

MinibatchSet BatchSampler::sample(std::uint64_t event_index) const {
  Rng rng(mix_seed(seed_, kEventStreamBase + event_index));
  MinibatchSet b;
  b.z = Tensor<float>({2 * m_, 128});
  for (std::size_t i = 0; i < b.z.numel(); ++i)
    b.z[i] = static_cast<float>(latent_ == LatentKind::Uniform ? rng.uniform(-1, 1)
                                                               : rng.normal());
  b.c_idx.resize(m_);
  b.c_onehot = Tensor<float>({m_, n_});
  for (std::size_t i = 0; i < m_; ++i) {
    b.c_idx[i] = static_cast<int>(rng.below(n_));
    b.c_onehot.at(i, b.c_idx[i]) = 1.0f;
  }
  b.x = Tensor<float>({2 * m_, h_, w_, 1});
  for (std::size_t i = 0; i < 2 * m_; ++i) {
    const Tensor<float>& s = unlabelled_at(rng.below(unlabelled_indices_.size()));
    std::copy(s.data(), s.data() + s.numel(), b.x.data() + i * b.x.row_stride());
  }
  b.xl = Tensor<float>({m_, h_, w_, 1});
  b.y_idx.resize(m_);
  b.y_onehot = Tensor<float>({m_, n_});
  for (std::size_t i = 0; i < m_; ++i) {
    const LabelledSample& s = labelled_at(rng.below(labelled_indices_.size()));
    std::copy(s.values.data(), s.values.data() + s.values.numel(),
              b.xl.data() + i * b.xl.row_stride());
    b.y_idx[i] = s.label;
    b.y_onehot.at(i, s.label) = 1.0f;
  }
  return b;
}

Prefetcher::Prefetcher(const BatchSampler& sampler, std::uint64_t first_event, std::size_t depth)
    : sampler_(sampler), depth_(depth), worker_([this, first_event] { run(first_event); }) {}

Prefetcher::~Prefetcher() {
  stop_.store(true);
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

MinibatchSet Prefetcher::next() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return !queue_.empty(); });
  MinibatchSet b = std::move(queue_.front());
  queue_.pop_front();
  cv_.notify_all();
  return b;
}

void Prefetcher::run(std::uint64_t first_event) {
  std::uint64_t e = first_event;
  while (!stop_.load()) {
    MinibatchSet b = sampler_.sample(e);
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] { return stop_.load() || queue_.size() < depth_; });
      if (stop_.load()) return;
      queue_.push_back(std::move(b));
    }
    cv_.notify_all();
    ++e;
  }
}

}  // namespace ggan::spectro
