#include "train/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ggan::train {

void TrainingConfig::validate() const {
  if (k < 1) throw std::invalid_argument("config: k must be >= 1");
  if (batch < 2) throw std::invalid_argument("config: batch must be >= 2 (latent pairs)");
  if (lr_disc <= 0 || lr_other <= 0) throw std::invalid_argument("config: learning rates must be positive");
  if (alpha <= 0) throw std::invalid_argument("config: alpha must be positive");
  if (n_classes < 2) throw std::invalid_argument("config: need at least two classes");
  if (guidance_fraction <= 0 || guidance_fraction > 1)
    throw std::invalid_argument("config: guidance fraction must be in (0,1]");
}

std::string TrainingConfig::to_text() const {
  std::ostringstream os;
  os << "k=" << k << "\n"
     << "batch=" << batch << "\n"
     << "lr_disc=" << lr_disc << "\n"
     << "lr_other=" << lr_other << "\n"
     << "equal_lr=" << (equal_lr ? 1 : 0) << "\n"
     << "alpha=" << alpha << "\n"
     << "ch=" << ch << "\n"
     << "n_classes=" << n_classes << "\n"
     << "height=" << height << "\n"
     << "total_iters=" << total_iters << "\n"
     << "seed=" << seed << "\n"
     << "beta1=" << beta1 << "\n"
     << "beta2=" << beta2 << "\n"
     << "latent=" << (latent == spectro::LatentKind::Uniform ? "uniform" : "gaussian") << "\n"
     << "guidance_fraction=" << guidance_fraction << "\n"
     << "stratified_guidance=" << (stratified_guidance ? 1 : 0) << "\n"
     << "checkpoint_every=" << checkpoint_every << "\n"
     << "sample_every=" << sample_every << "\n"
     << "samples_per_class=" << samples_per_class << "\n"
     << "prefetch=" << (prefetch ? 1 : 0) << "\n";
  return os.str();
}

std::uint64_t TrainingConfig::hash() const {
  const std::string text = to_text();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

TrainingConfig TrainingConfig::from_text(const std::string& text) {
  TrainingConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    // strip comments and whitespace
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) continue;
    if (key == "k") cfg.k = std::stoul(val);
    else if (key == "batch") cfg.batch = std::stoul(val);
    else if (key == "lr_disc") cfg.lr_disc = std::stod(val);
    else if (key == "lr_other") cfg.lr_other = std::stod(val);
    else if (key == "equal_lr") cfg.equal_lr = val != "0" && val != "false";
    else if (key == "alpha") cfg.alpha = std::stod(val);
    else if (key == "ch") cfg.ch = std::stoul(val);
    else if (key == "n_classes") cfg.n_classes = std::stoul(val);
    else if (key == "height") cfg.height = std::stoul(val);
    else if (key == "total_iters") cfg.total_iters = std::stoul(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "beta1") cfg.beta1 = std::stod(val);
    else if (key == "beta2") cfg.beta2 = std::stod(val);
    else if (key == "latent")
      cfg.latent = val == "gaussian" ? spectro::LatentKind::Gaussian
                                     : spectro::LatentKind::Uniform;
    else if (key == "guidance_fraction") cfg.guidance_fraction = std::stod(val);
    else if (key == "stratified_guidance") cfg.stratified_guidance = val != "0" && val != "false";
    else if (key == "checkpoint_every") cfg.checkpoint_every = std::stoul(val);
    else if (key == "sample_every") cfg.sample_every = std::stoul(val);
    else if (key == "samples_per_class") cfg.samples_per_class = std::stoul(val);
    else if (key == "prefetch") cfg.prefetch = val != "0" && val != "false";
    else if (key == "toy_preset") {
      if (val != "0" && val != "false") cfg.apply_toy_preset();
    } else
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return cfg;
}

TrainingConfig TrainingConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

}  // namespace ggan::train
