#include "metrics/scores.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace ggan::metrics {

void symmetric_eigen(const std::vector<double>& a_in, std::size_t n, std::vector<double>& w,
                     std::vector<double>& v) {
  std::vector<double> a = a_in;
  v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
  }
  w.resize(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = a[i * n + i];
}

std::vector<double> matrix_sqrt_psd(const std::vector<double>& a, std::size_t n) {
  if (a.size() != n * n) throw std::invalid_argument("matrix_sqrt_psd: bad size");
  // symmetrize before decomposing
  std::vector<double> sym(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
  std::vector<double> w, v;
  symmetric_eigen(sym, n, w, v);
  double wmax = 0;
  for (double x : w) wmax = std::max(wmax, std::abs(x));
  for (double x : w)
    if (x < -1e-8 * std::max(wmax, 1.0))
      throw std::domain_error("matrix_sqrt_psd: matrix is not PSD (eigenvalue " +
                              std::to_string(x) + ")");
  std::vector<double> b(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt(std::max(0.0, w[k]));
    if (s == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double vis = v[i * n + k] * s;
      for (std::size_t j = 0; j < n; ++j) b[i * n + j] += vis * v[j * n + k];
    }
  }
  // contract: ||B B - A||_F / ||A||_F < 1e-6
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double bb = 0;
      for (std::size_t k = 0; k < n; ++k) bb += b[i * n + k] * b[k * n + j];
      const double d = bb - sym[i * n + j];
      num += d * d;
      den += sym[i * n + j] * sym[i * n + j];
    }
  if (den > 0 && std::sqrt(num / den) > 1e-6)
    throw std::runtime_error("matrix_sqrt_psd: residual above tolerance");
  return b;
}

std::pair<double, double> inception_score(const Tensor<double>& probs, std::size_t n_splits) {
  const std::size_t n = probs.ndim() >= 1 ? probs.dim(0) : 0;
  if (n == 0) throw std::invalid_argument("inception_score: empty input");
  const std::size_t k = probs.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = probs.at(i, j);
      if (p < 0) throw std::invalid_argument("inception_score: negative probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6)
      throw std::invalid_argument("inception_score: row does not sum to 1");
  }
  n_splits = std::min(n_splits, n);
  std::vector<double> scores;
  for (std::size_t s = 0; s < n_splits; ++s) {
    const std::size_t begin = s * n / n_splits, end = (s + 1) * n / n_splits;
    if (end == begin) continue;
    std::vector<double> marginal(k, 0.0);
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < k; ++j) marginal[j] += probs.at(i, j);
    for (double& m : marginal) m /= static_cast<double>(end - begin);
    double mean_kl = 0;
    for (std::size_t i = begin; i < end; ++i) {
      double kl = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const double p = probs.at(i, j);
        if (p > 0) kl += p * (std::log(p) - std::log(std::max(marginal[j], 1e-300)));
      }
      mean_kl += kl;
    }
    mean_kl /= static_cast<double>(end - begin);
    scores.push_back(std::exp(mean_kl));
  }
  double mean = 0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(scores.size());
  return {mean, std::sqrt(var)};
}

double fid_from_moments(const std::vector<double>& mu_r, const std::vector<double>& cov_r,
                        const std::vector<double>& mu_g, const std::vector<double>& cov_g,
                        std::size_t d) {
  double mean_term = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = mu_r[i] - mu_g[i];
    mean_term += diff * diff;
  }
  // Tr((Sr Sg)^{1/2}) through the similarity trick: with X = sqrt(Sr),
  // Sr Sg is similar to the symmetric PSD matrix X Sg X.
  std::vector<double> x = matrix_sqrt_psd(cov_r, d);
  std::vector<double> xsg(d * d, 0.0), m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const double xik = x[i * d + k];
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) xsg[i * d + j] += xik * cov_g[k * d + j];
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const double xk = xsg[i * d + k];
      if (xk == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) m[i * d + j] += xk * x[k * d + j];
    }
  std::vector<double> w, v;
  symmetric_eigen(m, d, w, v);
  double tr_sqrt = 0;
  for (double e : w) tr_sqrt += std::sqrt(std::max(0.0, e));
  double tr = 0;
  for (std::size_t i = 0; i < d; ++i) tr += cov_r[i * d + i] + cov_g[i * d + i];
  const double value = mean_term + tr - 2.0 * tr_sqrt;
  return value < 0.0 ? 0.0 : value;  // numerical dust clipped
}

namespace {

void moments(const Tensor<double>& feats, std::vector<double>& mu, std::vector<double>& cov) {
  const std::size_t n = feats.dim(0), d = feats.dim(1);
  mu.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mu[j] += feats.at(i, j);
  for (double& m : mu) m /= static_cast<double>(n);
  cov.assign(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = feats.at(i, a) - mu[a];
      for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += da * (feats.at(i, b) - mu[b]);
    }
  for (double& c : cov) c /= static_cast<double>(n - 1);
}

void regularize_if_degenerate(std::vector<double>& cov, std::size_t d, const char* side) {
  std::vector<double> w, v;
  symmetric_eigen(cov, d, w, v);
  double wmax = 0;
  for (double x : w) wmax = std::max(wmax, std::abs(x));
  double wmin = wmax;
  for (double x : w) wmin = std::min(wmin, x);
  if (wmin < 1e-10 * std::max(wmax, 1.0)) {
    std::cerr << "fid: " << side << " covariance near-singular, adding 1e-6 ridge\n";
    for (std::size_t i = 0; i < d; ++i) cov[i * d + i] += 1e-6;
  }
}

}  // namespace

double fid(const Tensor<double>& feats_real, const Tensor<double>& feats_gen) {
  const std::size_t d = feats_real.dim(1);
  if (feats_gen.dim(1) != d) throw std::invalid_argument("fid: feature dim mismatch");
  if (feats_real.dim(0) < d + 1 || feats_gen.dim(0) < d + 1)
    throw std::invalid_argument("fid: need at least d+1 feature rows per side");
  std::vector<double> mu_r, cov_r, mu_g, cov_g;
  moments(feats_real, mu_r, cov_r);
  moments(feats_gen, mu_g, cov_g);
  regularize_if_degenerate(cov_r, d, "real");
  regularize_if_degenerate(cov_g, d, "generated");
  return fid_from_moments(mu_r, cov_r, mu_g, cov_g, d);
}

}  // namespace ggan::metrics
