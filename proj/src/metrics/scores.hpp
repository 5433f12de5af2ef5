#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ggan/tensor.hpp"

namespace ggan::metrics {

/// Symmetric eigendecomposition (cyclic Jacobi). Returns eigenvalues and
/// column eigenvectors with A = V diag(w) V^T.
void symmetric_eigen(const std::vector<double>& a, std::size_t n, std::vector<double>& w,
                     std::vector<double>& v);

/// Principal square root of a symmetric PSD matrix (n x n, row-major).
/// Throws if the symmetrized input has eigenvalues below -1e-8 * max, or if
/// the reconstruction residual exceeds 1e-6 relative.
std::vector<double> matrix_sqrt_psd(const std::vector<double>& a, std::size_t n);

/// Inception score over `n_splits` splits of the class-probability rows.
/// Returns (mean, population std) of exp(mean KL(p(y|x) || p(y))).
std::pair<double, double> inception_score(const Tensor<double>& probs,
                                          std::size_t n_splits = 10);

/// Frechet distance between Gaussians fitted to the two feature sets
/// (rows = samples). Needs at least d+1 rows per side; near-singular
/// covariances are ridge-regularized with 1e-6 I (with a warning).
/// Negative numerical dust is clipped to zero.
double fid(const Tensor<double>& feats_real, const Tensor<double>& feats_gen);

/// Closed-form path used by fid() once moments are known; exposed for
/// moment-level oracle checks.
double fid_from_moments(const std::vector<double>& mu_r, const std::vector<double>& cov_r,
                        const std::vector<double>& mu_g, const std::vector<double>& cov_g,
                        std::size_t d);

}  // namespace ggan::metrics
