#pragma once

#include "nop/kernels.hpp"
#include "nop/types.hpp"

#include <string>
#include <vector>

namespace nop {

/// Landmark representation of a shape inside the GP: inputs z on the phase
/// domain (cycles, in [0, L)), posterior mean alpha_u and posterior variance
/// diagonal over the inducing values.
struct PatternInducingPoints {
  Vec z;
  Vec alpha_u;
  Vec sigma_u_diag;
  double L = 2.0;
  KernelParams kernel;

  Index size() const { return z.size(); }
  void validate() const;
};

/// M uniformly spaced landmarks on [0, L); alpha_u = 0, unit variance.
PatternInducingPoints make_uniform_inducing(Index m, double L, const KernelParams& p);

void write_inducing_csv(const std::string& path, const PatternInducingPoints& pts);
PatternInducingPoints read_inducing_csv(const std::string& path, const KernelParams& p,
                                        double L);

/// Map phase (radians) to the window [L/2 - 0.5, L/2 + 0.5) cycles, using
/// 1-periodicity of shapes. The window sits centered in [0, L) so kernel
/// evaluations stay away from the landmark-grid edges.
double fold_phase_cycles(double phase_rad, double L);
Vec fold_phase_cycles(const Vec& phase_rad, double L);

/// Product enumeration of per-component inducing grids; row m of Z is
/// ((z_1)_tau(m,1), ..., (z_K)_tau(m,K)) with component K fastest-varying.
struct JointGrid {
  Mat Z;
  std::vector<Index> sizes;

  Index rows() const { return Z.rows(); }
  Index components() const { return Index(sizes.size()); }
  Index tau(Index m, Index k) const;
};

/// Throws when prod(M_k) > 1e6, advising per-component mode.
JointGrid build_joint_grid(const std::vector<Vec>& z_list);

struct PosteriorResult {
  Vec alpha_u;
  Mat Sigma_u;
};

/// Titsias-style collapsed posterior over inducing values given a weighted
/// cross-covariance W (N x M): alpha_u = sigma^-2 K_MM S W^T y with
/// S = (K_MM + sigma^-2 W^T W)^-1, Sigma_u = K_MM S K_MM (symmetrized).
PosteriorResult weighted_variational_posterior(const Vec& y, const Mat& W, const Mat& K_MM,
                                               double sigma);

/// Single-GP posterior: data inputs x (cycles) against inducing inputs z.
PosteriorResult variational_posterior(const Vec& y, const Vec& x, const Vec& z, double sigma,
                                      const KernelParams& p);

/// Multi-component posterior over stacked per-component inducing values.
/// phi is N x K in radians (folded internally); cross-covariance rows of
/// component k are scaled by amp(i, k). amp may be empty (treated as ones).
std::vector<PosteriorResult> amplitude_weighted_posterior(
    const Vec& y, const Mat& phi, const Mat& amp,
    const std::vector<PatternInducingPoints>& inducing, double sigma);

/// Joint-grid posterior with the periodic kernel on K-dimensional phase rows.
PosteriorResult joint_posterior(const Vec& y, const Mat& phi, const JointGrid& grid,
                                double sigma, const KernelParams& p);

/// Collapsed evidence lower bound of the sparse model with cross-cov W:
/// log N(y | 0, W K_MM^-1 W^T + sigma^2 I) - (1/(2 sigma^2)) tr(K_NN - Q_NN),
/// where knn_diag carries the diagonal of the full prior at the data.
double elbo(const Vec& y, const Mat& W, const Mat& K_MM, double sigma, const Vec& knn_diag);

/// Convenience single-GP ELBO on inputs x (cycles) vs landmarks z.
double elbo(const Vec& y, const Vec& x, const Vec& z, double sigma, const KernelParams& p);

struct AnovaResult {
  std::vector<Vec> alpha_parts;
  std::vector<Vec> var_parts;
  double grand_mean = 0.0; // diagnostic; ~0 for zero-mean shapes
};

/// Closed-form K-dimensional ANOVA main-effects split of a joint inducing
/// vector; variances propagated with squared averaging coefficients.
AnovaResult anova_separate(const Vec& alpha_u, const Vec& sigma_u_diag, const JointGrid& grid);

} // namespace nop
