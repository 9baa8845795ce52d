#pragma once

#include "nop/types.hpp"

#include <Eigen/Cholesky>

namespace nop {

enum class KernelKind { se, periodic };

struct KernelParams {
  KernelKind kind = KernelKind::se;
  double beta = 1.0;        // signal variance
  Vec alpha;                // se: single entry; periodic: per-dimension
  double jitter = 1e-8;

  double alpha_scalar() const;
  void validate() const;
};

/// Paper-default SE hyperparameters: beta=1, alpha=2e3, jitter=1e-8*beta.
KernelParams default_se_params();
KernelParams default_periodic_params(Index dims);

double se_kernel(double x, double xp, const KernelParams& p);
double periodic_kernel(const Vec& x, const Vec& xp, const KernelParams& p);

/// Element (i,j) = k(a_i, b_j). When `same_inputs`, jitter*beta is added on
/// the diagonal. Scalar inputs are rows of a one-column matrix; the periodic
/// kernel takes multi-column inputs.
Mat assemble_cov(const Mat& inputs_a, const Mat& inputs_b, const KernelParams& p,
                 bool same_inputs);
Mat assemble_cov(const Vec& a, const Vec& b, const KernelParams& p, bool same_inputs);

/// Cholesky factor of K_MM(+jitter). Throws std::runtime_error naming the
/// conditioning problem on factorization failure.
Eigen::LLT<Mat> factor_spd(const Mat& K, const std::string& context);

/// K_NM * K_MM^{-1} * alpha_u via an SPD factorization.
Vec nystrom_mean(const Vec& phi, const Vec& z, const Vec& alpha_u, const KernelParams& p);

/// Diagonal of d(nystrom_mean)_i / d(phi_i); SE kernel only.
Vec nystrom_mean_jacobian_diag(const Vec& phi, const Vec& z, const Vec& alpha_u,
                               const KernelParams& p);

/// Shared precomputation for repeated Nyström evaluations against one grid.
struct NystromOperator {
  Vec z;
  KernelParams params;
  Vec weights; // K_MM^{-1} * alpha_u

  /// mean_i = sum_m k(phi_i, z_m) * weights_m
  Vec mean(const Vec& phi) const;
  /// d mean_i / d phi_i (SE kernel only)
  Vec dmean_dphi(const Vec& phi) const;
  void mean_and_derivative(const Vec& phi, Vec& mean_out, Vec& dmean_out) const;
};

NystromOperator make_nystrom_operator(const Vec& z, const Vec& alpha_u,
                                      const KernelParams& p);

} // namespace nop
