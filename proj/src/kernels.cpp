#include "nop/kernels.hpp"

#include <cmath>
#include <numbers>

namespace nop {

double KernelParams::alpha_scalar() const {
  if (alpha.size() != 1)
    throw std::invalid_argument("KernelParams: scalar alpha requested but size is " +
                                std::to_string(alpha.size()));
  return alpha(0);
}

void KernelParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("KernelParams: beta must be finite and positive");
  if (alpha.size() == 0)
    throw std::invalid_argument("KernelParams: alpha is empty");
  for (Index i = 0; i < alpha.size(); ++i)
    if (!(alpha(i) > 0.0) || !std::isfinite(alpha(i)))
      throw std::invalid_argument("KernelParams: alpha must be finite and positive");
  if (!(jitter >= 0.0) || jitter > 1e-4)
    throw std::invalid_argument("KernelParams: jitter must lie in [0, 1e-4]");
}

KernelParams default_se_params() {
  KernelParams p;
  p.kind = KernelKind::se;
  p.beta = 1.0;
  p.alpha = Vec::Constant(1, 2e3);
  p.jitter = 1e-8;
  return p;
}

KernelParams default_periodic_params(Index dims) {
  KernelParams p;
  p.kind = KernelKind::periodic;
  p.beta = 1.0;
  // Curvature-matched to the SE default for small phase distances:
  // 0.5*a_per*sin^2(pi d) ~ 0.5*(a_per pi^2) d^2.
  p.alpha = Vec::Constant(dims, 2e3 / (std::numbers::pi * std::numbers::pi));
  p.jitter = 1e-8;
  return p;
}

double se_kernel(double x, double xp, const KernelParams& p) {
  if (p.kind != KernelKind::se)
    throw std::invalid_argument("se_kernel: params are not for the SE kernel");
  const double d = x - xp;
  return p.beta * std::exp(-0.5 * p.alpha_scalar() * d * d);
}

double periodic_kernel(const Vec& x, const Vec& xp, const KernelParams& p) {
  if (p.kind != KernelKind::periodic)
    throw std::invalid_argument("periodic_kernel: params are not for the periodic kernel");
  if (x.size() != xp.size() || x.size() != p.alpha.size())
    throw std::invalid_argument("periodic_kernel: dimension mismatch (x " +
                                std::to_string(x.size()) + ", x' " + std::to_string(xp.size()) +
                                ", alpha " + std::to_string(p.alpha.size()) + ")");
  double expo = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    const double s = std::sin(std::numbers::pi * std::abs(x(k) - xp(k)));
    expo += p.alpha(k) * s * s;
  }
  return p.beta * std::exp(-0.5 * expo);
}

Mat assemble_cov(const Mat& inputs_a, const Mat& inputs_b, const KernelParams& p,
                 bool same_inputs) {
  p.validate();
  if (!inputs_a.allFinite() || !inputs_b.allFinite())
    throw std::invalid_argument("assemble_cov: non-finite inputs");
  if (inputs_a.cols() != inputs_b.cols())
    throw std::invalid_argument("assemble_cov: input dimension mismatch");
  const Index n = inputs_a.rows(), m = inputs_b.rows();
  Mat K(n, m);
  if (p.kind == KernelKind::se) {
    if (inputs_a.cols() != 1)
      throw std::invalid_argument("assemble_cov: SE kernel expects scalar inputs");
    const double a = p.alpha_scalar();
    for (Index j = 0; j < m; ++j)
      K.col(j) = p.beta *
                 (-0.5 * a * (inputs_a.col(0).array() - inputs_b(j, 0)).square()).exp();
  } else {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j)
        K(i, j) = periodic_kernel(inputs_a.row(i).transpose(), inputs_b.row(j).transpose(), p);
  }
  if (same_inputs) {
    if (n != m) throw std::invalid_argument("assemble_cov: same_inputs requires square output");
    K.diagonal().array() += p.jitter * p.beta;
  }
  return K;
}

Mat assemble_cov(const Vec& a, const Vec& b, const KernelParams& p, bool same_inputs) {
  return assemble_cov(Mat(a), Mat(b), p, same_inputs);
}

Eigen::LLT<Mat> factor_spd(const Mat& K, const std::string& context) {
  Eigen::LLT<Mat> llt(K);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(context +
                             ": Cholesky factorization failed, matrix not positive definite "
                             "(size " + std::to_string(K.rows()) + ", consider more jitter)");
  return llt;
}

Vec nystrom_mean(const Vec& phi, const Vec& z, const Vec& alpha_u, const KernelParams& p) {
  return make_nystrom_operator(z, alpha_u, p).mean(phi);
}

Vec nystrom_mean_jacobian_diag(const Vec& phi, const Vec& z, const Vec& alpha_u,
                               const KernelParams& p) {
  return make_nystrom_operator(z, alpha_u, p).dmean_dphi(phi);
}

NystromOperator make_nystrom_operator(const Vec& z, const Vec& alpha_u,
                                      const KernelParams& p) {
  if (z.size() != alpha_u.size())
    throw std::invalid_argument("make_nystrom_operator: z/alpha_u size mismatch");
  NystromOperator op;
  op.z = z;
  op.params = p;
  const Mat K_MM = assemble_cov(z, z, p, true);
  op.weights = factor_spd(K_MM, "nystrom_mean").solve(alpha_u);
  return op;
}

Vec NystromOperator::mean(const Vec& phi) const {
  if (params.kind != KernelKind::se)
    throw std::invalid_argument("NystromOperator: SE kernel required");
  const double a = params.alpha[0];
  Vec out = Vec::Zero(phi.size());
  for (Index m = 0; m < z.size(); ++m)
    out.array() += (params.beta * weights(m)) *
                   (-0.5 * a * (phi.array() - z(m)).square()).exp();
  return out;
}

Vec NystromOperator::dmean_dphi(const Vec& phi) const {
  if (params.kind != KernelKind::se)
    throw std::invalid_argument("NystromOperator: SE kernel required");
  const double a = params.alpha[0];
  Vec out = Vec::Zero(phi.size());
  for (Index m = 0; m < z.size(); ++m) {
    auto diff = phi.array() - z(m);
    out.array() += (params.beta * weights(m)) * (-a * diff) * (-0.5 * a * diff.square()).exp();
  }
  return out;
}

void NystromOperator::mean_and_derivative(const Vec& phi, Vec& mean_out, Vec& dmean_out) const {
  if (params.kind != KernelKind::se)
    throw std::invalid_argument("NystromOperator: SE kernel required");
  const double a = params.alpha[0];
  mean_out = Vec::Zero(phi.size());
  dmean_out = Vec::Zero(phi.size());
  for (Index m = 0; m < z.size(); ++m) {
    auto diff = phi.array() - z(m);
    Eigen::ArrayXd km = (params.beta * weights(m)) * (-0.5 * a * diff.square()).exp();
    mean_out.array() += km;
    dmean_out.array() += (-a * diff) * km;
  }
}

} // namespace nop
