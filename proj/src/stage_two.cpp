#include "nop/stage_two.hpp"

#include "nop/csv_io.hpp"

#include <cmath>
#include <numbers>

namespace nop {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void PatternInducingPoints::validate() const {
  if (z.size() == 0) throw std::invalid_argument("PatternInducingPoints: empty grid");
  if (z.size() != alpha_u.size() || z.size() != sigma_u_diag.size())
    throw std::invalid_argument("PatternInducingPoints: field size mismatch");
  if (!(L >= 1.0)) throw std::invalid_argument("PatternInducingPoints: L must be >= 1");
  for (Index i = 0; i < z.size(); ++i) {
    if (z(i) < 0.0 || z(i) >= L)
      throw std::invalid_argument("PatternInducingPoints: z out of [0, L) at index " +
                                  std::to_string(i));
    if (i > 0 && !(z(i) > z(i - 1)))
      throw std::invalid_argument("PatternInducingPoints: z not strictly increasing");
    if (!(sigma_u_diag(i) >= 0.0) || !std::isfinite(sigma_u_diag(i)))
      throw std::invalid_argument("PatternInducingPoints: invalid variance at index " +
                                  std::to_string(i));
  }
  if (!alpha_u.allFinite())
    throw std::invalid_argument("PatternInducingPoints: non-finite alpha_u");
}

PatternInducingPoints make_uniform_inducing(Index m, double L, const KernelParams& p) {
  if (m < 2) throw std::invalid_argument("make_uniform_inducing: need m >= 2");
  PatternInducingPoints pts;
  pts.z = Vec::LinSpaced(m, 0.0, L * double(m - 1) / double(m));
  pts.alpha_u = Vec::Zero(m);
  pts.sigma_u_diag = Vec::Ones(m);
  pts.L = L;
  pts.kernel = p;
  pts.validate();
  return pts;
}

void write_inducing_csv(const std::string& path, const PatternInducingPoints& pts) {
  pts.validate();
  CsvTable t;
  t.columns = {"z", "alpha_u", "var_u"};
  t.data.resize(pts.size(), 3);
  t.data.col(0) = pts.z;
  t.data.col(1) = pts.alpha_u;
  t.data.col(2) = pts.sigma_u_diag;
  write_csv(path, t);
}

PatternInducingPoints read_inducing_csv(const std::string& path, const KernelParams& p,
                                        double L) {
  const CsvTable t = read_csv(path);
  if (t.columns != std::vector<std::string>{"z", "alpha_u", "var_u"})
    throw std::runtime_error("read_inducing_csv: '" + path + "' must have header z,alpha_u,var_u");
  PatternInducingPoints pts;
  pts.z = t.data.col(0);
  pts.alpha_u = t.data.col(1);
  pts.sigma_u_diag = t.data.col(2);
  pts.L = L;
  pts.kernel = p;
  pts.validate();
  return pts;
}

double fold_phase_cycles(double phase_rad, double L) {
  const double center = 0.5 * L - 0.5;
  const double x = phase_rad / kTwoPi - center;
  return center + (x - std::floor(x));
}

Vec fold_phase_cycles(const Vec& phase_rad, double L) {
  Vec out(phase_rad.size());
  for (Index i = 0; i < out.size(); ++i) out(i) = fold_phase_cycles(phase_rad(i), L);
  return out;
}

Index JointGrid::tau(Index m, Index k) const {
  Index stride = 1;
  for (Index j = components() - 1; j > k; --j) stride *= sizes[std::size_t(j)];
  return (m / stride) % sizes[std::size_t(k)];
}

JointGrid build_joint_grid(const std::vector<Vec>& z_list) {
  if (z_list.empty()) throw std::invalid_argument("build_joint_grid: need K >= 1");
  double total = 1.0;
  for (const Vec& z : z_list) {
    if (z.size() == 0) throw std::invalid_argument("build_joint_grid: empty grid");
    total *= double(z.size());
  }
  if (total > 1e6)
    throw std::invalid_argument(
        "build_joint_grid: joint grid would have " + std::to_string(std::llround(total)) +
        " rows (> 1e6); use per-component mode");
  JointGrid grid;
  const Index k = Index(z_list.size());
  const Index m_total = Index(std::llround(total));
  grid.sizes.reserve(z_list.size());
  for (const Vec& z : z_list) grid.sizes.push_back(z.size());
  grid.Z.resize(m_total, k);
  for (Index m = 0; m < m_total; ++m)
    for (Index j = 0; j < k; ++j) grid.Z(m, j) = z_list[std::size_t(j)](grid.tau(m, j));
  return grid;
}

PosteriorResult weighted_variational_posterior(const Vec& y, const Mat& W, const Mat& K_MM,
                                               double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("variational_posterior: sigma must be > 0");
  if (W.rows() != y.size() || W.cols() != K_MM.rows() || K_MM.rows() != K_MM.cols())
    throw std::invalid_argument("variational_posterior: dimension mismatch");
  const double inv_s2 = 1.0 / (sigma * sigma);
  Mat A = K_MM + inv_s2 * (W.transpose() * W);
  A = 0.5 * (A + A.transpose());
  const auto llt = factor_spd(A, "variational_posterior");
  PosteriorResult out;
  out.alpha_u = inv_s2 * (K_MM * llt.solve(W.transpose() * y));
  out.Sigma_u = K_MM * llt.solve(K_MM);
  out.Sigma_u = 0.5 * (out.Sigma_u + out.Sigma_u.transpose()).eval();
  return out;
}

PosteriorResult variational_posterior(const Vec& y, const Vec& x, const Vec& z, double sigma,
                                      const KernelParams& p) {
  const Mat W = assemble_cov(x, z, p, false);
  const Mat K_MM = assemble_cov(z, z, p, true);
  return weighted_variational_posterior(y, W, K_MM, sigma);
}

std::vector<PosteriorResult> amplitude_weighted_posterior(
    const Vec& y, const Mat& phi, const Mat& amp,
    const std::vector<PatternInducingPoints>& inducing, double sigma) {
  const Index n = y.size();
  const Index k_count = Index(inducing.size());
  if (phi.rows() != n || phi.cols() != k_count)
    throw std::invalid_argument("amplitude_weighted_posterior: phi shape mismatch");
  const bool weighted = amp.size() > 0;
  if (weighted && (amp.rows() != n || amp.cols() != k_count))
    throw std::invalid_argument("amplitude_weighted_posterior: amp shape mismatch");

  Index m_total = 0;
  for (const auto& pts : inducing) m_total += pts.size();
  Mat W(n, m_total);
  Mat K_MM = Mat::Zero(m_total, m_total);
  Index off = 0;
  for (Index k = 0; k < k_count; ++k) {
    const auto& pts = inducing[std::size_t(k)];
    const Vec x = fold_phase_cycles(phi.col(k), pts.L);
    Mat Wk = assemble_cov(x, pts.z, pts.kernel, false);
    if (weighted) Wk.array().colwise() *= amp.col(k).array();
    W.middleCols(off, pts.size()) = Wk;
    K_MM.block(off, off, pts.size(), pts.size()) =
        assemble_cov(pts.z, pts.z, pts.kernel, true);
    off += pts.size();
  }

  const PosteriorResult joint = weighted_variational_posterior(y, W, K_MM, sigma);
  std::vector<PosteriorResult> parts;
  parts.reserve(std::size_t(k_count));
  off = 0;
  for (Index k = 0; k < k_count; ++k) {
    const Index m = inducing[std::size_t(k)].size();
    PosteriorResult part;
    part.alpha_u = joint.alpha_u.segment(off, m);
    part.Sigma_u = joint.Sigma_u.block(off, off, m, m);
    parts.push_back(std::move(part));
    off += m;
  }
  return parts;
}

PosteriorResult joint_posterior(const Vec& y, const Mat& phi, const JointGrid& grid,
                                double sigma, const KernelParams& p) {
  if (p.kind != KernelKind::periodic)
    throw std::invalid_argument("joint_posterior: periodic kernel required");
  if (phi.cols() != grid.components())
    throw std::invalid_argument("joint_posterior: phi/grid component mismatch");
  const Mat X = phi / kTwoPi; // periodic kernel needs no folding
  const Mat W = assemble_cov(X, grid.Z, p, false);
  const Mat K_MM = assemble_cov(grid.Z, grid.Z, p, true);
  return weighted_variational_posterior(y, W, K_MM, sigma);
}

double elbo(const Vec& y, const Mat& W, const Mat& K_MM, double sigma, const Vec& knn_diag) {
  if (!(sigma > 0.0)) throw std::invalid_argument("elbo: sigma must be > 0");
  const Index n = y.size(), m = K_MM.rows();
  const double s2 = sigma * sigma;
  const auto llt_mm = factor_spd(K_MM, "elbo");
  // V = W L^-T so Q_NN = V V^T.
  const Mat V = llt_mm.matrixU().solve<Eigen::OnTheRight>(W);
  Mat B = s2 * Mat::Identity(m, m) + V.transpose() * V;
  B = 0.5 * (B + B.transpose());
  const auto llt_b = factor_spd(B, "elbo");

  // log|Q + s2 I| = log|B| + (n - m) log s2.
  const Mat Lb = llt_b.matrixL();
  double logdet = double(n - m) * std::log(s2);
  for (Index i = 0; i < m; ++i) logdet += 2.0 * std::log(Lb(i, i));

  // (Q + s2 I)^-1 y = (y - V B^-1 V^T y) / s2.
  const Vec vty = V.transpose() * y;
  const double quad = (y.squaredNorm() - vty.dot(llt_b.solve(vty))) / s2;

  const double trace_gap = knn_diag.sum() - V.squaredNorm();
  return -0.5 * (logdet + quad + double(n) * std::log(kTwoPi)) - trace_gap / (2.0 * s2);
}

double elbo(const Vec& y, const Vec& x, const Vec& z, double sigma, const KernelParams& p) {
  const Mat W = assemble_cov(x, z, p, false);
  const Mat K_MM = assemble_cov(z, z, p, true);
  return elbo(y, W, K_MM, sigma, Vec::Constant(x.size(), p.beta));
}

AnovaResult anova_separate(const Vec& alpha_u, const Vec& sigma_u_diag, const JointGrid& grid) {
  const Index m_total = grid.rows();
  if (alpha_u.size() != m_total || sigma_u_diag.size() != m_total)
    throw std::invalid_argument("anova_separate: size mismatch with grid");
  const Index k_count = grid.components();
  const double grand = alpha_u.mean();
  const double split = double(k_count - 1) / double(k_count);

  AnovaResult out;
  out.grand_mean = grand;
  for (Index k = 0; k < k_count; ++k) {
    const Index mk = grid.sizes[std::size_t(k)];
    Vec mean = Vec::Zero(mk), var = Vec::Zero(mk);
    Vec count = Vec::Zero(mk);
    for (Index m = 0; m < m_total; ++m) {
      const Index j = grid.tau(m, k);
      mean(j) += alpha_u(m);
      var(j) += sigma_u_diag(m);
      count(j) += 1.0;
    }
    // Coefficient on (alpha_u)_m is 1/n_j - split/M; propagate squares for the
    // variance. Cross terms between the cell mean and the grand mean use the
    // exact expansion of (c_j - split*g).
    Vec alpha_k(mk), var_k(mk);
    for (Index j = 0; j < mk; ++j) {
      const double nj = count(j);
      alpha_k(j) = mean(j) / nj - split * grand;
      const double in_cell = 1.0 / nj - split / double(m_total);
      const double out_cell = -split / double(m_total);
      const double var_in = var(j);
      const double var_out = sigma_u_diag.sum() - var_in;
      var_k(j) = in_cell * in_cell * var_in + out_cell * out_cell * var_out;
    }
    out.alpha_parts.push_back(std::move(alpha_k));
    out.var_parts.push_back(std::move(var_k));
  }
  return out;
}

} // namespace nop
