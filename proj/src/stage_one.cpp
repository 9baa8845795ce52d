#include "nop/stage_one.hpp"

#include "nop/smoothing.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace nop {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat power_matrix(const Vec& times, double t_center, int degree) {
  Mat T(times.size(), degree + 1);
  T.col(0).setOnes();
  const Vec centered = (times.array() - t_center).matrix();
  for (int j = 1; j <= degree; ++j) T.col(j) = T.col(j - 1).cwiseProduct(centered);
  return T;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = seed + 0x9e3779b97f4a7c15ull * (a + 1) + 0x517cc1b727220a95ull * (b + 1);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

struct ObjectiveWorkspace {
  Mat T;                                // n x (d+1)
  std::vector<NystromOperator> ops;     // per component
  double L = 2.0;
};

double objective_core(const ObjectiveWorkspace& ws, const Vec& y, const Mat& B, const Mat& C,
                      Mat* grad_B, Mat* grad_C) {
  const Index n = y.size();
  const Index k_count = B.cols();
  Mat amp = ws.T * B;            // n x K
  Mat phi = ws.T * C;            // n x K, radians
  Mat shape_val(n, k_count), shape_der(n, k_count);
  for (Index k = 0; k < k_count; ++k) {
    Vec folded = fold_phase_cycles(phi.col(k), ws.L);
    Vec sv, sd;
    ws.ops[std::size_t(k)].mean_and_derivative(folded, sv, sd);
    shape_val.col(k) = sv;
    shape_der.col(k) = sd / kTwoPi; // per radian
  }
  Vec r = y - (amp.array() * shape_val.array()).matrix().rowwise().sum();
  if (grad_B) {
    for (Index k = 0; k < k_count; ++k)
      grad_B->col(k) = -2.0 * ws.T.transpose() * r.cwiseProduct(shape_val.col(k));
  }
  if (grad_C) {
    for (Index k = 0; k < k_count; ++k)
      grad_C->col(k) = -2.0 * ws.T.transpose() *
                       r.cwiseProduct(amp.col(k)).cwiseProduct(shape_der.col(k));
  }
  return r.squaredNorm();
}

ObjectiveWorkspace make_workspace(const Patch& patch, int degree,
                                  const std::vector<PatternInducingPoints>& inducing) {
  ObjectiveWorkspace ws;
  ws.T = power_matrix(patch.times, patch.t_center, degree);
  ws.L = inducing.empty() ? 2.0 : inducing.front().L;
  for (const auto& pts : inducing) {
    pts.validate();
    ws.ops.push_back(make_nystrom_operator(pts.z, pts.alpha_u, pts.kernel));
  }
  return ws;
}

bool frequency_positive(const ObjectiveWorkspace& ws, const Mat& C) {
  // Phase slope = derivative of the phase polynomial at the patch samples.
  const Index n = ws.T.rows();
  const int degree = int(ws.T.cols()) - 1;
  for (Index k = 0; k < C.cols(); ++k) {
    for (Index i = 0; i < n; ++i) {
      double slope = 0.0;
      for (int j = 1; j <= degree; ++j) slope += double(j) * C(j, k) * ws.T(i, j - 1);
      if (!(slope > 0.0)) return false;
    }
  }
  return true;
}

} // namespace

void StageOneResult::validate() const {
  const Index n = phi.rows(), k = phi.cols();
  auto check_shape = [&](const Mat& m, const char* name) {
    if (m.rows() != n || m.cols() != k)
      throw std::invalid_argument(std::string("StageOneResult: ") + name + " shape mismatch");
  };
  check_shape(amp, "amp");
  check_shape(phi_var, "phi_var");
  check_shape(amp_var, "amp_var");
  for (Index c = 0; c < k; ++c)
    for (Index i = 1; i < n; ++i)
      if (phi(i, c) < phi(i - 1, c) - 1e-12)
        throw std::invalid_argument("StageOneResult: phi not non-decreasing");
  if ((amp.array() < 0.0).any())
    throw std::invalid_argument("StageOneResult: negative amplitude");
  if ((phi_var.array() < 0.0).any() || (amp_var.array() < 0.0).any())
    throw std::invalid_argument("StageOneResult: negative variance");
}

void OptimizerConfig::validate() const {
  if (!(step_size > 0.0) || !(grad_tol > 0.0) || max_steps < 1 || restarts < 1)
    throw std::invalid_argument("OptimizerConfig: positive step_size/grad_tol/steps/restarts required");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("OptimizerConfig: beta1, beta2 must lie in (0, 1)");
}

std::vector<Patch> make_patches(const SampledSignal& signal, const Vec& freq_hints,
                                const PatchPolicy& policy) {
  signal.validate();
  if (freq_hints.size() == 0 || (freq_hints.array() <= 0.0).any())
    throw std::invalid_argument("make_patches: positive frequency hints required");
  if (!(policy.periods_per_patch > 0.0) || policy.overlap_fraction < 0.0 ||
      policy.overlap_fraction >= 1.0)
    throw std::invalid_argument("make_patches: invalid policy");

  const Index n = signal.size();
  const double min_freq = freq_hints.minCoeff();
  Index len = Index(std::lround(policy.periods_per_patch / min_freq * signal.sample_rate));
  len = std::clamp<Index>(len, 8, n);

  std::vector<Patch> patches;
  const Index hop = std::max<Index>(1, Index(std::lround(double(len) * (1.0 - policy.overlap_fraction))));
  for (Index start = 0;; start += hop) {
    if (start + len > n) start = n - len;
    Patch p;
    p.start = start;
    p.end = start + len;
    p.times = signal.times.segment(start, len);
    p.values = signal.values.segment(start, len);
    p.t_center = 0.5 * (p.times(0) + p.times(len - 1));
    patches.push_back(std::move(p));
    if (start + len >= n) break;
  }
  return patches;
}

double patch_objective(const Patch& patch, const Mat& B, const Mat& C,
                       const std::vector<PatternInducingPoints>& inducing,
                       Mat* grad_B, Mat* grad_C) {
  if (B.rows() != C.rows() || B.cols() != C.cols())
    throw std::invalid_argument("patch_objective: B/C shape mismatch");
  if (Index(inducing.size()) != B.cols())
    throw std::invalid_argument("patch_objective: component count mismatch");
  const int degree = int(B.rows()) - 1;
  if (degree < 0 || degree > 2)
    throw std::invalid_argument("patch_objective: degree must lie in {0, 1, 2}");
  ObjectiveWorkspace ws = make_workspace(patch, degree, inducing);
  if (grad_B) grad_B->resize(B.rows(), B.cols());
  if (grad_C) grad_C->resize(C.rows(), C.cols());
  return objective_core(ws, patch.values, B, C, grad_B, grad_C);
}

PatchFit fit_patch(const Patch& patch, const PatchFit& init,
                   const std::vector<PatternInducingPoints>& inducing,
                   const OptimizerConfig& opt, Index patch_index) {
  opt.validate();
  const int degree = init.degree;
  if (init.B.rows() != degree + 1 || init.C.rows() != degree + 1)
    throw std::invalid_argument("fit_patch: init coefficient rows inconsistent with degree");
  ObjectiveWorkspace ws = make_workspace(patch, degree, inducing);
  const Index rows = init.B.rows(), cols = init.B.cols();

  PatchFit best = init;
  best.residual = std::numeric_limits<double>::infinity();
  best.converged = false;
  bool any_finite = false;
  double last_finite = std::numeric_limits<double>::quiet_NaN();

  for (int restart = 0; restart < opt.restarts; ++restart) {
    Mat B = init.B, C = init.C;
    if (restart > 0 && degree >= 1) {
      std::mt19937_64 rng(mix_seed(opt.seed, std::uint64_t(patch_index), std::uint64_t(restart)));
      std::normal_distribution<double> g(0.0, 0.05);
      for (Index k = 0; k < cols; ++k) C(1, k) *= 1.0 + g(rng);
    }

    Mat gB(rows, cols), gC(rows, cols);
    Mat mB = Mat::Zero(rows, cols), vB = Mat::Zero(rows, cols);
    Mat mC = Mat::Zero(rows, cols), vC = Mat::Zero(rows, cols);
    double step = opt.step_size;
    double run_best = std::numeric_limits<double>::infinity();
    Mat run_best_B = B, run_best_C = C;
    bool converged = false;
    int since_improve = 0;
    const int patience = 150;

    for (int it = 1; it <= opt.max_steps; ++it) {
      const double value = objective_core(ws, patch.values, B, C, &gB, &gC);
      if (!std::isfinite(value)) break;
      any_finite = true;
      last_finite = value;
      if (value < run_best * (1.0 - 1e-12)) {
        run_best = value;
        run_best_B = B;
        run_best_C = C;
        since_improve = 0;
      } else if (++since_improve >= patience) {
        step *= 0.5;
        since_improve = 0;
        B = run_best_B;
        C = run_best_C;
        mB.setZero(); vB.setZero(); mC.setZero(); vC.setZero();
        if (step < 1e-7 * opt.step_size) { converged = true; break; }
        continue;
      }
      const double gmax = std::max(gB.cwiseAbs().maxCoeff(), gC.cwiseAbs().maxCoeff());
      if (gmax < opt.grad_tol) { converged = true; break; }

      const double bc1 = 1.0 - std::pow(opt.beta1, it);
      const double bc2 = 1.0 - std::pow(opt.beta2, it);
      mB = opt.beta1 * mB + (1.0 - opt.beta1) * gB;
      vB = opt.beta2 * vB + (1.0 - opt.beta2) * gB.cwiseProduct(gB);
      mC = opt.beta1 * mC + (1.0 - opt.beta1) * gC;
      vC = opt.beta2 * vC + (1.0 - opt.beta2) * gC.cwiseProduct(gC);
      B.array() -= step * (mB.array() / bc1) / ((vB.array() / bc2).sqrt() + 1e-12);
      C.array() -= step * (mC.array() / bc1) / ((vC.array() / bc2).sqrt() + 1e-12);
    }

    if (!std::isfinite(run_best)) continue;
    const double final_value = run_best;
    if (!frequency_positive(ws, run_best_C)) continue;
    if (final_value < best.residual) {
      best.B = run_best_B;
      best.C = run_best_C;
      best.degree = degree;
      best.residual = final_value;
      best.converged = converged;
    }
  }

  if (!std::isfinite(best.residual)) {
    if (!any_finite)
      throw std::runtime_error("fit_patch: all restarts diverged (objective NaN)");
    // Every restart lost frequency positivity; return the last finite state
    // unconverged rather than guessing.
    throw std::runtime_error("fit_patch: no restart kept phase slopes positive; last residual " +
                             std::to_string(last_finite));
  }
  return best;
}

Vec polyfit_centered(const Vec& times, const Vec& values, double t_center, int degree) {
  const Mat T = power_matrix(times, t_center, degree);
  return T.colPivHouseholderQr().solve(values);
}

namespace {

Vec eval_poly(const Vec& coeffs, const Vec& times, double t_center) {
  Vec out = Vec::Zero(times.size());
  for (Index j = coeffs.size() - 1; j >= 0; --j)
    out = out.cwiseProduct(times - Vec::Constant(times.size(), t_center)) +
          Vec::Constant(times.size(), coeffs(j));
  return out;
}

double patch_mean_frequency(const PatchFit& fit, const Patch& patch, Index k) {
  // Mean phase slope over the centered patch in cycles/s; for degree <= 2 the
  // even slope terms average to c1 over a symmetric interval.
  (void)patch;
  return (fit.C.rows() > 1 ? fit.C(1, k) : 0.0) / kTwoPi;
}

std::vector<Index> match_components(const std::vector<double>& prev_freq,
                                    const std::vector<double>& cur_freq) {
  const std::size_t k = prev_freq.size();
  std::vector<Index> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = Index(i);
  std::vector<Index> best_perm = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  double second_cost = std::numeric_limits<double>::infinity();
  std::sort(perm.begin(), perm.end());
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      cost += std::abs(prev_freq[i] - cur_freq[std::size_t(perm[i])]);
    if (cost < best_cost) {
      second_cost = best_cost;
      best_cost = cost;
      best_perm = perm;
    } else if (cost < second_cost) {
      second_cost = cost;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (k > 1 && std::abs(second_cost - best_cost) < 1e-15 * (1.0 + best_cost))
    throw std::runtime_error("component association ambiguous");
  return best_perm;
}

} // namespace

StageOneResult stitch_global(const std::vector<PatchFit>& fits,
                             const std::vector<Patch>& patches,
                             const SampledSignal& signal) {
  if (fits.size() != patches.size() || fits.empty())
    throw std::invalid_argument("stitch_global: fits/patches mismatch or empty");
  const Index n = signal.size();
  const Index k_count = fits.front().B.cols();

  // Per-patch pointwise evaluations, components permuted to match patch 0 by
  // nearest mean frequency, phase constants resolved left to right.
  Mat phi_acc = Mat::Zero(n, k_count), amp_acc = Mat::Zero(n, k_count);
  Vec weight_acc = Vec::Zero(n);
  Mat phi_prev, amp_prev; // previous patch evaluation (for overlap offsets)

  std::vector<double> ref_freq(static_cast<std::size_t>(k_count));
  std::vector<Mat> patch_phi(patches.size()), patch_amp(patches.size());

  for (std::size_t p = 0; p < patches.size(); ++p) {
    const Patch& patch = patches[p];
    const PatchFit& fit = fits[p];
    std::vector<double> freqs(static_cast<std::size_t>(k_count));
    for (Index k = 0; k < k_count; ++k)
      freqs[std::size_t(k)] = patch_mean_frequency(fit, patch, k);

    std::vector<Index> perm(static_cast<std::size_t>(k_count));
    if (p == 0) {
      for (Index k = 0; k < k_count; ++k) perm[std::size_t(k)] = k;
      ref_freq = freqs;
    } else {
      perm = match_components(ref_freq, freqs);
    }

    Mat phi_here(patch.size(), k_count), amp_here(patch.size(), k_count);
    for (Index k = 0; k < k_count; ++k) {
      const Index src = perm[std::size_t(k)];
      phi_here.col(k) = eval_poly(fit.C.col(src), patch.times, patch.t_center);
      amp_here.col(k) = eval_poly(fit.B.col(src), patch.times, patch.t_center);
      ref_freq[std::size_t(k)] = freqs[std::size_t(src)];
    }

    if (p > 0) {
      const Patch& prev = patches[p - 1];
      const Index ov_start = patch.start, ov_end = std::min(prev.end, patch.end);
      if (ov_end > ov_start) {
        for (Index k = 0; k < k_count; ++k) {
          double diff = 0.0;
          for (Index i = ov_start; i < ov_end; ++i)
            diff += patch_phi[p - 1](i - prev.start, k) - phi_here(i - patch.start, k);
          phi_here.col(k).array() += diff / double(ov_end - ov_start);
        }
      }
    }
    patch_phi[p] = phi_here;
    patch_amp[p] = amp_here;
  }

  // Raised-cosine crossfade, normalized per sample.
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const Patch& patch = patches[p];
    for (Index i = 0; i < patch.size(); ++i) {
      const double u = (double(i) + 0.5) / double(patch.size());
      const double w = std::sin(std::numbers::pi * u) * std::sin(std::numbers::pi * u) + 1e-6;
      const Index gi = patch.start + i;
      weight_acc(gi) += w;
      phi_acc.row(gi) += w * patch_phi[p].row(i);
      amp_acc.row(gi) += w * patch_amp[p].row(i);
    }
  }
  for (Index i = 0; i < n; ++i) {
    phi_acc.row(i) /= weight_acc(i);
    amp_acc.row(i) /= weight_acc(i);
  }

  // Smooth, then variance from pre/post-smoothing residuals.
  StageOneResult out;
  out.phi.resize(n, k_count);
  out.amp.resize(n, k_count);
  out.phi_var.resize(n, k_count);
  out.amp_var.resize(n, k_count);
  const Index window = std::min<Index>(patches.front().size(), n);
  for (Index k = 0; k < k_count; ++k) {
    const Vec phi_s = smooth_penalized(phi_acc.col(k)).smoothed;
    const Vec amp_s = smooth_penalized(amp_acc.col(k)).smoothed;
    const Vec phi_r2 = (phi_acc.col(k) - phi_s).cwiseAbs2();
    const Vec amp_r2 = (amp_acc.col(k) - amp_s).cwiseAbs2();
    for (Index i = 0; i < n; ++i) {
      const Index lo = std::max<Index>(0, i - window / 2);
      const Index hi = std::min<Index>(n, lo + window);
      out.phi_var(i, k) = phi_r2.segment(lo, hi - lo).mean();
      out.amp_var(i, k) = amp_r2.segment(lo, hi - lo).mean();
    }
    out.phi.col(k) = phi_s;
    out.amp.col(k) = amp_s.cwiseMax(0.0);
    for (Index i = 1; i < n; ++i)
      out.phi(i, k) = std::max(out.phi(i, k), out.phi(i - 1, k));
  }
  out.validate();
  return out;
}

StageOneResult run_stage_one(const SampledSignal& signal, const Mat& phi_init,
                             const Mat& amp_init,
                             const std::vector<PatternInducingPoints>& inducing,
                             const StageOneConfig& cfg) {
  signal.validate();
  const Index n = signal.size();
  const Index k_count = phi_init.cols();
  if (phi_init.rows() != n || amp_init.rows() != n || amp_init.cols() != k_count)
    throw std::invalid_argument("run_stage_one: track shape mismatch");

  Vec hints(k_count);
  for (Index k = 0; k < k_count; ++k) {
    const double span = signal.times(n - 1) - signal.times(0);
    hints(k) = (phi_init(n - 1, k) - phi_init(0, k)) / (kTwoPi * span);
    if (!(hints(k) > 0.0))
      throw std::invalid_argument("run_stage_one: non-increasing initial phase for component " +
                                  std::to_string(k));
  }

  const std::vector<Patch> patches = make_patches(signal, hints, cfg.patches);
  std::vector<PatchFit> fits;
  fits.reserve(patches.size());
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const Patch& patch = patches[p];
    PatchFit seed;
    seed.degree = cfg.degree;
    seed.B.resize(cfg.degree + 1, k_count);
    seed.C.resize(cfg.degree + 1, k_count);
    for (Index k = 0; k < k_count; ++k) {
      seed.B.col(k) = polyfit_centered(patch.times, amp_init.col(k).segment(patch.start, patch.size()),
                                       patch.t_center, cfg.degree);
      seed.C.col(k) = polyfit_centered(patch.times, phi_init.col(k).segment(patch.start, patch.size()),
                                       patch.t_center, cfg.degree);
    }
    fits.push_back(fit_patch(patch, seed, inducing, cfg.optimizer, Index(p)));
  }
  return stitch_global(fits, patches, signal);
}

} // namespace nop
