#pragma once

#include "nop/stage_two.hpp"
#include "nop/types.hpp"

#include <cstdint>
#include <vector>

namespace nop {

struct Patch {
  Index start = 0; // inclusive
  Index end = 0;   // exclusive
  Vec times;
  Vec values;
  double t_center = 0.0;

  Index size() const { return end - start; }
};

/// Local polynomial parametrization: amplitude coefficients B and phase
/// coefficients C (radians over centered time), one column per component.
struct PatchFit {
  Mat B;
  Mat C;
  int degree = 1;
  double residual = 0.0;
  bool converged = false;
};

struct StageOneResult {
  Mat phi;     // N x K, radians, columns non-decreasing
  Mat amp;     // N x K, >= 0
  Mat phi_var; // N x K, >= 0
  Mat amp_var; // N x K, >= 0

  Index samples() const { return phi.rows(); }
  Index components() const { return phi.cols(); }
  void validate() const;
};

struct OptimizerConfig {
  double step_size = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int max_steps = 2000;
  double grad_tol = 1e-8;
  int restarts = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PatchPolicy {
  double periods_per_patch = 5.0; // 3..10 is the useful range
  double overlap_fraction = 0.5;
};

/// Patch length ~ periods_per_patch / min_k freq_hint_k * sample_rate,
/// clamped to [8, N]; consecutive patches overlap by overlap_fraction and the
/// union covers the record.
std::vector<Patch> make_patches(const SampledSignal& signal, const Vec& freq_hints,
                                const PatchPolicy& policy);

/// Squared L2 residual of the pattern-driven local model and its analytic
/// gradients. Time is centered at t_center before powers are taken.
double patch_objective(const Patch& patch, const Mat& B, const Mat& C,
                       const std::vector<PatternInducingPoints>& inducing,
                       Mat* grad_B = nullptr, Mat* grad_C = nullptr);

/// Adam with plateau-triggered step decay over `restarts` jittered
/// initializations (restart 0 unjittered; jitter multiplies C's linear term
/// by 1 + N(0, 0.05^2)). patch_index seeds the per-patch RNG stream.
PatchFit fit_patch(const Patch& patch, const PatchFit& init,
                   const std::vector<PatternInducingPoints>& inducing,
                   const OptimizerConfig& opt, Index patch_index = 0);

/// Patch polynomials -> global tracks: nearest-frequency component matching,
/// left-to-right constant phase offsets over overlaps, raised-cosine
/// crossfade, GCV smoothing; variances from a centered moving average
/// (window = patch length) of squared pre/post-smoothing residuals.
StageOneResult stitch_global(const std::vector<PatchFit>& fits,
                             const std::vector<Patch>& patches,
                             const SampledSignal& signal);

/// Degree-d weighted LS polynomial fit in centered time (used to seed patch
/// fits from tracks).
Vec polyfit_centered(const Vec& times, const Vec& values, double t_center, int degree);

struct StageOneConfig {
  int degree = 1;
  PatchPolicy patches;
  OptimizerConfig optimizer;
};

/// One full Stage-1 pass: seed each patch from the given tracks, fit, stitch.
StageOneResult run_stage_one(const SampledSignal& signal, const Mat& phi_init,
                             const Mat& amp_init,
                             const std::vector<PatternInducingPoints>& inducing,
                             const StageOneConfig& cfg);

} // namespace nop
