#pragma once

#include "nop/baselines.hpp"
#include "nop/stage_one.hpp"
#include "nop/stage_two.hpp"
#include "nop/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nop {

struct NopConfig {
  Index K = 1;
  int J = 20;            // max iterations
  double eps = 1e-4;     // convergence tolerance
  int h = 0;             // 0: track init is trusted first; 1: shape init is
  int degree = 1;
  PatchPolicy patches;
  OptimizerConfig optimizer;
  KernelParams kernel;   // defaults to the SE configuration
  double sigma = 0.15848931924611134; // 10^-0.8
  Index M = 64;
  double L = 2.0;
  int warm_restarts = 1; // optimizer restarts on iterations >= 1
  std::uint64_t seed = 0;

  NopConfig();
  void validate() const;
};

struct NopInit {
  Mat phi0; // N x K radians; required
  Mat amp0; // N x K; required
  std::vector<PatternInducingPoints> inducing; // empty selects init_sine
};

struct IterationDiag {
  int j = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double stage1_residual = 0.0;
  double stage2_residual = 0.0;
};

struct ComponentEstimate {
  PatternInducingPoints points;
  Mat Sigma_u;
};

struct NopResult {
  StageOneResult tracks;
  std::vector<ComponentEstimate> shapes;
  bool converged = false;
  int iterations_used = 0;
  std::vector<IterationDiag> history;
  std::string warning; // set on the literal-but-suspicious exits
};

struct NopState {
  int j = 0;
  double eps0 = 2.0;
  double eps1 = 1.0;
  double eps2 = 1.0;
  StageOneResult tracks;
  std::vector<ComponentEstimate> shapes;
  std::vector<IterationDiag> history;
};

/// True (continue) iff j < J and eps1 > eps and eps2 > eps and
/// |eps1 - eps0| > eps.
bool convergence_check(const NopState& state, const NopConfig& config);

/// alpha_u = sqrt(2) sin(2 pi z), unit empirical L2 norm, unit variance.
std::vector<PatternInducingPoints> init_sine(const std::vector<Vec>& z_grids,
                                             const KernelParams& p, double L);

/// Same landmark layout with cosine for component 0 and sine for the rest
/// (the simultaneous-estimation experiment's initialization).
std::vector<PatternInducingPoints> init_cos_sin(const std::vector<Vec>& z_grids,
                                                const KernelParams& p, double L);

/// STFT-ridge initial tracks: per-component ridges (or the single merged
/// energy-centroid ridge with deterministic +-2% symmetry-breaking offsets
/// when the ridges cannot be separated), trapezoid-integrated to phases;
/// amplitudes from the smoothed band-passed analytic envelope, scaled by
/// 1/sqrt(2) to match the unit-L2 waveform convention.
StageOneResult init_bandpass_tf(const SampledSignal& signal, Index k,
                                const Vec& band_hints = Vec());

/// Constant-frequency initial tracks from periodogram peaks (stationary
/// experiments); under-resolved or harmonically related spectra fall back to
/// the merged peak with symmetry-breaking offsets. Peak amplitudes are scaled
/// by 1/sqrt(2) to match the unit-L2 waveform convention.
StageOneResult init_periodogram(const SampledSignal& signal, Index k);

/// Zero-mean/unit-norm gauge: periodize the landmark field across period
/// copies (variance-weighted), subtract the mean, rescale to unit empirical
/// L2 norm. Returns the factor the amplitude tracks must absorb.
double gauge_fix_shape(ComponentEstimate& shape);

/// Algorithm-1 alternating loop.
NopResult run_nop(const SampledSignal& signal, const NopConfig& config, const NopInit& init);

/// Result bundle: tracks.csv, shape_k.csv per component, diagnostics.csv.
/// Raw samples are not stored; the reader recovers times (and zero values)
/// from tracks.csv and the iteration history from diagnostics.csv, while
/// `converged` and `warning` stay at their defaults.
void write_result_bundle(const std::string& dir, const SampledSignal& signal,
                         const NopResult& result);
NopResult read_result_bundle(const std::string& dir, const NopConfig& config,
                             SampledSignal* signal_out = nullptr);

/// Per-sample instantaneous frequency (cycles/s) from the phase tracks.
Mat frequency_tracks(const StageOneResult& tracks, const Vec& times);

/// LS slope of each phase column over the record, in cycles/s (the natural
/// readout for constant-frequency experiments).
Vec mean_frequencies(const StageOneResult& tracks, const Vec& times);

} // namespace nop
