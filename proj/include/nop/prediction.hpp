#pragma once

#include "nop/driver.hpp"
#include "nop/types.hpp"

#include <vector>

namespace nop {

struct PredictiveGaussian {
  Vec mean;
  Mat covariance;
};

struct LatentPrediction {
  std::vector<PredictiveGaussian> phi;
  std::vector<PredictiveGaussian> amp;
  bool extrapolating = false; // any t0 outside [t_min, t_max]
};

/// GP posterior over time for each phase/amplitude track: SE kernel with
/// lengthscale 5 sample intervals, variance matched to the track's empirical
/// variance, 1e-6 relative noise floor.
LatentPrediction predict_latents(const Vec& t0, const Vec& train_times,
                                 const StageOneResult& tracks);

enum class PredictMode { plug_in_mean, sample_latents };

/// Plug-in predictive for the signal: mean = sum_k a0_k .* (K_dM K_MM^-1
/// alpha_u_k); covariance = sum_k a0_k a0_k^T .* (K_dd,k - Nystrom + propagated
/// Sigma_u,k). sample_latents draws one latent-track sample before plugging in.
PredictiveGaussian predict_signal(const Vec& t0, const Vec& train_times,
                                  const NopResult& result,
                                  PredictMode mode = PredictMode::plug_in_mean,
                                  std::uint64_t seed = 0);

/// Draws from the plug-in predictive via a symmetric factorization with
/// three-decade jitter escalation; count x d output.
Mat sample_signal(const Vec& t0, const Vec& train_times, const NopResult& result, Index count,
                  std::uint64_t seed);

} // namespace nop
