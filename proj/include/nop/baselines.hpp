#pragma once

#include "nop/types.hpp"

#include <string>
#include <vector>

namespace nop {

struct FrequencyEstimate {
  Vec frequencies;  // cycles/sample, ascending, in (0, 0.5]
  Vec amplitudes;   // optional; empty when the method does not estimate them
  std::string method;
  bool under_resolved = false;
};

struct Spectrum {
  Vec freq;  // cycles/sample
  Vec power;
};

/// Subspace pseudospectrum on a forward-backward autocorrelation of order
/// `subarray` (0 selects floor(N/2)); evaluated via diagonal sums on a
/// `grid_size` FFT grid. `refine` polishes each peak with Newton steps on the
/// trigonometric polynomial (sub-grid accuracy).
FrequencyEstimate music(const Vec& y, Index k, Index grid_size = 1 << 14,
                        Index subarray = 0, bool refine = true);

/// Rotational-invariance LS between shifted signal subspaces; conjugate
/// eigenvalue pairs collapse to K positive frequencies.
FrequencyEstimate esprit(const Vec& y, Index k, Index subarray = 0);

struct BurgResult {
  Spectrum spectrum;
  FrequencyEstimate peaks;
  Vec ar_coeffs;    // a_1..a_p of A(z) = 1 + sum a_j z^-j
  double noise_var; // final prediction error
};

/// Burg reflection-coefficient recursion (negative order selects floor(N/3);
/// order 0 is the white-noise model whose spectrum is flat at the sample
/// variance); spectrum = noise_var / |A|^2 on the grid.
BurgResult burg_me(const Vec& y, Index order = -1, Index grid_size = 1 << 14, Index k = 1);

/// 8x zero-padded FFT magnitude; K largest local maxima with parabolic
/// interpolation. Maxima below 10% of the strongest peak's power count as
/// window sidelobes, not components. Fewer than K resolvable maxima sets
/// under_resolved and returns the ones found; none at all throws.
FrequencyEstimate periodogram_peaks(const Vec& y, Index k);

struct RidgeTrack {
  Vec times;   // frame centers, sample units unless set by caller
  Mat freq;    // frames x K, cycles/sample
  Mat energy;  // frames x K
  Vec merged;  // frames; energy-centroid ridge over the whole band
};

/// Hann-windowed STFT magnitude averaged over 3 time-shifted tapers; per-frame
/// peaks with a +-2 (unpadded) bin frame-to-frame continuity constraint.
RidgeTrack stft_ridges(const Vec& y, Index window_len, Index hop, Index k);

struct CrossoverResult {
  Mat tracks;                  // relabeled, same shape as input
  std::vector<Index> switches; // sample indices where labels swap
};

/// Appendix-style pairwise relabeling: per-sample sort, crossover candidates
/// at robust local minima of the gap (below 0.25 x median, persisting >= 3
/// samples), labels swapped at each candidate in increasing time.
CrossoverResult disambiguate_crossover(const Mat& two_tracks);

/// Phase tracks (radians) by trapezoidal integration of per-sample frequency
/// tracks (cycles/s) on the given time grid; the accumulated-error baseline.
Mat integrate_frequency_tracks(const Mat& freq_cps, const Vec& times);

} // namespace nop
