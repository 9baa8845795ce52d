#include "nop/baselines.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace nop {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;

Mat fb_autocorrelation(const Vec& y, Index m) {
  const Index n = y.size();
  const Index rows = n - m + 1;
  if (rows < 1) throw std::invalid_argument("subspace estimator: subarray exceeds data length");
  Mat X(rows, m);
  for (Index i = 0; i < rows; ++i) X.row(i) = y.segment(i, m).transpose();
  Mat R = X.transpose() * X / double(rows);
  Mat J = Mat::Zero(m, m);
  for (Index i = 0; i < m; ++i) J(i, m - 1 - i) = 1.0;
  R = 0.5 * (R + J * R.transpose() * J);
  return 0.5 * (R + R.transpose());
}

/// Trig polynomial D(f) = d0 + 2 sum_{t>0} d_t cos(2 pi f t) and derivatives.
struct TrigPoly {
  Vec d; // d_0..d_{m-1}

  double value(double f) const {
    double acc = d(0);
    for (Index t = 1; t < d.size(); ++t) acc += 2.0 * d(t) * std::cos(kTwoPi * f * double(t));
    return acc;
  }
  double deriv(double f) const {
    double acc = 0.0;
    for (Index t = 1; t < d.size(); ++t)
      acc -= 2.0 * d(t) * kTwoPi * double(t) * std::sin(kTwoPi * f * double(t));
    return acc;
  }
  double deriv2(double f) const {
    double acc = 0.0;
    for (Index t = 1; t < d.size(); ++t)
      acc -= 2.0 * d(t) * kTwoPi * kTwoPi * double(t) * double(t) * std::cos(kTwoPi * f * double(t));
    return acc;
  }
};

/// Diagonal sums of Q: D(f) = a(f)^H Q a(f) for the length-m steering vector.
TrigPoly diagonal_sums(const Mat& Q) {
  const Index m = Q.rows();
  TrigPoly p;
  p.d = Vec::Zero(m);
  for (Index t = 0; t < m; ++t) {
    double s = 0.0;
    for (Index i = 0; i + t < m; ++i) s += Q(i, i + t);
    p.d(t) = s;
  }
  return p;
}

Vec evaluate_on_grid(const TrigPoly& p, Index grid_size) {
  // Real part of the length-G inverse DFT of the padded diagonal sums.
  Eigen::FFT<double> fft;
  CVec padded = CVec::Zero(grid_size);
  padded(0) = p.d(0);
  for (Index t = 1; t < p.d.size(); ++t) {
    padded(t) = p.d(t);
    padded(grid_size - t) = p.d(t);
  }
  CVec spec(grid_size);
  fft.fwd(spec, padded);
  Vec out(grid_size);
  for (Index i = 0; i < grid_size; ++i) out(i) = spec(i).real();
  return out;
}

std::vector<Index> pick_peaks(const Vec& height, Index k, Index min_separation) {
  std::vector<Index> order(std::size_t(height.size()));
  for (Index i = 0; i < height.size(); ++i) order[std::size_t(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return height(a) > height(b); });
  std::vector<Index> picked;
  for (Index idx : order) {
    if (Index(picked.size()) == k) break;
    const bool is_max = (idx == 0 || height(idx) >= height(idx - 1)) &&
                        (idx == height.size() - 1 || height(idx) >= height(idx + 1));
    if (!is_max) continue;
    bool clash = false;
    for (Index p : picked)
      if (std::abs(p - idx) < min_separation) { clash = true; break; }
    if (!clash) picked.push_back(idx);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

double parabolic_refine(double fm1, double f0, double fp1) {
  const double denom = fm1 - 2.0 * f0 + fp1;
  if (std::abs(denom) < 1e-300) return 0.0;
  double delta = 0.5 * (fm1 - fp1) / denom;
  return std::clamp(delta, -0.5, 0.5);
}

} // namespace

FrequencyEstimate music(const Vec& y, Index k, Index grid_size, Index subarray, bool refine) {
  const Index n = y.size();
  if (k < 0) throw std::invalid_argument("music: negative K");
  FrequencyEstimate est;
  est.method = "music";
  if (k == 0) {
    est.frequencies = Vec();
    return est;
  }
  const Index m = subarray > 0 ? subarray : n / 2;
  if (m >= n) throw std::invalid_argument("music: subarray must be < N");
  if (2 * k >= m)
    throw std::invalid_argument("music: subarray too small, need 2K < subarray "
                                "(real sinusoids occupy 2K signal-space dimensions)");

  const Mat R = fb_autocorrelation(y, m);
  Eigen::SelfAdjointEigenSolver<Mat> eig(R);
  if (eig.info() != Eigen::Success) throw std::runtime_error("music: eigendecomposition failed");
  // Noise subspace: all but the 2K leading eigenvectors (ascending order).
  const Mat En = eig.eigenvectors().leftCols(m - 2 * k);
  const TrigPoly denom = diagonal_sums(En * En.transpose());
  const Vec d_grid = evaluate_on_grid(denom, grid_size);

  // Pseudospectrum peak = denominator minimum over (0, 0.5).
  const Index half = grid_size / 2;
  Vec height(half - 1);
  for (Index i = 1; i < half; ++i) height(i - 1) = -d_grid(i);
  const std::vector<Index> peaks = pick_peaks(height, k, 4);
  if (Index(peaks.size()) < k)
    throw std::runtime_error("music: found " + std::to_string(peaks.size()) +
                             " peaks, expected " + std::to_string(k));

  est.frequencies.resize(k);
  for (Index j = 0; j < k; ++j) {
    const Index bin = peaks[std::size_t(j)] + 1;
    double f = double(bin) / double(grid_size);
    if (refine) {
      const double step = 1.0 / double(grid_size);
      double delta = 0.0;
      if (bin > 0 && bin + 1 < half + 1)
        delta = parabolic_refine(-d_grid(bin - 1), -d_grid(bin), -d_grid(bin + 1));
      f += delta * step;
      for (int it = 0; it < 8; ++it) {
        const double d1 = denom.deriv(f), d2 = denom.deriv2(f);
        if (!(d2 > 0.0)) break;
        const double move = d1 / d2;
        f -= std::clamp(move, -step, step);
        if (std::abs(move) < 1e-15) break;
      }
    }
    est.frequencies(j) = f;
  }
  std::sort(est.frequencies.data(), est.frequencies.data() + k);
  return est;
}

FrequencyEstimate esprit(const Vec& y, Index k, Index subarray) {
  const Index n = y.size();
  FrequencyEstimate est;
  est.method = "esprit";
  if (k == 0) {
    est.frequencies = Vec();
    return est;
  }
  const Index m = subarray > 0 ? subarray : n / 2;
  if (m >= n) throw std::invalid_argument("esprit: subarray must be < N");
  if (2 * k >= m) throw std::invalid_argument("esprit: subarray too small, need 2K < subarray");

  const Mat R = fb_autocorrelation(y, m);
  Eigen::SelfAdjointEigenSolver<Mat> eig(R);
  if (eig.info() != Eigen::Success) throw std::runtime_error("esprit: eigendecomposition failed");
  const Mat Es = eig.eigenvectors().rightCols(2 * k);
  const Mat up = Es.topRows(m - 1);
  const Mat dn = Es.bottomRows(m - 1);
  const Eigen::ColPivHouseholderQR<Mat> qr(up);
  if (qr.rank() < 2 * k) throw std::runtime_error("esprit: rank-deficient signal subspace");
  const Mat psi = qr.solve(dn);

  const Eigen::EigenSolver<Mat> ev(psi);
  if (ev.info() != Eigen::Success) throw std::runtime_error("esprit: eigenvalue solve failed");
  std::vector<double> freqs;
  for (Index i = 0; i < 2 * k; ++i) {
    const double f = std::abs(std::arg(ev.eigenvalues()(i))) / kTwoPi;
    freqs.push_back(f);
  }
  // Conjugate pairs collapse: sort and keep every second entry's mean.
  std::sort(freqs.begin(), freqs.end());
  est.frequencies.resize(k);
  for (Index j = 0; j < k; ++j)
    est.frequencies(j) = 0.5 * (freqs[std::size_t(2 * j)] + freqs[std::size_t(2 * j + 1)]);
  std::sort(est.frequencies.data(), est.frequencies.data() + k);
  return est;
}

BurgResult burg_me(const Vec& y, Index order, Index grid_size, Index k) {
  const Index n = y.size();
  if (n < 2) throw std::invalid_argument("burg_me: need at least two samples");
  const Index p = order >= 0 ? order : n / 3;
  if (p >= n) throw std::invalid_argument("burg_me: order must be < N (numerical stability)");

  BurgResult out;
  double energy = y.squaredNorm() / double(n);
  Vec a = Vec::Zero(p + 1);
  a(0) = 1.0;
  Vec f = y, b = y;
  for (Index m = 1; m <= p; ++m) {
    const Index len = n - m;
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < len; ++i) {
      num += f(i + 1) * b(i);
      den += f(i + 1) * f(i + 1) + b(i) * b(i);
    }
    const double kappa = den > 0.0 ? -2.0 * num / den : 0.0;
    Vec a_new = a;
    for (Index j = 1; j <= m; ++j) a_new(j) = a(j) + kappa * a(m - j);
    a = a_new;
    Vec f_new(len), b_new(len);
    for (Index i = 0; i < len; ++i) {
      f_new(i) = f(i + 1) + kappa * b(i);
      b_new(i) = b(i) + kappa * f(i + 1);
    }
    f = f_new;
    b = b_new;
    energy *= 1.0 - kappa * kappa;
  }
  out.ar_coeffs = a.tail(p);
  out.noise_var = energy;

  Eigen::FFT<double> fft;
  CVec padded = CVec::Zero(grid_size);
  for (Index j = 0; j <= p; ++j) padded(j) = a(j);
  CVec spec(grid_size);
  fft.fwd(spec, padded);
  const Index half = grid_size / 2;
  out.spectrum.freq.resize(half);
  out.spectrum.power.resize(half);
  for (Index i = 0; i < half; ++i) {
    out.spectrum.freq(i) = double(i) / double(grid_size);
    const double mag2 = std::norm(spec(i));
    out.spectrum.power(i) = energy / std::max(mag2, 1e-300);
  }

  out.peaks.method = "me";
  if (p == 0) {
    // AR(0) has no oscillatory poles; the flat spectrum carries no peaks.
    out.peaks.under_resolved = k > 0;
  } else if (k > 0) {
    Vec height = out.spectrum.power.segment(1, half - 1).array().log();
    const std::vector<Index> peaks = pick_peaks(height, k, 4);
    out.peaks.under_resolved = Index(peaks.size()) < k;
    out.peaks.frequencies.resize(Index(peaks.size()));
    for (std::size_t j = 0; j < peaks.size(); ++j) {
      const Index bin = peaks[j] + 1;
      double delta = 0.0;
      if (bin >= 2 && bin + 1 < half)
        delta = parabolic_refine(height(bin - 2), height(bin - 1), height(bin));
      out.peaks.frequencies(Index(j)) = (double(bin) + delta) / double(grid_size);
    }
    std::sort(out.peaks.frequencies.data(),
              out.peaks.frequencies.data() + out.peaks.frequencies.size());
  }
  return out;
}

FrequencyEstimate periodogram_peaks(const Vec& y, Index k) {
  const Index n = y.size();
  if (n < 4) throw std::invalid_argument("periodogram_peaks: need N >= 4");
  if (k < 1) throw std::invalid_argument("periodogram_peaks: need K >= 1");
  const Index padded_n = 8 * n;
  Eigen::FFT<double> fft;
  CVec padded = CVec::Zero(padded_n);
  const double mean = y.mean();
  for (Index i = 0; i < n; ++i) padded(i) = y(i) - mean;
  CVec spec(padded_n);
  fft.fwd(spec, padded);
  const Index half = padded_n / 2;
  Vec power(half - 1);
  for (Index i = 1; i < half; ++i) power(i - 1) = std::norm(spec(i));

  // Peaks must be separated by at least one signal bin (8 padded bins).
  std::vector<Index> peaks = pick_peaks(power, k, 8);
  if (peaks.empty()) throw std::runtime_error("periodogram_peaks: no local maxima found");

  // Rectangular-window sidelobes sit at -13 dB (4.7% power); anything below
  // 10% of the top peak is leakage, not a component.
  double top = 0.0;
  for (Index idx : peaks) top = std::max(top, power(idx));
  std::erase_if(peaks, [&](Index idx) { return power(idx) < 0.1 * top; });

  FrequencyEstimate est;
  est.method = "fft";
  est.under_resolved = Index(peaks.size()) < k;
  est.frequencies.resize(Index(peaks.size()));
  est.amplitudes.resize(Index(peaks.size()));
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    const Index bin = peaks[j] + 1;
    double delta = 0.0;
    if (bin >= 2 && bin + 1 < half)
      delta = parabolic_refine(std::log(power(bin - 2) + 1e-300),
                               std::log(power(bin - 1) + 1e-300),
                               std::log(power(bin) + 1e-300));
    est.frequencies(Index(j)) = (double(bin) + delta) / double(padded_n);
    est.amplitudes(Index(j)) = 2.0 * std::sqrt(power(bin - 1)) / double(n);
  }
  std::vector<Index> order(peaks.size());
  for (std::size_t j = 0; j < peaks.size(); ++j) order[j] = Index(j);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return est.frequencies(a) < est.frequencies(b);
  });
  Vec fs(est.frequencies.size()), as(est.amplitudes.size());
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    fs(Index(j)) = est.frequencies(order[j]);
    as(Index(j)) = est.amplitudes(order[j]);
  }
  est.frequencies = fs;
  est.amplitudes = as;
  return est;
}

RidgeTrack stft_ridges(const Vec& y, Index window_len, Index hop, Index k) {
  const Index n = y.size();
  if (window_len > n) throw std::invalid_argument("stft_ridges: window longer than record");
  if (window_len < 8) throw std::invalid_argument("stft_ridges: window too short");
  if (hop < 1) throw std::invalid_argument("stft_ridges: hop must be >= 1");
  if (k < 1) throw std::invalid_argument("stft_ridges: need K >= 1");

  const Index pad = 8;
  const Index nfft = pad * window_len;
  const Index half = nfft / 2;
  Vec window(window_len);
  for (Index i = 0; i < window_len; ++i)
    window(i) = 0.5 - 0.5 * std::cos(kTwoPi * double(i) / double(window_len - 1));
  const Index shift = std::max<Index>(1, window_len / 8);
  const std::vector<Index> taper_offsets = {0, -shift, shift};

  std::vector<Index> starts;
  for (Index s = 0;; s += hop) {
    if (s + window_len > n) s = n - window_len;
    starts.push_back(s);
    if (s + window_len >= n) break;
  }
  const Index frames = Index(starts.size());

  Eigen::FFT<double> fft;
  Mat mag = Mat::Zero(frames, half);
  for (Index f = 0; f < frames; ++f) {
    for (Index tap : taper_offsets) {
      CVec padded = CVec::Zero(nfft);
      for (Index i = 0; i < window_len; ++i) {
        const Index src = std::clamp<Index>(starts[std::size_t(f)] + tap + i, 0, n - 1);
        padded(i) = y(src) * window(i);
      }
      CVec spec(nfft);
      fft.fwd(spec, padded);
      for (Index b = 0; b < half; ++b) mag(f, b) += std::norm(spec(b));
    }
  }

  RidgeTrack out;
  out.times.resize(frames);
  out.freq.resize(frames, k);
  out.energy.resize(frames, k);
  out.merged.resize(frames);
  const Index continuity = 2 * pad; // +-2 unpadded bins

  std::vector<Index> prev_bins(std::size_t(k), -1);
  for (Index f = 0; f < frames; ++f) {
    out.times(f) = double(starts[std::size_t(f)]) + 0.5 * double(window_len - 1);

    // Energy centroid over the whole band (merged ridge), DC excluded.
    double num = 0.0, den = 0.0;
    for (Index b = 1; b < half; ++b) {
      num += double(b) * mag(f, b);
      den += mag(f, b);
    }
    out.merged(f) = den > 0.0 ? num / den / double(nfft) : out.merged(std::max<Index>(0, f - 1));

    Vec row = mag.row(f).transpose();
    row(0) = 0.0;
    if (f == 0 || den <= 0.0) {
      std::vector<Index> peaks = pick_peaks(row, k, continuity);
      // Fall back to strongest bins when distinct maxima are missing.
      while (Index(peaks.size()) < k)
        peaks.push_back(peaks.empty() ? half / 4 : peaks.back());
      std::sort(peaks.begin(), peaks.end());
      for (Index c = 0; c < k; ++c) prev_bins[std::size_t(c)] = peaks[std::size_t(c)];
    } else {
      // Strongest ridge tracks the raw argmax; later ridges may only take an
      // unclaimed local maximum. Without that split the searches collapse onto
      // one blob at a crossover and never re-acquire the separating branches;
      // when the window really holds a single blob the ridges coincide, which
      // is what lets the relabeling step see the gap dip to zero.
      std::vector<Index> order(static_cast<std::size_t>(k));
      std::iota(order.begin(), order.end(), Index(0));
      std::sort(order.begin(), order.end(),
                [&](Index a, Index b) { return out.energy(f - 1, a) > out.energy(f - 1, b); });
      std::vector<Index> claimed;
      for (Index c : order) {
        const Index center = prev_bins[std::size_t(c)];
        const Index lo = std::max<Index>(1, center - continuity);
        const Index hi = std::min<Index>(half - 1, center + continuity);
        Index best = -1;
        if (claimed.empty()) {
          best = lo;
          for (Index b = lo; b <= hi; ++b)
            if (row(b) > row(best)) best = b;
        } else {
          for (Index b = lo; b <= std::min<Index>(hi, half - 2); ++b) {
            if (row(b) < row(b - 1) || row(b) < row(b + 1)) continue;
            if (std::find(claimed.begin(), claimed.end(), b) != claimed.end()) continue;
            if (best < 0 || row(b) > row(best)) best = b;
          }
          if (best < 0) {
            best = claimed.front();
            for (Index cb : claimed)
              if (std::abs(cb - center) < std::abs(best - center)) best = cb;
          }
        }
        prev_bins[std::size_t(c)] = best;
        claimed.push_back(best);
      }
    }
    for (Index c = 0; c < k; ++c) {
      const Index bin = prev_bins[std::size_t(c)];
      double delta = 0.0;
      if (bin >= 1 && bin + 1 < half)
        delta = parabolic_refine(std::log(row(bin - 1) + 1e-300), std::log(row(bin) + 1e-300),
                                 std::log(row(bin + 1) + 1e-300));
      out.freq(f, c) = (double(bin) + delta) / double(nfft);
      out.energy(f, c) = row(bin);
    }
  }
  return out;
}

CrossoverResult disambiguate_crossover(const Mat& two_tracks) {
  if (two_tracks.cols() != 2)
    throw std::invalid_argument("disambiguate_crossover: pairwise only");
  const Index n = two_tracks.rows();
  CrossoverResult out;
  out.tracks.resize(n, 2);

  Vec low(n), high(n), gap(n);
  for (Index i = 0; i < n; ++i) {
    low(i) = std::min(two_tracks(i, 0), two_tracks(i, 1));
    high(i) = std::max(two_tracks(i, 0), two_tracks(i, 1));
    gap(i) = high(i) - low(i);
  }

  std::vector<double> sorted(gap.data(), gap.data() + n);
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double threshold = 0.25 * sorted[std::size_t(n / 2)];

  // Runs of sub-threshold gap persisting >= 3 samples; one switch per run at
  // its argmin.
  std::vector<Index> candidates;
  Index run_start = -1;
  for (Index i = 0; i <= n; ++i) {
    const bool below = i < n && gap(i) < threshold;
    if (below && run_start < 0) run_start = i;
    if (!below && run_start >= 0) {
      const Index run_len = i - run_start;
      if (run_len >= 3) {
        Index arg = run_start;
        for (Index j = run_start; j < i; ++j)
          if (gap(j) < gap(arg)) arg = j;
        candidates.push_back(arg);
      }
      run_start = -1;
    }
  }

  out.switches = candidates;
  std::size_t next_switch = 0;
  bool swapped = false;
  for (Index i = 0; i < n; ++i) {
    if (next_switch < candidates.size() && i >= candidates[next_switch]) {
      swapped = !swapped;
      ++next_switch;
    }
    out.tracks(i, 0) = swapped ? high(i) : low(i);
    out.tracks(i, 1) = swapped ? low(i) : high(i);
  }
  return out;
}

Mat integrate_frequency_tracks(const Mat& freq_cps, const Vec& times) {
  if (freq_cps.rows() != times.size())
    throw std::invalid_argument("integrate_frequency_tracks: size mismatch");
  Mat phi(freq_cps.rows(), freq_cps.cols());
  phi.row(0).setZero();
  for (Index i = 1; i < times.size(); ++i) {
    const double dt = times(i) - times(i - 1);
    phi.row(i) = phi.row(i - 1) +
                 kTwoPi * 0.5 * dt * (freq_cps.row(i) + freq_cps.row(i - 1));
  }
  return phi;
}

} // namespace nop
