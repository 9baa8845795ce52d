#include "nop/driver.hpp"

#include "nop/csv_io.hpp"
#include "nop/smoothing.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

namespace nop {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

NopConfig::NopConfig() : kernel(default_se_params()) {}

void NopConfig::validate() const {
  if (K < 1) throw std::invalid_argument("NopConfig: K must be >= 1");
  if (J < 1) throw std::invalid_argument("NopConfig: J must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("NopConfig: eps must be > 0");
  if (h != 0 && h != 1) throw std::invalid_argument("NopConfig: h must be 0 or 1");
  if (degree < 0 || degree > 2) throw std::invalid_argument("NopConfig: degree must be in {0,1,2}");
  if (!(sigma > 0.0)) throw std::invalid_argument("NopConfig: sigma must be > 0");
  if (M < 4) throw std::invalid_argument("NopConfig: need M >= 4");
  if (!(L >= 1.0)) throw std::invalid_argument("NopConfig: L must be >= 1");
  optimizer.validate();
  kernel.validate();
}

bool convergence_check(const NopState& state, const NopConfig& config) {
  return state.j < config.J && state.eps1 > config.eps && state.eps2 > config.eps &&
         std::abs(state.eps1 - state.eps0) > config.eps;
}

namespace {

PatternInducingPoints sine_points(const Vec& z, const KernelParams& p, double L, bool cosine) {
  PatternInducingPoints pts;
  pts.z = z;
  pts.alpha_u.resize(z.size());
  for (Index i = 0; i < z.size(); ++i)
    pts.alpha_u(i) = cosine ? std::cos(kTwoPi * z(i)) : std::sin(kTwoPi * z(i));
  const double norm = std::sqrt(pts.alpha_u.squaredNorm() / double(z.size()));
  pts.alpha_u /= norm;
  pts.sigma_u_diag = Vec::Ones(z.size());
  pts.L = L;
  pts.kernel = p;
  pts.validate();
  return pts;
}

} // namespace

std::vector<PatternInducingPoints> init_sine(const std::vector<Vec>& z_grids,
                                             const KernelParams& p, double L) {
  std::vector<PatternInducingPoints> out;
  out.reserve(z_grids.size());
  for (const Vec& z : z_grids) out.push_back(sine_points(z, p, L, false));
  return out;
}

std::vector<PatternInducingPoints> init_cos_sin(const std::vector<Vec>& z_grids,
                                                const KernelParams& p, double L) {
  std::vector<PatternInducingPoints> out;
  out.reserve(z_grids.size());
  for (std::size_t k = 0; k < z_grids.size(); ++k)
    out.push_back(sine_points(z_grids[k], p, L, k == 0));
  return out;
}

namespace {

Vec interpolate_frames(const Vec& frame_times, const Vec& frame_values, const Vec& sample_idx) {
  Vec out(sample_idx.size());
  for (Index i = 0; i < sample_idx.size(); ++i) {
    const double x = sample_idx(i);
    if (x <= frame_times(0)) {
      out(i) = frame_values(0);
      continue;
    }
    if (x >= frame_times(frame_times.size() - 1)) {
      out(i) = frame_values(frame_values.size() - 1);
      continue;
    }
    Index hi = 1;
    while (frame_times(hi) < x) ++hi;
    const double t0 = frame_times(hi - 1), t1 = frame_times(hi);
    const double w = (x - t0) / (t1 - t0);
    out(i) = (1.0 - w) * frame_values(hi - 1) + w * frame_values(hi);
  }
  return out;
}

/// Band-limited analytic envelope of y between f_lo and f_hi (cycles/sample).
Vec bandpass_envelope(const Vec& y, double f_lo, double f_hi) {
  const Index n = y.size();
  Eigen::FFT<double> fft;
  Eigen::VectorXcd spec(n), in(n);
  for (Index i = 0; i < n; ++i) in(i) = y(i);
  fft.fwd(spec, in);
  for (Index b = 0; b < n; ++b) {
    const double f = double(b) / double(n);
    const bool in_band = b > 0 && b < n / 2 + 1 && f >= f_lo && f <= f_hi;
    spec(b) = in_band ? 2.0 * spec(b) : 0.0;
  }
  Eigen::VectorXcd analytic(n);
  fft.inv(analytic, spec);
  Vec env(n);
  for (Index i = 0; i < n; ++i) env(i) = std::abs(analytic(i));
  return smooth_penalized(env).smoothed.cwiseMax(1e-6);
}

} // namespace

StageOneResult init_bandpass_tf(const SampledSignal& signal, Index k, const Vec& band_hints) {
  signal.validate();
  if (k < 1) throw std::invalid_argument("init_bandpass_tf: need K >= 1");
  const Index n = signal.size();
  if (n < 32) throw std::invalid_argument("init_bandpass_tf: need N >= 32");
  const double ac_power = (signal.values.array() - signal.values.mean()).square().sum();
  if (!(ac_power > 0.0))
    throw std::invalid_argument("init_bandpass_tf: degenerate spectrum (all energy at DC)");

  Index window = std::clamp<Index>(n / 4, 16, 256);
  window += window % 2;
  window = std::min(window, n);
  const Index hop = std::max<Index>(1, window / 8);
  const RidgeTrack ridge = stft_ridges(signal.values, window, hop, k);

  // Can the TF plane separate the K ridges? Compare the smallest pairwise gap
  // to the unpadded bin width.
  bool separated = k == 1;
  if (k > 1) {
    double min_gap = std::numeric_limits<double>::infinity();
    for (Index f = 0; f < ridge.freq.rows(); ++f)
      for (Index a = 0; a < k; ++a)
        for (Index b = a + 1; b < k; ++b)
          min_gap = std::min(min_gap, std::abs(ridge.freq(f, a) - ridge.freq(f, b)));
    separated = min_gap > 1.0 / double(window);
  }

  const Vec sample_idx = Vec::LinSpaced(n, 0.0, double(n - 1));
  Mat freq_cps(n, k);
  if (separated) {
    for (Index c = 0; c < k; ++c)
      freq_cps.col(c) =
          interpolate_frames(ridge.times, ridge.freq.col(c), sample_idx) * signal.sample_rate;
  } else {
    const Vec base = interpolate_frames(ridge.times, ridge.merged, sample_idx) * signal.sample_rate;
    const double delta = 0.02 * base.mean();
    for (Index c = 0; c < k; ++c) {
      const double offset = (double(c + 1) - 0.5 * double(k + 1)) * delta * 2.0;
      freq_cps.col(c) = base.array() + offset;
    }
  }
  if (band_hints.size() == k)
    for (Index c = 0; c < k; ++c) freq_cps.col(c).setConstant(band_hints(c));

  StageOneResult init;
  init.phi = integrate_frequency_tracks(freq_cps, signal.times);
  init.amp.resize(n, k);
  for (Index c = 0; c < k; ++c) {
    const double f_lo = freq_cps.col(c).minCoeff() / signal.sample_rate - 1.0 / double(window);
    const double f_hi = freq_cps.col(c).maxCoeff() / signal.sample_rate + 1.0 / double(window);
    Vec env = bandpass_envelope(signal.values, std::max(f_lo, 1e-6), std::min(f_hi, 0.5));
    if (!separated) env /= double(k);
    // Shape waveforms are unit-L2, so the model amplitude is envelope / sqrt(2).
    init.amp.col(c) = env / std::numbers::sqrt2;
  }
  init.phi_var = Mat::Zero(n, k);
  init.amp_var = Mat::Zero(n, k);
  init.validate();
  return init;
}

StageOneResult init_periodogram(const SampledSignal& signal, Index k) {
  signal.validate();
  const Index n = signal.size();
  const FrequencyEstimate est = periodogram_peaks(signal.values, k);

  // A pair at an integer frequency ratio is one shaped source, not two
  // components; fall through to the merged-peak path.
  bool harmonic_pair = false;
  if (k == 2 && est.frequencies.size() == 2) {
    const double ratio = est.frequencies(1) / est.frequencies(0);
    const double nearest = std::round(ratio);
    harmonic_pair = nearest >= 2.0 && std::abs(ratio - nearest) < 0.02 * nearest;
  }

  Vec freqs_cps(k);
  Vec amps(k);
  if (!est.under_resolved && !harmonic_pair && est.frequencies.size() == k) {
    freqs_cps = est.frequencies * signal.sample_rate;
    // Peak amplitude over sqrt(2): shape waveforms carry unit L2 norm.
    amps = est.amplitudes / std::numbers::sqrt2;
  } else {
    // Merged peak: symmetry-breaking +-2% offsets around the strongest one.
    Index strongest = 0;
    est.amplitudes.maxCoeff(&strongest);
    const double base = est.frequencies(strongest) * signal.sample_rate;
    const double amp = est.amplitudes(strongest) / (std::numbers::sqrt2 * double(k));
    for (Index c = 0; c < k; ++c) {
      const double offset = (double(c + 1) - 0.5 * double(k + 1)) * 0.02 * base * 2.0;
      freqs_cps(c) = base + offset;
      amps(c) = amp;
    }
  }

  StageOneResult init;
  init.phi.resize(n, k);
  init.amp.resize(n, k);
  for (Index c = 0; c < k; ++c) {
    init.phi.col(c) = kTwoPi * freqs_cps(c) * (signal.times.array() - signal.times(0));
    init.amp.col(c).setConstant(std::max(amps(c), 1e-6));
  }
  init.phi_var = Mat::Zero(n, k);
  init.amp_var = Mat::Zero(n, k);
  init.validate();
  return init;
}

double gauge_fix_shape(ComponentEstimate& shape) {
  PatternInducingPoints& pts = shape.points;
  const Index m = pts.size();

  // Periodize across period copies when the grid is commensurate with the
  // unit period.
  const Index per = Index(std::lround(double(m) / pts.L));
  if (per > 0 && per < m && std::abs(pts.z(per) - pts.z(0) - 1.0) < 1e-9) {
    Mat P = Mat::Zero(m, m);
    for (Index j = 0; j < m; ++j) {
      // Collect all copies of the same within-period location.
      const Index base = j % per;
      double wsum = 0.0;
      for (Index c = base; c < m; c += per) wsum += 1.0 / (pts.sigma_u_diag(c) + 1e-12);
      for (Index c = base; c < m; c += per)
        P(j, c) = (1.0 / (pts.sigma_u_diag(c) + 1e-12)) / wsum;
    }
    pts.alpha_u = P * pts.alpha_u;
    shape.Sigma_u = P * shape.Sigma_u * P.transpose();
    pts.sigma_u_diag = shape.Sigma_u.diagonal().cwiseMax(0.0);
  }

  const double mean = pts.alpha_u.mean();
  pts.alpha_u.array() -= mean;

  const double norm = std::sqrt(pts.alpha_u.squaredNorm() / double(m));
  if (norm < 1e-8) return 1.0;
  pts.alpha_u /= norm;
  shape.Sigma_u /= norm * norm;
  pts.sigma_u_diag /= norm * norm;
  return norm;
}

namespace {

double model_residual(const SampledSignal& signal, const StageOneResult& tracks,
                      const std::vector<ComponentEstimate>& shapes) {
  Vec model = Vec::Zero(signal.size());
  for (Index k = 0; k < tracks.components(); ++k) {
    const auto& pts = shapes[std::size_t(k)].points;
    const NystromOperator op = make_nystrom_operator(pts.z, pts.alpha_u, pts.kernel);
    const Vec folded = fold_phase_cycles(tracks.phi.col(k), pts.L);
    model += tracks.amp.col(k).cwiseProduct(op.mean(folded));
  }
  return (signal.values - model).squaredNorm();
}

void stage_two_update(const SampledSignal& signal, NopState& state, const NopConfig& config) {
  const Index k_count = config.K;
  std::vector<PatternInducingPoints> current;
  current.reserve(std::size_t(k_count));
  for (const auto& s : state.shapes) current.push_back(s.points);
  const std::vector<PosteriorResult> posts = amplitude_weighted_posterior(
      signal.values, state.tracks.phi, state.tracks.amp, current, config.sigma);
  for (Index k = 0; k < k_count; ++k) {
    auto& shape = state.shapes[std::size_t(k)];
    shape.points.alpha_u = posts[std::size_t(k)].alpha_u;
    shape.Sigma_u = posts[std::size_t(k)].Sigma_u;
    shape.points.sigma_u_diag = shape.Sigma_u.diagonal().cwiseMax(0.0);
    const double scale = gauge_fix_shape(shape);
    state.tracks.amp.col(k) *= scale;
  }
}

void stage_one_update(const SampledSignal& signal, NopState& state, const NopConfig& config,
                      bool first_iteration) {
  StageOneConfig cfg;
  cfg.degree = config.degree;
  cfg.patches = config.patches;
  cfg.optimizer = config.optimizer;
  if (!first_iteration) cfg.optimizer.restarts = std::max(1, config.warm_restarts);
  cfg.optimizer.seed = config.seed + std::uint64_t(state.j) * 0x9e3779b9ull;
  std::vector<PatternInducingPoints> current;
  for (const auto& s : state.shapes) current.push_back(s.points);
  state.tracks = run_stage_one(signal, state.tracks.phi, state.tracks.amp, current, cfg);
}

double rms(const Mat& a) { return std::sqrt(a.squaredNorm() / double(a.size())); }

} // namespace

NopResult run_nop(const SampledSignal& signal, const NopConfig& config, const NopInit& init) {
  config.validate();
  signal.validate();
  const Index n = signal.size();
  if (init.phi0.rows() != n || init.phi0.cols() != config.K || init.amp0.rows() != n ||
      init.amp0.cols() != config.K)
    throw std::invalid_argument("run_nop: init tracks must be N x K");

  NopState state;
  state.tracks.phi = init.phi0;
  state.tracks.amp = init.amp0;
  state.tracks.phi_var = Mat::Zero(n, config.K);
  state.tracks.amp_var = Mat::Zero(n, config.K);

  std::vector<PatternInducingPoints> inducing = init.inducing;
  if (inducing.empty()) {
    std::vector<Vec> grids;
    for (Index k = 0; k < config.K; ++k)
      grids.push_back(make_uniform_inducing(config.M, config.L, config.kernel).z);
    inducing = init_sine(grids, config.kernel, config.L);
  }
  if (Index(inducing.size()) != config.K)
    throw std::invalid_argument("run_nop: inducing count must equal K");
  state.shapes.clear();
  for (auto& pts : inducing) {
    ComponentEstimate ce;
    ce.points = pts;
    ce.Sigma_u = Mat(pts.sigma_u_diag.asDiagonal());
    state.shapes.push_back(std::move(ce));
  }

  NopResult out;
  while (convergence_check(state, config)) {
    const Mat prev_phi = state.tracks.phi;
    const Mat prev_amp = state.tracks.amp;
    IterationDiag diag;
    diag.j = state.j + 1;

    if (config.h == 1) {
      stage_one_update(signal, state, config, state.j == 0);
      diag.stage1_residual = model_residual(signal, state.tracks, state.shapes);
      stage_two_update(signal, state, config);
      diag.stage2_residual = model_residual(signal, state.tracks, state.shapes);
    } else {
      stage_two_update(signal, state, config);
      diag.stage2_residual = model_residual(signal, state.tracks, state.shapes);
      stage_one_update(signal, state, config, state.j == 0);
      diag.stage1_residual = model_residual(signal, state.tracks, state.shapes);
    }

    state.eps0 = state.eps1;
    state.eps1 = rms(state.tracks.phi - prev_phi);
    state.eps2 = rms(state.tracks.amp - prev_amp);
    state.j += 1;
    diag.eps1 = state.eps1;
    diag.eps2 = state.eps2;
    state.history.push_back(diag);

    if (state.j == 1 && state.eps2 <= config.eps && state.eps1 > config.eps)
      out.warning = "stopping on eps2 alone at iteration 1 (near-constant amplitudes)";
  }

  out.tracks = std::move(state.tracks);
  out.shapes = std::move(state.shapes);
  out.iterations_used = state.j;
  out.history = std::move(state.history);
  out.converged = state.j > 0 && (state.eps1 <= config.eps || state.eps2 <= config.eps ||
                                  std::abs(state.eps1 - state.eps0) <= config.eps);
  return out;
}

void write_result_bundle(const std::string& dir, const SampledSignal& signal,
                         const NopResult& result) {
  std::filesystem::create_directories(dir);
  const Index n = result.tracks.samples(), k_count = result.tracks.components();

  CsvTable tracks;
  tracks.columns = {"t"};
  for (Index k = 0; k < k_count; ++k) {
    const std::string s = std::to_string(k + 1);
    tracks.columns.push_back("phi_" + s);
    tracks.columns.push_back("amp_" + s);
    tracks.columns.push_back("phi_var_" + s);
    tracks.columns.push_back("amp_var_" + s);
  }
  tracks.data.resize(n, 1 + 4 * k_count);
  tracks.data.col(0) = signal.times;
  for (Index k = 0; k < k_count; ++k) {
    tracks.data.col(1 + 4 * k) = result.tracks.phi.col(k);
    tracks.data.col(2 + 4 * k) = result.tracks.amp.col(k);
    tracks.data.col(3 + 4 * k) = result.tracks.phi_var.col(k);
    tracks.data.col(4 + 4 * k) = result.tracks.amp_var.col(k);
  }
  write_csv(dir + "/tracks.csv", tracks);

  for (Index k = 0; k < k_count; ++k)
    write_inducing_csv(dir + "/shape_" + std::to_string(k + 1) + ".csv",
                       result.shapes[std::size_t(k)].points);

  CsvTable diag;
  diag.columns = {"j", "eps1", "eps2", "stage1_residual", "stage2_residual"};
  diag.data.resize(Index(result.history.size()), 5);
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const auto& h = result.history[i];
    diag.data(Index(i), 0) = double(h.j);
    diag.data(Index(i), 1) = h.eps1;
    diag.data(Index(i), 2) = h.eps2;
    diag.data(Index(i), 3) = h.stage1_residual;
    diag.data(Index(i), 4) = h.stage2_residual;
  }
  write_csv(dir + "/diagnostics.csv", diag);
}

NopResult read_result_bundle(const std::string& dir, const NopConfig& config,
                             SampledSignal* signal_out) {
  const CsvTable tracks = read_csv(dir + "/tracks.csv");
  const Index n = tracks.data.rows();
  if (n < 2) throw std::runtime_error("read_result_bundle: tracks.csv too short");
  const Index k_count = Index(tracks.columns.size() - 1) / 4;
  if (Index(tracks.columns.size()) != 1 + 4 * k_count)
    throw std::runtime_error("read_result_bundle: unexpected tracks.csv header");

  NopResult result;
  result.tracks.phi.resize(n, k_count);
  result.tracks.amp.resize(n, k_count);
  result.tracks.phi_var.resize(n, k_count);
  result.tracks.amp_var.resize(n, k_count);
  for (Index k = 0; k < k_count; ++k) {
    result.tracks.phi.col(k) = tracks.data.col(1 + 4 * k);
    result.tracks.amp.col(k) = tracks.data.col(2 + 4 * k);
    result.tracks.phi_var.col(k) = tracks.data.col(3 + 4 * k);
    result.tracks.amp_var.col(k) = tracks.data.col(4 + 4 * k);
  }
  for (Index k = 0; k < k_count; ++k) {
    ComponentEstimate ce;
    ce.points = read_inducing_csv(dir + "/shape_" + std::to_string(k + 1) + ".csv",
                                  config.kernel, config.L);
    ce.Sigma_u = Mat(ce.points.sigma_u_diag.asDiagonal());
    result.shapes.push_back(std::move(ce));
  }
  const std::string diag_path = dir + "/diagnostics.csv";
  if (std::filesystem::exists(diag_path)) {
    const CsvTable diag = read_csv(diag_path);
    if (diag.columns.size() != 5)
      throw std::runtime_error("read_result_bundle: unexpected diagnostics.csv header");
    for (Index i = 0; i < diag.data.rows(); ++i) {
      IterationDiag h;
      h.j = int(diag.data(i, 0));
      h.eps1 = diag.data(i, 1);
      h.eps2 = diag.data(i, 2);
      h.stage1_residual = diag.data(i, 3);
      h.stage2_residual = diag.data(i, 4);
      result.history.push_back(h);
    }
    result.iterations_used = int(result.history.size());
  }

  if (signal_out) {
    signal_out->times = tracks.data.col(0);
    signal_out->values = Vec::Zero(n);
    Vec dt = signal_out->times.tail(n - 1) - signal_out->times.head(n - 1);
    signal_out->sample_rate = 1.0 / dt.mean();
  }
  return result;
}

Mat frequency_tracks(const StageOneResult& tracks, const Vec& times) {
  const Index n = tracks.samples(), k_count = tracks.components();
  Mat freq(n, k_count);
  for (Index k = 0; k < k_count; ++k) {
    for (Index i = 0; i < n; ++i) {
      const Index lo = std::max<Index>(0, i - 1), hi = std::min<Index>(n - 1, i + 1);
      freq(i, k) = (tracks.phi(hi, k) - tracks.phi(lo, k)) /
                   ((times(hi) - times(lo)) * kTwoPi);
    }
  }
  return freq;
}

Vec mean_frequencies(const StageOneResult& tracks, const Vec& times) {
  const Index n = tracks.samples();
  Vec out(tracks.components());
  const Vec t_centered = (times.array() - times.mean()).matrix();
  const double denom = t_centered.squaredNorm();
  for (Index k = 0; k < tracks.components(); ++k)
    out(k) = t_centered.dot(tracks.phi.col(k)) / (denom * kTwoPi);
  return out;
}

} // namespace nop
