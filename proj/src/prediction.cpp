#include "nop/prediction.hpp"

#include "nop/kernels.hpp"
#include "nop/stage_two.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>
#include <stdexcept>

namespace nop {

namespace {

double median_spacing(const Vec& t) {
  if (t.size() < 2) return 1.0;
  std::vector<double> gaps(static_cast<std::size_t>(t.size() - 1));
  for (Index i = 0; i + 1 < t.size(); ++i) gaps[static_cast<std::size_t>(i)] = t(i + 1) - t(i);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                   gaps.end());
  return gaps[gaps.size() / 2];
}

PredictiveGaussian track_posterior(const Vec& t0, const Vec& t, const Vec& track,
                                   double alpha_time) {
  const double mean_level = track.mean();
  const Vec centered = track.array() - mean_level;
  double beta = centered.squaredNorm() / static_cast<double>(std::max<Index>(track.size(), 1));
  if (beta < 1e-12) beta = 1e-12;

  KernelParams kp;
  kp.kind = KernelKind::se;
  kp.beta = beta;
  kp.alpha = Vec::Constant(1, alpha_time);
  kp.jitter = 0.0;

  const double noise = 1e-6 * beta;
  Mat knn = assemble_cov(t, t, kp, true);
  knn.diagonal().array() += noise;
  Eigen::LLT<Mat> llt(knn);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("track posterior: covariance factorization failed");

  const Mat kdn = assemble_cov(t0, t, kp, false);
  const Vec w = llt.solve(centered);

  PredictiveGaussian out;
  out.mean = (kdn * w).array() + mean_level;
  const Mat kdd = assemble_cov(t0, t0, kp, true);
  const Mat v = llt.matrixL().solve(kdn.transpose());
  out.covariance = kdd - v.transpose() * v;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

Vec sample_gaussian(const PredictiveGaussian& g, std::mt19937_64& rng) {
  const Index d = g.mean.size();
  Mat c = g.covariance;
  const double scale = std::max(c.diagonal().maxCoeff(), 1e-300);
  double jit = 1e-10 * scale;
  Eigen::LLT<Mat> llt;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Mat cj = c;
    cj.diagonal().array() += jit;
    llt.compute(cj);
    if (llt.info() == Eigen::Success) {
      std::normal_distribution<double> gauss;
      Vec z(d);
      for (Index i = 0; i < d; ++i) z(i) = gauss(rng);
      return g.mean + Mat(llt.matrixL()) * z;
    }
    jit *= 10.0;
  }
  throw std::runtime_error("sample: covariance not factorizable after jitter escalation");
}

} // namespace

LatentPrediction predict_latents(const Vec& t0, const Vec& train_times,
                                 const StageOneResult& tracks) {
  if (train_times.size() != tracks.phi.rows())
    throw std::invalid_argument("predict_latents: time/track size mismatch");
  if (train_times.size() < 2) throw std::invalid_argument("predict_latents: need >= 2 samples");

  const double dt = median_spacing(train_times);
  const double ell = 5.0 * dt;
  const double alpha_time = 1.0 / (ell * ell);

  LatentPrediction out;
  const double lo = train_times.minCoeff();
  const double hi = train_times.maxCoeff();
  out.extrapolating = (t0.size() > 0) && (t0.minCoeff() < lo || t0.maxCoeff() > hi);

  const Index k = tracks.phi.cols();
  out.phi.reserve(static_cast<std::size_t>(k));
  out.amp.reserve(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) {
    out.phi.push_back(track_posterior(t0, train_times, tracks.phi.col(c), alpha_time));
    out.amp.push_back(track_posterior(t0, train_times, tracks.amp.col(c), alpha_time));
  }
  return out;
}

PredictiveGaussian predict_signal(const Vec& t0, const Vec& train_times, const NopResult& result,
                                  PredictMode mode, std::uint64_t seed) {
  const Index d = t0.size();
  const Index k = result.tracks.phi.cols();
  if (static_cast<Index>(result.shapes.size()) != k)
    throw std::invalid_argument("predict_signal: shape/track count mismatch");

  LatentPrediction latents = predict_latents(t0, train_times, result.tracks);
  std::mt19937_64 rng(seed);

  PredictiveGaussian out;
  out.mean = Vec::Zero(d);
  out.covariance = Mat::Zero(d, d);

  for (Index c = 0; c < k; ++c) {
    Vec phi0 = latents.phi[static_cast<std::size_t>(c)].mean;
    Vec amp0 = latents.amp[static_cast<std::size_t>(c)].mean;
    if (mode == PredictMode::sample_latents) {
      phi0 = sample_gaussian(latents.phi[static_cast<std::size_t>(c)], rng);
      amp0 = sample_gaussian(latents.amp[static_cast<std::size_t>(c)], rng);
    }

    const PatternInducingPoints& pts = result.shapes[static_cast<std::size_t>(c)].points;
    const Mat& sigma_u = result.shapes[static_cast<std::size_t>(c)].Sigma_u;
    const Vec x0 = fold_phase_cycles(phi0, pts.L);

    const Mat kmm = assemble_cov(pts.z, pts.z, pts.kernel, true);
    Eigen::LLT<Mat> llt = factor_spd(kmm, "inducing covariance");
    const Mat kdm = assemble_cov(x0, pts.z, pts.kernel, false);

    const Vec shape_mean = kdm * llt.solve(pts.alpha_u);
    out.mean.array() += amp0.array() * shape_mean.array();

    const Mat kdd = assemble_cov(x0, x0, pts.kernel, true);
    const Mat v = llt.matrixL().solve(kdm.transpose());
    const Mat kinv_kmd = llt.solve(kdm.transpose());
    Mat shape_cov = kdd - v.transpose() * v + kinv_kmd.transpose() * sigma_u * kinv_kmd;
    shape_cov = 0.5 * (shape_cov + shape_cov.transpose());
    out.covariance += (amp0 * amp0.transpose()).cwiseProduct(shape_cov);
  }
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

Mat sample_signal(const Vec& t0, const Vec& train_times, const NopResult& result, Index count,
                  std::uint64_t seed) {
  const Index d = t0.size();
  if (count == 0) return Mat(0, d);
  const PredictiveGaussian pred = predict_signal(t0, train_times, result);
  std::mt19937_64 rng(seed);
  Mat draws(count, d);
  for (Index i = 0; i < count; ++i) draws.row(i) = sample_gaussian(pred, rng).transpose();
  return draws;
}

} // namespace nop
