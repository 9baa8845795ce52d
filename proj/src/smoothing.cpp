#include "nop/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

namespace nop {

namespace {

const Mat& dct_matrix(Index n) {
  static std::map<Index, Mat> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Mat D(n, n);
  const double scale0 = std::sqrt(1.0 / double(n));
  const double scale = std::sqrt(2.0 / double(n));
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      D(k, i) = (k == 0 ? scale0 : scale) *
                std::cos(std::numbers::pi * double(k) * (double(i) + 0.5) / double(n));
  return cache.emplace(n, std::move(D)).first->second;
}

Vec penalty_eigenvalues(Index n) {
  Vec s(n);
  for (Index k = 0; k < n; ++k) {
    const double c = 2.0 - 2.0 * std::cos(std::numbers::pi * double(k) / double(n));
    s(k) = c * c;
  }
  return s;
}

double gcv_score(const Vec& d, const Vec& s, double lambda) {
  const double n = double(d.size());
  double rss = 0.0, tr_h = 0.0;
  for (Index k = 0; k < d.size(); ++k) {
    const double gamma = 1.0 / (1.0 + lambda * s(k));
    const double r = d(k) * (1.0 - gamma);
    rss += r * r;
    tr_h += gamma;
  }
  const double denom = n - tr_h;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return n * rss / (denom * denom);
}

Vec apply_filter(const Mat& D, const Vec& s, double lambda, const Vec& y) {
  Vec d = D * y;
  for (Index k = 0; k < d.size(); ++k) d(k) /= 1.0 + lambda * s(k);
  return D.transpose() * d;
}

} // namespace

Vec dct2(const Vec& y) { return dct_matrix(y.size()) * y; }
Vec idct2(const Vec& c) { return dct_matrix(c.size()).transpose() * c; }

SmoothResult smooth_penalized(const Vec& y_in, bool robust) {
  SmoothResult out;
  if (y_in.size() < 8) {
    out.smoothed = y_in;
    out.lambda = 0.0;
    return out;
  }

  // The reflective-boundary penalty only spares constants, so take out the LS
  // line first; phase tracks are trend-dominated and must survive untouched.
  const Index n = y_in.size();
  const Vec t = Vec::LinSpaced(n, -1.0, 1.0);
  const double mean = y_in.mean();
  const double slope = t.dot(y_in) / t.squaredNorm();
  const Vec line = mean + slope * t.array();
  const Vec y = y_in - line;

  const Mat& D = dct_matrix(y.size());
  const Vec s = penalty_eigenvalues(y.size());
  const Vec d = D * y;

  double best_lambda = 1e-6, best_score = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 56; ++i) {
    const double lambda = std::pow(10.0, -6.0 + 0.25 * double(i));
    const double score = gcv_score(d, s, lambda);
    if (score < best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  out.lambda = best_lambda;
  out.smoothed = apply_filter(D, s, best_lambda, y);

  if (robust) {
    Vec r = y - out.smoothed;
    std::vector<double> absr(r.size());
    for (Index i = 0; i < r.size(); ++i) absr[std::size_t(i)] = std::abs(r(i));
    std::nth_element(absr.begin(), absr.begin() + absr.size() / 2, absr.end());
    const double sigma = 1.4826 * absr[absr.size() / 2];
    if (sigma > 0.0) {
      Vec w(r.size());
      for (Index i = 0; i < r.size(); ++i) {
        const double u = r(i) / (4.685 * sigma);
        w(i) = std::abs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
      }
      Vec x = out.smoothed;
      for (int it = 0; it < 30; ++it) {
        Vec target = w.cwiseProduct(y - x) + x;
        Vec next = apply_filter(D, s, best_lambda, target);
        const double step = (next - x).norm();
        x = next;
        if (step < 1e-10 * (1.0 + x.norm())) break;
      }
      out.smoothed = x;
    }
  }
  out.smoothed += line;
  return out;
}

} // namespace nop
