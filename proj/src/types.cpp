#include "nop/types.hpp"

#include <cmath>
#include <numbers>

namespace nop {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void SampledSignal::validate() const {
  if (times.size() != values.size())
    throw std::invalid_argument("SampledSignal: times/values size mismatch (" +
                                std::to_string(times.size()) + " vs " +
                                std::to_string(values.size()) + ")");
  if (times.size() < 2)
    throw std::invalid_argument("SampledSignal: need at least two samples");
  for (Index i = 1; i < times.size(); ++i)
    if (!(times(i) > times(i - 1)))
      throw std::invalid_argument("SampledSignal: times not strictly increasing at index " +
                                  std::to_string(i));
  if (!(sample_rate > 0.0))
    throw std::invalid_argument("SampledSignal: sample_rate must be positive");
}

SampledSignal make_uniform_signal(Index n, double sample_rate) {
  if (n < 2) throw std::invalid_argument("make_uniform_signal: need n >= 2");
  if (!(sample_rate > 0.0))
    throw std::invalid_argument("make_uniform_signal: sample_rate must be positive");
  SampledSignal s;
  s.sample_rate = sample_rate;
  s.times = Vec::LinSpaced(n, 0.0, double(n - 1) / sample_rate);
  s.values = Vec::Zero(n);
  return s;
}

double ShapeFunction::operator()(double t) const { return eval_shape(*this, t); }

void ShapeFunction::validate() const {
  if (cos_coeffs.size() != sin_coeffs.size())
    throw std::invalid_argument("ShapeFunction: coefficient size mismatch");
  if (cos_coeffs.size() == 0)
    throw std::invalid_argument("ShapeFunction: empty coefficient vectors");
  const double norm2 = 0.5 *(cos_coeffs.squaredNorm() + sin_coeffs.squaredNorm());
  if (std::abs(norm2 - 1.0) > 1e-9)
    throw std::invalid_argument("ShapeFunction: squared L2 norm is " +
                                std::to_string(norm2) + ", expected 1");
}

double eval_shape(const ShapeFunction& shape, double t) {
  double acc = 0.0;
  for (Index k = 0; k < shape.harmonics(); ++k) {
    const double arg = kTwoPi * double(k + 1) * t;
    acc += shape.cos_coeffs(k) * std::cos(arg) + shape.sin_coeffs(k) * std::sin(arg);
  }
  return acc;
}

Vec eval_shape(const ShapeFunction& shape, const Vec& t) {
  Vec out = Vec::Zero(t.size());
  for (Index k = 0; k < shape.harmonics(); ++k) {
    const double w = kTwoPi * double(k + 1);
    out.array() += shape.cos_coeffs(k) * (w * t.array()).cos() +
                   shape.sin_coeffs(k) * (w * t.array()).sin();
  }
  return out;
}

ShapeFunction normalize_shape(const Vec& raw_cos, const Vec& raw_sin) {
  if (raw_cos.size() != raw_sin.size())
    throw std::invalid_argument("normalize_shape: coefficient size mismatch");
  if (raw_cos.size() == 0)
    throw std::invalid_argument("normalize_shape: empty coefficient vectors");
  const double norm2 = 0.5 * (raw_cos.squaredNorm() + raw_sin.squaredNorm());
  if (norm2 <= 0.0) throw std::invalid_argument("degenerate shape");
  const double scale = 1.0 / std::sqrt(norm2);
  ShapeFunction s;
  s.cos_coeffs = scale * raw_cos;
  s.sin_coeffs = scale * raw_sin;
  return s;
}

ShapeFunction sine_shape() {
  Vec c = Vec::Zero(1), d = Vec::Zero(1);
  d(0) = std::numbers::sqrt2;
  ShapeFunction s{c, d};
  return s;
}

ShapeFunction cosine_shape() {
  Vec c = Vec::Zero(1), d = Vec::Zero(1);
  c(0) = std::numbers::sqrt2;
  ShapeFunction s{c, d};
  return s;
}

ShapeFunction example_shape_1() {
  Vec c(3), d(3);
  c << 1.0, 0.45, 0.0;
  d << 0.0, 0.2, 0.15;
  return normalize_shape(c, d);
}

ShapeFunction example_shape_2() {
  Vec c(3), d(3);
  c << 0.0, 0.3, 0.2;
  d << 1.0, 0.0, 0.25;
  return normalize_shape(c, d);
}

ComponentSpec make_component(double a0, double f0_cps, double chirp_cps2,
                             ShapeFunction shape, double phase0_rad) {
  if (!(a0 > 0.0)) throw std::invalid_argument("make_component: amplitude must be positive");
  shape.validate();
  ComponentSpec c;
  c.amplitude = [a0](double) { return a0; };
  c.phase = [f0_cps, chirp_cps2, phase0_rad](double t) {
    return phase0_rad + kTwoPi * (f0_cps * t + 0.5 * chirp_cps2 * t * t);
  };
  c.shape = std::move(shape);
  return c;
}

void NoiseSpec::validate() const {
  if (kind != NoiseKind::none && !(sigma >= 0.0))
    throw std::invalid_argument("NoiseSpec: sigma must be non-negative");
}

} // namespace nop
