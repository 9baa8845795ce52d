#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nop {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A uniformly or non-uniformly sampled real-valued record.
struct SampledSignal {
  Vec times;          // seconds, strictly increasing
  Vec values;
  double sample_rate; // Hz; for uniform grids, consistent with `times`

  Index size() const { return times.size(); }
  double duration() const { return times(times.size() - 1) - times(0); }

  /// Throws std::invalid_argument if the invariants are violated.
  void validate() const;
};

SampledSignal make_uniform_signal(Index n, double sample_rate);

/// 1-periodic, zero-mean waveform stored as a truncated Fourier series.
/// The constant term is not stored, so the zero-mean property is structural.
/// Unit L2 norm on [0,1]: 0.5 * (|cos|^2 + |sin|^2) == 1.
struct ShapeFunction {
  Vec cos_coeffs;
  Vec sin_coeffs;

  Index harmonics() const { return cos_coeffs.size(); }

  /// Evaluate at t (argument in periods; s(t+1) == s(t)).
  double operator()(double t) const;

  void validate() const;
};

double eval_shape(const ShapeFunction& shape, double t);
Vec eval_shape(const ShapeFunction& shape, const Vec& t);

/// Scale raw coefficients to unit L2 norm on one period.
/// Throws std::invalid_argument("degenerate shape") on all-zero input.
ShapeFunction normalize_shape(const Vec& raw_cos, const Vec& raw_sin);

ShapeFunction sine_shape();
ShapeFunction cosine_shape();

/// Fixed non-sinusoidal example shapes with three harmonics each,
/// used by the shaped variants of the builtin test signals.
ShapeFunction example_shape_1();
ShapeFunction example_shape_2();

/// One latent component: amplitude and phase trajectories plus its waveform.
/// Phase is stored in radians and must be strictly increasing in time.
struct ComponentSpec {
  std::function<double(double)> amplitude; // > 0 on the time domain
  std::function<double(double)> phase;     // radians, strictly increasing
  ShapeFunction shape;
};

/// Amplitude a(t) = a0, phase(t) = 2*pi*(f0*t + 0.5*chirp*t^2) given
/// frequencies in cycles per second.
ComponentSpec make_component(double a0, double f0_cps, double chirp_cps2,
                             ShapeFunction shape, double phase0_rad = 0.0);

enum class NoiseKind { none, additive_gaussian, phase_uniform };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

} // namespace nop
