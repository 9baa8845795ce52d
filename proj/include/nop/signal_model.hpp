#pragma once

#include "nop/types.hpp"

#include <vector>

namespace nop {

/// values_i = sum_k a_k(t_i) * s_k(phi_k(t_i)/2pi) + noise.
/// phase_uniform noise perturbs each phi_k(t_i) by an i.i.d. draw from
/// Uniform[0, 2pi] radians before shape evaluation.
/// Throws if any component's phase is non-monotone on the grid.
SampledSignal synthesize(const std::vector<ComponentSpec>& components, const Vec& times,
                         const NoiseSpec& noise);

enum class BuiltinSignal { f1_cos, f1_shape, f2, f3_cos, f3_shape, f4_close, f5_cross, f6 };

BuiltinSignal parse_builtin_signal(const std::string& name); // throws on unknown id
std::string builtin_signal_name(BuiltinSignal id);

struct BuiltinConfig {
  double delta0 = 10.0 / 1024.0; // spectral gap, cycles/s (f1, f3)
  Index n = 0;                   // sample count; 0 selects the experiment default
};

struct GeneratedSignal {
  std::vector<ComponentSpec> components;
  Vec times;
  double sample_rate;
};

/// The exact synthetic constructions of the builtin experiments:
/// f1: cos(2pi w1 t) + sin(2pi w2 t), w1 = 38.8/1024, w2 = w1 + delta0; 1 Hz, N=100.
///     f1_shape replaces cos/sin by the two example shapes.
/// f2: 0.5 sin(0.1 t) + sin(0.15 t) (rad/s); 1 Hz, N in {64,128,256,1024}.
/// f3: s1(2pi(10/10.24 t + 230/10.24^2 t^2)) + s2(2pi((10/10.24+delta0) t + 250/10.24^2 t^2));
///     100 Hz, N=100. delta0 grid (i-5)/10.24, i=0..9.
/// f4_close: chirp pair with instantaneous frequencies offset by 0.3 rad/s; 100 Hz, N=100.
/// f5_cross: linear chirps 1+0.6t and 5-0.2t cycles/s crossing at t=5; 50 Hz, N=500.
/// f6: s1eg(2pi 3.88/1.024 t) + s2eg(2pi 4.88/1.024 t); 100 Hz, N=100.
GeneratedSignal builtin_experiment_signal(BuiltinSignal id, const BuiltinConfig& cfg = {});

/// Ground-truth tracks on a time grid. Phases in radians; frequencies in
/// cycles/s by central differences (exact for polynomial phases up to degree 3).
Mat true_phases(const std::vector<ComponentSpec>& components, const Vec& times);
Mat true_amplitudes(const std::vector<ComponentSpec>& components, const Vec& times);
Mat true_frequencies(const std::vector<ComponentSpec>& components, const Vec& times);

} // namespace nop
