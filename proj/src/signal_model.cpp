#include "nop/signal_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace nop {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

SampledSignal synthesize(const std::vector<ComponentSpec>& components, const Vec& times,
                         const NoiseSpec& noise) {
  if (components.empty()) throw std::invalid_argument("synthesize: no components");
  if (times.size() < 2) throw std::invalid_argument("synthesize: need at least two samples");
  noise.validate();

  const Index n = times.size();
  Mat phases(n, Index(components.size()));
  for (std::size_t k = 0; k < components.size(); ++k) {
    for (Index i = 0; i < n; ++i) phases(i, Index(k)) = components[k].phase(times(i));
    for (Index i = 1; i < n; ++i)
      if (!(phases(i, Index(k)) > phases(i - 1, Index(k))))
        throw std::invalid_argument("synthesize: phase of component " + std::to_string(k) +
                                    " not strictly increasing at sample " + std::to_string(i));
  }

  std::mt19937_64 rng(noise.seed);
  if (noise.kind == NoiseKind::phase_uniform) {
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    for (Index k = 0; k < phases.cols(); ++k)
      for (Index i = 0; i < n; ++i) phases(i, k) += u(rng);
  }

  SampledSignal out;
  out.times = times;
  out.values = Vec::Zero(n);
  Vec dt = times.tail(n - 1) - times.head(n - 1);
  out.sample_rate = 1.0 / dt.mean();
  for (std::size_t k = 0; k < components.size(); ++k)
    for (Index i = 0; i < n; ++i)
      out.values(i) += components[k].amplitude(times(i)) *
                       eval_shape(components[k].shape, phases(i, Index(k)) / kTwoPi);

  if (noise.kind == NoiseKind::additive_gaussian && noise.sigma > 0.0) {
    std::normal_distribution<double> g(0.0, noise.sigma);
    for (Index i = 0; i < n; ++i) out.values(i) += g(rng);
  }
  out.validate();
  return out;
}

BuiltinSignal parse_builtin_signal(const std::string& name) {
  if (name == "f1_cos") return BuiltinSignal::f1_cos;
  if (name == "f1_shape") return BuiltinSignal::f1_shape;
  if (name == "f2") return BuiltinSignal::f2;
  if (name == "f3_cos") return BuiltinSignal::f3_cos;
  if (name == "f3_shape") return BuiltinSignal::f3_shape;
  if (name == "f4_close") return BuiltinSignal::f4_close;
  if (name == "f5_cross") return BuiltinSignal::f5_cross;
  if (name == "f6") return BuiltinSignal::f6;
  throw std::invalid_argument("unknown builtin signal '" + name + "'");
}

std::string builtin_signal_name(BuiltinSignal id) {
  switch (id) {
    case BuiltinSignal::f1_cos: return "f1_cos";
    case BuiltinSignal::f1_shape: return "f1_shape";
    case BuiltinSignal::f2: return "f2";
    case BuiltinSignal::f3_cos: return "f3_cos";
    case BuiltinSignal::f3_shape: return "f3_shape";
    case BuiltinSignal::f4_close: return "f4_close";
    case BuiltinSignal::f5_cross: return "f5_cross";
    case BuiltinSignal::f6: return "f6";
  }
  throw std::invalid_argument("unknown builtin signal id");
}

namespace {

ComponentSpec quadratic_phase_component(double amp, double f0_cps, double chirp_cps2,
                                        ShapeFunction shape) {
  return make_component(amp, f0_cps, chirp_cps2, std::move(shape));
}

GeneratedSignal finish(std::vector<ComponentSpec> comps, Index n, double rate) {
  GeneratedSignal g;
  g.components = std::move(comps);
  g.sample_rate = rate;
  g.times = Vec::LinSpaced(n, 0.0, double(n - 1) / rate);
  return g;
}

} // namespace

GeneratedSignal builtin_experiment_signal(BuiltinSignal id, const BuiltinConfig& cfg) {
  const double d0 = cfg.delta0;
  switch (id) {
    case BuiltinSignal::f1_cos: {
      const Index n = cfg.n > 0 ? cfg.n : 100;
      const double w1 = 38.8 / 1024.0, w2 = w1 + d0;
      std::vector<ComponentSpec> c;
      c.push_back(quadratic_phase_component(kInvSqrt2, w1, 0.0, cosine_shape()));
      c.push_back(quadratic_phase_component(kInvSqrt2, w2, 0.0, sine_shape()));
      return finish(std::move(c), n, 1.0);
    }
    case BuiltinSignal::f1_shape: {
      const Index n = cfg.n > 0 ? cfg.n : 100;
      const double w1 = 38.8 / 1024.0, w2 = w1 + d0;
      std::vector<ComponentSpec> c;
      c.push_back(quadratic_phase_component(1.0, w1, 0.0, example_shape_1()));
      c.push_back(quadratic_phase_component(1.0, w2, 0.0, example_shape_2()));
      return finish(std::move(c), n, 1.0);
    }
    case BuiltinSignal::f2: {
      const Index n = cfg.n > 0 ? cfg.n : 256;
      std::vector<ComponentSpec> c;
      c.push_back(quadratic_phase_component(0.5 * kInvSqrt2, 0.1 / kTwoPi, 0.0, sine_shape()));
      c.push_back(quadratic_phase_component(1.0 * kInvSqrt2, 0.15 / kTwoPi, 0.0, sine_shape()));
      return finish(std::move(c), n, 1.0);
    }
    case BuiltinSignal::f3_cos:
    case BuiltinSignal::f3_shape: {
      const Index n = cfg.n > 0 ? cfg.n : 100;
      const double base = 10.0 / 10.24;
      const double q1 = 230.0 / (10.24 * 10.24), q2 = 250.0 / (10.24 * 10.24);
      const bool shaped = id == BuiltinSignal::f3_shape;
      std::vector<ComponentSpec> c;
      c.push_back(quadratic_phase_component(shaped ? 1.0 : kInvSqrt2, base, 2.0 * q1,
                                            shaped ? example_shape_1() : cosine_shape()));
      c.push_back(quadratic_phase_component(shaped ? 1.0 : kInvSqrt2, base + d0, 2.0 * q2,
                                            shaped ? example_shape_2() : sine_shape()));
      return finish(std::move(c), n, 100.0);
    }
    case BuiltinSignal::f4_close: {
      const Index n = cfg.n > 0 ? cfg.n : 100;
      const double f0 = 10.0 / 10.24;
      const double chirp = 230.0 / (10.24 * 10.24);
      const double off = 0.3 / kTwoPi;
      std::vector<ComponentSpec> c;
      c.push_back(quadratic_phase_component(kInvSqrt2, f0, chirp, cosine_shape()));
      c.push_back(quadratic_phase_component(kInvSqrt2, f0 + off, chirp, sine_shape()));
      return finish(std::move(c), n, 100.0);
    }
    case BuiltinSignal::f5_cross: {
      const Index n = cfg.n > 0 ? cfg.n : 500;
      std::vector<ComponentSpec> c;
      c.push_back(quadratic_phase_component(kInvSqrt2, 1.0, 0.6, cosine_shape()));
      c.push_back(quadratic_phase_component(kInvSqrt2, 5.0, -0.2, sine_shape()));
      return finish(std::move(c), n, 50.0);
    }
    case BuiltinSignal::f6: {
      const Index n = cfg.n > 0 ? cfg.n : 100;
      std::vector<ComponentSpec> c;
      c.push_back(quadratic_phase_component(1.0, 3.88 / 1.024, 0.0, example_shape_1()));
      c.push_back(quadratic_phase_component(1.0, 4.88 / 1.024, 0.0, example_shape_2()));
      return finish(std::move(c), n, 100.0);
    }
  }
  throw std::invalid_argument("unknown builtin signal id");
}

Mat true_phases(const std::vector<ComponentSpec>& components, const Vec& times) {
  Mat out(times.size(), Index(components.size()));
  for (std::size_t k = 0; k < components.size(); ++k)
    for (Index i = 0; i < times.size(); ++i) out(i, Index(k)) = components[k].phase(times(i));
  return out;
}

Mat true_amplitudes(const std::vector<ComponentSpec>& components, const Vec& times) {
  Mat out(times.size(), Index(components.size()));
  for (std::size_t k = 0; k < components.size(); ++k)
    for (Index i = 0; i < times.size(); ++i)
      out(i, Index(k)) = components[k].amplitude(times(i));
  return out;
}

Mat true_frequencies(const std::vector<ComponentSpec>& components, const Vec& times) {
  const double h = 1e-4;
  Mat out(times.size(), Index(components.size()));
  for (std::size_t k = 0; k < components.size(); ++k)
    for (Index i = 0; i < times.size(); ++i)
      out(i, Index(k)) =
          (components[k].phase(times(i) + h) - components[k].phase(times(i) - h)) /
          (2.0 * h * kTwoPi);
  return out;
}

} // namespace nop
