#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nop/signal_model.hpp"
#include "nop/types.hpp"

#include <cmath>
#include <numbers>

using namespace nop;

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;
}

TEST_CASE("normalize_shape scales to unit L2 norm") {
  Vec c1 = Vec::Zero(1), d1 = Vec::Ones(1);
  const ShapeFunction sine = normalize_shape(c1, d1);
  CHECK(sine.sin_coeffs(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  Vec c2(1), d2 = Vec::Zero(1);
  c2 << 2.0;
  const ShapeFunction cosine = normalize_shape(c2, d2);
  CHECK(cosine.cos_coeffs(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  Vec c3(2), d3(2);
  c3 << 1.0, 0.5;
  d3 << 0.0, 0.3;
  const ShapeFunction s3 = normalize_shape(c3, d3);
  const double scale = 1.0 / std::sqrt(0.5 * (1.0 + 0.25 + 0.09));
  CHECK(s3.cos_coeffs(0) == doctest::Approx(scale).epsilon(1e-14));
  CHECK(s3.cos_coeffs(1) == doctest::Approx(0.5 * scale).epsilon(1e-14));
  CHECK(s3.sin_coeffs(1) == doctest::Approx(0.3 * scale).epsilon(1e-14));
  s3.validate();

  CHECK_THROWS_AS(normalize_shape(Vec::Zero(2), Vec::Zero(2)), std::invalid_argument);
}

TEST_CASE("eval_shape basics") {
  CHECK(sine_shape()(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosine_shape()(0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  const ShapeFunction s = example_shape_1();
  for (double t : {0.0, 0.13, 0.4441, 0.77, 0.9}) {
    CHECK(s(t + 1.0) == doctest::Approx(s(t)).epsilon(1e-12));
    CHECK(s(t - 3.0) == doctest::Approx(s(t)).epsilon(1e-12));
  }

  // Direct Fourier summation at t = 0.25.
  double direct = 0.0;
  for (Index k = 0; k < s.harmonics(); ++k) {
    direct += s.cos_coeffs(k) * std::cos(kTau * double(k + 1) * 0.25) +
              s.sin_coeffs(k) * std::sin(kTau * double(k + 1) * 0.25);
  }
  CHECK(eval_shape(s, 0.25) == doctest::Approx(direct).epsilon(1e-14));

  // Vectorized evaluation agrees with scalar.
  const Vec t = Vec::LinSpaced(17, -1.0, 2.0);
  const Vec v = eval_shape(s, t);
  for (Index i = 0; i < t.size(); ++i)
    CHECK(v(i) == doctest::Approx(eval_shape(s, t(i))).epsilon(1e-13));
}

TEST_CASE("shapes have zero mean on a 4096-point grid") {
  for (const ShapeFunction& s :
       {sine_shape(), cosine_shape(), example_shape_1(), example_shape_2()}) {
    double mean = 0.0;
    for (Index i = 0; i < 4096; ++i) mean += s(double(i) / 4096.0);
    mean /= 4096.0;
    CHECK(std::abs(mean) < 1e-10);
  }
}

TEST_CASE("make_uniform_signal and validation") {
  const SampledSignal s = make_uniform_signal(100, 50.0);
  CHECK(s.size() == 100);
  CHECK(s.times(1) - s.times(0) == doctest::Approx(0.02).epsilon(1e-12));
  s.validate();

  SampledSignal bad = s;
  bad.times(10) = bad.times(9);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_uniform_signal(1, 1.0), std::invalid_argument);
}

TEST_CASE("synthesize evaluates the generative model") {
  BuiltinConfig cfg;
  const GeneratedSignal gen = builtin_experiment_signal(BuiltinSignal::f1_cos, cfg);
  NoiseSpec none;
  const SampledSignal sig = synthesize(gen.components, gen.times, none);
  CHECK(sig.values(0) == doctest::Approx(1.0).epsilon(1e-12)); // cos(0) + sin(0)

  // Superposition linearity.
  std::vector<ComponentSpec> first{gen.components[0]};
  std::vector<ComponentSpec> second{gen.components[1]};
  const Vec sum = synthesize(first, gen.times, none).values +
                  synthesize(second, gen.times, none).values;
  CHECK((sum - sig.values).cwiseAbs().maxCoeff() < 1e-12);

  // Zero amplitude gives the zero signal.
  ComponentSpec quiet = gen.components[0];
  quiet.amplitude = [](double) { return 0.0; };
  const SampledSignal silent = synthesize({quiet}, gen.times, none);
  CHECK(silent.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("f2 matches the closed form") {
  BuiltinConfig cfg;
  cfg.n = 64;
  const GeneratedSignal gen = builtin_experiment_signal(BuiltinSignal::f2, cfg);
  NoiseSpec none;
  const SampledSignal sig = synthesize(gen.components, gen.times, none);
  CHECK(sig.size() == 64);
  CHECK(sig.sample_rate == doctest::Approx(1.0));
  for (Index i = 0; i < sig.size(); ++i) {
    const double t = sig.times(i);
    const double want = 0.5 * std::sin(0.1 * t) + std::sin(0.15 * t);
    CHECK(sig.values(i) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("noise is deterministic per seed") {
  BuiltinConfig cfg;
  const GeneratedSignal gen = builtin_experiment_signal(BuiltinSignal::f1_cos, cfg);

  NoiseSpec noise;
  noise.kind = NoiseKind::additive_gaussian;
  noise.sigma = 0.2;
  noise.seed = 42;
  const SampledSignal a = synthesize(gen.components, gen.times, noise);
  const SampledSignal b = synthesize(gen.components, gen.times, noise);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);

  noise.seed = 43;
  const SampledSignal c = synthesize(gen.components, gen.times, noise);
  CHECK((a.values - c.values).cwiseAbs().maxCoeff() > 0.0);

  noise.kind = NoiseKind::phase_uniform;
  noise.seed = 42;
  const SampledSignal d = synthesize(gen.components, gen.times, noise);
  const SampledSignal e = synthesize(gen.components, gen.times, noise);
  CHECK((d.values - e.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d.values - a.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("builtin signals expose consistent ground truth") {
  BuiltinConfig cfg;
  cfg.delta0 = 3.0 / 10.24;
  const GeneratedSignal gen = builtin_experiment_signal(BuiltinSignal::f3_cos, cfg);
  CHECK(gen.sample_rate == doctest::Approx(100.0));

  const Mat phi = true_phases(gen.components, gen.times);
  const Mat freq = true_frequencies(gen.components, gen.times);
  CHECK(phi.rows() == gen.times.size());
  CHECK(phi.cols() == 2);

  // Quadratic phases: frequency is exactly the derivative.
  const double base = 10.0 / 10.24;
  for (Index i = 0; i < gen.times.size(); i += 17) {
    const double t = gen.times(i);
    const double want1 = base + 2.0 * 230.0 / (10.24 * 10.24) * t;
    const double want2 = base + cfg.delta0 + 2.0 * 250.0 / (10.24 * 10.24) * t;
    CHECK(freq(i, 0) == doctest::Approx(want1).epsilon(1e-7));
    CHECK(freq(i, 1) == doctest::Approx(want2).epsilon(1e-7));
  }

  const Mat amp = true_amplitudes(gen.components, gen.times);
  CHECK(amp.minCoeff() > 0.0);

  CHECK(parse_builtin_signal("f5_cross") == BuiltinSignal::f5_cross);
  CHECK(builtin_signal_name(BuiltinSignal::f6) == "f6");
  CHECK_THROWS_AS(parse_builtin_signal("f9"), std::invalid_argument);
}

TEST_CASE("f5 chirps cross mid-record") {
  BuiltinConfig cfg;
  const GeneratedSignal gen = builtin_experiment_signal(BuiltinSignal::f5_cross, cfg);
  const Mat freq = true_frequencies(gen.components, gen.times);
  const Vec gap = (freq.col(0) - freq.col(1)).cwiseAbs();
  Index cross = 0;
  gap.minCoeff(&cross);
  const double t_cross = gen.times(cross);
  CHECK(t_cross == doctest::Approx(5.0).epsilon(0.02));
  CHECK(freq(cross, 0) == doctest::Approx(4.0).epsilon(0.02));
}
