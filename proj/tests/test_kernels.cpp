#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nop/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace nop;

TEST_CASE("se kernel closed-form values") {
  const KernelParams p = default_se_params();
  CHECK(se_kernel(0.3, 0.3, p) == doctest::Approx(1.0));
  // 0.5 * 2000 * 0.01^2 = 0.1
  CHECK(se_kernel(0.0, 0.01, p) == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
  // distance sqrt(1/2000) makes the exponent 0.5
  const double d = std::sqrt(1.0 / 2000.0);
  CHECK(se_kernel(1.0, 1.0 + d, p) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(se_kernel(0.2, 0.7, p) == doctest::Approx(se_kernel(0.7, 0.2, p)));
}

TEST_CASE("periodic kernel periodicity and symmetry") {
  const KernelParams p = default_periodic_params(2);
  Vec x(2), y(2);
  x << 0.2, 0.8;
  y << 0.45, 0.1;
  CHECK(periodic_kernel(x, y, p) == doctest::Approx(periodic_kernel(y, x, p)).epsilon(1e-14));
  Vec xs = x;
  xs.array() += 1.0; // one full period
  CHECK(periodic_kernel(xs, y, p) == doctest::Approx(periodic_kernel(x, y, p)).epsilon(1e-12));
  CHECK(periodic_kernel(x, x, p) == doctest::Approx(1.0));
}

TEST_CASE("assemble_cov symmetry, jitter, and positive semidefiniteness") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vec x(24);
    for (Index i = 0; i < x.size(); ++i) x(i) = unif(rng);
    const KernelParams p = default_se_params();
    const Mat k = assemble_cov(x, x, p, true);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat> eig(k);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
    const Mat k_nojit = assemble_cov(x, x, p, false);
    CHECK(k(0, 0) - k_nojit(0, 0) == doctest::Approx(p.jitter * p.beta).epsilon(1e-10));
  }
}

TEST_CASE("factor_spd reports the failure context") {
  Mat bad = Mat::Identity(3, 3);
  bad(2, 2) = -1.0;
  CHECK_THROWS_WITH_AS(factor_spd(bad, "unit test"),
                       doctest::Contains("unit test"), std::runtime_error);
  const Mat good = Mat::Identity(4, 4) * 2.5;
  const auto llt = factor_spd(good, "ok");
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("nystrom mean interpolates at the landmarks") {
  const KernelParams p = default_se_params();
  const Vec z = Vec::LinSpaced(48, 0.0, 1.5);
  Vec alpha(48);
  for (Index i = 0; i < 48; ++i) alpha(i) = std::sin(4.0 * z(i)) + 0.3 * z(i);
  const Vec at_z = nystrom_mean(z, z, alpha, p);
  CHECK((at_z - alpha).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("nystrom jacobian diagonal matches finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.2, 1.3);
  std::normal_distribution<double> gauss;
  const KernelParams p = default_se_params();
  for (int trial = 0; trial < 20; ++trial) {
    Vec z = Vec::LinSpaced(32, 0.0, 1.5);
    Vec alpha(32);
    for (Index i = 0; i < 32; ++i) alpha(i) = gauss(rng);
    Vec phi(6);
    for (Index i = 0; i < 6; ++i) phi(i) = unif(rng);

    const NystromOperator op = make_nystrom_operator(z, alpha, p);
    const Vec grad = op.dmean_dphi(phi);
    const double h = 1e-6;
    for (Index i = 0; i < phi.size(); ++i) {
      Vec hi = phi, lo = phi;
      hi(i) += h;
      lo(i) -= h;
      const double fd = (op.mean(hi)(i) - op.mean(lo)(i)) / (2.0 * h);
      CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-5));
    }

    Vec mean2, grad2;
    op.mean_and_derivative(phi, mean2, grad2);
    CHECK((mean2 - op.mean(phi)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((grad2 - grad).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("kernel parameter validation") {
  KernelParams p = default_se_params();
  p.beta = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = default_se_params();
  p.jitter = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = default_se_params();
  p.alpha.resize(0);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
