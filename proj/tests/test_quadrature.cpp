#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sglm/quadrature.hpp"

using namespace sglm;

TEST_SUITE("quadrature") {
  TEST_CASE("order 2 rule is {-1, +1} with equal weights") {
    const QuadratureRule r = make_rule(2);
    REQUIRE(r.order() == 2);
    CHECK(r.nodes()[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(r.nodes()[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.weights()[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.weights()[1] == doctest::Approx(0.5).epsilon(1e-14));
  }

  TEST_CASE("rule invariants hold across orders") {
    for (int order : {2, 3, 7, 16, 64, 128, 255, 512}) {
      CAPTURE(order);
      const QuadratureRule r = make_rule(order);
      const auto x = r.nodes();
      const auto w = r.weights();
      double sum = 0.0, m1 = 0.0, m2 = 0.0;
      for (int i = 0; i < order; ++i) {
        CHECK(w[i] > 0.0);
        sum += w[i];
        m1 += w[i] * x[i];
        m2 += w[i] * x[i] * x[i];
        CHECK(std::abs(x[i] + x[order - 1 - i]) < 1e-12);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
      CHECK(std::abs(m1) < 1e-10);
      CHECK(std::abs(m2 - 1.0) < 1e-10);
    }
  }

  TEST_CASE("order 64 moments and lognormal mean") {
    const QuadratureRule& r = cached_rule(64);
    CHECK(std::abs(expect_1d(r, [](double x) { return x * x * x * x; }) - 3.0) < 1e-10);
    CHECK(std::abs(expect_1d(r, [](double x) { return std::exp(x); }) - std::exp(0.5)) < 1e-10);
    // Exactness up to degree 2n-1: E[Z^10] = 945.
    CHECK(std::abs(expect_1d(r, [](double x) { return std::pow(x, 10); }) - 945.0) < 1e-8);
  }

  TEST_CASE("make_rule rejects out-of-range orders") {
    CHECK_THROWS_AS(make_rule(1), ParameterError);
    CHECK_THROWS_AS(make_rule(513), ParameterError);
    CHECK_THROWS_AS(make_rule(0), ParameterError);
  }

  TEST_CASE("expect_1d examples") {
    const QuadratureRule& r = cached_rule();
    CHECK(std::abs(expect_1d(r, [](double x) { return x; })) < 1e-14);
    CHECK(std::abs(expect_1d(r, [](double x) { return x * x; }) - 1.0) < 1e-12);
    CHECK(std::abs(expect_1d(r, [](double x) { return std::cos(x); }) - std::exp(-0.5)) < 1e-10);
  }

  TEST_CASE("expect_1d reports the offending node") {
    const QuadratureRule r = make_rule(4);
    const double bad = r.nodes()[3];
    try {
      expect_1d(r, [&](double x) { return x == bad ? std::nan("") : x; });
      FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
      CHECK(e.node() == bad);
    }
  }

  TEST_CASE("expect_nd examples") {
    const QuadratureRule& r = cached_rule(32);
    CHECK(std::abs(expect_nd(r, 2, [](std::span<const double> p) { return p[0] * p[1]; })) < 1e-14);
    CHECK(std::abs(expect_nd(r, 2, [](std::span<const double> p) { return (p[0] + p[1]) * (p[0] + p[1]); }) - 2.0) <
          1e-12);
    CHECK(std::abs(expect_nd(r, 3, [](std::span<const double> p) {
                     return p[0] * p[0] * p[1] * p[1] * p[2] * p[2];
                   }) -
                   1.0) < 1e-11);
    CHECK_THROWS_AS(expect_nd(r, 4, [](std::span<const double>) { return 0.0; }), ParameterError);
  }

  TEST_CASE("expect_nd of a one-coordinate function equals expect_1d") {
    const QuadratureRule& r = cached_rule(48);
    auto f = [](double x) { return std::sin(x) + x * x / (1.0 + x * x); };
    const double ref = expect_1d(r, f);
    for (int c = 0; c < 3; ++c) {
      const double v3 = expect_nd(r, 3, [&](std::span<const double> p) { return f(p[c]); });
      CHECK(std::abs(v3 - ref) < 1e-12);
    }
    const double v2 = expect_nd(r, 2, [&](std::span<const double> p) { return f(p[1]); });
    CHECK(std::abs(v2 - ref) < 1e-12);
  }

  TEST_CASE("doubling the order beyond 64 leaves smooth expectations unchanged") {
    auto e1 = [](double x) { return std::exp(-x * x / 3.0) * std::cos(2.0 * x); };
    auto e2 = [](double x) { return std::sin(x) * std::sin(x); };
    auto e3 = [](double x) { return std::cos(x) * std::exp(-0.1 * x * x); };
    for (int order : {64, 128, 256}) {
      const QuadratureRule& a = cached_rule(order);
      const QuadratureRule& b = cached_rule(2 * order);
      CHECK(std::abs(expect_1d(a, e1) - expect_1d(b, e1)) < 1e-10);
      CHECK(std::abs(expect_1d(a, e2) - expect_1d(b, e2)) < 1e-10);
      CHECK(std::abs(expect_1d(a, e3) - expect_1d(b, e3)) < 1e-10);
    }
    // Poles at distance pi/2 from the real axis delay the plateau to order 128.
    auto f1 = [](double x) { return std::tanh(x) * std::tanh(x); };
    auto f2 = [](double x) { return 1.0 / (1.0 + std::exp(-2.0 * x + 0.3)); };
    for (int order : {128, 256}) {
      const QuadratureRule& a = cached_rule(order);
      const QuadratureRule& b = cached_rule(2 * order);
      CHECK(std::abs(expect_1d(a, f1) - expect_1d(b, f1)) < 1e-10);
      CHECK(std::abs(expect_1d(a, f2) - expect_1d(b, f2)) < 1e-10);
    }
    CHECK(std::abs(expect_1d(cached_rule(64), f1) - expect_1d(cached_rule(128), f1)) < 1e-8);
  }

  TEST_CASE("log_sum_exp examples") {
    const LogTerm one[] = {{0.0, 0.0}};
    CHECK(log_sum_exp(one) == 0.0);
    const LogTerm halves[] = {{std::log(0.5), 0.0}, {std::log(0.5), 0.0}};
    CHECK(std::abs(log_sum_exp(halves)) < 1e-15);
    const LogTerm big[] = {{0.0, 1000.0}, {0.0, 1000.0}};
    CHECK(std::abs(log_sum_exp(big) - (1000.0 + std::log(2.0))) < 1e-12);
    const LogTerm huge[] = {{0.0, 1e6}, {0.0, -1e6}};
    CHECK(log_sum_exp(huge) == 1e6);
    CHECK_THROWS_AS(log_sum_exp(std::span<const LogTerm>{}), ParameterError);
    CHECK_THROWS_AS(log_sum_exp(std::span<const double>{}), ParameterError);
  }

  TEST_CASE("log_sum_exp shift invariance") {
    const std::vector<double> v = {-3.2, 0.7, 1.9, -40.0, 12.5};
    const double base = log_sum_exp(v);
    for (double c : {-500.0, -1.25, 3.0, 800.0}) {
      std::vector<double> s(v);
      for (double& x : s) x += c;
      CHECK(std::abs(log_sum_exp(s) - c - base) < 1e-12);
    }
  }

  TEST_CASE("normal helpers") {
    CHECK(std::abs(normal_cdf(0.0) - 0.5) < 1e-16);
    const double x = -40.0, x2 = x * x;
    const double series = -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log1p(-1 / x2 + 3 / (x2 * x2) - 15 / (x2 * x2 * x2));
    CHECK(std::abs(log_normal_cdf(x) - series) < 1e-10);
    CHECK(std::abs(log_normal_cdf(-5.0) - std::log(0.5 * std::erfc(5.0 / std::sqrt(2.0)))) < 1e-12);
    // Mills-ratio asymptotics: pdf/Phi ~ -x for very negative x.
    CHECK(normal_hazard_lower(-1e4) == doctest::Approx(1e4).epsilon(1e-7));
    CHECK(std::abs(normal_hazard_lower(0.3) - normal_pdf(0.3) / normal_cdf(0.3)) < 1e-14);
  }

  TEST_CASE("composite rules integrate kinked integrands") {
    const double sq = integrate_interval([](double x) { return x * x; }, -1.0, 2.0, 3);
    CHECK(std::abs(sq - 3.0) < 1e-13);
    // E[max(Z, 0)] = 1/sqrt(2 pi).
    const double relu = expect_normal_composite([](double z) { return z > 0.0 ? z : 0.0; });
    CHECK(std::abs(relu - kInvSqrt2Pi) < 1e-13);
  }
}
