#pragma once

// Expectations over independent standard Gaussian variables.
//
// Gauss-Hermite rules are normalized against the standard normal density, so
// expect_1d(rule, f) approximates E[f(Z)] with Z ~ N(0,1) directly. The
// composite Gauss-Legendre helpers cover integrands with kinks or sharp
// transitions where a global polynomial rule converges slowly.

#include <cmath>
#include <concepts>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sglm/errors.hpp"

namespace sglm {

inline constexpr int kDefaultQuadratureOrder = 128;
inline constexpr int kMinQuadratureOrder = 2;
inline constexpr int kMaxQuadratureOrder = 512;

class QuadratureRule {
 public:
  QuadratureRule(std::vector<double> nodes, std::vector<double> weights);

  int order() const noexcept { return static_cast<int>(nodes_.size()); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Gauss-Hermite rule for the standard normal measure. Throws ParameterError
/// unless 2 <= order <= 512.
QuadratureRule make_rule(int order);

/// Shared immutable rule for `order`; built once per process.
const QuadratureRule& cached_rule(int order = kDefaultQuadratureOrder);

namespace detail {
[[noreturn]] void throw_non_finite(const char* where, double node);
}

template <typename F>
  requires std::invocable<F, double>
double expect_1d(const QuadratureRule& rule, F&& f) {
  const auto x = rule.nodes();
  const auto w = rule.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = f(x[i]);
    if (!std::isfinite(v)) detail::throw_non_finite("expect_1d", x[i]);
    acc += w[i] * v;
  }
  return acc;
}

template <typename F>
  requires std::invocable<F, double, double>
double expect_2d(const QuadratureRule& rule, F&& f) {
  const auto x = rule.nodes();
  const auto w = rule.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double v = f(x[i], x[j]);
      if (!std::isfinite(v)) detail::throw_non_finite("expect_2d", x[j]);
      inner += w[j] * v;
    }
    acc += w[i] * inner;
  }
  return acc;
}

template <typename F>
  requires std::invocable<F, double, double, double>
double expect_3d(const QuadratureRule& rule, F&& f) {
  return expect_2d(rule, [&](double a, double b) {
    return expect_1d(rule, [&](double c) { return f(a, b, c); });
  });
}

/// Tensor-product expectation over `dim` (2 or 3) independent standard
/// normals; the callback receives the coordinates as a span.
template <typename F>
  requires std::invocable<F, std::span<const double>>
double expect_nd(const QuadratureRule& rule, int dim, F&& f) {
  if (dim == 2) {
    return expect_2d(rule, [&](double a, double b) {
      const double p[2] = {a, b};
      return f(std::span<const double>(p, 2));
    });
  }
  if (dim == 3) {
    return expect_3d(rule, [&](double a, double b, double c) {
      const double p[3] = {a, b, c};
      return f(std::span<const double>(p, 3));
    });
  }
  throw ParameterError("expect_nd: dim must be 2 or 3, got " + std::to_string(dim));
}

struct LogTerm {
  double log_weight;
  double exponent;
};

/// log sum_i exp(log_weight_i + exponent_i), shifted by the maximum.
double log_sum_exp(std::span<const LogTerm> terms);
double log_sum_exp(std::span<const double> values);

// Standard normal helpers.
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
/// log Phi(x), accurate far into the lower tail.
double log_normal_cdf(double x);
/// pdf(x)/Phi(x) without overflow for very negative x.
double normal_hazard_lower(double x);

/// Composite Gauss-Legendre integral of f over [a, b] split into `panels`
/// equal panels (16 nodes each).
double integrate_interval(const std::function<double(double)>& f, double a, double b, int panels);

/// E[f(Z)], Z ~ N(0,1), by composite Gauss-Legendre on [-half_width, half_width]
/// with 0 as a panel edge. Suited to integrands with kinks at the origin.
double expect_normal_composite(const std::function<double(double)>& f, double half_width = 12.0,
                               int panels_per_side = 48);

}  // namespace sglm
