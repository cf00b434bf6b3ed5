#include "sglm/quadrature.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

namespace sglm {

QuadratureRule::QuadratureRule(std::vector<double> nodes, std::vector<double> weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
  if (nodes_.size() != weights_.size() || nodes_.empty())
    throw ParameterError("QuadratureRule: nodes and weights must be nonempty and of equal size");
}

namespace {

// Orthonormal Hermite polynomials for N(0,1):
//   p_{k+1}(x) = (x p_k(x) - sqrt(k) p_{k-1}(x)) / sqrt(k+1).
// Returns p_n(x)/p_n'(x) and the Christoffel weight 1 / sum_{k<n} p_k(x)^2.
// Values are rescaled on the fly; the weight underflows cleanly to 0 in the
// far tails and is then floored at the smallest subnormal.
struct HermiteEval {
  double newton_step;
  double weight;
};

HermiteEval eval_hermite(int n, double x) {
  double pm1 = 0.0;
  double p = 1.0;
  double sum = 1.0;  // p_0^2
  double log_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    const double next = (x * p - std::sqrt(static_cast<double>(k)) * pm1) / std::sqrt(k + 1.0);
    pm1 = p;
    p = next;
    if (k + 1 < n) sum += p * p;
    const double mag = std::abs(p);
    if (mag > 1e100) {
      pm1 /= mag;
      p /= mag;
      sum /= mag * mag;
      log_scale += std::log(mag);
    }
  }
  // p = p_n, pm1 = p_{n-1}; p_n' = sqrt(n) p_{n-1}.
  const double step = p / (std::sqrt(static_cast<double>(n)) * pm1);
  const double log_w = -std::log(sum) - 2.0 * log_scale;
  return {step, std::exp(log_w)};
}

}  // namespace

QuadratureRule make_rule(int order) {
  if (order < kMinQuadratureOrder || order > kMaxQuadratureOrder)
    throw ParameterError("make_rule: order must lie in [2, 512], got " + std::to_string(order));

  // Golub-Welsch eigenvalues as starting points, then Newton polish.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order - 1);
  for (int k = 1; k < order; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> x(solver.eigenvalues().data(), solver.eigenvalues().data() + order);
  std::sort(x.begin(), x.end());

  std::vector<double> w(order);
  for (int i = 0; i < order; ++i) {
    for (int it = 0; it < 8; ++it) {
      const double step = eval_hermite(order, x[i]).newton_step;
      x[i] -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x[i]))) break;
    }
  }
  // Exact symmetry about the origin.
  for (int i = 0; i < order / 2; ++i) {
    const double a = 0.5 * (x[order - 1 - i] - x[i]);
    x[i] = -a;
    x[order - 1 - i] = a;
  }
  if (order % 2 == 1) x[order / 2] = 0.0;
  for (int i = 0; i < order; ++i) w[i] = eval_hermite(order, x[i]).weight;
  for (int i = 0; i < order / 2; ++i) {
    const double a = 0.5 * (w[i] + w[order - 1 - i]);
    w[i] = a;
    w[order - 1 - i] = a;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& wi : w) wi = std::max(wi / total, std::numeric_limits<double>::denorm_min());
  return QuadratureRule(std::move(x), std::move(w));
}

const QuadratureRule& cached_rule(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, std::make_unique<QuadratureRule>(make_rule(order))).first;
  return *it->second;
}

namespace detail {
void throw_non_finite(const char* where, double node) {
  throw EvaluationError(std::string(where) + ": integrand is not finite", node);
}
}  // namespace detail

double log_sum_exp(std::span<const LogTerm> terms) {
  if (terms.empty()) throw ParameterError("log_sum_exp: no terms");
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) m = std::max(m, t.log_weight + t.exponent);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (const auto& t : terms) s += std::exp(t.log_weight + t.exponent - m);
  return m + std::log(s);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw ParameterError("log_sum_exp: no terms");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_normal_cdf(double x) {
  if (x > -30.0) {
    const double p = normal_cdf(x);
    return x > 0.0 ? std::log1p(-normal_cdf(-x)) : std::log(p);
  }
  // Asymptotic expansion of the Mills ratio.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - kLogSqrt2Pi - std::log(-x) + std::log(series);
}

double normal_hazard_lower(double x) {
  return std::exp(-0.5 * x * x - kLogSqrt2Pi - log_normal_cdf(x));
}

double integrate_interval(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels < 1) throw ParameterError("integrate_interval: panels must be positive");
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    const double hi = (i + 1 == panels) ? b : lo + h;
    acc += boost::math::quadrature::gauss<double, 16>::integrate(f, lo, hi);
  }
  return acc;
}

double expect_normal_composite(const std::function<double(double)>& f, double half_width,
                               int panels_per_side) {
  auto weighted = [&](double z) {
    const double v = f(z);
    if (!std::isfinite(v)) detail::throw_non_finite("expect_normal_composite", z);
    return v * normal_pdf(z);
  };
  return integrate_interval(weighted, -half_width, 0.0, panels_per_side) +
         integrate_interval(weighted, 0.0, half_width, panels_per_side);
}

}  // namespace sglm
