#include "sglm/prior.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace sglm {

namespace {

constexpr double kMassTolerance = 1e-9;

double parse_double(std::string_view s, std::string_view context) {
  double v = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ParameterError("cannot parse number '" + std::string(s) + "' in " + std::string(context));
  return v;
}

int parse_int(std::string_view s, std::string_view context) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParameterError("cannot parse integer '" + std::string(s) + "' in " + std::string(context));
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

DiscreteLaw::DiscreteLaw(std::vector<double> support, std::vector<double> mass_pos,
                         std::vector<double> mass_neg)
    : support_(std::move(support)), mass_pos_(std::move(mass_pos)), mass_neg_(std::move(mass_neg)) {
  const std::size_t k = support_.size();
  if (k == 0) throw ParameterError("DiscreteLaw: empty support");
  if (mass_pos_.size() != k || mass_neg_.size() != k)
    throw ParameterError("DiscreteLaw: support and mass vectors differ in length");
  if (!(support_[0] > 0.0)) throw ParameterError("DiscreteLaw: v_1 must be positive");
  for (std::size_t j = 1; j < k; ++j)
    if (!(support_[j] > support_[j - 1]))
      throw ParameterError("DiscreteLaw: support must be strictly increasing");
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!(mass_pos_[j] >= 0.0) || !(mass_neg_[j] >= 0.0))
      throw ParameterError("DiscreteLaw: masses must be nonnegative");
    if (!(mass_pos_[j] + mass_neg_[j] > 0.0))
      throw ParameterError("DiscreteLaw: every support point needs positive mass");
    total += mass_pos_[j] + mass_neg_[j];
  }
  if (std::abs(total - 1.0) > kMassTolerance)
    throw ParameterError("DiscreteLaw: masses sum to " + std::to_string(total) + ", not 1");
  for (std::size_t j = 0; j < k; ++j) {
    mass_pos_[j] /= total;
    mass_neg_[j] /= total;
  }
}

DiscreteLaw DiscreteLaw::dirac_one() { return DiscreteLaw({1.0}, {1.0}, {0.0}); }

DiscreteLaw DiscreteLaw::rademacher() { return DiscreteLaw({1.0}, {0.5}, {0.5}); }

DiscreteLaw DiscreteLaw::uniform(int k) {
  if (k < 1) throw ParameterError("uniform law: K must be >= 1");
  const double a = 6.0 / ((k + 1.0) * (2.0 * k + 1.0));
  std::vector<double> v(k), pos(k, 1.0 / k), neg(k, 0.0);
  for (int i = 0; i < k; ++i) v[i] = (i + 1) * std::sqrt(a);
  return DiscreteLaw(std::move(v), std::move(pos), std::move(neg));
}

DiscreteLaw DiscreteLaw::linear(int k) {
  if (k < 1) throw ParameterError("linear law: K must be >= 1");
  double b = 0.0;
  for (int j = 1; j <= k; ++j) b += 1.0 / (k * static_cast<double>(j) * j);
  std::vector<double> v(k), pos(k), neg(k, 0.0);
  for (int i = 1; i <= k; ++i) {
    v[i - 1] = i * std::sqrt(b);
    pos[i - 1] = 1.0 / (k * static_cast<double>(i) * i * b);
  }
  return DiscreteLaw(std::move(v), std::move(pos), std::move(neg));
}

DiscreteLaw DiscreteLaw::binomial(int k, double p) {
  if (k < 1) throw ParameterError("binomial law: K must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("binomial law: p must lie in (0,1)");
  const double c = 1.0 / ((k - 1.0) * (k - 2.0) * p * p + 3.0 * (k - 1.0) * p + 1.0);
  std::vector<double> v(k), pos(k), neg(k, 0.0);
  for (int i = 1; i <= k; ++i) {
    v[i - 1] = i * std::sqrt(c);
    // C(K-1, i-1) p^{i-1} (1-p)^{K-i}, through lgamma to stay finite for large K.
    const double log_binom = std::lgamma(k) - std::lgamma(i) - std::lgamma(k - i + 1.0);
    pos[i - 1] = std::exp(log_binom + (i - 1) * std::log(p) + (k - i) * std::log1p(-p));
  }
  return DiscreteLaw(std::move(v), std::move(pos), std::move(neg));
}

double DiscreteLaw::mean() const {
  double m = 0.0;
  for (int j = 0; j < size(); ++j) m += (mass_pos_[j] - mass_neg_[j]) * support_[j];
  return m;
}

double DiscreteLaw::second_moment() const {
  double m = 0.0;
  for (int j = 0; j < size(); ++j) m += mass(j) * support_[j] * support_[j];
  return m;
}

std::vector<Atom> DiscreteLaw::atoms() const {
  std::vector<Atom> out;
  for (int j = size() - 1; j >= 0; --j)
    if (mass_neg_[j] > 0.0) out.push_back({-support_[j], mass_neg_[j]});
  for (int j = 0; j < size(); ++j)
    if (mass_pos_[j] > 0.0) out.push_back({support_[j], mass_pos_[j]});
  return out;
}

double DiscreteLaw::tail_second_moment(int k) const {
  if (k < 1 || k > size() + 1) throw ParameterError("tail_second_moment: k out of range");
  double m = 0.0;
  for (int j = k - 1; j < size(); ++j) m += mass(j) * support_[j] * support_[j];
  return m;
}

double DiscreteLaw::tail_probability(int k) const {
  if (k < 1 || k > size() + 1) throw ParameterError("tail_probability: k out of range");
  double m = 0.0;
  for (int j = k - 1; j < size(); ++j) m += mass(j);
  return m;
}

double DiscreteLaw::head_second_moment(int k) const {
  if (k < 1 || k > size() + 1) throw ParameterError("head_second_moment: k out of range");
  double m = 0.0;
  for (int j = 0; j < k - 1; ++j) m += mass(j) * support_[j] * support_[j];
  return m;
}

DiscreteLaw DiscreteLaw::scaled(double factor) const {
  if (!(factor > 0.0)) throw ParameterError("DiscreteLaw::scaled: factor must be positive");
  std::vector<double> v = support_;
  for (double& x : v) x *= factor;
  return DiscreteLaw(std::move(v), mass_pos_, mass_neg_);
}

DiscreteLaw parse_law(std::string_view spec) {
  if (spec == "bernoulli") return DiscreteLaw::dirac_one();
  if (spec == "bernoulli-rademacher" || spec == "rademacher") return DiscreteLaw::rademacher();
  const auto parts = split(spec, '-');
  if (parts.size() == 2 && parts[0] == "unif") return DiscreteLaw::uniform(parse_int(parts[1], spec));
  if (parts.size() == 2 && parts[0] == "linear") return DiscreteLaw::linear(parse_int(parts[1], spec));
  if (parts.size() == 3 && parts[0] == "binom")
    return DiscreteLaw::binomial(parse_int(parts[1], spec), parse_double(parts[2], spec));
  if (spec.starts_with("atoms:")) {
    std::vector<double> v, pos, neg;
    for (auto item : split(spec.substr(6), ',')) {
      const auto f = split(item, ':');
      if (f.size() != 3) throw ParameterError("atom entries must read v:p+:p-, got '" + std::string(item) + "'");
      v.push_back(parse_double(f[0], spec));
      pos.push_back(parse_double(f[1], spec));
      neg.push_back(parse_double(f[2], spec));
    }
    return DiscreteLaw(std::move(v), std::move(pos), std::move(neg));
  }
  throw ParameterError("unknown prior '" + std::string(spec) + "'");
}

SparseDiscretePrior::SparseDiscretePrior(double rho, DiscreteLaw law) : rho_(rho), law_(std::move(law)) {
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("prior: rho must lie in (0,1)");
  for (const Atom& a : law_.atoms()) {
    if (a.value < 0.0) atoms_.push_back({a.value, rho * a.prob});
  }
  atoms_.push_back({0.0, 1.0 - rho});
  for (const Atom& a : law_.atoms()) {
    if (a.value > 0.0) atoms_.push_back({a.value, rho * a.prob});
  }
}

Moments moments(const SparseDiscretePrior& prior) {
  const double m = prior.law().mean();
  const double s = prior.law().second_moment();
  return {m, s, prior.rho() * m, prior.rho() * s};
}

namespace {

// Log-weights of the posterior over the atoms of P_{0,n} given the scalar
// observation y = sqrt(r) x + z, i.e. ln P(x) + sqrt(r) y x - r x^2 / 2.
struct PosteriorWorkspace {
  std::vector<double> values;
  std::vector<double> log_prior;
  std::vector<double> buf;

  explicit PosteriorWorkspace(const SparseDiscretePrior& prior) {
    for (const Atom& a : prior.atoms()) {
      values.push_back(a.value);
      log_prior.push_back(a.value == 0.0 ? std::log1p(-prior.rho()) : std::log(a.prob));
    }
    buf.resize(values.size());
  }

  // Fills buf with the log-weights and returns their maximum.
  double fill(double r, double sqrt_r, double y) {
    double m = -INFINITY;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = values[i];
      buf[i] = log_prior[i] + sqrt_r * y * x - 0.5 * r * x * x;
      m = std::max(m, buf[i]);
    }
    return m;
  }

  // The dominant term is split off so log1p keeps tiny corrections.
  double log_partition(double r, double sqrt_r, double y) {
    const double m = fill(r, sqrt_r, y);
    double rest = 0.0;
    bool skipped = false;
    for (double b : buf) {
      if (!skipped && b == m) {
        skipped = true;
        continue;
      }
      rest += std::exp(b - m);
    }
    return m + std::log1p(rest);
  }

  // Posterior mean and second moment.
  std::pair<double, double> moments(double r, double sqrt_r, double y) {
    const double m = fill(r, sqrt_r, y);
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double w = std::exp(buf[i] - m);
      z += w;
      m1 += w * values[i];
      m2 += w * values[i] * values[i];
    }
    return {m1 / z, m2 / z};
  }
};

void require_snr(double r, const char* where) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw ParameterError(std::string(where) + ": snr must be finite and nonnegative");
}

}  // namespace

ScalarPosterior scalar_denoise(const SparseDiscretePrior& prior, double r, double y) {
  require_snr(r, "scalar_denoise");
  PosteriorWorkspace ws(prior);
  const double sqrt_r = std::sqrt(r);
  const double m = ws.fill(r, sqrt_r, y);
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < ws.values.size(); ++i) {
    const double w = std::exp(ws.buf[i] - m);
    z += w;
    m1 += w * ws.values[i];
    m2 += w * ws.values[i] * ws.values[i];
  }
  const double mean = m1 / z;
  return {mean, std::max(0.0, m2 / z - mean * mean), ws.log_partition(r, sqrt_r, y)};
}

ScalarPosterior scalar_denoise_additive(const SparseDiscretePrior& prior, double noise_var, double obs) {
  if (!(noise_var > 0.0)) throw ParameterError("scalar_denoise_additive: noise variance must be positive");
  if (std::isinf(noise_var)) return scalar_denoise(prior, 0.0, 0.0);
  return scalar_denoise(prior, 1.0 / noise_var, obs / std::sqrt(noise_var));
}

double psi(const SparseDiscretePrior& prior, double r, const QuadratureRule& rule) {
  require_snr(r, "psi");
  if (r == 0.0) return 0.0;
  PosteriorWorkspace ws(prior);
  const double sqrt_r = std::sqrt(r);
  double acc = 0.0;
  for (const Atom& star : prior.atoms()) {
    acc += star.prob * expect_1d(rule, [&](double z) {
      return ws.log_partition(r, sqrt_r, sqrt_r * star.value + z);
    });
  }
  return acc;
}

double psi_prime_at_zero(const SparseDiscretePrior& prior) {
  const double m = prior.rho() * prior.law().mean();
  return 0.5 * m * m;
}

double psi_prime_at_infinity(const SparseDiscretePrior& prior) {
  return 0.5 * prior.rho() * prior.law().second_moment();
}

double psi_prime(const SparseDiscretePrior& prior, double r, const QuadratureRule& rule) {
  require_snr(r, "psi_prime");
  if (r == 0.0) return psi_prime_at_zero(prior);
  PosteriorWorkspace ws(prior);
  const double sqrt_r = std::sqrt(r);
  double acc = 0.0;
  for (const Atom& star : prior.atoms()) {
    if (star.value == 0.0) continue;
    acc += star.prob * star.value * expect_1d(rule, [&](double z) {
      return ws.moments(r, sqrt_r, sqrt_r * star.value + z).first;
    });
  }
  return 0.5 * acc;
}

double i_p0n(const SparseDiscretePrior& prior, double r, const QuadratureRule& rule) {
  return 0.5 * r * prior.rho() * prior.law().second_moment() - psi(prior, r, rule);
}

double scalar_mmse(const SparseDiscretePrior& prior, double r, const QuadratureRule& rule) {
  require_snr(r, "scalar_mmse");
  PosteriorWorkspace ws(prior);
  const double sqrt_r = std::sqrt(r);
  double acc = 0.0;
  for (const Atom& star : prior.atoms()) {
    acc += star.prob * expect_1d(rule, [&](double z) {
      const double mean = ws.moments(r, sqrt_r, sqrt_r * star.value + z).first;
      return (star.value - mean) * (star.value - mean);
    });
  }
  return acc;
}

double g_rho(const SparseDiscretePrior& prior, double gamma, double r, const QuadratureRule& rule) {
  if (!(gamma > 0.0)) throw ParameterError("g_rho: gamma must be positive");
  if (!(r >= 0.0)) throw ParameterError("g_rho: r must be nonnegative");
  const double rho = prior.rho();
  const double snr_scale = gamma * std::abs(std::log(rho));  // alpha / rho
  return 2.0 / rho * psi_prime(prior, snr_scale * r, rule);
}

BracketPoints bracket_points(const SparseDiscretePrior& prior, double gamma, int k,
                             const QuadratureRule& rule) {
  const double rho = prior.rho();
  if (!(rho < std::exp(-1.0))) throw RegimeError("bracket_points: requires rho < 1/e");
  if (k < 1 || k > prior.law().size()) throw ParameterError("bracket_points: k out of range");
  if (!(gamma > 0.0)) throw ParameterError("bracket_points: gamma must be positive");
  const double v = prior.law().support()[k - 1];
  const double eps = std::pow(std::abs(std::log(rho)), -0.25);
  const double r_lo = 2.0 * (1.0 - eps) / (gamma * v * v);
  const double r_hi = 2.0 * (1.0 + eps) / (gamma * v * v);
  return {g_rho(prior, gamma, r_lo, rule), g_rho(prior, gamma, r_hi, rule), r_lo, r_hi};
}

}  // namespace sglm
