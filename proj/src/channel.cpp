#include "sglm/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace sglm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tanh_phi(double x) { return std::tanh(x); }
double tanh_dphi(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
double tanh_d2phi(double x) {
  const double t = std::tanh(x);
  return -2.0 * t * (1.0 - t * t);
}

double erf_phi(double x) { return std::erf(x); }
double erf_dphi(double x) { return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x); }
double erf_d2phi(double x) { return -4.0 * x / std::sqrt(std::numbers::pi) * std::exp(-x * x); }

const std::array<CustomActivation, 2>& registry() {
  static const std::array<CustomActivation, 2> r = {{
      {"tanh", tanh_phi, tanh_dphi, tanh_d2phi, 1.0, 1.0, 4.0 / (3.0 * std::sqrt(3.0))},
      {"erf", erf_phi, erf_dphi, erf_d2phi, 1.0, 2.0 / std::sqrt(std::numbers::pi),
       4.0 / std::sqrt(std::numbers::pi) * std::sqrt(0.5) * std::exp(-0.5)},
  }};
  return r;
}

double log_gauss(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * d * d / var;
}

double ramp(double x) { return x > 0.0 ? x : 0.0; }
double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

// Piece of a mixture posterior: log-weight, offset of the mean from omega and
// central second moment about omega.
struct Piece {
  double log_w;
  double offset;
  double second;
};

// N(omega, var) restricted to (0, inf) (upper = true) or (-inf, 0).
Piece truncated_piece(double log_w, double omega, double var, bool upper) {
  const double s = std::sqrt(var);
  const double t = omega / s;
  if (upper) {
    const double h = normal_hazard_lower(t);
    const double v = var * std::max(0.0, 1.0 - h * (h + t));
    const double d = s * h;
    return {log_w + log_normal_cdf(t), d, v + d * d};
  }
  const double h = normal_hazard_lower(-t);
  const double v = var * std::max(0.0, 1.0 - h * (h - t));
  const double d = -s * h;
  return {log_w + log_normal_cdf(-t), d, v + d * d};
}

OutputPosterior combine(const Piece* pieces, int n, double omega, double var) {
  double m = -kInf;
  for (int i = 0; i < n; ++i) m = std::max(m, pieces[i].log_w);
  if (!std::isfinite(m)) return {m, omega, var, 0.0};
  double z = 0.0, d = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(pieces[i].log_w - m);
    z += w;
    d += w * pieces[i].offset;
    s2 += w * pieces[i].second;
  }
  d /= z;
  s2 /= z;
  return {m + std::log(z), omega + d, std::max(0.0, s2 - d * d), d / var};
}

void require_noise(const Channel& ch, const char* where) {
  if (ch.delta() < 0.0) throw ParameterError(std::string(where) + ": noise variance must be nonnegative");
  if (ch.delta() == 0.0 && !ch.discrete_output())
    throw UnsupportedConfigError(std::string(where) + ": Delta = 0 is only supported for the sign activation");
}

void require_overlap(double q, double rho_cap, const char* where) {
  if (!(rho_cap > 0.0)) throw ParameterError(std::string(where) + ": rho must be positive");
  if (!(q >= 0.0) || q > rho_cap)
    throw ParameterError(std::string(where) + ": q must lie in [0, rho]");
}

// Binary entropy of Phi(t) in nats.
double binary_entropy_probit(double t) {
  const double lp = log_normal_cdf(t);
  const double lm = log_normal_cdf(-t);
  return -std::exp(lp) * lp - std::exp(lm) * lm;
}

// E[f(ratio V)], V ~ N(0,1), for f decaying fast in its argument. Large ratios
// integrate in t = ratio v so the rule sees f on its natural scale.
double expect_scaled(const std::function<double(double)>& f, double ratio) {
  if (ratio <= 1.0) return expect_normal_composite([&](double v) { return f(ratio * v); });
  const double half = std::min(12.0 * ratio, 40.0);
  auto weighted = [&](double t) { return f(t) * normal_pdf(t / ratio) / ratio; };
  return integrate_interval(weighted, -half, 0.0, 48) + integrate_interval(weighted, 0.0, half, 48);
}

// [lo, hi] containing phi(x) for x in omega +/- 10 sqrt(var).
std::pair<double, double> output_range(const Channel& ch, double omega, double var) {
  const double spread = 10.0 * std::sqrt(var);
  switch (ch.activation()) {
    case Activation::Linear:
      return {omega - spread, omega + spread};
    case Activation::Relu:
      return {ramp(omega - spread), ramp(omega + spread)};
    case Activation::Sign:
      return {-1.0, 1.0};
    case Activation::Custom:
      return {-ch.custom_activation()->sup_phi, ch.custom_activation()->sup_phi};
  }
  return {0.0, 0.0};
}

// Integral over y of f(Z(y), g(y)) for the continuous-output channel.
template <typename F>
double integrate_over_outputs(const Channel& ch, double omega, double var, const ChannelOptions& opts,
                              F&& f) {
  const double pad = 10.0 * std::sqrt(ch.delta());
  auto [lo, hi] = output_range(ch, omega, var);
  lo -= pad;
  hi += pad;
  const int panels = std::max(8, static_cast<int>(std::ceil((hi - lo) / (0.5 * std::sqrt(ch.delta())))));
  return integrate_interval(
      [&](double y) {
        const OutputPosterior post = output_posterior(ch, y, omega, var, opts);
        if (post.log_z < -700.0) return 0.0;
        return f(std::exp(post.log_z), post);
      },
      lo, hi, panels);
}

double i_pout_quadrature(const Channel& ch, double q, double rho_cap, const ChannelOptions& opts) {
  const double var = rho_cap - q;
  auto conditional_entropy = [&](double v) {
    const double omega = std::sqrt(q) * v;
    return integrate_over_outputs(ch, omega, var, opts,
                                  [](double z, const OutputPosterior& p) { return -z * p.log_z; });
  };
  const double h_given_v = q == 0.0 ? conditional_entropy(0.0)
                                    : expect_1d(cached_rule(opts.outer_order), conditional_entropy);
  return h_given_v - 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * ch.delta());
}

double dq_i_pout_quadrature(const Channel& ch, double q, double rho_cap, const ChannelOptions& opts) {
  const double var = rho_cap - q;
  auto fisher = [&](double v) {
    const double omega = std::sqrt(q) * v;
    return integrate_over_outputs(ch, omega, var, opts,
                                  [](double z, const OutputPosterior& p) { return z * p.g * p.g; });
  };
  const double e = q == 0.0 ? fisher(0.0) : expect_1d(cached_rule(opts.outer_order), fisher);
  return -0.5 * e;
}

// Left limit of dI/dq at q = rho_cap.
double dq_i_pout_endpoint(const Channel& ch, double rho_cap, const ChannelOptions& opts) {
  switch (ch.activation()) {
    case Activation::Linear:
      return -0.5 / ch.delta();
    case Activation::Relu:
      return -0.25 / ch.delta();
    case Activation::Sign:
      return -kInf;
    case Activation::Custom: {
      const auto* c = ch.custom_activation();
      const double s = std::sqrt(rho_cap);
      return -0.5 / ch.delta() *
             expect_1d(cached_rule(opts.outer_order), [&](double v) {
               const double d = c->dphi(s * v);
               return d * d;
             });
    }
  }
  return 0.0;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

const CustomActivation& find_custom_activation(std::string_view name) {
  for (const auto& c : registry())
    if (c.name == name) return c;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

std::vector<std::string> custom_activation_names() {
  std::vector<std::string> out;
  for (const auto& c : registry()) out.push_back(c.name);
  return out;
}

Channel::Channel(Activation a, double delta, const CustomActivation* custom)
    : activation_(a), delta_(delta), custom_(custom) {
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw ParameterError("Channel: noise variance must be finite and nonnegative");
}

Channel Channel::custom(std::string_view name, double delta) {
  return Channel(Activation::Custom, delta, &find_custom_activation(name));
}

Channel Channel::parse(std::string_view activation, double delta) {
  if (activation == "linear") return linear(delta);
  if (activation == "sign") return sign(delta);
  if (activation == "relu") return relu(delta);
  return custom(activation, delta);
}

std::string Channel::name() const {
  switch (activation_) {
    case Activation::Linear: return "linear";
    case Activation::Sign: return "sign";
    case Activation::Relu: return "relu";
    case Activation::Custom: return custom_->name;
  }
  return {};
}

double Channel::phi(double x) const {
  switch (activation_) {
    case Activation::Linear: return x;
    case Activation::Sign: return sign_of(x);
    case Activation::Relu: return ramp(x);
    case Activation::Custom: return custom_->phi(x);
  }
  return 0.0;
}

double Channel::dphi(double x) const {
  switch (activation_) {
    case Activation::Linear: return 1.0;
    case Activation::Sign: return 0.0;
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Custom: return custom_->dphi(x);
  }
  return 0.0;
}

double pout_density(const Channel& ch, double y, double x) {
  require_noise(ch, "pout_density");
  if (ch.discrete_output()) return y == sign_of(x) ? 1.0 : 0.0;
  return std::exp(log_gauss(y, ch.phi(x), ch.delta()));
}

ChannelScore score(const Channel& ch, double y, double x) {
  if (!(ch.delta() > 0.0)) throw UnsupportedConfigError("score: requires Delta > 0");
  const double f = ch.phi(x);
  return {log_gauss(y, f, ch.delta()), (y - f) * ch.dphi(x) / ch.delta()};
}

OutputPosterior output_posterior(const Channel& ch, double y, double omega, double var,
                                 const ChannelOptions& opts) {
  require_noise(ch, "output_posterior");
  if (!(var >= 0.0)) throw ParameterError("output_posterior: variance must be nonnegative");
  const double delta = ch.delta();

  if (var == 0.0) {
    if (ch.discrete_output()) {
      const bool hit = y == sign_of(omega);
      return {hit ? 0.0 : -kInf, omega, 0.0, 0.0};
    }
    const ChannelScore s = score(ch, y, omega);
    return {s.u, omega, 0.0, s.u_prime};
  }

  switch (ch.activation()) {
    case Activation::Linear: {
      const double tot = delta + var;
      return {log_gauss(y, omega, tot), omega + var * (y - omega) / tot, var * delta / tot, (y - omega) / tot};
    }
    case Activation::Sign: {
      const double sd = std::sqrt(var);
      if (delta == 0.0) {
        if (y != 1.0 && y != -1.0) return {-kInf, omega, var, 0.0};
        const double t = y * omega / sd;
        const double h = normal_hazard_lower(t);
        return {log_normal_cdf(t), omega + y * sd * h, var * std::max(0.0, 1.0 - h * (t + h)), y * h / sd};
      }
      const Piece p[2] = {truncated_piece(log_gauss(y, 1.0, delta), omega, var, true),
                          truncated_piece(log_gauss(y, -1.0, delta), omega, var, false)};
      return combine(p, 2, omega, var);
    }
    case Activation::Relu: {
      const double tot = delta + var;
      const double mu = (omega * delta + y * var) / tot;
      const double sig2 = delta * var / tot;
      Piece pos = truncated_piece(log_gauss(y, omega, tot), mu, sig2, true);
      pos.offset += mu - omega;
      // Second moment about omega rather than about mu.
      pos.second += (mu - omega) * (mu - omega) + 2.0 * (mu - omega) * (pos.offset - (mu - omega));
      const Piece p[2] = {truncated_piece(log_gauss(y, 0.0, delta), omega, var, false), pos};
      return combine(p, 2, omega, var);
    }
    case Activation::Custom: {
      const auto& rule = cached_rule(opts.inner_order);
      const auto x = rule.nodes();
      const auto w = rule.weights();
      const double sd = std::sqrt(var);
      double m = -kInf;
      std::vector<double> lw(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        lw[i] = std::log(w[i]) + log_gauss(y, ch.phi(omega + sd * x[i]), delta);
        m = std::max(m, lw[i]);
      }
      double z = 0.0, d = 0.0, s2 = 0.0, g = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = std::exp(lw[i] - m);
        const double xi = omega + sd * x[i];
        z += p;
        d += p * sd * x[i];
        s2 += p * var * x[i] * x[i];
        g += p * (y - ch.phi(xi)) * ch.dphi(xi) / delta;
      }
      d /= z;
      return {m + std::log(z), omega + d, std::max(0.0, s2 / z - d * d), g / z};
    }
  }
  return {};
}

double i_pout(const Channel& ch, double q, double rho_cap, const ChannelOptions& opts) {
  require_overlap(q, rho_cap, "i_pout");
  require_noise(ch, "i_pout");
  if (q == rho_cap) return 0.0;
  const double var = rho_cap - q;
  if (ch.discrete_output()) {
    if (q == 0.0) return std::numbers::ln2;
    const double ratio = std::sqrt(q / var);
    return expect_scaled(binary_entropy_probit, ratio);
  }
  if (ch.activation() == Activation::Linear && !opts.force_quadrature)
    return 0.5 * std::log1p(var / ch.delta());
  return i_pout_quadrature(ch, q, rho_cap, opts);
}

double dq_i_pout(const Channel& ch, double q, double rho_cap, const ChannelOptions& opts) {
  require_overlap(q, rho_cap, "dq_i_pout");
  require_noise(ch, "dq_i_pout");
  if (q == rho_cap) return dq_i_pout_endpoint(ch, rho_cap, opts);
  const double var = rho_cap - q;
  if (ch.discrete_output()) {
    const double ratio = std::sqrt(q / var);
    const double e =
        expect_scaled([](double t) { return normal_hazard_lower(t) * normal_hazard_lower(-t); }, ratio);
    return -0.5 * e / var;
  }
  if (ch.activation() == Activation::Linear && !opts.force_quadrature)
    return -0.5 / (ch.delta() + var);
  return dq_i_pout_quadrature(ch, q, rho_cap, opts);
}

std::optional<double> gamma_c_closed_form(const Channel& ch) {
  const double delta = ch.delta();
  switch (ch.activation()) {
    case Activation::Linear:
      return delta == 0.0 ? 0.0 : 2.0 / std::log1p(1.0 / delta);
    case Activation::Sign: {
      if (delta == 0.0) return 1.0 / std::numbers::ln2;
      const double sd = std::sqrt(delta);
      // Transition of the softplus sits at z = -1/sqrt(Delta); fine panels.
      const double e = integrate_interval(
          [&](double z) { return normal_pdf(z) * softplus(-2.0 * (1.0 + sd * z) / delta); }, -40.0, 40.0,
          1600);
      return 1.0 / (std::numbers::ln2 - e);
    }
    case Activation::Relu: {
      if (delta == 0.0) return 0.0;
      const double c = 0.5 * std::log(delta / (1.0 + delta));
      const double sq = std::sqrt(1.0 + delta);
      auto integrand = [&](double z) {
        const double a = c + z * z / (2.0 * (1.0 + delta)) + log_normal_cdf(z / sq);
        const double log_h = a > std::log(0.5) ? a + std::log1p(0.5 * std::exp(-a))
                                                : std::log(0.5) + std::log1p(2.0 * std::exp(a));
        return std::exp(-0.5 * z * z - kLogSqrt2Pi + log_h) * log_h;
      };
      // n(z) h(z) decays like exp(-z^2 Delta / (2 (1 + Delta))).
      const double half = std::max(40.0, std::sqrt(160.0 * (1.0 + delta) / delta));
      const double e = integrate_interval(integrand, -half, half, static_cast<int>(8.0 * half));
      return 4.0 * delta / (1.0 - 4.0 * delta * e);
    }
    case Activation::Custom:
      return std::nullopt;
  }
  return std::nullopt;
}

double gamma_c_numeric(const Channel& ch, const ChannelOptions& opts) {
  ChannelOptions o = opts;
  o.force_quadrature = true;
  const double info = i_pout(ch, 0.0, 1.0, o);
  if (!(info > 0.0)) throw InfiniteThresholdError("gamma_c: I_out(0,1) vanishes, threshold is infinite");
  return 1.0 / info;
}

double gamma_c(const Channel& ch, const ChannelOptions& opts) {
  if (auto closed = gamma_c_closed_form(ch)) return *closed;
  return gamma_c_numeric(ch, opts);
}

double conditional_output_mean(const Channel& ch, double omega, double var, const ChannelOptions& opts) {
  if (!(var >= 0.0)) throw ParameterError("conditional_output_mean: variance must be nonnegative");
  if (var == 0.0) return ch.phi(omega);
  const double s = std::sqrt(var);
  switch (ch.activation()) {
    case Activation::Linear: return omega;
    case Activation::Sign: return std::erf(omega / (s * std::numbers::sqrt2));
    case Activation::Relu: return omega * normal_cdf(omega / s) + s * normal_pdf(omega / s);
    case Activation::Custom:
      return expect_1d(cached_rule(opts.inner_order), [&](double w) { return ch.phi(omega + s * w); });
  }
  return 0.0;
}

double generalization_error(const Channel& ch, double q, double rho_cap, const ChannelOptions& opts) {
  require_overlap(q, rho_cap, "generalization_error");
  const double sq = std::sqrt(q);
  const double sr = std::sqrt(rho_cap);
  const double e = expect_normal_composite([&](double v) {
    const double d = ch.phi(sr * v) - conditional_output_mean(ch, sq * v, rho_cap - q, opts);
    return d * d;
  });
  return ch.delta() + e;
}

double output_variance(const Channel& ch, double rho_cap) {
  return generalization_error(ch, 0.0, rho_cap) - ch.delta();
}

}  // namespace sglm
