#include "sglm/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sglm {

namespace {

constexpr double kSaturationGap = 1e-9;
constexpr double kTieTolerance = 1e-9;
constexpr double kInvPhi = 0.61803398874989484820;

void check_inputs(const SparseDiscretePrior& prior, const RegimeParams& regime) {
  if (std::abs(regime.rho - prior.rho()) > 1e-15 * prior.rho())
    throw ParameterError("potential: regime rho differs from prior rho");
  if (!(regime.gamma > 0.0)) throw ParameterError("potential: gamma must be positive");
}

void check_overlap(const SparseDiscretePrior& prior, double q) {
  if (!(q >= 0.0) || q > prior.law().second_moment())
    throw ParameterError("potential: q must lie in [0, E X^2]");
}

double prior_term(const SparseDiscretePrior& prior, const RegimeParams& regime, double r,
                  const PotentialOptions& opts) {
  return psi(prior, regime.alpha * r / regime.rho, cached_rule(opts.order)) / regime.alpha;
}

double g_of(const SparseDiscretePrior& prior, const RegimeParams& regime, double r,
            const PotentialOptions& opts) {
  return g_rho(prior, regime.gamma, r, cached_rule(opts.order));
}

template <typename F>
double golden_min(F&& f, double a, double b, double tol, double& fmin) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  if (fc <= fd) {
    fmin = fc;
    return c;
  }
  fmin = fd;
  return d;
}

// Grid search followed by golden-section refinement of every local minimum.
// Returns (argmin, min); ties within kTieTolerance go to the larger argument.
template <typename F>
std::pair<double, double> global_min(F&& f, double lo, double hi, int n, double tol,
                                     std::vector<double>* minima) {
  std::vector<double> x(n), v(n);
  for (int i = 0; i < n; ++i) {
    x[i] = lo + (hi - lo) * i / (n - 1);
    v[i] = f(x[i]);
  }
  double best_x = x[0], best_v = v[0];
  auto consider = [&](double xi, double vi) {
    if (vi < best_v - kTieTolerance || (std::abs(vi - best_v) <= kTieTolerance && xi > best_x)) {
      best_x = xi;
      best_v = vi;
    }
  };
  for (int i = 0; i < n; ++i) {
    const bool left = i == 0 || v[i] <= v[i - 1];
    const bool right = i == n - 1 || v[i] <= v[i + 1];
    if (!(left && right)) continue;
    const double a = x[std::max(0, i - 1)];
    const double b = x[std::min(n - 1, i + 1)];
    double fm = 0.0;
    const double xm = golden_min(f, a, b, tol, fm);
    const double xr = fm < v[i] ? xm : x[i];
    const double vr = std::min(fm, v[i]);
    if (minima) minima->push_back(xr);
    consider(xr, vr);
  }
  return {best_x, best_v};
}

// sup_q [I_out(q, E X^2) + r q / 2] - psi(alpha r / rho) / alpha.
double sup_over_q(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime, double r,
                  const PotentialOptions& opts) {
  const double ex2 = prior.law().second_moment();
  auto slope = [&](double q) { return dq_i_pout(ch, q, ex2, opts.channel) + 0.5 * r; };
  double q = 0.0;
  if (slope(0.0) <= 0.0) {
    q = 0.0;
  } else if (slope(ex2) >= 0.0) {
    q = ex2;
  } else {
    double lo = 0.0, hi = ex2;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * ex2; ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    q = 0.5 * (lo + hi);
  }
  return i_pout(ch, q, ex2, opts.channel) + 0.5 * r * q - prior_term(prior, regime, r, opts);
}

}  // namespace

RegimeParams make_regime(double rho, double gamma) {
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("regime: rho must lie in (0,1)");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("regime: gamma must be positive");
  return {rho, gamma, gamma * rho * std::abs(std::log(rho))};
}

double i_rs(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime, double q,
            double r, const PotentialOptions& opts) {
  check_inputs(prior, regime);
  check_overlap(prior, q);
  if (!(r >= 0.0)) throw ParameterError("i_rs: r must be nonnegative");
  const double ex2 = prior.law().second_moment();
  return i_pout(ch, q, ex2, opts.channel) + 0.5 * r * q - prior_term(prior, regime, r, opts);
}

double i_rs_split(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime,
                  double q, double r, const PotentialOptions& opts) {
  check_inputs(prior, regime);
  check_overlap(prior, q);
  if (!(r >= 0.0)) throw ParameterError("i_rs: r must be nonnegative");
  const double ex2 = prior.law().second_moment();
  const double snr = regime.alpha * r / regime.rho;
  return i_p0n(prior, snr, cached_rule(opts.order)) / regime.alpha + i_pout(ch, q, ex2, opts.channel) -
         0.5 * r * (ex2 - q);
}

double r_cap(const SparseDiscretePrior& prior, const RegimeParams& regime, const PotentialOptions& opts) {
  check_inputs(prior, regime);
  const double target = prior.law().second_moment() - kSaturationGap;
  double r = 1.0;
  while (r < opts.r_cap_max && g_of(prior, regime, r, opts) < target) r *= 2.0;
  return std::min(r, opts.r_cap_max);
}

SupResult sup_over_r(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime,
                     double q, const PotentialOptions& opts) {
  check_inputs(prior, regime);
  check_overlap(prior, q);
  const double ex2 = prior.law().second_moment();
  const double io = i_pout(ch, q, ex2, opts.channel);
  auto value_at = [&](double r) { return io + 0.5 * r * q - prior_term(prior, regime, r, opts); };

  const double m = prior.law().mean();
  if (q <= prior.rho() * m * m) return {0.0, io, false};

  auto saturated = [&] {
    const double rc = r_cap(prior, regime, opts);
    return SupResult{rc, value_at(rc), true};
  };
  if (q >= ex2 - kSaturationGap) return saturated();

  double lo = 0.0, hi = 1.0;
  while (g_of(prior, regime, hi, opts) < q) {
    lo = hi;
    hi *= 2.0;
    if (hi > opts.r_cap_max) return saturated();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g_of(prior, regime, mid, opts) < q ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);
  return {r, value_at(r), false};
}

InfSupResult inf_sup(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime,
                     const PotentialOptions& opts) {
  check_inputs(prior, regime);
  if (opts.q_grid < 3) throw ParameterError("inf_sup: q grid needs at least 3 points");
  const double ex2 = prior.law().second_moment();
  InfSupResult out{};
  auto f = [&](double q) { return sup_over_r(prior, ch, regime, std::min(q, ex2), opts).value; };
  const auto [q, v] = global_min(f, 0.0, ex2, opts.q_grid, opts.golden_tol, &out.local_minima);
  out.q_star = q;
  out.value = v;
  out.r_star = sup_over_r(prior, ch, regime, q, opts).r_star;

  if (opts.check_saddle_swap) {
    double r_max = -2.0 * dq_i_pout(ch, ex2, ex2, opts.channel);
    if (!std::isfinite(r_max)) r_max = r_cap(prior, regime, opts);
    auto h = [&](double r) { return sup_over_q(prior, ch, regime, r, opts); };
    out.swap_value = global_min(h, 0.0, r_max, opts.q_grid, opts.golden_tol * r_max, nullptr).second;
  }
  return out;
}

FixedPointResult fixed_point(const SparseDiscretePrior& prior, const Channel& ch,
                             const RegimeParams& regime, double q0, int max_iter, double tol,
                             double damping, const PotentialOptions& opts) {
  check_inputs(prior, regime);
  check_overlap(prior, q0);
  if (!(tol > 0.0)) throw ParameterError("fixed_point: tol must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw ParameterError("fixed_point: damping must lie in (0,1]");
  if (max_iter < 1) throw ParameterError("fixed_point: max_iter must be positive");
  const double ex2 = prior.law().second_moment();
  const double q_top = ex2 * (1.0 - kSaturationGap);
  auto r_of = [&](double q) { return -2.0 * dq_i_pout(ch, q, ex2, opts.channel); };

  FixedPointResult res{};
  double q = std::min(q0, q_top);
  for (int t = 0; t < max_iter; ++t) {
    const double r = r_of(q);
    res.trajectory.emplace_back(q, r);
    const double q_next = std::min(q_top, (1.0 - damping) * q + damping * g_of(prior, regime, r, opts));
    res.iterations = t + 1;
    const bool done = std::abs(q_next - q) <= tol;
    q = q_next;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.q_star = q;
  res.r_star = r_of(q);
  res.trajectory.emplace_back(q, res.r_star);
  res.potential_value = i_rs(prior, ch, regime, q, res.r_star, opts);
  return res;
}

MmseResult mmse_linear_regime(const SparseDiscretePrior& prior, const Channel& ch,
                              const RegimeParams& regime, const PotentialOptions& opts) {
  check_inputs(prior, regime);
  const double ex2 = prior.law().second_moment();
  if (std::abs(ex2 - 1.0) > 1e-9) throw ParameterError("mmse_linear_regime: requires E X^2 = 1");

  const InfSupResult global = inf_sup(prior, ch, regime, opts);
  const FixedPointResult informed = fixed_point(prior, ch, regime, ex2, 2000, 1e-10, 0.5, opts);
  const FixedPointResult algorithmic = fixed_point(prior, ch, regime, kAlgorithmicInit, 2000, 1e-10, 0.5, opts);
  auto potential_at = [&](double q) { return sup_over_r(prior, ch, regime, q, opts).value; };

  const std::pair<double, double> cand[3] = {{global.q_star, global.value},
                                             {informed.q_star, potential_at(informed.q_star)},
                                             {algorithmic.q_star, potential_at(algorithmic.q_star)}};
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    const double dv = cand[i].second - cand[best].second;
    if (dv < -kTieTolerance || (std::abs(dv) <= kTieTolerance && cand[i].first > cand[best].first)) best = i;
  }
  bool ambiguous = false;
  for (std::size_t i = 0; i < 3; ++i)
    if (i != best && std::abs(cand[i].second - cand[best].second) <= kTieTolerance &&
        std::abs(cand[i].first - cand[best].first) > 1e-6)
      ambiguous = true;

  MmseResult out{};
  out.q_star = cand[best].first;
  out.potential = cand[best].second;
  out.mmse = ex2 - out.q_star;
  out.ambiguous = ambiguous;
  out.q_informed = informed.q_star;
  out.q_algorithmic = algorithmic.q_star;
  out.mmse_algorithmic = ex2 - algorithmic.q_star;
  return out;
}

double gen_error_linear_regime(const SparseDiscretePrior& prior, const Channel& ch,
                               const RegimeParams& regime, const PotentialOptions& opts) {
  const MmseResult m = mmse_linear_regime(prior, ch, regime, opts);
  return generalization_error(ch, m.q_star, 1.0, opts.channel);
}

}  // namespace sglm
