#include "sglm/sublinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sglm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Channel and prior parts of each candidate, for the normalized law.
struct CandidateTerms {
  std::vector<double> info;  // I_out(E[X^2 1{|X| >= v_k}], 1)
  std::vector<double> prob;  // P(|X| >= v_k)
  std::vector<double> head;  // E[X^2 1{|X| < v_k}]
};

double channel_info(const Channel& ch, double q, const ChannelOptions& opts) {
  q = std::clamp(q, 0.0, 1.0);
  // Noiseless continuous outputs reveal every overlap below 1 exactly.
  if (ch.delta() == 0.0 && !ch.discrete_output()) return q >= 1.0 ? 0.0 : kInf;
  return i_pout(ch, q, 1.0, opts);
}

CandidateTerms candidate_terms(const DiscreteLaw& unit, const Channel& ch, const ChannelOptions& opts) {
  CandidateTerms t;
  for (int k = 1; k <= unit.size() + 1; ++k) {
    t.info.push_back(channel_info(ch, unit.tail_second_moment(k), opts));
    t.prob.push_back(unit.tail_probability(k));
    t.head.push_back(unit.head_second_moment(k));
  }
  return t;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("sublinear: gamma must be positive");
}

SublinearSolution select(const CandidateTerms& t, double gamma, double tau, double scale,
                         const SublinearOptions& opts) {
  SublinearSolution s{};
  const std::size_t n = t.info.size();
  for (std::size_t k = 0; k < n; ++k) s.candidates.push_back(t.info[k] + t.prob[k] / gamma + 0.5 * tau * t.head[k]);
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (s.candidates[k] < s.candidates[best]) best = k;
  double second = kInf;
  for (std::size_t k = 0; k < n; ++k)
    if (k != best) second = std::min(second, s.candidates[k]);
  s.k_star = static_cast<int>(best) + 1;
  s.limit_mi = s.candidates[best];
  s.margin = second - s.limit_mi;
  s.unique = s.margin > opts.tie_tolerance;
  if (s.unique) s.mmse = scale * t.head[best];
  return s;
}

[[noreturn]] void throw_critical(const CandidateTerms& t, const SublinearSolution& s, double scale) {
  const std::size_t best = static_cast<std::size_t>(s.k_star - 1);
  double lo = t.head[best], hi = t.head[best];
  for (std::size_t k = 0; k < s.candidates.size(); ++k) {
    if (std::abs(s.candidates[k] - s.limit_mi) <= s.margin + 1e-300 && k != best) {
      lo = std::min(lo, t.head[k]);
      hi = std::max(hi, t.head[k]);
    }
  }
  throw CriticalityError("asymptotic MMSE undefined: minimizer over plateaus is not unique", scale * lo,
                         scale * hi);
}

}  // namespace

DiscreteLaw normalized_law(const DiscreteLaw& law) { return law.scaled(1.0 / std::sqrt(law.second_moment())); }

std::vector<double> plateau_values(const DiscreteLaw& law) {
  std::vector<double> out;
  for (int k = 1; k <= law.size() + 1; ++k) out.push_back(law.head_second_moment(k));
  return out;
}

SublinearSolution limit_mutual_info(const DiscreteLaw& law, const Channel& ch, double gamma,
                                    const SublinearOptions& opts) {
  check_gamma(gamma);
  const DiscreteLaw unit = normalized_law(law);
  const CandidateTerms t = candidate_terms(unit, ch, opts.channel);
  SublinearSolution s = select(t, gamma, 0.0, law.second_moment(), opts);
  if (s.unique) s.gen_error = generalization_error(ch, std::clamp(1.0 - t.head[s.k_star - 1], 0.0, 1.0), 1.0, opts.channel);
  return s;
}

double asymptotic_mmse(const DiscreteLaw& law, const Channel& ch, double gamma, const SublinearOptions& opts) {
  check_gamma(gamma);
  const CandidateTerms t = candidate_terms(normalized_law(law), ch, opts.channel);
  const double scale = law.second_moment();
  const SublinearSolution s = select(t, gamma, 0.0, scale, opts);
  if (!s.unique) throw_critical(t, s, scale);
  return *s.mmse;
}

int aon_threshold_step(const Channel& ch, double gamma) {
  check_gamma(gamma);
  const double gc = gamma_c(ch);
  if (std::abs(gamma - gc) <= 1e-12) throw CriticalityError("gamma equals gamma_c", 0.0, 1.0);
  return gamma > gc ? 0 : 1;
}

double gen_error_sublinear(const DiscreteLaw& law, const Channel& ch, double gamma, const SublinearOptions& opts) {
  check_gamma(gamma);
  const CandidateTerms t = candidate_terms(normalized_law(law), ch, opts.channel);
  const SublinearSolution s = select(t, gamma, 0.0, 1.0, opts);
  if (!s.unique) throw_critical(t, s, law.second_moment());
  return generalization_error(ch, std::clamp(1.0 - *s.mmse, 0.0, 1.0), 1.0, opts.channel);
}

double limit_mutual_info_side_info(const DiscreteLaw& law, const Channel& ch, double gamma, double tau,
                                   const SublinearOptions& opts) {
  check_gamma(gamma);
  const DiscreteLaw unit = normalized_law(law);
  const double v_top = unit.support().back();
  if (!(tau >= 0.0) || !(tau < 2.0 / (gamma * v_top * v_top)))
    throw RegimeError("side information: tau must lie in [0, 2/(gamma v_K^2))");
  const CandidateTerms t = candidate_terms(unit, ch, opts.channel);
  return select(t, gamma, tau, 1.0, opts).limit_mi;
}

DiscreteLaw reference_prior(std::string_view name, int k, double p) {
  if (name == "unif") return DiscreteLaw::uniform(k);
  if (name == "linear") return DiscreteLaw::linear(k);
  if (name == "binom") return DiscreteLaw::binomial(k, p);
  throw ParameterError("unknown reference prior '" + std::string(name) + "'");
}

Heatmap heatmap(const DiscreteLaw& law, std::string_view activation, const std::vector<double>& deltas,
                const std::vector<double>& gammas, const SublinearOptions& opts) {
  if (deltas.empty() || gammas.empty()) throw ParameterError("heatmap: grids must be nonempty");
  Heatmap h{deltas, gammas, {}, {}};
  h.mmse.assign(deltas.size() * gammas.size(), std::numeric_limits<double>::quiet_NaN());
  h.status.assign(h.mmse.size(), CellStatus::Failed);
  const DiscreteLaw unit = normalized_law(law);
  const double scale = law.second_moment();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    CandidateTerms t;
    try {
      t = candidate_terms(unit, Channel::parse(activation, deltas[i]), opts.channel);
    } catch (const Error&) {
      continue;
    }
    for (std::size_t j = 0; j < gammas.size(); ++j) {
      const std::size_t cell = i * gammas.size() + j;
      if (!(gammas[j] > 0.0)) continue;
      const SublinearSolution s = select(t, gammas[j], 0.0, scale, opts);
      if (s.unique) {
        h.mmse[cell] = *s.mmse;
        h.status[cell] = CellStatus::Ok;
      } else {
        h.status[cell] = CellStatus::Critical;
      }
    }
  }
  return h;
}

}  // namespace sglm
