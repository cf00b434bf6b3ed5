#pragma once

// Limits as rho -> 0 at alpha = gamma rho |ln rho|.
//
// With v_{K+1} = +inf the limiting mutual information per sample is
//   min_{1 <= k <= K+1} I_out(E[X^2 1{|X| >= v_k}], E X^2) + P(|X| >= v_k) / gamma
// and, when the minimizer k* is unique, MMSE = E[X^2 1{|X| < v_{k*}}].
// The law is rescaled to E X^2 = 1 before the channel is evaluated; MMSE
// values are reported in the units of the law as given.

#include <optional>
#include <string_view>
#include <vector>

#include "sglm/channel.hpp"
#include "sglm/prior.hpp"

namespace sglm {

struct SublinearOptions {
  ChannelOptions channel{};
  double tie_tolerance = 1e-9;
};

struct SublinearSolution {
  int k_star;
  double limit_mi;
  std::optional<double> mmse;       // absent when the minimizer is not unique
  std::optional<double> gen_error;  // conjectured; absent when not unique
  bool unique;
  double margin;                    // second-best minus best candidate
  std::vector<double> candidates;   // k = 1..K+1
  bool gen_error_conjectured = true;
};

/// The law rescaled so that E X^2 = 1.
DiscreteLaw normalized_law(const DiscreteLaw& law);

/// E[X^2 1{|X| < v_k}] for k = 1..K+1, in the units of `law`.
std::vector<double> plateau_values(const DiscreteLaw& law);

SublinearSolution limit_mutual_info(const DiscreteLaw& law, const Channel& ch, double gamma,
                                    const SublinearOptions& opts = {});

/// Throws CriticalityError when the minimizer is not unique.
double asymptotic_mmse(const DiscreteLaw& law, const Channel& ch, double gamma,
                       const SublinearOptions& opts = {});

/// 0 above gamma_c, 1 below; CriticalityError within 1e-12 of gamma_c.
int aon_threshold_step(const Channel& ch, double gamma);

double gen_error_sublinear(const DiscreteLaw& law, const Channel& ch, double gamma,
                           const SublinearOptions& opts = {});

/// Adds tau E[X^2 1{|X| < v_k}] / 2 to each candidate. Requires 0 <= tau < 2 / (gamma v_K^2).
double limit_mutual_info_side_info(const DiscreteLaw& law, const Channel& ch, double gamma, double tau,
                                   const SublinearOptions& opts = {});

/// "unif", "linear" or "binom" with K atoms (p used by "binom" only).
DiscreteLaw reference_prior(std::string_view name, int k, double p = 0.0);

enum class CellStatus : int { Ok = 0, Critical = 1, Failed = 2 };

struct Heatmap {
  std::vector<double> deltas;
  std::vector<double> gammas;
  std::vector<double> mmse;        // row-major, rows indexed by delta; NaN unless Ok
  std::vector<CellStatus> status;  // same layout
  double at(std::size_t i, std::size_t j) const { return mmse[i * gammas.size() + j]; }
};

Heatmap heatmap(const DiscreteLaw& law, std::string_view activation, const std::vector<double>& deltas,
                const std::vector<double>& gammas, const SublinearOptions& opts = {});

}  // namespace sglm
