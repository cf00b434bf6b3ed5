#pragma once

// Replica-symmetric potential of the sparse GLM at finite (rho, alpha):
//   i_RS(q, r) = I_out(q, E X^2) + r q / 2 - psi(alpha r / rho) / alpha,
// with alpha = gamma rho |ln rho|. The inner supremum over r is attained at
// the root of g_rho(r) = q; the outer infimum over q is found on a grid and
// refined by golden-section search around every local minimum.

#include <optional>
#include <vector>

#include "sglm/channel.hpp"
#include "sglm/prior.hpp"

namespace sglm {

struct RegimeParams {
  double rho;
  double gamma;
  double alpha;  // gamma rho |ln rho|
};

RegimeParams make_regime(double rho, double gamma);

struct PotentialOptions {
  int order = kDefaultQuadratureOrder;  // rule used by psi and psi'
  ChannelOptions channel{};
  int q_grid = 201;
  double golden_tol = 1e-10;
  double r_cap_max = 1e6;
  /// Also evaluate inf_r sup_q (slow; used for cross-checks).
  bool check_saddle_swap = false;
};

double i_rs(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime, double q,
            double r, const PotentialOptions& opts = {});
/// (1/alpha) I_{P0,n}(alpha r / rho) + I_out(q, E X^2) - r (E X^2 - q) / 2.
double i_rs_split(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime,
                  double q, double r, const PotentialOptions& opts = {});

struct SupResult {
  double r_star;
  double value;
  bool saturated;  // q too close to E X^2 for a finite maximizer below r_cap
};

SupResult sup_over_r(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime,
                     double q, const PotentialOptions& opts = {});

/// Smallest r (up to doubling) with g_rho(r) >= E X^2 - 1e-9, capped at r_cap_max.
double r_cap(const SparseDiscretePrior& prior, const RegimeParams& regime, const PotentialOptions& opts = {});

struct InfSupResult {
  double q_star;
  double r_star;
  double value;
  std::vector<double> local_minima;  // refined q of every local minimum found
  std::optional<double> swap_value;  // inf_r sup_q, if requested
};

InfSupResult inf_sup(const SparseDiscretePrior& prior, const Channel& ch, const RegimeParams& regime,
                     const PotentialOptions& opts = {});

struct FixedPointResult {
  double q_star;
  double r_star;
  double potential_value;  // i_RS(q*, r*)
  int iterations;
  bool converged;
  std::vector<std::pair<double, double>> trajectory;  // (q_t, r_t)
};

/// Damped iteration r_t = -2 dI_out/dq(q_t), q_{t+1} = (1-theta) q_t + theta g_rho(r_t).
FixedPointResult fixed_point(const SparseDiscretePrior& prior, const Channel& ch,
                             const RegimeParams& regime, double q0, int max_iter = 2000,
                             double tol = 1e-10, double damping = 0.5, const PotentialOptions& opts = {});

/// Initial overlaps of the two branches.
inline constexpr double kAlgorithmicInit = 1e-10;

struct MmseResult {
  double mmse;
  double q_star;
  double potential;  // sup_r i_RS at q_star
  bool ambiguous;    // distinct candidates tie within 1e-9
  double q_informed;
  double q_algorithmic;
  double mmse_algorithmic;
};

/// Requires E_{P0} X^2 = 1.
MmseResult mmse_linear_regime(const SparseDiscretePrior& prior, const Channel& ch,
                              const RegimeParams& regime, const PotentialOptions& opts = {});

/// Delta + E[(phi(V) - E[phi(sqrt(q*) V + sqrt(1 - q*) W) | V])^2] at the selected q*.
double gen_error_linear_regime(const SparseDiscretePrior& prior, const Channel& ch,
                               const RegimeParams& regime, const PotentialOptions& opts = {});

}  // namespace sglm
