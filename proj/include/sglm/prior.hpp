#pragma once

// Sparse discrete priors P_{0,n} = (1 - rho) delta_0 + rho P_0 and their
// scalar Gaussian-channel quantities.
//
// The scalar channel is Y = sqrt(r) X* + Z with X* ~ P_{0,n}. The free
// entropy psi(r) = E ln sum_x P_{0,n}(x) exp(-r x^2/2 + r X* x + sqrt(r) Z x)
// is evaluated as an exact finite sum over X* and a Gauss-Hermite rule over Z;
// every log of a mixture goes through log_sum_exp.

#include <string>
#include <string_view>
#include <vector>

#include "sglm/quadrature.hpp"

namespace sglm {

/// One atom of a discrete law: P(X = value) = prob.
struct Atom {
  double value;
  double prob;
};

/// The law P_0 of a nonzero coordinate: atoms at +/- v_j with masses
/// p_j^+ and p_j^-, support 0 < v_1 < ... < v_K.
class DiscreteLaw {
 public:
  /// Masses summing to 1 within 1e-9 are renormalized, otherwise rejected.
  DiscreteLaw(std::vector<double> support, std::vector<double> mass_pos,
              std::vector<double> mass_neg);

  static DiscreteLaw dirac_one();           // P_0 = delta_1 (Bernoulli signal)
  static DiscreteLaw rademacher();          // P_0 = (delta_1 + delta_{-1})/2
  static DiscreteLaw uniform(int k);        // P_unif^{(K)}
  static DiscreteLaw linear(int k);         // P_linear^{(K)}
  static DiscreteLaw binomial(int k, double p);  // P_binom^{(K,p)}

  int size() const noexcept { return static_cast<int>(support_.size()); }
  const std::vector<double>& support() const noexcept { return support_; }
  const std::vector<double>& mass_pos() const noexcept { return mass_pos_; }
  const std::vector<double>& mass_neg() const noexcept { return mass_neg_; }
  /// p_j = p_j^+ + p_j^-.
  double mass(int j) const { return mass_pos_[j] + mass_neg_[j]; }

  double mean() const;
  double second_moment() const;
  /// Atoms with positive mass, negative values first.
  std::vector<Atom> atoms() const;

  /// E[X^2 1{|X| >= v_k}] for k in 1..K+1 (v_{K+1} = +inf gives 0).
  double tail_second_moment(int k) const;
  /// P(|X| >= v_k) for k in 1..K+1.
  double tail_probability(int k) const;
  /// E[X^2 1{|X| < v_k}] = second_moment() - tail_second_moment(k).
  double head_second_moment(int k) const;

  /// Same law with every atom multiplied by `factor` > 0.
  DiscreteLaw scaled(double factor) const;

 private:
  std::vector<double> support_;
  std::vector<double> mass_pos_;
  std::vector<double> mass_neg_;
};

/// Parses "bernoulli", "bernoulli-rademacher", "unif-K", "linear-K",
/// "binom-K-p" or an explicit atom list "atoms:v:p+:p-,v:p+:p-,...".
DiscreteLaw parse_law(std::string_view spec);

class SparseDiscretePrior {
 public:
  SparseDiscretePrior(double rho, DiscreteLaw law);

  static SparseDiscretePrior bernoulli(double rho) { return {rho, DiscreteLaw::dirac_one()}; }
  static SparseDiscretePrior bernoulli_rademacher(double rho) {
    return {rho, DiscreteLaw::rademacher()};
  }

  double rho() const noexcept { return rho_; }
  const DiscreteLaw& law() const noexcept { return law_; }
  /// Atoms of P_{0,n}, including the zero atom.
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  SparseDiscretePrior with_rho(double rho) const { return {rho, law_}; }

 private:
  double rho_;
  DiscreteLaw law_;
  std::vector<Atom> atoms_;
};

struct Moments {
  double mean_p0;
  double second_moment_p0;
  double mean_p0n;
  double second_moment_p0n;
};

Moments moments(const SparseDiscretePrior& prior);

/// Posterior statistics of X ~ P_{0,n} given y = sqrt(r) X + Z.
struct ScalarPosterior {
  double mean;
  double variance;
  double log_partition;
};

ScalarPosterior scalar_denoise(const SparseDiscretePrior& prior, double r, double y);

/// Posterior of X given the Gaussian observation obs = X + sqrt(noise_var) Z.
ScalarPosterior scalar_denoise_additive(const SparseDiscretePrior& prior, double noise_var,
                                        double obs);

double psi(const SparseDiscretePrior& prior, double r,
           const QuadratureRule& rule = cached_rule());

/// psi'(r) through the posterior-mean identity psi'(r) = E[X* <x>]/2.
/// At r = 0 returns the right limit psi_prime_at_zero(prior).
double psi_prime(const SparseDiscretePrior& prior, double r,
                 const QuadratureRule& rule = cached_rule());

/// Right limit of psi' at 0: rho^2 E[X]^2 / 2.
double psi_prime_at_zero(const SparseDiscretePrior& prior);
/// Limit of psi' at infinity: rho E[X^2] / 2.
double psi_prime_at_infinity(const SparseDiscretePrior& prior);

/// I(X*; sqrt(r) X* + Z) = r rho E[X^2]/2 - psi(r).
double i_p0n(const SparseDiscretePrior& prior, double r,
             const QuadratureRule& rule = cached_rule());

/// E[(X* - E[X*|Y])^2] for the scalar channel at snr r.
double scalar_mmse(const SparseDiscretePrior& prior, double r,
                   const QuadratureRule& rule = cached_rule());

/// g(r) = (2/rho) psi'(alpha r / rho) with alpha = gamma rho |ln rho|.
double g_rho(const SparseDiscretePrior& prior, double gamma, double r,
             const QuadratureRule& rule = cached_rule());

struct BracketPoints {
  double a;
  double b;
  double r_lower;  // 2(1 - |ln rho|^{-1/4}) / (gamma v_k^2)
  double r_upper;  // 2(1 + |ln rho|^{-1/4}) / (gamma v_k^2)
};

/// Bracket points a^{(k)}, b^{(k)} for k in 1..K. Requires rho < 1/e.
BracketPoints bracket_points(const SparseDiscretePrior& prior, double gamma, int k,
                             const QuadratureRule& rule = cached_rule());

}  // namespace sglm
