#pragma once

// Finite-size GLM instances y = phi(Phi x / sqrt(k)) + sqrt(Delta) z with
// k = rho n, and a scalar-variance GAMP estimator run on them.
//
// Random streams: every stream is a std::mt19937_64 seeded with
// splitmix64(seed + stream) where stream is 1 (signal), 2 (design),
// 3 (noise) or 4 (test data). Gaussians are produced by the Box-Muller
// transform implemented here, so draws are identical on every platform.
// The design is generated row by row, so it can be rebuilt from (m, n, seed).

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sglm/channel.hpp"
#include "sglm/potential.hpp"
#include "sglm/prior.hpp"

namespace sglm {

/// Seedable standard-normal source.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream);
  double normal();
  double uniform();  // in [0, 1)

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct GlmInstance {
  int n;
  int m;
  double rho;
  double gamma;
  double delta;
  std::uint64_t seed;
  Eigen::VectorXd x_true;
  Eigen::MatrixXd phi;  // m x n, standard Gaussian entries
  Eigen::VectorXd y;
  double k() const { return rho * n; }
};

/// Iid: every coordinate is drawn from P_{0,n}. FixedSupport: exactly
/// round(rho n) coordinates, chosen uniformly, are drawn from P_0.
enum class SupportDraw { Iid, FixedSupport };

GlmInstance generate_instance(const SparseDiscretePrior& prior, const Channel& ch, int n,
                              const RegimeParams& regime, std::uint64_t seed,
                              SupportDraw draw = SupportDraw::Iid);

/// m x n standard Gaussian design of the design stream.
Eigen::MatrixXd generate_design(int m, int n, std::uint64_t seed);

/// CSV layout: a "n,m,rho,gamma,delta,seed" header line and its values,
/// then the line "x_true" followed by n values one per line, then "y" and m values.
void write_instance_csv(const GlmInstance& inst, std::ostream& os);
/// Inverse of write_instance_csv; the design is regenerated from the seed.
GlmInstance read_instance_csv(std::istream& is);

struct GampOptions {
  int max_iter = 200;
  double tol = 1e-8;
  double damping = 0.7;  // weight of the new message
  ChannelOptions channel{.outer_order = kDefaultQuadratureOrder, .inner_order = 32};
};

struct GampState {
  Eigen::VectorXd xhat;
  Eigen::VectorXd vx;
  Eigen::VectorXd onsager;  // s of the output step, length m
  int iteration = 0;
  std::vector<double> mse_trace;  // ||x_true - xhat||^2 / k, entry 0 at xhat = 0
  bool converged = false;
  bool diverged = false;
  double k = 1.0;  // normalization k = rho n of the instance
  /// sum(vx) / k, the estimator's own MSE prediction.
  double posterior_variance() const { return vx.sum() / k; }
};

GampState gamp_run(const GlmInstance& inst, const SparseDiscretePrior& prior, const Channel& ch,
                   const GampOptions& opts = {});

/// Plug-in test error on n_test fresh rows drawn from the test stream of `seed`.
double empirical_gen_error(const GlmInstance& inst, const GampState& state, const SparseDiscretePrior& prior,
                           const Channel& ch, int n_test, std::uint64_t seed, const ChannelOptions& opts = {});

}  // namespace sglm
