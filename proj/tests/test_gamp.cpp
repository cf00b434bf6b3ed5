#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sglm/gamp.hpp"

using namespace sglm;

TEST_SUITE("gamp") {
  TEST_CASE("instances are reproducible and scaled by sqrt(k)") {
    const auto prior = SparseDiscretePrior::bernoulli(0.05);
    const Channel ch = Channel::linear(0.1);
    const RegimeParams reg = make_regime(0.05, 2.0);
    const GlmInstance a = generate_instance(prior, ch, 400, reg, 9);
    const GlmInstance b = generate_instance(prior, ch, 400, reg, 9);
    CHECK(a.m == static_cast<int>(std::llround(reg.alpha * 400)));
    CHECK(a.x_true == b.x_true);
    CHECK(a.phi == b.phi);
    CHECK(a.y == b.y);
    const GlmInstance c = generate_instance(prior, ch, 400, reg, 10);
    CHECK(a.y != c.y);

    const GlmInstance z = generate_instance(prior, Channel::linear(1e-300), 400, reg, 9);
    const Eigen::VectorXd pre = z.phi * z.x_true / std::sqrt(z.k());
    CHECK((z.y - pre).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("noiseless sign outputs are binary") {
    const auto prior = SparseDiscretePrior::bernoulli_rademacher(0.1);
    const GlmInstance inst = generate_instance(prior, Channel::sign(0.0), 200, make_regime(0.1, 3.0), 1);
    for (int mu = 0; mu < inst.m; ++mu) CHECK(std::abs(inst.y[mu]) == 1.0);
  }

  TEST_CASE("empirical sparsity has the right mean") {
    const auto prior = SparseDiscretePrior(0.05, DiscreteLaw::uniform(3));
    const RegimeParams reg = make_regime(0.05, 1.0);
    const int n = 1000, seeds = 100;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < seeds; ++s) {
      const double v = generate_instance(prior, Channel::linear(0.1), n, reg, s).x_true.squaredNorm() / (0.05 * n);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / seeds;
    const double sd = std::sqrt((sum2 / seeds - mean * mean) / seeds);
    CHECK(std::abs(mean - prior.law().second_moment()) < 3 * sd);

    const GlmInstance f = generate_instance(prior, Channel::linear(0.1), n, reg, 3, SupportDraw::FixedSupport);
    int nnz = 0;
    for (int i = 0; i < n; ++i) nnz += f.x_true[i] != 0.0;
    CHECK(nnz == 50);
  }

  TEST_CASE("instance validation") {
    const auto prior = SparseDiscretePrior::bernoulli(0.05);
    CHECK_THROWS_AS(generate_instance(prior, Channel::linear(0.1), 5, make_regime(0.05, 1.0), 0), ParameterError);
    CHECK_THROWS_AS(generate_instance(prior, Channel::linear(0.1), 20, make_regime(0.05, 1e-3), 0), ParameterError);
    CHECK_THROWS_AS(generate_instance(prior, Channel::linear(0.1), 100, make_regime(0.1, 1.0), 0), ParameterError);
  }

  TEST_CASE("CSV round trip regenerates the design") {
    const auto prior = SparseDiscretePrior(0.1, DiscreteLaw::linear(2));
    const GlmInstance a = generate_instance(prior, Channel::relu(0.2), 150, make_regime(0.1, 2.0), 42);
    std::stringstream ss;
    write_instance_csv(a, ss);
    const GlmInstance b = read_instance_csv(ss);
    CHECK(b.n == a.n);
    CHECK(b.m == a.m);
    CHECK(b.seed == a.seed);
    CHECK(b.x_true == a.x_true);
    CHECK(b.y == a.y);
    CHECK(b.phi == a.phi);
    std::stringstream bad("n,m\n");
    CHECK_THROWS_AS(read_instance_csv(bad), ParameterError);
  }

  TEST_CASE("GAMP recovers the signal above the algorithmic threshold") {
    const double rho = 0.05;
    const auto prior = SparseDiscretePrior::bernoulli(rho);
    const Channel ch = Channel::linear(0.1);
    const RegimeParams reg = make_regime(rho, 3.0 * gamma_c(ch));
    const GlmInstance inst = generate_instance(prior, ch, 2000, reg, 0);
    const GampState st = gamp_run(inst, prior, ch);
    CHECK(std::abs(st.mse_trace[0] - inst.x_true.squaredNorm() / inst.k()) < 1e-15);
    CHECK(std::abs(st.mse_trace[0] - 1.0) < 0.2);
    CHECK_FALSE(st.diverged);
    CHECK(st.mse_trace.back() < 0.05);
    CHECK((st.vx.array() >= 0.0).all());
    for (double m : st.mse_trace) CHECK(m >= 0.0);
    CHECK(st.mse_trace.size() == static_cast<std::size_t>(st.iteration + 1));
  }

  TEST_CASE("MSE trace follows state evolution and posterior variance tracks the error") {
    const double rho = 0.05;
    const auto prior = SparseDiscretePrior::bernoulli(rho);
    const Channel ch = Channel::linear(0.1);
    const RegimeParams reg = make_regime(rho, 3.0 * gamma_c(ch));
    const FixedPointResult se = fixed_point(prior, ch, reg, kAlgorithmicInit, 20000, 1e-12, 1.0);
    const int seeds = 10, steps = 8;
    std::vector<double> mean_mse(steps + 1, 0.0);
    double var_sum = 0.0, mse_sum = 0.0;
    int monotone = 0;
    for (int s = 0; s < seeds; ++s) {
      // A fixed support count removes the O(1/sqrt(k)) spread of the initial error.
      const GlmInstance inst = generate_instance(prior, ch, 2000, reg, s, SupportDraw::FixedSupport);
      GampOptions opts;
      opts.damping = 1.0;
      const GampState st = gamp_run(inst, prior, ch, opts);
      for (int t = 0; t <= steps; ++t)
        mean_mse[t] += st.mse_trace[std::min<std::size_t>(t, st.mse_trace.size() - 1)] / seeds;
      var_sum += st.posterior_variance();
      mse_sum += st.mse_trace.back();
      const GampState damped = gamp_run(inst, prior, ch);
      bool ok = true;
      for (std::size_t t = 4; t < damped.mse_trace.size(); ++t) ok = ok && damped.mse_trace[t] <= damped.mse_trace[t - 1] + 1e-9;
      monotone += ok;
    }
    for (int t = 0; t <= steps; ++t) {
      CAPTURE(t);
      const std::size_t idx = std::min<std::size_t>(t, se.trajectory.size() - 1);
      CHECK(std::abs(mean_mse[t] - (1.0 - se.trajectory[idx].first)) < 0.05);
    }
    CHECK(std::abs(var_sum - mse_sum) <= 0.2 * mse_sum + 1e-3);
    CHECK(monotone >= 8);
  }

  TEST_CASE("empirical generalization error at the extremes") {
    const double rho = 0.05;
    const auto prior = SparseDiscretePrior::bernoulli(rho);
    const Channel ch = Channel::linear(0.1);
    const GlmInstance inst = generate_instance(prior, ch, 1000, make_regime(rho, 2.0), 4);
    GampState perfect;
    perfect.xhat = inst.x_true;
    perfect.k = inst.k();
    const int n_test = 4000;
    const double e1 = empirical_gen_error(inst, perfect, prior, ch, n_test, 4);
    CHECK(std::abs(e1 - 0.1) < 5 * 0.1 * std::sqrt(2.0 / n_test));
    GampState zero = perfect;
    zero.xhat.setZero();
    const double signal = inst.x_true.squaredNorm() / inst.k();
    const double e0 = empirical_gen_error(inst, zero, prior, ch, n_test, 4);
    CHECK(std::abs(e0 - (0.1 + signal)) < 5 * (0.1 + signal) * std::sqrt(2.0 / n_test));
    CHECK(empirical_gen_error(inst, zero, prior, ch, 100, 4) == empirical_gen_error(inst, zero, prior, ch, 100, 4));
  }

  TEST_CASE("Gaussian streams are reproducible and distinct") {
    GaussianStream a(3, 1), b(3, 1), c(3, 2);
    double s = 0.0, s2 = 0.0;
    bool differs = false;
    for (int i = 0; i < 20000; ++i) {
      const double x = a.normal();
      CHECK(x == b.normal());
      differs = differs || x != c.normal();
      s += x;
      s2 += x * x;
    }
    CHECK(differs);
    CHECK(std::abs(s / 20000) < 0.03);
    CHECK(std::abs(s2 / 20000 - 1.0) < 0.05);
  }
}
