#include "sglm/gamp.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sglm {

namespace {

enum Stream : std::uint64_t { kSignal = 1, kDesign = 2, kNoise = 3, kTest = 4 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double draw_atom(const DiscreteLaw& law, double u) {
  const auto atoms = law.atoms();
  double acc = 0.0;
  for (const Atom& a : atoms) {
    acc += a.prob;
    if (u < acc) return a.value;
  }
  return atoms.back().value;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream) : engine_(splitmix64(seed + stream)) {}

double GaussianStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double GaussianStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::MatrixXd generate_design(int m, int n, std::uint64_t seed) {
  GaussianStream g(seed, kDesign);
  Eigen::MatrixXd phi(m, n);
  for (int mu = 0; mu < m; ++mu)
    for (int i = 0; i < n; ++i) phi(mu, i) = g.normal();
  return phi;
}

GlmInstance generate_instance(const SparseDiscretePrior& prior, const Channel& ch, int n,
                              const RegimeParams& regime, std::uint64_t seed, SupportDraw draw) {
  if (n < 10) throw ParameterError("generate_instance: n must be at least 10");
  if (std::abs(regime.rho - prior.rho()) > 1e-15 * prior.rho())
    throw ParameterError("generate_instance: regime rho differs from prior rho");
  const long long m = std::llround(regime.alpha * n);
  if (m < 1) throw ParameterError("generate_instance: m rounds to zero");

  GlmInstance inst{n, static_cast<int>(m), prior.rho(), regime.gamma, ch.delta(), seed, {}, {}, {}};
  GaussianStream signal(seed, kSignal);
  inst.x_true.resize(n);
  if (draw == SupportDraw::Iid) {
    for (int i = 0; i < n; ++i) {
      const double u = signal.uniform();
      const double v = signal.uniform();
      inst.x_true[i] = u < prior.rho() ? draw_atom(prior.law(), v) : 0.0;
    }
  } else {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(signal.uniform() * (i + 1));
      std::swap(order[i], order[j]);
    }
    inst.x_true.setZero();
    const long long count = std::llround(prior.rho() * n);
    for (long long i = 0; i < count; ++i) inst.x_true[order[i]] = draw_atom(prior.law(), signal.uniform());
  }
  inst.phi = generate_design(inst.m, n, seed);
  const Eigen::VectorXd z = inst.phi * inst.x_true / std::sqrt(inst.k());
  GaussianStream noise(seed, kNoise);
  const double sd = std::sqrt(ch.delta());
  inst.y.resize(inst.m);
  for (int mu = 0; mu < inst.m; ++mu) inst.y[mu] = ch.phi(z[mu]) + sd * noise.normal();
  return inst;
}

void write_instance_csv(const GlmInstance& inst, std::ostream& os) {
  os << "n,m,rho,gamma,delta,seed\n"
     << inst.n << ',' << inst.m << ',' << fmt(inst.rho) << ',' << fmt(inst.gamma) << ',' << fmt(inst.delta)
     << ',' << inst.seed << "\nx_true\n";
  for (int i = 0; i < inst.n; ++i) os << fmt(inst.x_true[i]) << '\n';
  os << "y\n";
  for (int mu = 0; mu < inst.m; ++mu) os << fmt(inst.y[mu]) << '\n';
}

GlmInstance read_instance_csv(std::istream& is) {
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(is, line)) throw ParameterError(std::string("instance csv: missing ") + what);
    return line;
  };
  if (next("header") != "n,m,rho,gamma,delta,seed") throw ParameterError("instance csv: bad header");
  std::istringstream hs(next("header values"));
  GlmInstance inst{};
  char c = 0;
  if (!(hs >> inst.n >> c >> inst.m >> c >> inst.rho >> c >> inst.gamma >> c >> inst.delta >> c >> inst.seed))
    throw ParameterError("instance csv: bad header values");
  if (inst.n < 1 || inst.m < 1) throw ParameterError("instance csv: bad dimensions");
  if (next("x_true marker") != "x_true") throw ParameterError("instance csv: expected x_true");
  inst.x_true.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) inst.x_true[i] = std::stod(next("x_true value"));
  if (next("y marker") != "y") throw ParameterError("instance csv: expected y");
  inst.y.resize(inst.m);
  for (int mu = 0; mu < inst.m; ++mu) inst.y[mu] = std::stod(next("y value"));
  inst.phi = generate_design(inst.m, inst.n, inst.seed);
  return inst;
}

GampState gamp_run(const GlmInstance& inst, const SparseDiscretePrior& prior, const Channel& ch,
                   const GampOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw ParameterError("gamp_run: damping must lie in (0,1]");
  if (opts.max_iter < 1) throw ParameterError("gamp_run: max_iter must be positive");
  const double k = inst.k();
  const double scale = 1.0 / std::sqrt(k);
  const double frob = inst.phi.squaredNorm() / k;
  const double row_norm = frob / inst.m;
  const double col_norm = frob / inst.n;
  const double beta = opts.damping;

  GampState st;
  st.k = k;
  st.xhat = Eigen::VectorXd::Zero(inst.n);
  st.vx = Eigen::VectorXd::Constant(inst.n, prior.rho() * prior.law().second_moment());
  st.onsager = Eigen::VectorXd::Zero(inst.m);
  st.mse_trace.push_back((inst.x_true - st.xhat).squaredNorm() / k);
  double vs = 0.0;
  Eigen::VectorXd xbar = st.xhat;

  Eigen::VectorXd g(inst.m), xnew(inst.n), vxnew(inst.n);
  for (int t = 1; t <= opts.max_iter; ++t) {
    const double vp = row_norm * st.vx.mean();
    const Eigen::VectorXd p = scale * (inst.phi * st.xhat) - vp * st.onsager;
    double dg = 0.0;
    for (int mu = 0; mu < inst.m; ++mu) {
      const OutputPosterior post = output_posterior(ch, inst.y[mu], p[mu], vp, opts.channel);
      g[mu] = post.g;
      dg += (vp - post.variance) / (vp * vp);
    }
    dg /= inst.m;
    // The first step has no previous messages to blend with.
    const double w = t == 1 ? 1.0 : beta;
    const Eigen::VectorXd s = w * g + (1.0 - w) * st.onsager;
    const double vs_new = w * dg + (1.0 - w) * vs;
    const Eigen::VectorXd xbar_new = w * st.xhat + (1.0 - w) * xbar;

    const double vr = 1.0 / (col_norm * vs_new);
    const Eigen::VectorXd r = xbar_new + vr * scale * (inst.phi.transpose() * s);
    for (int i = 0; i < inst.n; ++i) {
      const ScalarPosterior post = scalar_denoise_additive(prior, vr, r[i]);
      xnew[i] = post.mean;
      vxnew[i] = post.variance;
    }
    if (!std::isfinite(vr) || !(vr > 0.0) || !all_finite(s) || !all_finite(xnew) || !all_finite(vxnew)) {
      st.diverged = true;
      break;
    }
    const double step = (xnew - st.xhat).squaredNorm() / k;
    st.xhat = xnew;
    st.vx = vxnew;
    st.onsager = s;
    xbar = xbar_new;
    vs = vs_new;
    st.iteration = t;
    const double mse = (inst.x_true - st.xhat).squaredNorm() / k;
    const double change = std::abs(mse - st.mse_trace.back());
    st.mse_trace.push_back(mse);
    if (change <= opts.tol && step <= opts.tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

double empirical_gen_error(const GlmInstance& inst, const GampState& state, const SparseDiscretePrior& prior,
                           const Channel& ch, int n_test, std::uint64_t seed, const ChannelOptions& opts) {
  if (n_test < 1) throw ParameterError("empirical_gen_error: n_test must be positive");
  const double k = inst.k();
  const double scale = 1.0 / std::sqrt(k);
  const double q_hat = state.xhat.squaredNorm() / k;
  const double var = std::max(0.0, prior.law().second_moment() - q_hat);
  const double sd = std::sqrt(ch.delta());
  GaussianStream test(seed, kTest);
  Eigen::VectorXd row(inst.n);
  double acc = 0.0;
  for (int t = 0; t < n_test; ++t) {
    for (int i = 0; i < inst.n; ++i) row[i] = test.normal();
    const double y = ch.phi(scale * row.dot(inst.x_true)) + sd * test.normal();
    const double pred = conditional_output_mean(ch, scale * row.dot(state.xhat), var, opts);
    acc += (y - pred) * (y - pred);
  }
  return acc / n_test;
}

}  // namespace sglm
