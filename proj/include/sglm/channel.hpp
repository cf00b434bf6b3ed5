#pragma once

// Output channels P_out(y|x) = N(y; phi(x), Delta) for deterministic
// activations, plus the noiseless sign channel y = sign(x) as a genuinely
// discrete channel.
//
// I_out(q, rho) is the conditional mutual information I(W*; Y | V) with
// Y ~ P_out(. | sqrt(q) V + sqrt(rho - q) W*). For Delta > 0 it is evaluated as
//   I_out = -1/2 ln(2 pi e Delta) - E_V int dy Z(y, V) ln Z(y, V),
// where Z(y, V) = E_w P_out(y | sqrt(q) V + sqrt(rho - q) w) is the output
// marginal. Linear, sign and ReLU have Z in closed form; custom activations
// use an inner Gauss-Hermite rule. The y-integral is a composite
// Gauss-Legendre rule over the effective support.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sglm/quadrature.hpp"

namespace sglm {

enum class Activation { Linear, Sign, Relu, Custom };

/// A named smooth activation with declared sup-norms of phi, phi', phi''.
struct CustomActivation {
  std::string name;
  double (*phi)(double);
  double (*dphi)(double);
  double (*d2phi)(double);
  double sup_phi;
  double sup_dphi;
  double sup_d2phi;
};

/// Registry lookup; throws ParameterError for unknown names.
const CustomActivation& find_custom_activation(std::string_view name);
std::vector<std::string> custom_activation_names();

class Channel {
 public:
  static Channel linear(double delta) { return Channel(Activation::Linear, delta, nullptr); }
  static Channel sign(double delta) { return Channel(Activation::Sign, delta, nullptr); }
  static Channel relu(double delta) { return Channel(Activation::Relu, delta, nullptr); }
  static Channel custom(std::string_view name, double delta);
  /// "linear", "sign", "relu" or a registered custom name.
  static Channel parse(std::string_view activation, double delta);

  Activation activation() const noexcept { return activation_; }
  double delta() const noexcept { return delta_; }
  std::string name() const;
  const CustomActivation* custom_activation() const noexcept { return custom_; }

  double phi(double x) const;
  /// phi'(x); ReLU uses phi'(0) = 0 and sign has phi' = 0 away from 0.
  double dphi(double x) const;

  /// Noiseless sign: outputs live in {-1, +1}.
  bool discrete_output() const noexcept { return activation_ == Activation::Sign && delta_ == 0.0; }
  Channel with_delta(double delta) const { return Channel(activation_, delta, custom_); }

 private:
  Channel(Activation a, double delta, const CustomActivation* custom);

  Activation activation_;
  double delta_;
  const CustomActivation* custom_;
};

struct ChannelScore {
  double u;        // ln P_out(y|x)
  double u_prime;  // d/dx ln P_out(y|x)
};

double pout_density(const Channel& ch, double y, double x);
ChannelScore score(const Channel& ch, double y, double x);

struct ChannelOptions {
  int outer_order = kDefaultQuadratureOrder;  // rule over V
  int inner_order = 64;                       // rule over w for custom activations
  /// Evaluate I_out by quadrature even when a closed form exists.
  bool force_quadrature = false;
};

/// Posterior of z ~ N(omega, var) given y ~ P_out(.|z), together with the
/// log marginal ln Z(y; omega, var) and g = d/d omega ln Z.
struct OutputPosterior {
  double log_z;
  double mean;
  double variance;
  double g;
};

OutputPosterior output_posterior(const Channel& ch, double y, double omega, double var,
                                 const ChannelOptions& opts = {});

double i_pout(const Channel& ch, double q, double rho_cap, const ChannelOptions& opts = {});

/// d/dq I_out(q, rho_cap) = -1/2 E[g^2] (nonpositive). At q = rho_cap the
/// left limit is returned; it is -infinity for the sign activation.
double dq_i_pout(const Channel& ch, double q, double rho_cap, const ChannelOptions& opts = {});

/// Closed forms of gamma_c for linear, sign and ReLU; nullopt for custom.
std::optional<double> gamma_c_closed_form(const Channel& ch);
/// 1 / I_out(0, 1) by quadrature. Throws InfiniteThresholdError if I_out(0,1) = 0.
double gamma_c_numeric(const Channel& ch, const ChannelOptions& opts = {});
/// Closed form when available, numeric otherwise.
double gamma_c(const Channel& ch, const ChannelOptions& opts = {});

/// E[phi(omega + sqrt(var) W)], W ~ N(0,1).
double conditional_output_mean(const Channel& ch, double omega, double var, const ChannelOptions& opts = {});

/// Delta + E[(phi(sqrt(rho_cap) V) - E[phi(sqrt(q) V + sqrt(rho_cap - q) W) | V])^2].
double generalization_error(const Channel& ch, double q, double rho_cap,
                            const ChannelOptions& opts = {});
/// Var(phi(sqrt(rho_cap) V)).
double output_variance(const Channel& ch, double rho_cap = 1.0);

}  // namespace sglm
