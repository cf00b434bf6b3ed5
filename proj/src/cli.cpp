#include "sglm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <variant>

#include "sglm/channel.hpp"
#include "sglm/gamp.hpp"
#include "sglm/potential.hpp"
#include "sglm/prior.hpp"
#include "sglm/sublinear.hpp"

namespace sglm::cli {

namespace {

using json = nlohmann::json;
using Cell = std::variant<std::monostate, double, long long, std::string>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
  bool failed = false;
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const Cell& c) {
  if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
  if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
  if (std::holds_alternative<std::string>(c)) {
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return {};
}

json json_cell(const Cell& c) {
  if (std::holds_alternative<double>(c)) {
    const double v = std::get<double>(c);
    return std::isfinite(v) ? json(v) : json(nullptr);
  }
  if (std::holds_alternative<long long>(c)) return std::get<long long>(c);
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return nullptr;
}

void write_table(const RunConfig& cfg, const Table& t, std::ostream& out) {
  if (cfg.format == "json") {
    json j;
    j["version"] = kVersion;
    j["command"] = cfg.command;
    j["config"] = json::parse(config_to_json(cfg));
    j["metadata"] = json::object();
    for (const auto& [k, v] : t.metadata) j["metadata"][k] = v;
    j["columns"] = t.columns;
    j["rows"] = json::array();
    for (const auto& row : t.rows) {
      json r = json::array();
      for (const auto& c : row) r.push_back(json_cell(c));
      j["rows"].push_back(std::move(r));
    }
    out << j.dump(2) << '\n';
    return;
  }
  out << "# " << kVersion << '\n';
  out << "# command: " << cfg.command << '\n';
  out << "# config: " << config_to_json(cfg) << '\n';
  for (const auto& [k, v] : t.metadata) out << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
  }
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw ParameterError("grid needs at least one point");
  if (n == 1) return {a};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

std::vector<std::string> activations(const RunConfig& cfg) {
  if (!cfg.activation.empty()) return cfg.activation;
  if (cfg.command == "gamma-c") return {"linear", "sign", "relu"};
  return {"linear"};
}

std::vector<double> deltas(const RunConfig& cfg) {
  if (cfg.delta_steps > 0) return linspace(cfg.delta_min, cfg.delta_max, cfg.delta_steps);
  if (!cfg.delta.empty()) return cfg.delta;
  if (cfg.command == "gamma-c") return {0.0, 0.1, 0.25, 0.5, 1.0, 2.0};
  return {0.1};
}

double gamma_c_or_nan(const Channel& ch, const ChannelOptions& co) {
  try {
    return gamma_c(ch, co);
  } catch (const InfiniteThresholdError&) {
    return kNaN;
  }
}

std::vector<double> gammas(const RunConfig& cfg, double gc) {
  std::vector<double> g = linspace(cfg.gamma_min, cfg.gamma_max, cfg.gamma_steps);
  if (cfg.gamma_relative) {
    if (!std::isfinite(gc)) throw ParameterError("relative gamma grid needs a finite gamma_c");
    for (double& x : g) x *= gc;
  }
  return g;
}

// (is_limit, value) entries of the rho list.
std::vector<std::pair<bool, double>> rho_list(const RunConfig& cfg) {
  std::vector<std::pair<bool, double>> out;
  for (const std::string& s : cfg.rho) {
    if (s == "limit") {
      out.emplace_back(true, 0.0);
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || !(v > 0.0 && v < 1.0))
      throw ParameterError("--rho expects 'limit' or a number in (0,1), got '" + s + "'");
    out.emplace_back(false, v);
  }
  return out;
}

ChannelOptions channel_options(const RunConfig& cfg) {
  ChannelOptions co;
  co.outer_order = cfg.order;
  return co;
}

Cell num(double v) { return std::isfinite(v) ? Cell(v) : Cell(); }

void cmd_gamma_c(const RunConfig& cfg, Table& t) {
  t.columns = {"activation", "delta", "gamma_c_closed", "gamma_c_numeric", "rel_diff", "note"};
  const ChannelOptions co = channel_options(cfg);
  for (const std::string& name : activations(cfg)) {
    for (double d : deltas(cfg)) {
      const Channel ch = Channel::parse(name, d);
      Cell closed, numeric, rel;
      std::string note;
      try {
        if (auto c = gamma_c_closed_form(ch)) closed = *c;
      } catch (const Error& e) {
        note = e.what();
        t.failed = true;
      }
      try {
        numeric = gamma_c_numeric(ch, co);
      } catch (const UnsupportedConfigError&) {
        note = "closed form only";
      } catch (const InfiniteThresholdError&) {
        note = "infinite threshold";
      } catch (const Error& e) {
        note = e.what();
        t.failed = true;
      }
      if (std::holds_alternative<double>(closed) && std::holds_alternative<double>(numeric)) {
        const double c = std::get<double>(closed);
        rel = std::abs(std::get<double>(numeric) - c) / c;
      } else if (note.empty() && std::holds_alternative<double>(numeric)) {
        note = "numeric only";
      }
      t.rows.push_back({name, d, closed, numeric, rel, note});
    }
  }
}

void cmd_curve(const RunConfig& cfg, Table& t, bool gen) {
  const DiscreteLaw law = parse_law(cfg.prior);
  const DiscreteLaw unit = normalized_law(law);
  const double scale = law.second_moment();
  const Channel ch = Channel::parse(activations(cfg).front(), deltas(cfg).front());
  const ChannelOptions co = channel_options(cfg);
  PotentialOptions po;
  po.order = cfg.order;
  po.channel = co;
  SublinearOptions so;
  so.channel = co;
  const double gc = gamma_c_or_nan(ch, co);
  const auto rhos = rho_list(cfg);

  t.columns = {"gamma", "gamma_over_gamma_c"};
  for (const auto& [limit, rho] : rhos) {
    if (limit) {
      t.columns.push_back("limit");
      t.columns.push_back("limit_mask");
    } else {
      const std::string tag = "rho=" + format_double(rho);
      t.columns.push_back(tag);
      t.columns.push_back(tag + "_algorithmic");
      t.columns.push_back(tag + "_mask");
    }
  }
  t.metadata.emplace_back("quantity", gen ? "optimal generalization error" : "MMSE");
  if (gen) t.metadata.emplace_back("provenance", "conjectured formula for the generalization error");
  t.metadata.emplace_back("mask", "0 ok, 1 non-unique minimizer or tied branches, 2 evaluation failure");
  t.metadata.emplace_back("gamma_c", format_double(gc));

  for (double g : gammas(cfg, gc)) {
    std::vector<Cell> row{g, num(g / gc)};
    for (const auto& [limit, rho] : rhos) {
      if (limit) {
        try {
          row.push_back(gen ? gen_error_sublinear(law, ch, g, so) : asymptotic_mmse(law, ch, g, so));
          row.push_back(0LL);
        } catch (const CriticalityError&) {
          row.push_back({});
          row.push_back(1LL);
        } catch (const Error&) {
          row.push_back({});
          row.push_back(2LL);
          t.failed = true;
        }
        continue;
      }
      try {
        const SparseDiscretePrior prior(rho, unit);
        const MmseResult m = mmse_linear_regime(prior, ch, make_regime(rho, g), po);
        if (gen) {
          row.push_back(generalization_error(ch, m.q_star, 1.0, co));
          row.push_back(generalization_error(ch, m.q_algorithmic, 1.0, co));
        } else {
          row.push_back(scale * m.mmse);
          row.push_back(scale * m.mmse_algorithmic);
        }
        row.push_back(m.ambiguous ? 1LL : 0LL);
      } catch (const Error&) {
        row.push_back({});
        row.push_back({});
        row.push_back(2LL);
        t.failed = true;
      }
    }
    t.rows.push_back(std::move(row));
  }
}

void cmd_heatmap(const RunConfig& cfg, Table& t) {
  const DiscreteLaw law = parse_law(cfg.prior);
  const std::string act = activations(cfg).front();
  const ChannelOptions co = channel_options(cfg);
  SublinearOptions so;
  so.channel = co;
  const std::vector<double> ds = deltas(cfg);
  const std::vector<double> gs = linspace(cfg.gamma_min, cfg.gamma_max, cfg.gamma_steps);
  Channel::parse(act, 1.0);
  const Heatmap h = heatmap(law, act, ds, gs, so);

  std::string plateaus;
  for (double v : plateau_values(law)) plateaus += (plateaus.empty() ? "" : " ") + format_double(v);
  t.metadata.emplace_back("plateaus", plateaus);
  t.metadata.emplace_back("mask", "0 ok, 1 non-unique minimizer, 2 evaluation failure");
  t.columns = {"delta", "gamma", "gamma_over_gamma_c", "mmse", "mask"};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double gc = kNaN;
    try {
      gc = gamma_c_or_nan(Channel::parse(act, ds[i]), co);
    } catch (const Error&) {
    }
    for (std::size_t j = 0; j < gs.size(); ++j) {
      const std::size_t cell = i * gs.size() + j;
      const auto status = static_cast<long long>(h.status[cell]);
      if (h.status[cell] == CellStatus::Failed) t.failed = true;
      t.rows.push_back({ds[i], gs[j], num(gs[j] / gc), num(h.mmse[cell]), status});
    }
  }
}

void cmd_simulate(const RunConfig& cfg, Table& t) {
  double rho = -1.0;
  for (const auto& [limit, r] : rho_list(cfg))
    if (!limit) {
      rho = r;
      break;
    }
  if (rho <= 0.0) throw ParameterError("simulate needs a numeric --rho");
  if (cfg.seeds < 1) throw ParameterError("--seeds must be positive");
  const SparseDiscretePrior prior(rho, normalized_law(parse_law(cfg.prior)));
  const Channel ch = Channel::parse(activations(cfg).front(), deltas(cfg).front());
  const ChannelOptions co = channel_options(cfg);
  PotentialOptions po;
  po.order = cfg.order;
  po.channel = co;
  GampOptions go;
  go.max_iter = cfg.iters;
  go.tol = cfg.tol;
  go.damping = cfg.damping;
  go.channel.outer_order = cfg.order;
  const double gc = gamma_c_or_nan(ch, co);

  t.columns = {"kind", "gamma", "gamma_over_gamma_c", "seed", "iteration", "value"};
  t.metadata.emplace_back("streams", "mt19937_64 seeded with splitmix64(seed + s), s = 1 signal, 2 design, 3 noise, 4 test");
  for (double g : gammas(cfg, gc)) {
    const RegimeParams regime = make_regime(rho, g);
    const FixedPointResult fp = fixed_point(prior, ch, regime, kAlgorithmicInit, 20000, 1e-10, 0.5, po);
    const Cell gg = g, gr = num(g / gc);
    auto add = [&](const char* kind, Cell seed, Cell it, double v) { t.rows.push_back({kind, gg, gr, seed, it, num(v)}); };
    double sum_mse = 0.0, sum_gen = 0.0;
    long long ok = 0, diverged = 0;
    for (int j = 0; j < cfg.seeds; ++j) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(j);
      const Cell sc = static_cast<long long>(seed);
      const GlmInstance inst = generate_instance(prior, ch, cfg.n, regime, seed);
      const GampState st = gamp_run(inst, prior, ch, go);
      for (std::size_t it = 0; it < st.mse_trace.size(); ++it)
        add("trace_mse", sc, static_cast<long long>(it), st.mse_trace[it]);
      add("final_mse", sc, {}, st.mse_trace.back());
      add("posterior_variance", sc, {}, st.posterior_variance());
      add("converged", sc, {}, st.converged ? 1.0 : 0.0);
      add("diverged", sc, {}, st.diverged ? 1.0 : 0.0);
      if (st.diverged) {
        ++diverged;
        continue;
      }
      ++ok;
      sum_mse += st.mse_trace.back();
      if (cfg.n_test > 0) {
        const double ge = empirical_gen_error(inst, st, prior, ch, cfg.n_test, seed, co);
        add("gen_error", sc, {}, ge);
        sum_gen += ge;
      }
    }
    const double se = 1.0 - fp.q_star;
    const double mean = ok ? sum_mse / ok : kNaN;
    add("summary_mean_final_mse", {}, {}, mean);
    add("summary_se_prediction", {}, {}, se);
    add("summary_gap", {}, {}, std::abs(mean - se));
    add("summary_diverged_count", {}, {}, static_cast<double>(diverged));
    if (cfg.n_test > 0) {
      add("summary_mean_gen_error", {}, {}, ok ? sum_gen / ok : kNaN);
      add("summary_se_gen_error", {}, {}, generalization_error(ch, fp.q_star, 1.0, co));
    }
  }
}

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
  json j = {{"command", c.command},
            {"prior", c.prior},
            {"activation", c.activation},
            {"delta", c.delta},
            {"delta_min", c.delta_min},
            {"delta_max", c.delta_max},
            {"delta_steps", c.delta_steps},
            {"gamma_min", c.gamma_min},
            {"gamma_max", c.gamma_max},
            {"gamma_steps", c.gamma_steps},
            {"gamma_relative", c.gamma_relative},
            {"rho", c.rho},
            {"order", c.order},
            {"seed", c.seed},
            {"seeds", c.seeds},
            {"n", c.n},
            {"iters", c.iters},
            {"damping", c.damping},
            {"tol", c.tol},
            {"n_test", c.n_test},
            {"format", c.format}};
  return j.dump();
}

RunConfig config_from_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ParameterError("config: empty input");
  json j;
  try {
    if (text[first] == '{') {
      j = json::parse(text);
      if (j.contains("config") && j["config"].is_object()) j = j["config"];
    } else {
      std::istringstream is(text);
      std::string line;
      const std::string tag = "# config: ";
      while (std::getline(is, line))
        if (line.rfind(tag, 0) == 0) {
          j = json::parse(line.substr(tag.size()));
          break;
        }
      if (j.is_null()) throw ParameterError("config: no '# config:' line found");
    }
    if (!j.is_object()) throw ParameterError("config: expected a JSON object");
    static const std::vector<std::string> known = {
        "command", "prior", "activation", "delta", "delta_min", "delta_max", "delta_steps",
        "gamma_min", "gamma_max", "gamma_steps", "gamma_relative", "rho", "order", "seed",
        "seeds", "n", "iters", "damping", "tol", "n_test", "format"};
    for (const auto& item : j.items())
      if (std::find(known.begin(), known.end(), item.key()) == known.end())
        throw ParameterError("config: unknown key '" + item.key() + "'");
    RunConfig c;
    take(j, "command", c.command);
    take(j, "prior", c.prior);
    take(j, "activation", c.activation);
    take(j, "delta", c.delta);
    take(j, "delta_min", c.delta_min);
    take(j, "delta_max", c.delta_max);
    take(j, "delta_steps", c.delta_steps);
    take(j, "gamma_min", c.gamma_min);
    take(j, "gamma_max", c.gamma_max);
    take(j, "gamma_steps", c.gamma_steps);
    take(j, "gamma_relative", c.gamma_relative);
    take(j, "rho", c.rho);
    take(j, "order", c.order);
    take(j, "seed", c.seed);
    take(j, "seeds", c.seeds);
    take(j, "n", c.n);
    take(j, "iters", c.iters);
    take(j, "damping", c.damping);
    take(j, "tol", c.tol);
    take(j, "n_test", c.n_test);
    take(j, "format", c.format);
    return c;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
}

int execute(const RunConfig& cfg, std::ostream& out) {
  if (cfg.format != "csv" && cfg.format != "json") throw ParameterError("--format must be csv or json");
  if (cfg.order < kMinQuadratureOrder || cfg.order > kMaxQuadratureOrder)
    throw ParameterError("--order must lie in [2, 512]");
  Table t;
  if (cfg.command == "gamma-c") {
    cmd_gamma_c(cfg, t);
  } else if (cfg.command == "mmse-curve") {
    cmd_curve(cfg, t, false);
  } else if (cfg.command == "gen-error-curve") {
    cmd_curve(cfg, t, true);
  } else if (cfg.command == "heatmap") {
    cmd_heatmap(cfg, t);
  } else if (cfg.command == "simulate") {
    cmd_simulate(cfg, t);
  } else {
    throw ParameterError("unknown command '" + cfg.command + "'");
  }
  write_table(cfg, t, out);
  return t.failed ? 1 : 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asymptotic information-theoretic quantities of sparse generalized linear models", "sglm"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig f;
  std::string config_path, out_path;
  auto* o_config = app.add_option("--config", config_path, "JSON config or a previous output file");
  app.add_option("--out", out_path, "Output file (stdout if omitted)");
  auto* o_prior = app.add_option("--prior", f.prior, "bernoulli, bernoulli-rademacher, unif-K, linear-K, binom-K-p, atoms:...");
  auto* o_act = app.add_option("--activation", f.activation, "linear, sign, relu or a registered name")->delimiter(',');
  auto* o_delta = app.add_option("--delta", f.delta, "Noise variance(s)")->delimiter(',');
  auto* o_dmin = app.add_option("--delta-min", f.delta_min);
  auto* o_dmax = app.add_option("--delta-max", f.delta_max);
  auto* o_dsteps = app.add_option("--delta-steps", f.delta_steps, "Uniform delta grid size (overrides --delta)");
  auto* o_gmin = app.add_option("--gamma-min", f.gamma_min);
  auto* o_gmax = app.add_option("--gamma-max", f.gamma_max);
  auto* o_gsteps = app.add_option("--gamma-steps", f.gamma_steps);
  auto* o_grel = app.add_flag("--gamma-relative", f.gamma_relative, "Gamma grid in units of gamma_c");
  auto* o_rho = app.add_option("--rho", f.rho, "Sparsity values or 'limit'")->delimiter(',');
  auto* o_order = app.add_option("--order", f.order, "Gauss-Hermite order");
  auto* o_seed = app.add_option("--seed", f.seed, "First seed");
  auto* o_seeds = app.add_option("--seeds", f.seeds, "Number of seeds");
  auto* o_n = app.add_option("--n", f.n, "Signal dimension");
  auto* o_iters = app.add_option("--iters", f.iters, "GAMP iterations");
  auto* o_damp = app.add_option("--damping", f.damping, "GAMP damping");
  auto* o_tol = app.add_option("--tol", f.tol, "GAMP tolerance");
  auto* o_ntest = app.add_option("--n-test", f.n_test, "Test rows for the empirical generalization error");
  auto* o_format = app.add_option("--format", f.format)->check(CLI::IsMember({"csv", "json"}));

  for (const char* name : {"gamma-c", "mmse-curve", "gen-error-curve", "heatmap", "simulate"}) app.add_subcommand(name);
  app.get_subcommand("gamma-c")->description("gamma_c closed form against 1/I_out(0,1)");
  app.get_subcommand("mmse-curve")->description("MMSE against gamma: limit, finite rho, algorithmic branch");
  app.get_subcommand("gen-error-curve")->description("Optimal generalization error against gamma");
  app.get_subcommand("heatmap")->description("Asymptotic MMSE over a (delta, gamma) grid");
  app.get_subcommand("simulate")->description("GAMP Monte Carlo against state evolution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (o_config->count() > 0) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw ParameterError("cannot read config file '" + config_path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      cfg = config_from_text(ss.str());
    }
    cfg.command = app.get_subcommands().front()->get_name();
    auto given = [](const CLI::Option* o) { return o->count() > 0; };
    if (given(o_prior)) cfg.prior = f.prior;
    if (given(o_act)) cfg.activation = f.activation;
    if (given(o_delta)) cfg.delta = f.delta;
    if (given(o_dmin)) cfg.delta_min = f.delta_min;
    if (given(o_dmax)) cfg.delta_max = f.delta_max;
    if (given(o_dsteps)) cfg.delta_steps = f.delta_steps;
    if (given(o_gmin)) cfg.gamma_min = f.gamma_min;
    if (given(o_gmax)) cfg.gamma_max = f.gamma_max;
    if (given(o_gsteps)) cfg.gamma_steps = f.gamma_steps;
    if (given(o_grel)) cfg.gamma_relative = f.gamma_relative;
    if (given(o_rho)) cfg.rho = f.rho;
    if (given(o_order)) cfg.order = f.order;
    if (given(o_seed)) cfg.seed = f.seed;
    if (given(o_seeds)) cfg.seeds = f.seeds;
    if (given(o_n)) cfg.n = f.n;
    if (given(o_iters)) cfg.iters = f.iters;
    if (given(o_damp)) cfg.damping = f.damping;
    if (given(o_tol)) cfg.tol = f.tol;
    if (given(o_ntest)) cfg.n_test = f.n_test;
    if (given(o_format)) cfg.format = f.format;

    if (out_path.empty()) return execute(cfg, out);
    std::ostringstream buf;
    const int code = execute(cfg, buf);
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw ParameterError("cannot write '" + out_path + "'");
    file << buf.str();
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace sglm::cli
