#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "sglm/sublinear.hpp"

using namespace sglm;

namespace {

bool in_set(double v, const std::vector<double>& set) {
  return std::any_of(set.begin(), set.end(), [&](double s) { return std::abs(s - v) < 1e-12; });
}

}  // namespace

TEST_SUITE("sublinear") {
  TEST_CASE("Bernoulli limit is min{I_out(0,1), 1/gamma}") {
    const DiscreteLaw law = DiscreteLaw::dirac_one();
    for (const Channel& ch : {Channel::linear(0.1), Channel::sign(0.0), Channel::relu(0.5)}) {
      for (double gamma : {0.3, 1.0, 2.5, 7.0}) {
        const SublinearSolution s = limit_mutual_info(law, ch, gamma);
        CHECK(std::abs(s.limit_mi - std::min(i_pout(ch, 0.0, 1.0), 1.0 / gamma)) < 1e-12);
        CHECK(s.candidates.size() == 2);
        CHECK(s.limit_mi >= 0.0);
      }
    }
    const SublinearSolution big = limit_mutual_info(law, Channel::linear(0.1), 1e9);
    CHECK(big.k_star == 1);
    CHECK(big.limit_mi < 1e-8);
  }

  TEST_CASE("candidate list matches hand-assembled channel values") {
    const DiscreteLaw law = DiscreteLaw::linear(5);
    const Channel ch = Channel::sign(0.0);
    const SublinearSolution s = limit_mutual_info(law, ch, 1.0);
    REQUIRE(s.candidates.size() == 6);
    for (int k = 1; k <= 6; ++k) {
      const double hand = i_pout(ch, law.tail_second_moment(k), 1.0) + law.tail_probability(k) / 1.0;
      CHECK(std::abs(s.candidates[k - 1] - hand) < 1e-10);
    }
    CHECK(std::abs(s.candidates.back() - std::log(2.0)) < 1e-12);
  }

  TEST_CASE("all-or-nothing MMSE and the threshold step") {
    const DiscreteLaw law = DiscreteLaw::dirac_one();
    for (const Channel& ch : {Channel::linear(0.1), Channel::sign(0.0), Channel::relu(1.0)}) {
      const double gc = gamma_c(ch);
      CHECK(asymptotic_mmse(law, ch, 1.5 * gc) == 0.0);
      CHECK(asymptotic_mmse(law, ch, 0.5 * gc) == 1.0);
    }
    CHECK(aon_threshold_step(Channel::linear(0.1), 1.0) == 0);
    CHECK(aon_threshold_step(Channel::sign(0.0), 1.0) == 1);
    const double gc = gamma_c(Channel::linear(0.1));
    CHECK_THROWS_AS(aon_threshold_step(Channel::linear(0.1), gc), CriticalityError);
    try {
      asymptotic_mmse(law, Channel::sign(0.0), gamma_c(Channel::sign(0.0)));
      FAIL("expected CriticalityError");
    } catch (const CriticalityError& e) {
      CHECK(e.lower_plateau() == 0.0);
      CHECK(e.upper_plateau() == 1.0);
    }
  }

  TEST_CASE("linear-K plateaus are (k-1)/K") {
    for (int K : {2, 5, 9}) {
      const std::vector<double> p = plateau_values(DiscreteLaw::linear(K));
      REQUIRE(p.size() == static_cast<std::size_t>(K + 1));
      for (int k = 1; k <= K + 1; ++k) CHECK(std::abs(p[k - 1] - (k - 1.0) / K) < 1e-12);
    }
  }

  TEST_CASE("uniform-5 sweep is a nonincreasing staircase") {
    const DiscreteLaw law = DiscreteLaw::uniform(5);
    const std::vector<double> plateaus = plateau_values(law);
    const Channel ch = Channel::linear(0.5);
    double prev = 2.0;
    int jumps = 0;
    for (int i = 1; i <= 400; ++i) {
      const SublinearSolution s = limit_mutual_info(law, ch, 0.025 * i);
      if (!s.unique) continue;
      const double m = *s.mmse;
      CHECK(in_set(m, plateaus));
      CHECK(m <= prev);
      if (prev <= 1.0 && m < prev) ++jumps;
      prev = m;
    }
    CHECK(jumps <= 5);
  }

  TEST_CASE("generalization error plateaus") {
    const DiscreteLaw law = DiscreteLaw::dirac_one();
    const Channel relu = Channel::relu(0.3);
    const double gc = gamma_c(relu);
    CHECK(std::abs(gen_error_sublinear(law, relu, 2 * gc) - 0.3) < 1e-10);
    CHECK(std::abs(gen_error_sublinear(law, relu, 0.5 * gc) - (0.3 + output_variance(relu))) < 1e-8);
    const Channel s0 = Channel::sign(0.0);
    CHECK(std::abs(gen_error_sublinear(law, s0, 0.5 * gamma_c(s0)) - 1.0) < 1e-10);
    CHECK(std::abs(gen_error_sublinear(law, s0, 2.0 * gamma_c(s0))) < 1e-12);
    const SublinearSolution sol = limit_mutual_info(law, relu, 2 * gc);
    CHECK(sol.gen_error_conjectured);
    REQUIRE(sol.gen_error.has_value());
    CHECK(std::abs(*sol.gen_error - 0.3) < 1e-10);
  }

  TEST_CASE("side information") {
    const DiscreteLaw law = DiscreteLaw::linear(3);
    const Channel ch = Channel::relu(0.4);
    const double gamma = 1.7;
    CHECK(std::abs(limit_mutual_info_side_info(law, ch, gamma, 0.0) - limit_mutual_info(law, ch, gamma).limit_mi) < 1e-15);
    const double tau = 1e-6;
    const double fd = (limit_mutual_info_side_info(law, ch, gamma, tau) - limit_mutual_info(law, ch, gamma).limit_mi) / tau;
    CHECK(std::abs(fd - asymptotic_mmse(law, ch, gamma) / 2) < 1e-6);
    const double vk = law.support().back();
    const double bound = 2.0 / (gamma * vk * vk);
    CHECK(std::isfinite(limit_mutual_info_side_info(law, ch, gamma, bound * (1 - 1e-9))));
    CHECK_THROWS_AS(limit_mutual_info_side_info(law, ch, gamma, bound), RegimeError);
    CHECK_THROWS_AS(limit_mutual_info_side_info(law, ch, gamma, -1e-3), RegimeError);
  }

  TEST_CASE("reference priors") {
    const DiscreteLaw u = reference_prior("unif", 5);
    CHECK(std::abs(u.support()[0] * u.support()[0] - 1.0 / 11.0) < 1e-15);
    CHECK(std::abs(u.second_moment() - 1.0) < 1e-12);
    const DiscreteLaw l = reference_prior("linear", 5);
    for (int i = 1; i < 5; ++i) CHECK(std::abs(l.mass(i) / l.mass(0) - 1.0 / ((i + 1.0) * (i + 1.0))) < 1e-14);
    CHECK(std::abs(reference_prior("binom", 5, 0.2).second_moment() - 1.0) < 1e-12);
    CHECK_THROWS_AS(reference_prior("binom", 5, 1.5), ParameterError);
    CHECK_THROWS_AS(reference_prior("unif", 0), ParameterError);
    CHECK_THROWS_AS(reference_prior("gauss", 3), ParameterError);
  }

  TEST_CASE("MMSE is reported in the units of the law") {
    const DiscreteLaw law = DiscreteLaw::linear(4).scaled(3.0);
    const Channel ch = Channel::linear(0.2);
    const DiscreteLaw unit = normalized_law(law);
    CHECK(std::abs(unit.second_moment() - 1.0) < 1e-12);
    for (double gamma : {0.2, 0.9, 2.0, 6.0}) {
      const SublinearSolution a = limit_mutual_info(law, ch, gamma);
      const SublinearSolution b = limit_mutual_info(unit, ch, gamma);
      CHECK(std::abs(a.limit_mi - b.limit_mi) < 1e-12);
      if (a.unique) CHECK(std::abs(*a.mmse - 9.0 * *b.mmse) < 1e-12);
    }
  }

  TEST_CASE("heatmap cells stay on the plateau set and rows are monotone") {
    const DiscreteLaw law = DiscreteLaw::linear(5);
    const std::vector<double> plateaus = plateau_values(law);
    std::vector<double> deltas, gammas;
    for (int i = 0; i <= 8; ++i) deltas.push_back(0.5 * i);
    for (int j = 1; j <= 42; ++j) gammas.push_back(0.25 * j);
    const Heatmap h = heatmap(law, "linear", deltas, gammas);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      double prev = 2.0;
      for (std::size_t j = 0; j < gammas.size(); ++j) {
        if (h.status[i * gammas.size() + j] != CellStatus::Ok) continue;
        const double v = h.at(i, j);
        CHECK(in_set(v, plateaus));
        CHECK(v <= prev);
        prev = v;
      }
    }
    // Delta = 0: gamma_c vanishes, so every cell is at zero error.
    for (std::size_t j = 0; j < gammas.size(); ++j) CHECK(h.at(0, j) == 0.0);
  }

  TEST_CASE("Bernoulli heatmap row jumps at gamma_c") {
    const double gc = gamma_c(Channel::linear(0.1));
    std::vector<double> gammas;
    for (int j = 1; j <= 100; ++j) gammas.push_back(0.02 * j);
    const Heatmap h = heatmap(DiscreteLaw::dirac_one(), "linear", {0.1}, gammas);
    int jumps = 0;
    for (std::size_t j = 0; j < gammas.size(); ++j) {
      CHECK(h.at(0, j) == (gammas[j] < gc ? 1.0 : 0.0));
      if (j > 0 && h.at(0, j) != h.at(0, j - 1)) ++jumps;
    }
    CHECK(jumps == 1);
    const Heatmap crit = heatmap(DiscreteLaw::dirac_one(), "sign", {0.0}, {gamma_c(Channel::sign(0.0))});
    CHECK(crit.status[0] == CellStatus::Critical);
    CHECK(std::isnan(crit.mmse[0]));
  }
}
