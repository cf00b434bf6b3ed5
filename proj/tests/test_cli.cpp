#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sglm/cli.hpp"
#include "sglm/errors.hpp"

using namespace sglm;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sglm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> data_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(csv);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("gamma-c table rows") {
    const Result r = invoke({"gamma-c", "--activation", "sign,linear", "--delta", "0,0.5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# config: ") != std::string::npos);
    const auto rows = data_rows(r.out);
    bool saw_sign0 = false, saw_lin = false;
    for (const auto& row : rows) {
      if (row[0] == "sign" && std::stod(row[1]) == 0.0) {
        saw_sign0 = true;
        CHECK(std::abs(std::stod(row[2]) - 1.442695) < 1e-6);
      }
      if (row[0] == "linear" && std::stod(row[1]) == 0.5) {
        saw_lin = true;
        CHECK(std::abs(std::stod(row[2]) - 2.0 / std::log(3.0)) < 1e-12);
        CHECK(std::abs(std::stod(row[2]) - 1.8205) < 1e-4);
        CHECK(std::abs(std::stod(row[4])) < 1e-4);
      }
    }
    CHECK(saw_sign0);
    CHECK(saw_lin);
  }

  TEST_CASE("configuration round trip and precedence") {
    cli::RunConfig c;
    c.command = "heatmap";
    c.prior = "linear-5";
    c.delta = {0.1, 0.2};
    c.gamma_steps = 7;
    c.rho = {"limit", "1e-3"};
    c.seed = 12345678901234ULL;
    const cli::RunConfig back = cli::config_from_text(cli::config_to_json(c));
    CHECK(cli::config_to_json(back) == cli::config_to_json(c));
    CHECK_THROWS_AS(cli::config_from_text("{\"bogus\":1}"), ParameterError);
    CHECK_THROWS_AS(cli::config_from_text("a,b\n1,2\n"), ParameterError);

    const Result base = invoke({"gamma-c", "--activation", "linear", "--delta", "0.3"});
    REQUIRE(base.code == 0);
    const cli::RunConfig from_csv = cli::config_from_text(base.out);
    CHECK(from_csv.delta == std::vector<double>{0.3});
    // Flags override the file, the file overrides defaults.
    const std::string path = "cli_precedence_config.csv";
    {
      std::ofstream f(path);
      f << base.out;
    }
    const Result over = invoke({"gamma-c", "--config", path, "--delta", "0.7"});
    REQUIRE(over.code == 0);
    const cli::RunConfig merged = cli::config_from_text(over.out);
    CHECK(merged.delta == std::vector<double>{0.7});
    CHECK(merged.activation == std::vector<std::string>{"linear"});
    CHECK(merged.order == cli::RunConfig{}.order);
    const Result again = invoke({"gamma-c", "--config", path});
    CHECK(again.out == base.out);
    std::remove(path.c_str());
  }

  TEST_CASE("usage and parameter errors exit with 2") {
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"gamma-c", "--activation", "softmax"}).code == 2);
    CHECK(invoke({"gamma-c", "--format", "xml"}).code == 2);
    CHECK(invoke({"gamma-c", "--order", "1"}).code == 2);
    CHECK(invoke({"gamma-c", "--config", "/nonexistent/file"}).code == 2);
    CHECK(invoke({"--version"}).code == 0);
  }

  TEST_CASE("mmse-curve limit column is the all-or-nothing step") {
    const Result r = invoke({"mmse-curve", "--activation", "linear", "--delta", "0.1", "--gamma-relative", "--gamma-min",
                             "0.25", "--gamma-max", "2", "--gamma-steps", "8", "--rho", "limit,0.01"});
    REQUIRE(r.code == 0);
    const auto rows = data_rows(r.out);
    REQUIRE(rows.size() == 8);
    int critical = 0;
    for (const auto& row : rows) {
      const double rel = std::stod(row[1]);
      if (row[2].empty()) {
        // The step is undefined exactly at gamma_c and the cell is masked.
        CHECK(std::abs(rel - 1.0) < 1e-12);
        CHECK(row[3] != "0");
        ++critical;
        continue;
      }
      CHECK(row[3] == "0");
      CHECK(std::stod(row[2]) == (rel < 1.0 ? 1.0 : 0.0));
      // Algorithmic column never lies below the Bayes column.
      CHECK(std::stod(row[5]) >= std::stod(row[4]) - 1e-9);
    }
    CHECK(critical <= 1);
  }

  TEST_CASE("gen-error-curve plateaus for noiseless sign") {
    const Result r = invoke({"gen-error-curve", "--activation", "sign", "--delta", "0", "--gamma-relative", "--gamma-min",
                             "0.5", "--gamma-max", "1.5", "--gamma-steps", "2", "--rho", "limit"});
    REQUIRE(r.code == 0);
    const auto rows = data_rows(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(std::abs(std::stod(rows[0][2]) - 1.0) < 1e-10);
    CHECK(std::abs(std::stod(rows[1][2])) < 1e-12);
  }

  TEST_CASE("heatmap JSON output") {
    const Result r = invoke({"heatmap", "--prior", "linear-5", "--activation", "linear", "--delta", "0.5,1",
                             "--gamma-min", "0.5", "--gamma-max", "10", "--gamma-steps", "20", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["config"]["command"] == "heatmap");
    CHECK(j["columns"][3] == "mmse");
    const std::vector<double> plateaus = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    for (const auto& row : j["rows"]) {
      if (row[4] != 0) continue;
      const double v = row[3].get<double>();
      bool hit = false;
      for (double p : plateaus) hit = hit || std::abs(v - p) < 1e-12;
      CHECK(hit);
    }
    CHECK(cli::config_to_json(cli::config_from_text(r.out)) == j["config"].dump());
  }

  TEST_CASE("simulate is deterministic per seed") {
    const std::vector<std::string> args = {"simulate", "--activation", "linear", "--delta", "0.1", "--rho", "0.05",
                                           "--gamma-min", "3", "--gamma-max", "3", "--gamma-steps", "1",
                                           "--gamma-relative", "--n", "400", "--seeds", "2", "--iters", "30"};
    const Result a = invoke(args);
    const Result b = invoke(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("summary") != std::string::npos);
  }
}
