// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mgbound/mgbound.h"

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string tmp(const std::string& name) { return std::string(MGBOUND_TEST_TMP) + "/" + name; }

Result run(const std::string& args, const std::string& env = "") {
  const std::string o = tmp("stdout.txt"), e = tmp("stderr.txt");
  const std::string cmd = env + " '" MGBOUND_CLI_PATH "' " + args + " >'" + o + "' 2>'" + e + "'";
  const int st = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("bound: trivial point and exit codes") {
  const Result r = run("bound --envelope dlp --epsilon 0.1 --delta 0 --x-from 0 --x-to 0");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][3] == "value");
  CHECK(std::strtod(rows[1][3].c_str(), nullptr) == 1.0);

  const Result bad = run("bound --envelope thm21 --epsilon 0.9 --x 1");
  CHECK(bad.code == 3);
  CHECK(bad.err.find("(A1)") != std::string::npos);
  CHECK(run("bound --envelope thm21 --no-such-flag").code == 2);
  CHECK(run("bound --envelope nonsense").code == 2);
  CHECK(run("simulate --model rademacher --n 3 --x 1").code == 2);
}

TEST_CASE("bound: thm21 grid equals direct library calls bit for bit") {
  const Result r = run("bound --envelope thm21 --epsilon 0.05 --delta 0.3 --C 2 --x-from -3 --x-to 5 --x-step 0.25");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 34);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double x = std::strtod(rows[i][0].c_str(), nullptr);
    CHECK(x == -3.0 + 0.25 * static_cast<double>(i - 1));
    mgb_envelope e{};
    REQUIRE(mgb_envelope_eval(MGB_ENV_NONUNIFORM_BE, x, 0.05, 0.3, 2.0, 0.0, &e) == MGB_OK);
    CHECK(std::strtod(rows[i][1].c_str(), nullptr) == e.xhat);
    CHECK(std::strtod(rows[i][2].c_str(), nullptr) == e.lambda_bar);
    CHECK(std::strtod(rows[i][3].c_str(), nullptr) == e.value);
    CHECK(std::strtod(rows[i][4].c_str(), nullptr) == e.log_value);
  }
}

TEST_CASE("bound: every envelope evaluates") {
  for (const char* args : {"--envelope thm22", "--envelope thm22 --f-form", "--envelope cor21 --qc-l1 0.01",
                           "--envelope dlp --dlp-form bernstein", "--envelope dlp --dlp-form bennett-printed --v 2",
                           "--envelope mc-sandwich", "--envelope classical --third-moments 0.2",
                           "--envelope wang-jing --wj-n 100", "--envelope wang-jing --L3n 0.1",
                           "--envelope regression", "--envelope selfnorm", "--envelope tail-sq"}) {
    CAPTURE(args);
    const Result r = run(std::string("bound ") + args + " --epsilon 0.1 --delta 0.2");
    CHECK(r.code == 0);
    CHECK(parse_csv(r.out).size() == 10);
  }
  CHECK(run("bound --envelope wang-jing").code == 2);
}

TEST_CASE("bound: JSON output reparses to the library values") {
  const Result r = run("bound --envelope tail-sq --epsilon 0.1 --delta 0.2 --x 1,40 --format json");
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["manifest"]["command"] == "bound");
  CHECK(doc["manifest"]["toolkit_version"] == mgb_version());
  CHECK(doc["manifest"]["parameters"]["C"] == "1");
  const auto& rows = doc["rows"];
  REQUIRE(rows.size() == 2);
  mgb_envelope e{};
  REQUIRE(mgb_envelope_eval(MGB_ENV_TAIL_SQ, 1.0, 0.1, 0.2, 1.0, 0.0, &e) == MGB_OK);
  CHECK(rows[0]["value"].get<double>() == e.value);
  CHECK(rows[0]["value"].get<double>() == doctest::Approx(0.64439494812127093).epsilon(1e-14));
  REQUIRE(mgb_envelope_eval(MGB_ENV_TAIL_SQ, 40.0, 0.1, 0.2, 1.0, 0.0, &e) == MGB_OK);
  CHECK(rows[1]["log_value"].get<double>() == e.log_value);
}

TEST_CASE("simulate: exhaustive four-step example") {
  const Result r = run("simulate --model rademacher --n 4 --exhaustive --x 0.9 --method both");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "exhaustive");
  CHECK(rows[1][2] == "0.3125");
  CHECK(std::strtod(rows[2][2].c_str(), nullptr) == doctest::Approx(0.3125).epsilon(1e-15));
  const Result be = run("simulate --model rademacher --n 4 --exhaustive --what be --x 0 --format json");
  REQUIRE(be.code == 0);
  CHECK(nlohmann::json::parse(be.out)["summary"]["d_hat"].get<double>() == 0.1875);
}

TEST_CASE("simulate: byte-identical across worker counts") {
  const std::string base = "simulate --model variance-switch --n 50 --delta 0.4 --paths 20000 --seed 11 "
                           "--chunk-size 1000 --method both --x 0.5,1,2.5 --workers ";
  const Result a = run(base + "1"), b = run(base + "2"), c = run(base + "8");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  const std::string be = "simulate --model selfnorm --n 60 --a 1 --b 2 --paths 9000 --seed 3 --chunk-size 700 "
                         "--what be --workers ";
  CHECK(run(be + "1").out == run(be + "8").out);
}

TEST_CASE("simulate: seed from the environment") {
  const std::string args = "simulate --model rademacher --n 64 --paths 2000 --x 1 --format json";
  const Result a = run(args, "MGBOUND_SEED=5");
  const Result b = run(args + " --seed 5");
  const Result c = run(args, "MGBOUND_SEED=6");
  REQUIRE(a.code == 0);
  const auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out), jc = nlohmann::json::parse(c.out);
  CHECK(ja["manifest"]["seed"] == 5);
  CHECK(ja["rows"] == jb["rows"]);
  CHECK(ja["rows"] != jc["rows"]);
  CHECK(run(args, "MGBOUND_SEED=abc").code == 2);
}

TEST_CASE("simulate: path replay and other quantities") {
  const Result p = run("simulate --model variance-switch --n 5 --delta 0.5 --what path --seed 4 --path-index 9");
  REQUIRE(p.code == 0);
  const auto rows = parse_csv(p.out);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"step", "xi", "s", "qc"});
  mgb_model* m = nullptr;
  REQUIRE(mgb_model_variance_switch(5, 0.5, &m) == MGB_OK);
  mgb_path* path = nullptr;
  REQUIRE(mgb_simulate_path(m, 4, 9, &path) == MGB_OK);
  double s[6];
  std::size_t needed = 0;
  REQUIRE(mgb_path_copy(path, MGB_PATH_PARTIAL_SUMS, s, 6, &needed) == MGB_OK);
  for (int k = 0; k <= 5; ++k) CHECK(std::strtod(rows[k + 1][2].c_str(), nullptr) == s[k]);
  mgb_path_free(path);
  mgb_model_free(m);
  for (const char* w : {"clt --x 0,1", "z", "qc"}) {
    CAPTURE(w);
    CHECK(run(std::string("simulate --model rademacher --n 64 --paths 3000 --what ") + w).code == 0);
  }
}

TEST_CASE("verify: passes, writes a manifest and is reproducible") {
  const std::string o1 = tmp("v1.csv"), o2 = tmp("v2.csv");
  const std::string args = "verify --model variance-switch --n 100 --delta 0.3 --paths 5000 --seed 7 --out ";
  const Result a = run(args + "'" + o1 + "'");
  const Result b = run(args + "'" + o2 + "'");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(o1) == slurp(o2));
  const auto man = nlohmann::json::parse(slurp(o1 + ".manifest.json"));
  CHECK(man["command"] == "verify");
  CHECK(man["seed"] == 7);
  CHECK(man["outputs"].size() == 2);
  CHECK(man["summary"]["ok"] == true);
  const auto rows = parse_csv(slurp(o1));
  int domination = 0;
  for (const auto& r : rows)
    if (r[0] == "domination") {
      ++domination;
      CHECK(r[5] == "1");
    }
  CHECK(domination == 8);
  const std::string j1 = tmp("v1.json"), j2 = tmp("v2.json");
  const std::string jargs = "verify --model rademacher --n 64 --paths 2000 --seed 1 --format json --out ";
  REQUIRE(run(jargs + "'" + j1 + "'", "SOURCE_DATE_EPOCH=1700000000").code == 0);
  REQUIRE(run(jargs + "'" + j2 + "'", "SOURCE_DATE_EPOCH=1700000000").code == 0);
  auto d1 = nlohmann::json::parse(slurp(j1)), d2 = nlohmann::json::parse(slurp(j2));
  CHECK(d1["manifest"]["outputs"][0] == j1);
  d1["manifest"].erase("outputs");
  d2["manifest"].erase("outputs");
  CHECK(d1.dump() == d2.dump());
  CHECK(d1["manifest"]["started_at"] == "2023-11-14T22:13:20Z");
}

TEST_CASE("calibrate writes a constant table") {
  const Result r = run("calibrate --model rademacher --n 100 --paths 5000 --envelope brmti --x 0,1,2 --format json");
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["rows"].size() == 3);
  CHECK(doc["summary"]["c_hat"].get<double>() >= 0.0);
  CHECK(run("calibrate --envelope thm99").code == 2);
}

TEST_CASE("regress: simulated and file-based data") {
  const Result r = run("regress --n 500 --a 1 --b 2 --theta 1.5 --seed 2 --coverage 200");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  bool saw_ci = false, saw_cov = false;
  for (const auto& row : rows) {
    if (row[0] == "reduction_relative") CHECK(std::strtod(row[2].c_str(), nullptr) <= 1e-12);
    if (row[0] == "ci_lo") saw_ci = true;
    if (row[0] == "coverage") saw_cov = true;
  }
  CHECK(saw_ci);
  CHECK(saw_cov);
  const std::string data = tmp("reg.csv");
  {
    std::ofstream f(data);
    f << "phi,x\n1,2\n1,0\n2,2\n";
  }
  const Result f = run("regress --data '" + data + "' --format json");
  REQUIRE(f.code == 0);
  const auto doc = nlohmann::json::parse(f.out);
  CHECK(doc["rows"][1]["quantity"] == "theta_hat");
  CHECK(doc["rows"][1]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(run("regress --data /nonexistent.csv").code == 1);
}

TEST_CASE("selfnorm: statistic, envelopes and comparison bound") {
  const std::string data = tmp("sample.txt");
  {
    std::ofstream f(data);
    f << "xi\n1\n-1\n1\n";
  }
  const Result r = run("selfnorm --data '" + data + "' --format json");
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["rows"][1]["value"].get<double>() == doctest::Approx(0.57735026918962576).epsilon(1e-15));
  const Result m = run("selfnorm --n 400 --a 1 --b 1 --monte-carlo --paths 4000");
  REQUIRE(m.code == 0);
  CHECK(m.out.find("wang_jing") != std::string::npos);
  CHECK(m.out.find("abs_diff") != std::string::npos);
}
