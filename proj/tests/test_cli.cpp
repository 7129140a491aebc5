#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "minischema.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_binary() {
  const char* env = std::getenv("MODALKIT_BIN");
  REQUIRE_MESSAGE(env != nullptr, "MODALKIT_BIN must point at the CLI binary");
  return env;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("modalkit_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct RunResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  const auto out = work_dir() / "stdout.txt";
  const auto err = work_dir() / "stderr.txt";
  const std::string cmd = cli_binary() + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.stdout_text = slurp(out);
  result.stderr_text = slurp(err);
  return result;
}

json schema() {
  static const json s = json::parse(std::ifstream(
      fs::path(__FILE__).parent_path().parent_path() / "schema" /
      "modalkit-output.schema.json"));
  return s;
}

void check_all_numbers_finite(const json& value) {
  if (value.is_number_float()) {
    CHECK(std::isfinite(value.get<double>()));
  } else if (value.is_object() || value.is_array()) {
    for (const auto& item : value) check_all_numbers_finite(item);
  }
}

void check_valid_output(const std::string& text) {
  const json doc = json::parse(text);
  CHECK(minischema::validate(doc, schema()));
  check_all_numbers_finite(doc);
}

}  // namespace

TEST_CASE("simulate, fit, eval round trip") {
  const auto dir = work_dir();
  const auto data = (dir / "roundtrip.csv").string();
  const auto truth = (dir / "roundtrip_truth.csv").string();
  const auto fit_csv = (dir / "roundtrip_fit.csv").string();

  auto r = run_cli("simulate --fixture three-branch -n 600 --seed 5 --output " +
                   data + " --truth-output " + truth + " --grid 0.1:0.9:21");
  REQUIRE(r.exit_code == 0);

  r = run_cli("fit --input " + data +
              " --h1 0.12 --h2 0.3 --grid 0.1:0.9:21 --format csv --output " +
              fit_csv);
  REQUIRE(r.exit_code == 0);

  r = run_cli("eval --input " + fit_csv + " --truth " + truth);
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.stdout_text);
  CHECK(minischema::validate(doc, schema()));
  const double mise = doc["mise"].get<double>();
  CHECK(std::isfinite(mise));
  // responses span roughly [-2.75, 3.1]: the error must be far below range^2
  CHECK(mise < 34.0);
  CHECK(mise >= 0.0);
}

TEST_CASE("censored variant dispatch") {
  const auto dir = work_dir();
  const auto data = (dir / "censored.csv").string();
  auto r = run_cli(
      "simulate --fixture three-level -n 400 --seed 9 --censor-rate 0.08 "
      "--output " + data);
  REQUIRE(r.exit_code == 0);
  // the file carries a delta column
  std::ifstream in(data);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,delta");

  r = run_cli("fit --input " + data +
              " --variant censored --h1 0.15 --h2 0.3 --grid 0.2:0.8:7");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.stdout_text);
  CHECK(minischema::validate(doc, schema()));
  CHECK(doc["variant"] == "censored");
}

TEST_CASE("deconvolution variant dispatch") {
  const auto dir = work_dir();
  const auto data = (dir / "noisy.csv").string();
  auto r = run_cli(
      "simulate --fixture three-level -n 300 --seed 13 --error-dist laplace "
      "--error-scale 0.15 --output " + data);
  REQUIRE(r.exit_code == 0);
  r = run_cli("fit --input " + data +
              " --variant deconv --error-dist laplace --error-scale 0.15 "
              "--h1 0.18 --h2 0.35 --grid 0.25:0.75:5");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.stdout_text);
  CHECK(minischema::validate(doc, schema()));
  CHECK(doc["variant"] == "deconv");
}

TEST_CASE("bandwidth subcommand emits a schema-conforming trace") {
  const auto dir = work_dir();
  const auto data = (dir / "bw.csv").string();
  auto r = run_cli("simulate --fixture three-level -n 80 --seed 3 --output " + data);
  REQUIRE(r.exit_code == 0);

  r = run_cli("bandwidth --input " + data +
              " --bw-method cv --h1-grid 0.05:0.5:4 --h2-grid 0.1:0.6:4");
  REQUIRE(r.exit_code == 0);
  check_valid_output(r.stdout_text);

  const auto noisy = (dir / "bw_noisy.csv").string();
  r = run_cli("simulate --fixture three-level -n 80 --seed 3 --error-dist "
              "laplace --error-scale 0.1 --output " + noisy);
  REQUIRE(r.exit_code == 0);
  // rename w -> x is not needed: simex reads w directly
  r = run_cli("bandwidth --input " + noisy +
              " --bw-method simex --error-dist laplace --error-scale 0.1 "
              "--h1-grid 0.05:0.5:4 --replicates 2 --seed 11");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.stdout_text);
  CHECK(minischema::validate(doc, schema()));
  CHECK(doc.contains("h1_star"));
  CHECK(doc.contains("trace_extra"));
}

TEST_CASE("band subcommand emits schema-conforming output") {
  const auto dir = work_dir();
  const auto data = (dir / "band_train.csv").string();
  const auto holdout = (dir / "band_holdout.csv").string();
  REQUIRE(run_cli("simulate --fixture three-level -n 300 --seed 21 --output " +
                  data).exit_code == 0);
  REQUIRE(run_cli("simulate --fixture three-level -n 150 --seed 22 --output " +
                  holdout).exit_code == 0);

  auto r = run_cli("band --input " + data + " --band-type prediction --level "
                   "0.9 --holdout " + holdout +
                   " --h1 0.15 --h2 0.3 --grid 0.2:0.8:7");
  REQUIRE(r.exit_code == 0);
  check_valid_output(r.stdout_text);

  r = run_cli("band --input " + data + " --band-type confidence --level 0.9 "
              "--boot 30 --h1 0.15 --h2 0.3 --grid 0.2:0.8:7 --seed 4");
  REQUIRE(r.exit_code == 0);
  check_valid_output(r.stdout_text);

  // unimodal band and csv interval output
  r = run_cli("band --input " + data + " --band-type prediction --level 0.9 "
              "--holdout " + holdout +
              " --h1 0.15 --h2 0.3 --grid 0.2:0.8:7 --unimodal --format csv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.stdout_text.rfind("x,lo,hi\n", 0) == 0);
}

TEST_CASE("csv output formats for bandwidth and eval") {
  const auto dir = work_dir();
  const auto data = (dir / "csvfmt.csv").string();
  REQUIRE(run_cli("simulate --fixture three-level -n 60 --seed 4 --output " +
                  data).exit_code == 0);
  auto r = run_cli("bandwidth --input " + data +
                   " --bw-method cv --h1-grid 0.1:0.3:2 --h2-grid 0.2:0.4:2 "
                   "--format csv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.stdout_text.rfind("h1,h2,criterion\n", 0) == 0);

  const auto truth = (dir / "csvfmt_truth.csv").string();
  REQUIRE(run_cli("simulate --fixture three-level -n 10 --seed 4 --output " +
                  (dir / "csvfmt_tmp.csv").string() + " --truth-output " +
                  truth + " --grid 0.2:0.8:5").exit_code == 0);
  r = run_cli("eval --input " + truth + " --truth " + truth + " --format csv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.stdout_text.rfind("x,pointwise\n", 0) == 0);
}

TEST_CASE("every subcommand is byte-deterministic and thread-independent") {
  const auto dir = work_dir();
  const auto sim1 = (dir / "det_sim1.csv").string();
  const auto sim2 = (dir / "det_sim2.csv").string();
  REQUIRE(run_cli("simulate --fixture three-branch -n 250 --seed 77 --output " +
                  sim1).exit_code == 0);
  REQUIRE(run_cli("simulate --fixture three-branch -n 250 --seed 77 --output " +
                  sim2).exit_code == 0);
  CHECK(slurp(sim1) == slurp(sim2));

  const std::string fit_args = "fit --input " + sim1 +
                               " --h1 0.12 --h2 0.3 --grid 0.1:0.9:11 --seed 5";
  const auto fit1 = (dir / "det_fit1.json").string();
  const auto fit2 = (dir / "det_fit2.json").string();
  const auto fit4 = (dir / "det_fit4.json").string();
  REQUIRE(run_cli(fit_args + " --threads 1 --output " + fit1).exit_code == 0);
  REQUIRE(run_cli(fit_args + " --threads 1 --output " + fit2).exit_code == 0);
  REQUIRE(run_cli(fit_args + " --threads 4 --output " + fit4).exit_code == 0);
  CHECK(slurp(fit1) == slurp(fit2));
  CHECK(slurp(fit1) == slurp(fit4));

  const std::string bw_args = "bandwidth --input " + sim1 +
                              " --bw-method predband --h1-grid 0.05:0.3:2 "
                              "--h2-grid 0.2:0.4:2 --level 0.9 --folds 3 "
                              "--grid 0.1:0.9:9 --seed 19";
  const auto bw1 = (dir / "det_bw1.json").string();
  const auto bw2 = (dir / "det_bw2.json").string();
  REQUIRE(run_cli(bw_args + " --threads 1 --output " + bw1).exit_code == 0);
  REQUIRE(run_cli(bw_args + " --threads 4 --output " + bw2).exit_code == 0);
  CHECK(slurp(bw1) == slurp(bw2));

  const std::string band_args = "band --input " + sim1 +
                                " --band-type confidence --level 0.9 --boot 25 "
                                "--h1 0.12 --h2 0.3 --grid 0.2:0.8:7 --seed 31";
  const auto band1 = (dir / "det_band1.json").string();
  const auto band2 = (dir / "det_band2.json").string();
  REQUIRE(run_cli(band_args + " --threads 1 --output " + band1).exit_code == 0);
  REQUIRE(run_cli(band_args + " --threads 4 --output " + band2).exit_code == 0);
  CHECK(slurp(band1) == slurp(band2));

  const auto truth = (dir / "det_truth.csv").string();
  REQUIRE(run_cli("simulate --fixture three-branch -n 10 --seed 1 --output " +
                  (dir / "det_tmp.csv").string() + " --truth-output " + truth +
                  " --grid 0.1:0.9:11").exit_code == 0);
  const auto fit_csv = (dir / "det_fitc.csv").string();
  REQUIRE(run_cli(fit_args + " --format csv --output " + fit_csv).exit_code == 0);
  const auto eval1 = (dir / "det_eval1.json").string();
  const auto eval2 = (dir / "det_eval2.json").string();
  REQUIRE(run_cli("eval --input " + fit_csv + " --truth " + truth +
                  " --output " + eval1).exit_code == 0);
  REQUIRE(run_cli("eval --input " + fit_csv + " --truth " + truth +
                  " --output " + eval2).exit_code == 0);
  CHECK(slurp(eval1) == slurp(eval2));
}

TEST_CASE("exit codes and error JSON") {
  // config error: unknown flag
  auto r = run_cli("fit --no-such-flag");
  CHECK(r.exit_code == 2);
  CHECK(minischema::validate(json::parse(r.stderr_text), schema()));

  // config error: missing bandwidths
  const auto dir = work_dir();
  const auto data = (dir / "err_data.csv").string();
  REQUIRE(run_cli("simulate --fixture three-level -n 50 --seed 2 --output " +
                  data).exit_code == 0);
  r = run_cli("fit --input " + data);
  CHECK(r.exit_code == 2);
  CHECK(minischema::validate(json::parse(r.stderr_text), schema()));

  // data error: missing file
  r = run_cli("fit --input /nonexistent/nope.csv --h1 0.1 --h2 0.1");
  CHECK(r.exit_code == 3);
  CHECK(minischema::validate(json::parse(r.stderr_text), schema()));

  // data error: wrong columns
  const auto bad = (dir / "bad.csv").string();
  std::ofstream(bad) << "a,b\n1,2\n";
  r = run_cli("fit --input " + bad + " --h1 0.1 --h2 0.1");
  CHECK(r.exit_code == 3);

  // numeric error: zero-spread covariates break the CV selector
  const auto flat = (dir / "flat.csv").string();
  std::ofstream(flat) << "x,y\n1,0\n1,1\n1,2\n1,3\n";
  r = run_cli("bandwidth --input " + flat + " --bw-method cv");
  CHECK(r.exit_code == 4);
  CHECK(minischema::validate(json::parse(r.stderr_text), schema()));
}

TEST_CASE("unimodal companion rows are emitted on request") {
  const auto dir = work_dir();
  const auto data = (dir / "uni.csv").string();
  REQUIRE(run_cli("simulate --fixture three-level -n 200 --seed 6 --output " +
                  data).exit_code == 0);
  auto r = run_cli("fit --input " + data +
                   " --h1 0.15 --h2 0.3 --grid 0.3:0.7:5 --unimodal");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.stdout_text);
  CHECK(minischema::validate(doc, schema()));
  CHECK(doc.contains("unimodal"));
  REQUIRE(doc["unimodal"].size() == 5);
  for (const auto& point : doc["unimodal"]) {
    CHECK(point["modes"].size() == 1);
  }

  r = run_cli("fit --input " + data +
              " --h1 0.15 --h2 0.3 --grid 0.3:0.7:5 --unimodal --format csv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.stdout_text.find(",-1,") != std::string::npos);
}
