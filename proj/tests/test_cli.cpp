#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "mdm/imgio.hpp"
#include "mdm/svm.hpp"
#include "mdm/text.hpp"
#include "support.hpp"

using namespace mdm;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mdm");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> rows_of(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) rows.push_back(split(line, ','));
  return rows;
}

std::string manifest_path_of_first(const std::string& manifest) {
  const auto m = parse_manifest(manifest);
  return m.resolve(m.records.front()).string();
}

}  // namespace

TEST_CASE("score matches the golden fixture") {
  const auto r = run_cli({"score", (test::data_dir() / "fixture_96x80.pgm").string()});
  REQUIRE(r.code == 0);
  const auto rows = rows_of(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"mdm_d", "mdm_dc", "entropy"});

  std::ifstream in(test::data_dir() / "fixture_96x80.golden.csv");
  std::map<std::string, double> golden;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    auto f = split(line, ',');
    golden[f[0]] = *parse_real(f[1]);
  }
  CHECK(test::relative_error(*parse_real(rows[1][0]), golden.at("mdm_d")) < 1e-9);
  CHECK(test::relative_error(*parse_real(rows[1][1]), golden.at("mdm_dc")) < 1e-9);
  CHECK(test::relative_error(*parse_real(rows[1][2]), golden.at("entropy")) < 1e-12);
}

TEST_CASE("score on a constant image is all zeros") {
  const auto dir = test::scratch_dir("cli_const");
  save_pgm(GrayImage(40, 30, std::vector<double>(1200, 100.0 / 255.0)), dir / "c.pgm");
  const auto r = run_cli({"score", (dir / "c.pgm").string()});
  REQUIRE(r.code == 0);
  const auto rows = rows_of(r.out);
  CHECK(*parse_real(rows[1][0]) == 0.0);
  CHECK(*parse_real(rows[1][1]) == 0.0);
  CHECK(*parse_real(rows[1][2]) == 0.0);
}

TEST_CASE("score on a binary checkerboard with rho 2, q 1") {
  // Half the pixels at 0, half at 1: deviation is 1/2, feature is (1/2)^(1/4).
  const auto dir = test::scratch_dir("cli_checker");
  std::vector<double> px(16 * 16);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) px[y * 16 + x] = (x + y) % 2 ? 1.0 : 0.0;
  save_pgm(GrayImage(16, 16, std::move(px)), dir / "cb.pgm");
  const auto r = run_cli({"score", (dir / "cb.pgm").string(), "--rho", "2", "--q", "1", "--no-downsample"});
  REQUIRE(r.code == 0);
  const auto rows = rows_of(r.out);
  CHECK(std::fabs(*parse_real(rows[1][0]) - std::pow(0.5, 0.25)) < 1e-12);
  CHECK(std::fabs(*parse_real(rows[1][1]) - std::pow(0.5, 0.25)) < 1e-12);
  CHECK(std::fabs(*parse_real(rows[1][2]) - 1.0) < 1e-12);
}

TEST_CASE("exit codes") {
  CHECK(run_cli({}).code == cli::kUsage);
  CHECK(run_cli({"--help"}).code == cli::kOk);
  CHECK(run_cli({"score", "--help"}).code == cli::kOk);
  CHECK(run_cli({"score", "x.pgm", "--bogus"}).code == cli::kUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
  CHECK(run_cli({"score", "/nonexistent/x.pgm"}).code == cli::kIo);
  CHECK(run_cli({"score", (test::data_dir() / "fixture_96x80.pgm").string(), "--rho", "0"}).code == cli::kUsage);
  CHECK(run_cli({"bench", "--sizes", "12by7"}).code == cli::kUsage);
  CHECK(run_cli({"bench", "--sizes", "0x7"}).code == cli::kUsage);

  const auto dir = test::scratch_dir("cli_badmodel");
  {
    std::ofstream f(dir / "m.json");
    f << "{\"version\": 99}";
  }
  CHECK(run_cli({"score", (test::data_dir() / "fixture_96x80.pgm").string(), "--model", (dir / "m.json").string()})
            .code == cli::kData);
}

TEST_CASE("bench prints one row per size") {
  const auto r = run_cli({"bench", "--sizes", "64x48,32x96", "--reps", "2"});
  REQUIRE(r.code == 0);
  const auto rows = rows_of(r.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"size", "width", "height", "reps", "median_ms"});
  CHECK(rows[1][0] == "64x48");
  CHECK(rows[1][1] == "64");
  CHECK(rows[1][2] == "48");
  CHECK(rows[2][0] == "32x96");
  CHECK(*parse_real(rows[2][4]) >= 0.0);
}

TEST_CASE("synth, train, score, classify and eval round trip") {
  const auto dir = test::scratch_dir("cli_roundtrip");
  const auto ds = (dir / "ds").string();
  auto r = run_cli({"synth", "--out", ds, "--contents", "6", "--width", "48", "--height", "48", "--seed", "5"});
  REQUIRE(r.code == 0);
  const auto manifest = (dir / "ds" / "manifest.csv").string();
  CHECK(r.out == manifest + "\n");

  r = run_cli({"extract", "--manifest", manifest});
  REQUIRE(r.code == 0);
  CHECK(rows_of(r.out).size() == 1 + 6 * 10);

  const auto model = (dir / "svr.json").string();
  r = run_cli({"train", "--manifest", manifest, "--out", model, "--c", "10,100", "--gamma", "1,4", "--epsilon",
               "0.01", "--folds", "3"});
  REQUIRE(r.code == 0);
  CHECK(rows_of(r.out)[0] == std::vector<std::string>{"c", "gamma", "epsilon", "cv_src"});
  CHECK(load_model(model).task == Task::Regression);

  const auto img = manifest_path_of_first(manifest);
  r = run_cli({"score", img, "--model", model});
  REQUIRE(r.code == 0);
  CHECK(rows_of(r.out)[0].back() == "quality");

  const auto svc = (dir / "svc.json").string();
  r = run_cli({"classify-train", "--manifest", manifest, "--out", svc, "--c", "100", "--gamma", "2", "--folds", "3"});
  REQUIRE(r.code == 0);
  r = run_cli({"classify", "--model", svc, "--manifest", manifest});
  REQUIRE(r.code == 0);
  CHECK(rows_of(r.out).size() == 1 + 60);
  // A regressor is not a classifier.
  CHECK(run_cli({"classify", "--model", model, img}).code == cli::kData);

  const auto reps = (dir / "reps.csv").string();
  r = run_cli({"eval", "--manifest", manifest, "--reps", "3", "--seed", "7", "--c", "100", "--gamma", "4", "--epsilon",
               "0.01", "--dump-reps", reps});
  REQUIRE(r.code == 0);
  const auto report = rows_of(r.out);
  CHECK(report[0] == std::vector<std::string>{"metric", "value"});
  CHECK(report[1][0] == "src");
  std::ifstream rf(reps);
  std::stringstream buf;
  buf << rf.rdbuf();
  CHECK(rows_of(buf.str()).size() == 4);

  r = run_cli({"eval", "--manifest", manifest, "--task", "classification", "--reps", "2", "--c", "100", "--gamma",
               "2"});
  REQUIRE(r.code == 0);
  CHECK(rows_of(r.out)[1][0] == "accuracy");
}
