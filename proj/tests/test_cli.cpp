#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "d2l/cli.hpp"
#include "d2l/data.hpp"
#include "d2l/metrics_io.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

using namespace d2l;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "d2l_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double field(const std::string& text, const std::string& key, char sep = ' ') {
  const auto pos = text.find(key + sep);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size() + 1));
}

// Small blob data set shared by the training tests.
fs::path small_data() {
  static const fs::path dir = [] {
    const auto d = scratch("data");
    const auto r = cli({"gen-data", "--blobs", "--d-intrinsic", "3", "--d-ambient", "6", "--classes", "3", "--n",
                        "600", "--n-test", "200", "--seed", "4", "--out", d.string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::vector<std::string> train_args(const fs::path& out, std::vector<std::string> extra) {
  std::vector<std::string> args{"train",  "--data", small_data().string(), "--hidden", "16,16", "--batch-size",
                                "64",     "-k",     "10",                  "-m",       "2",     "-q",
                                "--out",  out.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

TEST_CASE("gen-data is byte-deterministic") {
  const auto a = scratch("gen-a");
  const auto b = scratch("gen-b");
  const std::vector<std::string> base{"gen-data", "--blobs", "--d-intrinsic", "2", "--d-ambient", "10",
                                      "--classes", "2",      "--n",           "2000", "--seed", "1"};
  auto args = base;
  args.insert(args.end(), {"--out", a.string()});
  const auto ra = cli(args);
  REQUIRE(ra.code == 0);
  args = base;
  args.insert(args.end(), {"--out", b.string()});
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(a / "train.d2ldata") == slurp(b / "train.d2ldata"));
  CHECK(slurp(a / "test.d2ldata") == slurp(b / "test.d2ldata"));
  CHECK(load_dataset(a / "train.d2ldata").size() == 2000);

  // the printed raw-feature LID is the data-module sanity range
  const double lid = field(ra.out, "raw_feature_lid(k=20, n=1280)", '=');
  CHECK(lid >= 1.6);
  CHECK(lid <= 2.6);
}

TEST_CASE("gen-data rejects impossible dimensions") {
  const auto r = cli({"gen-data", "--blobs", "--d-intrinsic", "12", "--d-ambient", "10", "--out",
                      scratch("gen-bad").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("InvalidDims") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--out", scratch("no-source").string()}).code == kExitUsage);
  CHECK(cli(train_args(scratch("bad-strategy"), {"--strategy", "magic"})).code == kExitUsage);
  CHECK(cli(train_args(scratch("bad-rate"), {"--noise-rate", "1.5"})).code == kExitUsage);
  CHECK(cli(train_args(scratch("bad-window"), {"--epochs", "5", "--window", "5"})).code == kExitUsage);
}

TEST_CASE("train writes one record per epoch and its artefacts") {
  const auto out = scratch("train50");
  const auto r = cli(train_args(out, {"--strategy", "d2l", "--noise-rate", "0.4", "--epochs", "50", "--seed", "7"}));
  REQUIRE(r.code == 0);
  CHECK(read_records_csv(out / "records.csv").size() == 50);
  CHECK(fs::exists(out / "final.ckpt"));
  CHECK(fs::exists(out / "config.ini"));
  CHECK(fs::exists(out / "summary.json"));
  const auto info = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(info["epochs_completed"] == 50);
  CHECK(info["seed"] == 7);
  CHECK(info["strategy"] == "d2l");
  CHECK(fs::exists(out / "turning.ckpt") == (info["turning_epoch"].get<int>() >= 0));
}

TEST_CASE("ce and d2l agree when no turning point fires") {
  const auto ce = scratch("eq-ce");
  const auto d2l = scratch("eq-d2l");
  REQUIRE(cli(train_args(ce, {"--strategy", "ce", "--epochs", "4", "--window", "3"})).code == 0);
  REQUIRE(cli(train_args(d2l, {"--strategy", "d2l", "--epochs", "4", "--window", "3"})).code == 0);
  REQUIRE(nlohmann::json::parse(slurp(d2l / "run.json"))["turning_epoch"] == -1);
  CHECK(slurp(ce / "records.csv") == slurp(d2l / "records.csv"));
  CHECK(slurp(ce / "final.ckpt") == slurp(d2l / "final.ckpt"));
}

TEST_CASE("identical runs give identical records") {
  const auto a = scratch("det-a");
  const auto b = scratch("det-b");
  REQUIRE(cli(train_args(a, {"--noise-rate", "0.2", "--epochs", "6", "--window", "2", "--seed", "3"})).code == 0);
  REQUIRE(cli(train_args(b, {"--noise-rate", "0.2", "--epochs", "6", "--window", "2", "--seed", "3"})).code == 0);
  CHECK(slurp(a / "records.csv") == slurp(b / "records.csv"));
  CHECK(slurp(a / "final.ckpt") == slurp(b / "final.ckpt"));
}

TEST_CASE("config echo reproduces a run, and explicit flags win") {
  const auto first = scratch("echo-1");
  REQUIRE(cli(train_args(first, {"--noise-rate", "0.2", "--epochs", "5", "--window", "2", "--seed", "9"})).code == 0);
  const auto echo = slurp(first / "config.ini");
  CHECK(echo.find("noise-rate = 0.2") != std::string::npos);

  const auto second = scratch("echo-2");
  REQUIRE(cli({"train", "--config", (first / "config.ini").string(), "--out", second.string()}).code == 0);
  CHECK(slurp(first / "records.csv") == slurp(second / "records.csv"));

  const auto third = scratch("echo-3");
  REQUIRE(cli({"train", "--config", (first / "config.ini").string(), "--epochs", "3", "--out", third.string()}).code ==
          0);
  CHECK(read_records_csv(third / "records.csv").size() == 3);
}

TEST_CASE("a seed sweep reports mean and std") {
  const auto out = scratch("sweep");
  const auto r = cli(train_args(out, {"--strategy", "ce", "--noise-rate", "0.2", "--epochs", "3", "--window", "1",
                                      "--seeds", "1,2,3,4,5"}));
  REQUIRE(r.code == 0);
  for (int s = 1; s <= 5; ++s) CHECK(fs::exists(out / ("seed_" + std::to_string(s)) / "records.csv"));
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary["seeds"].size() == 5);
  CHECK(summary["final_test_acc"]["std"].is_number());

  // summarize over the sweep directory reproduces the numbers
  const auto s = cli({"summarize", out.string()});
  REQUIRE(s.code == 0);
  const auto again = nlohmann::json::parse(s.out);
  REQUIRE(again.size() == 1);
  CHECK(again[0]["final_test_acc"]["mean"] == summary["final_test_acc"]["mean"]);
}

TEST_CASE("estimate-lid on disc points is about 2") {
  const auto dir = scratch("disc");
  const Matrix disc = oracle::uniform_ball(2000, 2, 17);
  {
    std::ofstream f(dir / "disc.txt");
    f.precision(17);
    for (Eigen::Index i = 0; i < disc.rows(); ++i) f << disc(i, 0) << " " << disc(i, 1) << "\n";
  }
  const auto r = cli({"estimate-lid", "--points", (dir / "disc.txt").string(), "--m", "10", "--batch-size", "1280"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("space raw") != std::string::npos);
  const double lid = field(r.out, "lid_mean");
  CHECK(lid >= 1.6);
  CHECK(lid <= 2.4);

  const auto too_big = cli({"estimate-lid", "--points", (dir / "disc.txt").string(), "--k", "200", "--batch-size", "128"});
  CHECK(too_big.code == kExitUsage);
  CHECK(too_big.err.find("InsufficientPoints") != std::string::npos);
}

TEST_CASE("estimate-lid with a checkpoint scores the penultimate layer") {
  const auto out = scratch("est-ckpt");
  REQUIRE(cli(train_args(out, {"--strategy", "ce", "--epochs", "2", "--window", "1"})).code == 0);
  const auto r = cli({"estimate-lid", "--data", small_data().string(), "--checkpoint", (out / "final.ckpt").string(),
                      "--k", "10", "--m", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("space penultimate") != std::string::npos);
  CHECK(field(r.out, "lid_mean") > 0.0);
}

TEST_CASE("a diverging run exits with 3") {
  const auto r = cli(train_args(scratch("diverge"), {"--strategy", "ce", "--epochs", "3", "--window", "1", "--lr",
                                                     "1e200", "--momentum", "0.9"}));
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("NonFiniteLoss") != std::string::npos);
}
