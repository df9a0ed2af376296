#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "modc/cli.hpp"
#include "modc/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using modc::cli::run;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("modc_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "modc");
  return run(args);
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

json stats(const std::string& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("gen-data is reproducible and reports per-mode counts") {
  TempDir dir("gen");
  REQUIRE(invoke({"gen-data", "--n", "120", "--seed", "5", "--out", dir / "a.jsonl"}) == 0);
  REQUIRE(invoke({"gen-data", "--n", "120", "--seed", "5", "--jobs", "3", "--out", dir / "b.jsonl"}) == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(line_count(dir / "a.jsonl") == 120);
  CHECK(fs::exists(dir / "a.jsonl.manifest.json"));
  const json manifest = json::parse(slurp(dir / "a.jsonl.manifest.json"));
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["command"] == "gen-data");
  CHECK(manifest["config"].get<std::string>().starts_with("[gen-data]"));

  const json s = stats(dir / "a.stats.json");
  CHECK(s["kept"] == 120);
  CHECK(s["kept_per_mode"]["dfs"].get<int>() + s["kept_per_mode"]["bfs"].get<int>() == 120);

  REQUIRE(invoke({"gen-data", "--n", "1000", "--out", dir / "skew.jsonl"}) == 0);
  const json skew = stats(dir / "skew.stats.json");
  CHECK(skew["kept_per_mode"]["dfs"].get<int>() > skew["kept_per_mode"]["bfs"].get<int>());

  REQUIRE(invoke({"gen-data", "--n", "60", "--mode-sampling", "balanced", "--out", dir / "bal.jsonl"}) == 0);
  const json b = stats(dir / "bal.stats.json");
  CHECK(b["kept_per_mode"]["dfs"] == 30);
  CHECK(b["kept_per_mode"]["bfs"] == 30);
}

TEST_CASE("validation errors exit with code 2") {
  TempDir dir("validation");
  CHECK(invoke({"gen-data", "--n", "10", "--mode-sampling", "skewed", "--out", dir / "x.jsonl"}) == 2);
  CHECK(invoke({"gen-data", "--bogus"}) == 2);
  CHECK(invoke({"simulate"}) == 2);
  CHECK(invoke({"no-such-command"}) == 2);
  CHECK(invoke({"simulate", "--testset", dir / "missing.jsonl"}) == 2);
  CHECK(invoke({"--help"}) == 0);
}

TEST_CASE("test sets, simulation, histograms and reports") {
  TempDir dir("pipeline");
  REQUIRE(invoke({"gen-data", "--n", "100", "--out", dir / "train.jsonl"}) == 0);
  REQUIRE(invoke({"build-testsets", "--train", dir / "train.jsonl", "--natural", "40", "--adversarial-pool", "150",
                "--runs", "20", "--out-dir", dir / "sets"}) == 0);
  CHECK(line_count(dir / "sets/natural.jsonl") == 40);
  CHECK(line_count(dir / "sets/profiles.jsonl") == 150);
  CHECK(line_count(dir / "sets/adversarial.jsonl") > 0);

  CHECK(invoke({"build-testsets", "--train", dir / "train.jsonl", "--natural", "5", "--adversarial-pool", "20",
              "--runs", "4", "--threshold", "0", "--out-dir", dir / "empty"}) == 3);
  CHECK(line_count(dir / "empty/adversarial.jsonl") == 0);

  REQUIRE(invoke({"simulate", "--testset", dir / "sets/natural.jsonl", "--policy", "standard:beta(0.3,0.3)", "--policy",
                "modc-separate", "--policy", "modc-prefix:0.9", "--k-max", "8", "--samples", "8", "--out",
                dir / "nat.csv"}) == 0);
  const auto curves = modc::io::curves_from_csv(slurp(dir / "nat.csv"));
  CHECK(curves.size() == 3);
  for (const auto& c : curves) {
    CHECK(c.testset == "natural");
    CHECK(c.ks == std::vector<int>{1, 2, 4, 8});
  }
  CHECK(invoke({"simulate", "--testset", dir / "sets/natural.jsonl", "--k-max", "64", "--samples", "32", "--out",
              dir / "bad.csv"}) == 2);

  REQUIRE(invoke({"histogram", "--testset", dir / "sets/natural.jsonl", "--policy", "modc-separate", "--k", "16",
                "--out", dir / "hist.csv"}) == 0);
  CHECK(slurp(dir / "hist.csv").starts_with("policy,bin_lo,bin_hi,count,extremity_mass\n"));

  REQUIRE(invoke({"simulate", "--testset", dir / "sets/adversarial.jsonl", "--k-max", "8", "--samples", "8", "--out",
                dir / "adv.csv"}) == 0);
  REQUIRE(invoke({"report", "--curves", dir / "nat.csv", "--curves", dir / "adv.csv", "--out", dir / "report.md"}) == 0);
  const std::string md = slurp(dir / "report.md");
  CHECK(md.find("natural") != std::string::npos);
  CHECK(md.find("adversarial") != std::string::npos);
  CHECK(fs::exists(dir / "report_gaps.csv"));
}

TEST_CASE("report gap arithmetic") {
  TempDir dir("report");
  std::ofstream(dir / "c.csv") << "k,strategy,testset,value,n_samples,stderr\n"
                                  "1,\"standard:point(0.5)\",t,0.5,64,0.03\n"
                                  "1,\"modc-separate\",t,0.75,64,0.04\n";
  REQUIRE(invoke({"report", "--curves", dir / "c.csv", "--out", dir / "r.md", "--gaps-csv", dir / "g.csv"}) == 0);
  std::istringstream gaps(slurp(dir / "g.csv"));
  std::string header, row;
  std::getline(gaps, header);
  CHECK(header == "testset,k,strategy,baseline,gap,pooled_stderr");
  REQUIRE(std::getline(gaps, row));
  CHECK(row == "t,1,\"modc-separate\",\"standard:point(0.5)\",0.25,0.05");

  std::ofstream(dir / "empty.csv") << "";
  CHECK(invoke({"report", "--curves", dir / "empty.csv", "--out", dir / "r2.md"}) == 2);
}

TEST_CASE("discover-modes and eval-f1") {
  TempDir dir("discover");
  REQUIRE(invoke({"gen-data", "--n", "80", "--mode-sampling", "balanced", "--out", dir / "train.jsonl"}) == 0);
  REQUIRE(invoke({"discover-modes", "--train", dir / "train.jsonl", "--dim", "128", "--out", dir / "ann.jsonl"}) == 0);
  const json report = json::parse(slurp(dir / "f1_report.json"));
  CHECK(report["n"] == 80);
  CHECK(report.contains("macro_f1"));
  REQUIRE(invoke({"eval-f1", "--annotated", dir / "ann.jsonl", "--out", dir / "f1.json"}) == 0);
  CHECK(json::parse(slurp(dir / "f1.json"))["macro_f1"] == report["macro_f1"]);

  REQUIRE(invoke({"discover-modes", "--train", dir / "train.jsonl", "--clusters", "1", "--truth-field", "absent",
                "--out", dir / "one/ann.jsonl"}) == 0);
  for (const json& rec : modc::io::read_jsonl(dir / "one/ann.jsonl")) CHECK(rec["mode_cluster"] == 0);
  CHECK_FALSE(json::parse(slurp(dir / "one/f1_report.json")).contains("macro_f1"));
  CHECK(invoke({"discover-modes", "--train", dir / "train.jsonl", "--model", "pretrained", "--out", dir / "x.jsonl"}) == 2);
}

TEST_CASE("config files, flags and MODC_SEED") {
  TempDir dir("config");
  std::ofstream(dir / "run.conf") << "[gen-data]\nn = 7\nseed = 11\n";
  REQUIRE(invoke({"gen-data", "--config", dir / "run.conf", "--out", dir / "a.jsonl"}) == 0);
  CHECK(line_count(dir / "a.jsonl") == 7);
  CHECK(json::parse(slurp(dir / "a.jsonl.manifest.json"))["seed"] == 11);
  REQUIRE(invoke({"gen-data", "--config", dir / "run.conf", "--n", "9", "--out", dir / "b.jsonl"}) == 0);
  CHECK(line_count(dir / "b.jsonl") == 9);

  const std::string regen = json::parse(slurp(dir / "a.jsonl.manifest.json"))["config"];
  std::ofstream(dir / "regen.conf") << regen;
  REQUIRE(invoke({"gen-data", "--config", dir / "regen.conf", "--out", dir / "a2.jsonl"}) == 0);
  CHECK(slurp(dir / "a2.jsonl") == slurp(dir / "a.jsonl"));

  ::setenv("MODC_SEED", "99", 1);
  REQUIRE(invoke({"gen-data", "--n", "7", "--seed", "1", "--out", dir / "env1.jsonl"}) == 0);
  REQUIRE(invoke({"gen-data", "--n", "7", "--seed", "2", "--out", dir / "env2.jsonl"}) == 0);
  ::unsetenv("MODC_SEED");
  CHECK(slurp(dir / "env1.jsonl") == slurp(dir / "env2.jsonl"));
  CHECK(json::parse(slurp(dir / "env1.jsonl.manifest.json"))["seed"] == 99);
}
