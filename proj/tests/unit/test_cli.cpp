#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "audet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = audet::cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

const char* kSmallConfig = R"({
  "model": {"height": 16, "width": 16, "stage_channels": [8, 16], "r": 4, "M": 2, "d": 8, "d_t": 8},
  "schedule": {"epochs": 1, "batch_size": 8, "base_lr": 0.01, "decay_epochs": []}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"bogus"}).code == 1);
  CHECK(run_cli({"sample-stats", "--manifest", "x", "--unknown-flag"}).code == 1);
  CHECK(run_cli({"make-fixtures"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("help lists every flag of a command") {
  const auto r = run_cli({"make-fixtures", "--help"});
  CHECK(r.code == 0);
  for (const char* flag : {"--out", "--videos", "--frames", "--seed", "--size", "--masked-rate", "--no-rare-aus"})
    CHECK(r.out.find(flag) != std::string::npos);
}

TEST_CASE("missing files exit 2") {
  const auto r = run_cli({"eval", "--checkpoint", "/nonexistent/model.auck", "--manifest", "/nonexistent/m.tsv",
                          "--data-dir", "/nonexistent"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK(run_cli({"sample-stats", "--manifest", "/nonexistent/m.tsv"}).code == 2);
}

TEST_CASE("sample-stats on a 100-frame fixture without rare AUs selects 10") {
  const auto dir = audet::test::temp_dir("cli_stats");
  REQUIRE(run_cli({"make-fixtures", "--out", dir.string(), "--videos", "1", "--frames", "100", "--size", "16",
                   "--no-rare-aus"})
              .code == 0);
  const auto r = run_cli({"sample-stats", "--manifest", (dir / "manifest.tsv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("selected: 10\n") != std::string::npos);
  CHECK(r.out.find("frames: 100\n") != std::string::npos);
  CHECK(run_cli({"sample-stats", "--manifest", (dir / "manifest.tsv").string()}).out == r.out);
}

TEST_CASE("train, eval and predict end to end") {
  const auto dir = audet::test::temp_dir("cli_e2e");
  const auto data = dir / "data";
  REQUIRE(run_cli({"make-fixtures", "--out", data.string(), "--videos", "5", "--frames", "20", "--size", "16"}).code ==
          0);
  const auto manifest = (data / "manifest.tsv").string();
  {
    std::ofstream(dir / "config.json") << kSmallConfig;
  }
  const auto run_dir = dir / "run";
  const auto train = run_cli({"train", "--config", (dir / "config.json").string(), "--manifest", manifest,
                              "--data-dir", data.string(), "--out", run_dir.string()});
  REQUIRE_MESSAGE(train.code == 0, train.err);
  for (const char* file : {"history.jsonl", "config.json", "model.auck", "best.auck"}) CHECK(fs::exists(run_dir / file));
  CHECK(count_lines(run_dir / "history.jsonl") == 1);

  const auto ck = (run_dir / "model.auck").string();
  const auto eval =
      run_cli({"eval", "--checkpoint", ck, "--manifest", manifest, "--data-dir", data.string(), "--split", "official"});
  CHECK(eval.code == 0);
  CHECK(eval.out.find("Avg.") != std::string::npos);
  CHECK(eval.out.find("Official") != std::string::npos);

  const auto single = run_cli({"predict", "--checkpoint", ck, "--manifest", manifest, "--data-dir", data.string(),
                               "--out", (dir / "single.csv").string(), "--weights"});
  CHECK(single.code == 0);
  CHECK(count_lines(dir / "single.csv") == 101);

  const std::string five = ck + "," + ck + "," + ck + "," + ck + "," + ck;
  const auto ens = run_cli({"predict", "--ensemble", five, "--manifest", manifest, "--data-dir", data.string()});
  CHECK(ens.code == 0);
  CHECK(ens.out == run_cli({"predict", "--ensemble", five, "--manifest", manifest, "--data-dir", data.string()}).out);
  const auto four = run_cli({"predict", "--ensemble", ck + "," + ck + "," + ck + "," + ck, "--manifest", manifest,
                             "--data-dir", data.string()});
  CHECK(four.code == 1);
}

TEST_CASE("malformed config exits 2 and invalid toggles exit 1") {
  const auto dir = audet::test::temp_dir("cli_config");
  const auto data = dir / "data";
  REQUIRE(run_cli({"make-fixtures", "--out", data.string(), "--videos", "5", "--frames", "4", "--size", "16"}).code == 0);
  std::ofstream(dir / "bad.json") << R"({"model": {"no_such_key": 1}})";
  std::ofstream(dir / "toggles.json") << R"({"model": {"use_arl": false, "use_ff": false}})";
  const auto common = std::vector<std::string>{"--manifest", (data / "manifest.tsv").string(), "--data-dir",
                                               data.string(), "--out", (dir / "run").string()};
  auto bad = std::vector<std::string>{"train", "--config", (dir / "bad.json").string()};
  bad.insert(bad.end(), common.begin(), common.end());
  CHECK(run_cli(bad).code == 2);
  auto toggles = std::vector<std::string>{"train", "--config", (dir / "toggles.json").string()};
  toggles.insert(toggles.end(), common.begin(), common.end());
  CHECK(run_cli(toggles).code == 1);
}

TEST_CASE("gradcheck command passes on a reduced budget") {
  const auto r = run_cli({"gradcheck", "--points", "1", "--max-coordinates", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("model.full") != std::string::npos);
  CHECK(run_cli({"gradcheck", "--tolerance", "-1"}).code == 1);
}

}  // TEST_SUITE
