#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <kgcp/conformal.hpp>
#include <kgcp/trainer.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result kgcp_run(std::vector<std::string> args) {
  args.insert(args.begin(), "kgcp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = kgcp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Fresh directory with a small synthetic run configuration.
struct Workspace {
  fs::path dir;
  fs::path config;

  explicit Workspace(const std::string& name, json overrides = json::object()) {
    dir = fs::temp_directory_path() / ("kgcp_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    json cfg = {
        {"data", {{"synthetic", {{"seed", 3}, {"num_entities", 40}, {"num_relations", 3}, {"train", 300},
                                 {"valid", 60}, {"test", 60}}}}},
        {"model", {{"kind", "distmult"}, {"dim", 8}, {"train", {{"epochs", 10}}}}},
        {"eval", {{"trials", 3}, {"calibration_sizes", {10, 50}}, {"bin_width", 5}, {"max_rank", 40}}},
        {"output_dir", "out"},
    };
    cfg.merge_patch(overrides);
    config = dir / "config.json";
    std::ofstream(config) << cfg.dump(2);
  }
  ~Workspace() { fs::remove_all(dir); }

  fs::path out() const { return dir / "out"; }
  Result run(std::vector<std::string> args) const {
    args.insert(args.begin(), {"--config", config.string()});
    return kgcp_run(std::move(args));
  }
};

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(kgcp_run({"--help"}).code == 0);
  CHECK(kgcp_run({}).code == 2);
  CHECK(kgcp_run({"bogus"}).code == 2);
  CHECK(kgcp_run({"experiment", "7"}).code == 2);
  CHECK(kgcp_run({"--filtered", "--unfiltered", "evaluate"}).code == 2);
}

TEST_CASE("edit distance suggestions") {
  CHECK(kgcp::cli::edit_distance("kitten", "sitting") == 3);
  CHECK(kgcp::cli::edit_distance("", "abc") == 3);
  const std::vector<std::string> dict{"paris", "parma", "berlin", "rome"};
  const auto near = kgcp::cli::nearest_names("pariss", dict, 2);
  REQUIRE(near.size() == 2);
  CHECK(near[0] == "paris");
}

TEST_CASE("train, calibrate and predict") {
  const Workspace ws("roundtrip", {{"predictors", {"negscore", "softmax", "platt", "topk"}}});
  REQUIRE(ws.run({"train"}).code == 0);
  CHECK(fs::exists(ws.out() / "model.ckpt"));
  CHECK(count_lines(slurp(ws.out() / "loss_trace.csv")) == 11);
  CHECK(json::parse(slurp(ws.out() / "dictionary.json"))["entities"].size() == 40);
  const auto ckpt_bytes = slurp(ws.out() / "model.ckpt");

  // A rerun reproduces the checkpoint byte for byte.
  REQUIRE(ws.run({"train"}).code == 0);
  CHECK(slurp(ws.out() / "model.ckpt") == ckpt_bytes);

  REQUIRE(ws.run({"calibrate"}).code == 0);
  const auto cal_text = slurp(ws.out() / "calibration.json");
  const auto cal = json::parse(cal_text);
  REQUIRE(cal["profiles"].size() == 2);
  CHECK(cal["n_cal"] == 120);
  CHECK(cal["profiles"][0]["kind"] == "negscore");
  CHECK(cal["profiles"][1]["n_cal"] == 120);
  CHECK(cal.contains("temperature"));
  CHECK(cal["topk"]["ranks"].size() == 120);
  REQUIRE(ws.run({"calibrate"}).code == 0);
  CHECK(slurp(ws.out() / "calibration.json") == cal_text);

  SUBCASE("the CLI set equals the library set") {
    const auto r = ws.run({"--unfiltered", "--epsilon", "0.2", "predict", "--query", "e1 r0 ?", "--predictor",
                           "softmax"});
    REQUIRE(r.code == 0);
    const auto ckpt = kgcp::load_checkpoint(ws.out() / "model.ckpt");
    const auto profile = kgcp::profile_from_json(cal["profiles"][1].dump());
    const auto set = kgcp::predict_set(ckpt.model, {kgcp::Direction::Tail, 1, 0}, profile, 0.2);
    std::vector<std::string> names;
    for (auto e : set.entities) names.push_back(ckpt.entity_names[e]);
    std::sort(names.begin(), names.end());
    std::string expect;
    for (const auto& n : names) expect += n + "\n";
    expect += "size=" + std::to_string(set.size()) + " epsilon=0.2 predictor=softmax\n";
    CHECK(r.out == expect);
  }
  SUBCASE("extreme error rates") {
    const auto none = ws.run({"--unfiltered", "--epsilon", "0.999", "predict", "--query", "? r1 e2"});
    REQUIRE(none.code == 0);
    CHECK(none.out == "size=0 epsilon=0.999 predictor=negscore\n");
    const auto all = ws.run({"--unfiltered", "--epsilon", "0.001", "predict", "--query", "? r1 e2"});
    REQUIRE(all.code == 0);
    CHECK(all.out.find("size=40 ") != std::string::npos);
  }
  SUBCASE("filtered prediction drops known answers") {
    const auto open = ws.run({"--unfiltered", "--epsilon", "0.001", "predict", "--query", "e0 r0 ?"});
    const auto filtered = ws.run({"--filtered", "--epsilon", "0.001", "predict", "--query", "e0 r0 ?"});
    REQUIRE(filtered.code == 0);
    CHECK(count_lines(filtered.out) <= count_lines(open.out));
  }
  SUBCASE("other predictor families") {
    for (const char* name : {"platt", "topk", "naive", "top3"}) {
      CAPTURE(name);
      const auto r = ws.run({"predict", "--query", "e5 r2 ?", "--predictor", name});
      CHECK(r.code == 0);
    }
    CHECK(ws.run({"predict", "--query", "e5 r2 ?", "--predictor", "top3"}).out.find("size=3 ") !=
          std::string::npos);
    CHECK(ws.run({"predict", "--query", "e5 r2 ?", "--predictor", "minmax"}).code == 2);
  }
  SUBCASE("unknown names") {
    const auto r = ws.run({"predict", "--query", "e999 r0 ?"});
    CHECK(r.code == 5);
    CHECK(r.err.find("nearest") != std::string::npos);
    CHECK(ws.run({"predict", "--query", "e1 rx ?"}).code == 5);
    CHECK(ws.run({"predict", "--query", "e1 r0 e2"}).code == 2);
    CHECK(ws.run({"predict", "--query", "e1 r0 ?", "--predictor", "entropy"}).code == 2);
  }
  SUBCASE("evaluate") {
    const auto r = ws.run({"evaluate"});
    REQUIRE(r.code == 0);
    CHECK(r.out == slurp(ws.out() / "ranking.csv"));
    CHECK(count_lines(r.out) == 2);
  }
  SUBCASE("damaged checkpoint") {
    std::ofstream(ws.out() / "model.ckpt", std::ios::binary) << ckpt_bytes.substr(0, 20);
    CHECK(ws.run({"predict", "--query", "e1 r0 ?"}).code == 6);
  }
}

TEST_CASE("experiments") {
  const Workspace ws("experiments");
  SUBCASE("1: all default predictors") {
    REQUIRE(ws.run({"experiment", "1"}).code == 0);
    CHECK(count_lines(slurp(ws.out() / "experiment1.csv")) == 7);
    CHECK(json::parse(slurp(ws.out() / "experiment1.json"))["records"].size() == 6);
    const auto first = slurp(ws.out() / "experiment1.csv");
    REQUIRE(ws.run({"experiment", "1"}).code == 0);
    CHECK(slurp(ws.out() / "experiment1.csv") == first);
  }
  SUBCASE("2: one bin row per rank bin") {
    REQUIRE(ws.run({"experiment", "2"}).code == 0);
    const auto csv = slurp(ws.out() / "adaptiveness_softmax.csv");
    CHECK(csv.rfind("rank_lo,rank_hi,count,mean_size\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 8);
    CHECK(count_lines(slurp(ws.out() / "experiment2.csv")) == 7);
  }
  SUBCASE("3: calibration sizes plus the full pool") {
    REQUIRE(ws.run({"experiment", "3"}).code == 0);
    // platt, topk, negscore, softmax and minmax fit on data; naive does not.
    CHECK(count_lines(slurp(ws.out() / "experiment3.csv")) == 1 + 5 * 3);
  }
  SUBCASE("4: epsilon grid") {
    REQUIRE(ws.run({"experiment", "4"}).code == 0);
    CHECK(count_lines(slurp(ws.out() / "experiment4.csv")) == 1 + 6 * 5);
  }
}

TEST_CASE("configuration errors") {
  SUBCASE("missing training file names the field") {
    const Workspace ws("missing", {{"data", {{"synthetic", nullptr}, {"train", "nope.tsv"}, {"valid", "v.tsv"},
                                             {"test", "t.tsv"}}}});
    const auto r = ws.run({"train"});
    CHECK(r.code == 2);
    CHECK(r.err.find("data.train") != std::string::npos);
  }
  SUBCASE("unknown key") {
    const Workspace ws("unknown", {{"eval", {{"trails", 3}}}});
    CHECK(ws.run({"train"}).code == 2);
  }
  SUBCASE("calibration size larger than the pool") {
    const Workspace ws("toobig", {{"eval", {{"calibration_sizes", {10, 5000}}}}});
    const auto r = ws.run({"experiment", "3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("eval.calibration_sizes[1]") != std::string::npos);
  }
  SUBCASE("bad epsilon") {
    const Workspace ws("eps");
    CHECK(ws.run({"--epsilon", "1.5", "experiment", "1"}).code == 2);
  }
  SUBCASE("missing config file") {
    CHECK(kgcp_run({"--config", "/nonexistent/kgcp.json", "train"}).code == 2);
  }
}

TEST_CASE("divergence exits with its own code") {
  const Workspace ws("diverge", {{"model", {{"train", {{"optimizer", "sgd"}, {"learning_rate", 1e150}}}}}});
  const auto r = ws.run({"train"});
  CHECK(r.code == 3);
}

TEST_CASE("generate writes TSV splits") {
  const Workspace ws("generate");
  REQUIRE(ws.run({"generate"}).code == 0);
  CHECK(count_lines(slurp(ws.out() / "train.tsv")) == 300);
  CHECK(count_lines(slurp(ws.out() / "test.tsv")) == 60);
}
