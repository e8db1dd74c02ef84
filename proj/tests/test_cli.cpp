#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include "icc/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = icc::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("icc-cli-" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

}  // namespace

TEST_CASE("run with protocol defaults writes five seed rows") {
  const auto dir = scratch("run");
  const auto r = cli({"run", "--dataset", "toy_sentiment", "--method", "icc", "--lambda", "0.5", "--k", "8",
                      "--seeds", "5", "--backend", "ngram", "--out", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = json::parse(slurp(dir / "report.json"));
  CHECK(report.at("per_seed").size() == 5);
  CHECK(report.at("provenance").at("icc").at("lambda") == 0.5);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK_FALSE(fs::exists(dir / "audit.json"));
}

TEST_CASE("dc-test provenance records M and source") {
  const auto dir = scratch("dc");
  const auto r = cli({"run", "--dataset", "toy_sentiment", "--method", "dc-test", "--m", "20", "--k", "4",
                      "--seeds", "2", "--backend", "ngram", "--out", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto p = json::parse(slurp(dir / "report.json")).at("provenance");
  CHECK(p.at("dc").at("m") == 20);
  CHECK(p.at("dc").at("source") == "test");
}

TEST_CASE("symbol mode on twelve labels fails") {
  const auto dir = scratch("twelve");
  std::string train, labels;
  for (int i = 0; i < 12; ++i) {
    labels += (i ? ", " : "") + std::string("\"c") + std::to_string(i) + "\"";
    train += "{\"fields\": {\"input\": \"text " + std::to_string(i) + "\"}, \"label\": \"c" + std::to_string(i) + "\"}\n";
  }
  write(dir / "train.jsonl", train);
  write(dir / "eval.jsonl", train);
  write(dir / "template.json", R"({"family": "single-input", "example_block": "Text: [INPUT]\nClass: [LABEL]"})");
  write(dir / "dataset.json", "{\"name\": \"twelve\", \"label_space\": [" + labels +
                                  "], \"template_ref\": \"template.json\", \"family\": \"custom\", "
                                  "\"splits\": {\"train\": \"train.jsonl\", \"eval\": \"eval.jsonl\"}}");
  const auto r = cli({"run", "--dataset", (dir / "dataset.json").string(), "--label-mode", "symbol", "--k", "4",
                      "--backend", "ngram", "--out", (dir / "out").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("symbol mode supports at most 10 labels") != std::string::npos);
}

TEST_CASE("compare shares demonstrations and needs two variants") {
  const auto dir = scratch("compare");
  const auto r = cli({"compare", "--methods", "original,cc,dc-demo,dc-test,icc", "--k", "4", "--seeds", "2",
                      "--backend", "ngram", "--dataset", "toy_nli", "--out", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto doc = json::parse(slurp(dir / "compare.json"));
  REQUIRE(doc.at("variants").size() == 5);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto d = doc["variants"][0]["per_seed"][s]["demo_digest"];
    for (const auto& v : doc["variants"]) CHECK(v["per_seed"][s]["demo_digest"] == d);
  }

  const auto one = cli({"compare", "--methods", "icc", "--dataset", "toy_nli", "--backend", "ngram",
                        "--out", dir.string()});
  CHECK(one.code == 2);
}

TEST_CASE("lambda grid expands into icc variants") {
  const auto dir = scratch("grid");
  const auto r = cli({"compare", "--lambda-grid", "0,0.25,0.5,0.75,1", "--methods", "icc", "--k", "4",
                      "--seeds", "1", "--backend", "ngram", "--dataset", "toy_sentiment", "--out", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto doc = json::parse(slurp(dir / "compare.json"));
  REQUIRE(doc.at("variants").size() == 5);
  CHECK(doc["variants"][1]["variant"] == "icc[lambda=0.25]");
  CHECK(doc["variants"][4]["provenance"]["icc"]["lambda"] == 1.0);
}

TEST_CASE("score prints the library result, with components under --audit") {
  const auto dir = scratch("score");
  write(dir / "table.json", R"([{"default": [0.6, 0.4]}])");
  const auto r = cli({"score", "--dataset", "toy_sentiment", "--backend", "mock", "--mock-table",
                      (dir / "table.json").string(), "--k", "2", "--index", "0", "--audit"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto doc = json::parse(r.out);
  const auto& res = doc.at("result");
  CHECK(res.at("raw") == json::array({0.6, 0.4}));
  CHECK(res.at("calibrated") == json::array({1.0, 1.0}));
  CHECK(res.at("predicted") == 0);
  CHECK(res.at("components").at("leave_one_out").size() == 2);
  CHECK(res.at("components").at("shuffled").size() == 2);
}

TEST_CASE("http backend without an endpoint fails before any network use") {
  const auto r = cli({"run", "--dataset", "does_not_exist", "--backend", "http", "--model", "m"});
  CHECK(r.code == 2);
  CHECK(r.err.find("endpoint") != std::string::npos);
}

TEST_CASE("config file sets defaults and flags override it") {
  const auto dir = scratch("config");
  write(dir / "run.json", R"({"run": {"dataset": "toy_topic", "k": 4, "seeds": [0, 2], "method": "cc"},
                              "backend": {"backend": "ngram"}})");
  const auto r = cli({"run", "--config", (dir / "run.json").string(), "--method", "original", "--out",
                      (dir / "out").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto p = json::parse(slurp(dir / "out" / "report.json")).at("provenance");
  CHECK(p.at("method") == "original");
  CHECK(p.at("k") == 4);
  CHECK(p.at("seeds") == json::array({0, 2}));

  write(dir / "bad.json", R"({"run": {"kk": 4}})");
  CHECK(cli({"run", "--config", (dir / "bad.json").string()}).code == 2);
}

TEST_CASE("validate and usage errors") {
  CHECK(cli({"validate", "--dataset", "toy_topic"}).code == 0);
  CHECK(cli({"validate", "--dataset", "no_such_dataset"}).code == 3);
  CHECK(cli({"run", "--no-such-flag"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"run", "--dataset", "toy_topic", "--method", "magic", "--backend", "ngram"}).code == 2);
  CHECK(cli({"run", "--dataset", "toy_topic", "--k", "500", "--backend", "ngram"}).code == 3);
}

TEST_CASE("audit file holds per-demo components") {
  const auto dir = scratch("audit");
  const auto r = cli({"run", "--dataset", "toy_sentiment", "--k", "3", "--seeds", "1", "--backend", "ngram",
                      "--audit", "--out", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto a = json::parse(slurp(dir / "audit.json"));
  CHECK(a.dump().find("leave_one_out") != std::string::npos);
  fs::remove_all(dir.parent_path());
}
