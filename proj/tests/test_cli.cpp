#include "numbra/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
using numbra::cli::dispatch;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("numbra_cli_" + name)).string();
}

std::string table_path() {
  static const std::string path = [] {
    const auto p = temp("table.txt");
    REQUIRE(run({"synth-embed", "--dim", "16", "--seed", "42", "--out", p}).code == 0);
    return p;
  }();
  return path;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

}  // namespace

TEST_CASE("weights") {
  const auto r = run({"weights", "--digits", "3"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out) == json::parse("[2.4, 0.6, 0.1]"));
  const auto csv = run({"weights", "--digits", "2", "--format", "csv"});
  CHECK(csv.code == 0);
  CHECK(csv.out == "position,weight,power_of_two,fraction_num,fraction_den\n1,1.5,1,3,4\n2,0.25,0,1,4\n");
  CHECK(run({"weights", "--digits", "0"}).code == 1);
  CHECK(run({"weights", "--digits", "3", "--format", "xml"}).code == 64);
}

TEST_CASE("help and usage errors") {
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  for (const char* sub : {"tokenize", "synth-embed", "weights", "aggregate", "knn-eval", "loss",
                          "score", "train-toy", "ablate", "schema"}) {
    CHECK(help.out.find(sub) != std::string::npos);
  }
  CHECK(run({"knn-eval"}).code == 64);
  CHECK(run({}).code == 64);
  const auto bogus = run({"frobnicate"});
  CHECK(bogus.code == 64);
  CHECK_FALSE(bogus.err.empty());
  CHECK(run({"knn-eval", "--embeddings", table_path(), "--digits", "3..1"}).code == 64);
}

TEST_CASE("schema lists every report") {
  const auto a = run({"schema"});
  const auto b = run({"--schema"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = json::parse(a.out);
  for (const char* key : {"synth-embed", "weights", "aggregate", "knn-eval", "loss", "score",
                          "train-toy", "ablate"}) {
    CHECK(j.contains(key));
  }
}

TEST_CASE("tokenize") {
  const auto r = run({"tokenize", "--text", "pay 12", "--scheme", "f-agg-digits"});
  CHECK(r.code == 0);
  CHECK(r.out == "pay \n[F]\n[AGG]\n1\n2\n[/F]\n");
  CHECK(run({"tokenize", "--text", "1", "--scheme", "bpe"}).code == 1);
}

TEST_CASE("synth-embed, aggregate and loss") {
  const auto a = run({"aggregate", "--embeddings", table_path(), "--number", "7", "--method", "median"});
  CHECK(a.code == 0);
  const auto j = json::parse(a.out);
  CHECK(j["dim"] == 16);
  CHECK(j["vector"].size() == 16);

  const auto cat = json::parse(run({"loss", "--embeddings", table_path(), "--pred", "cat", "--gold", "321",
                                    "--lambda", "0.6", "--ce", "2"})
                                   .out);
  CHECK(cat["aux"] == 20.0);
  CHECK(cat["total"].get<double>() == doctest::Approx(9.2));
  const auto same = json::parse(run({"loss", "--embeddings", table_path(), "--pred", "321", "--gold", "321"}).out);
  CHECK(same["aux"] == -20.0);

  CHECK(run({"aggregate", "--embeddings", temp("missing.txt"), "--number", "7"}).code == 2);
  CHECK(run({"synth-embed", "--out", "/nonexistent_dir/t.txt"}).code == 2);
  CHECK(run({"synth-embed", "--dim", "1", "--out", temp("small.txt")}).code == 1);
}

TEST_CASE("knn-eval report") {
  const std::vector<std::string> args = {"knn-eval", "--embeddings", table_path(), "--methods", "weighted,sum",
                                         "--digits", "1..2", "--k", "5"};
  const auto r = run(args);
  REQUIRE(r.code == 0);
  CHECK(r.out == run(args).out);
  const auto j = json::parse(r.out);
  for (const char* key : {"embeddings", "dim", "k", "distance", "sample_cap", "seed", "summaries",
                          "diagnostics", "reference"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["summaries"].size() == 4);
  CHECK(j["summaries"][1]["count"] == 90);
  CHECK(j["diagnostics"].empty());
  CHECK(j["reference"]["digit_lengths"] == json::parse("[2]"));

  const auto csv = temp("knn.csv");
  auto with_csv = args;
  with_csv.insert(with_csv.end(), {"--csv", csv, "--no-sample"});
  REQUIRE(run(with_csv).code == 0);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "digit_length,method,mean_f1,count");
}

TEST_CASE("score") {
  const auto pred = temp("pred.txt");
  const auto gold = temp("gold.txt");
  write_file(pred, "321\r\n320\n2.0\n");
  write_file(gold, "321\n321\n2\n");
  const auto r = run({"score", "--pred", pred, "--gold", gold});
  CHECK(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["count"] == 3);
  CHECK(j["accuracy_percent"].get<double>() == doctest::Approx(200.0 / 3.0));
  CHECK(j["records"][1]["edit_distance"] == 1);

  write_file(gold, "321\n");
  CHECK(run({"score", "--pred", pred, "--gold", gold}).code == 1);
  CHECK(run({"score", "--pred", temp("nope.txt"), "--gold", gold}).code == 2);
}

TEST_CASE("train-toy writes a trace and a summary") {
  const auto r = run({"train-toy", "--epochs", "2", "--size", "8", "--lambda", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("epoch,total,ce,aux,dev_accuracy,dev_cer\n"));

  const auto trace = temp("trace.csv");
  const auto s = run({"train-toy", "--epochs", "2", "--size", "8", "--out", trace});
  REQUIRE(s.code == 0);
  const auto j = json::parse(s.out);
  CHECK(j["use_aux_loss"] == true);
  CHECK(j["lambda"] == 0.65);
  CHECK(j["final"]["epoch"] == 2);
  CHECK(run({"train-toy", "--task", "mul"}).code == 1);
}
