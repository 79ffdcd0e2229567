#include "numbra/cli.hpp"

#include "numbra/aggregation.hpp"
#include "numbra/embedding.hpp"
#include "numbra/error.hpp"
#include "numbra/lexer.hpp"
#include "numbra/loss.hpp"
#include "numbra/metrics.hpp"
#include "numbra/neighborhood.hpp"
#include "numbra/parallel.hpp"
#include "numbra/toy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace numbra::cli {

namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("not an integer: '" + s + "'");
}

// "1..6", "2,4,6" or "3".
std::vector<int> parse_lengths(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_int(part));
      continue;
    }
    const int lo = parse_int(part.substr(0, dots));
    const int hi = parse_int(part.substr(dots + 2));
    if (hi < lo) throw UsageError("empty range '" + part + "'");
    for (int d = lo; d <= hi; ++d) out.push_back(d);
  }
  if (out.empty()) throw UsageError("no digit lengths given");
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  for (const auto& name : split(text, ',')) out.push_back(parse_method(name));
  if (out.empty()) throw UsageError("no methods given");
  return out;
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  f.flush();
  if (!f) throw IoError("write failed on '" + path + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return lines;
}

json schema() {
  return {
      {"tokenize", "plain text, one token per line"},
      {"synth-embed", {{"out", "string"}, {"dim", "integer"}, {"seed", "integer"},
                       {"vocab_count", "integer"}}},
      {"weights", {{"json", "array of number, position 1..N left to right"},
                   {"csv", "columns position,weight,power_of_two,fraction_num,fraction_den"}}},
      {"aggregate", {{"number", "string"}, {"method", "string"}, {"dim", "integer"},
                     {"vector", "array of number"}}},
      {"knn-eval",
       {{"json",
         {{"embeddings", "string"}, {"dim", "integer"}, {"k", "integer"}, {"distance", "string"},
          {"sample_cap", "integer or null"}, {"seed", "integer"},
          {"summaries", "array of {digit_length, method, mean_f1, count, k}"},
          {"diagnostics", "array of {method, number, natural, embedded, f1, ideal, ideal_overlap}"},
          {"reference", "{method, digit_lengths, observed_mean_f1, target_mean_f1, tolerance, "
                        "within_tolerance} or null"}}},
        {"csv", "columns digit_length,method,mean_f1,count"}}},
      {"loss", {{"pred", "string"}, {"gold", "string"}, {"ce", "number"}, {"aux", "number"},
                {"lambda", "number"}, {"total", "number"}}},
      {"score", {{"count", "integer"}, {"accuracy_percent", "number"},
                 {"mean_cer_percent", "number"},
                 {"records", "array of {line, exact_match, cer_percent, edit_distance, "
                             "target_length}"}}},
      {"train-toy", {{"csv", "columns epoch,total,ce,aux,dev_accuracy,dev_cer"},
                     {"json", {{"task", "string"}, {"scheme", "string"}, {"lambda", "number"},
                               {"use_aux_loss", "boolean"}, {"epochs", "integer"},
                               {"final", "{epoch, total, ce, aux, dev_accuracy, dev_cer}"}}}}},
      {"ablate", {{"csv", "columns row,scheme,aux_loss,lambda,accuracy,cer,accuracy_delta,"
                          "cer_delta"}}},
  };
}

json knn_diagnostics(const EmbeddingTable& table, Method method, std::size_t k,
                     neighborhood::Distance distance) {
  // Ideal case for 4523: every 452X except itself, 8 of which fall in the
  // natural 10-neighbourhood.
  constexpr std::int64_t kNumber = 4523;
  const auto universe = neighborhood::digit_length_universe(4);
  const auto report = neighborhood::evaluate_number(kNumber, k, universe, table, method, distance);
  std::vector<std::int64_t> ideal;
  for (std::int64_t x = 4520; x <= 4529; ++x) {
    if (x != kNumber) ideal.push_back(x);
  }
  std::size_t overlap = 0;
  for (auto m : report.embedded) overlap += std::count(ideal.begin(), ideal.end(), m);
  return {{"method", method_name(method)}, {"number", kNumber},   {"natural", report.natural},
          {"embedded", report.embedded},   {"f1", report.f1},     {"ideal", ideal},
          {"ideal_overlap", overlap}};
}

std::string knn_csv(const std::vector<neighborhood::BucketSummary>& rows) {
  std::string out = "digit_length,method,mean_f1,count\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%zu\n", r.digit_length,
                  std::string(method_name(r.method)).c_str(), r.mean_f1, r.count);
    out += buf;
  }
  return out;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"numbra: positional aggregation of digit embeddings", "numbra"};
  app.require_subcommand(0, 1);
  bool schema_flag = false;
  app.add_flag("--schema", schema_flag, "Print the keys of every JSON report and exit");
  app.footer("Exit codes: 0 ok, 1 domain error, 2 I/O error, 64 usage error.\n"
             "NUMBRA_THREADS caps worker threads for knn-eval.");

  // tokenize
  std::string text;
  std::string scheme_name = "f-digits";
  auto* tokenize = app.add_subcommand("tokenize", "Rewrite numbers in text as digit tokens");
  tokenize->add_option("--text", text, "Input text")->required();
  tokenize->add_option("--scheme", scheme_name,
                       "digits | f-digits | f-agg-digits | f-digits-agg | f-pause-digits")
      ->capture_default_str();

  // synth-embed
  std::size_t dim = 16;
  std::uint64_t seed = 42;
  std::string out_path;
  auto* synth = app.add_subcommand("synth-embed", "Write a seeded synthetic embedding table");
  synth->add_option("--dim", dim, "Vector dimension (>= 2)")->capture_default_str();
  synth->add_option("--seed", seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", out_path, "Output file")->required();

  // weights
  std::size_t n_digits = 0;
  std::string format = "json";
  auto* weights_cmd = app.add_subcommand("weights", "Print the positional weights for N digits");
  weights_cmd->add_option("--digits", n_digits, "Digit count N (1..64)")->required();
  weights_cmd->add_option("--format", format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  weights_cmd->add_option("--out", out_path, "Output file (default stdout)");

  // aggregate
  std::string embeddings;
  std::string number;
  std::string method = "weighted";
  auto* aggregate_cmd = app.add_subcommand("aggregate", "Aggregate the digit vectors of a number");
  aggregate_cmd->add_option("--embeddings", embeddings, "Embedding table file")->required();
  aggregate_cmd->add_option("--number", number, "Digit string")->required();
  aggregate_cmd->add_option("--method", method, "weighted | sum | mean | max | min | median")
      ->capture_default_str();
  aggregate_cmd->add_option("--out", out_path, "Output file (default stdout)");

  // knn-eval
  std::string methods = "weighted,sum,mean,max,min,median";
  std::string lengths = "1..6";
  std::size_t k = 10;
  std::optional<std::size_t> sample = 2000;
  std::string distance = "euclidean";
  std::string csv_path;
  auto* knn = app.add_subcommand("knn-eval", "Natural vs embedding neighbourhood F1 per digit length");
  knn->add_option("--embeddings", embeddings, "Embedding table file")->required();
  knn->add_option("--methods", methods, "Comma-separated aggregators")->capture_default_str();
  knn->add_option("--digits", lengths, "Digit lengths, e.g. 1..6 or 2,4")->capture_default_str();
  knn->add_option("--k", k, "Neighbourhood size")->capture_default_str();
  knn->add_option("--sample", sample, "Per-bucket sample cap")->capture_default_str();
  knn->add_flag("--no-sample", "Enumerate every bucket fully");
  knn->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  knn->add_option("--distance", distance, "euclidean | cosine")->capture_default_str();
  knn->add_option("--out", out_path, "JSON report file (default stdout)");
  knn->add_option("--csv", csv_path, "Plot-ready CSV file");

  // loss
  std::string pred;
  std::string gold;
  double lambda = 0.65;
  double ce = 0.0;
  auto* loss_cmd = app.add_subcommand("loss", "Auxiliary and interpolated loss for one prediction");
  loss_cmd->add_option("--embeddings", embeddings, "Embedding table file")->required();
  loss_cmd->add_option("--pred", pred, "Predicted answer")->required();
  loss_cmd->add_option("--gold", gold, "Gold answer")->required();
  loss_cmd->add_option("--lambda", lambda, "Interpolation weight on cross-entropy")
      ->capture_default_str();
  loss_cmd->add_option("--ce", ce, "Cross-entropy value in nats")->capture_default_str();
  loss_cmd->add_option("--out", out_path, "Output file (default stdout)");

  // score
  std::string pred_path;
  std::string gold_path;
  auto* score = app.add_subcommand("score", "Accuracy and CER of line-aligned answer files");
  score->add_option("--pred", pred_path, "Predictions, one per line")->required();
  score->add_option("--gold", gold_path, "Gold answers, one per line")->required();
  score->add_option("--out", out_path, "Output file (default stdout)");

  // train-toy / ablate
  toy::ToyTask task;
  toy::TrainConfig train_config;
  toy::ModelConfig model_config;
  std::string task_name = "add";
  auto add_toy_options = [&](CLI::App* cmd) {
    cmd->add_option("--task", task_name, "add | sub")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for data, model and shuffling")->capture_default_str();
    cmd->add_option("--epochs", train_config.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--lr", train_config.learning_rate, "Gradient descent step")
        ->capture_default_str();
    cmd->add_option("--batch", train_config.batch_size, "Minibatch size")->capture_default_str();
    cmd->add_option("--operand-digits", task.operand_digits, "Operand digits (1..3)")
        ->capture_default_str();
    cmd->add_option("--size", task.size, "Training instances")->capture_default_str();
    cmd->add_option("--dim", model_config.dim, "Embedding dimension")->capture_default_str();
    cmd->add_option("--hidden", model_config.hidden, "Hidden units")->capture_default_str();
    cmd->add_option("--out", out_path, "CSV output file (default stdout)");
  };
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy model and write a trace");
  add_toy_options(train_cmd);
  train_cmd->add_option("--scheme", scheme_name, "Input token scheme")->capture_default_str();
  train_cmd->add_option("--lambda", lambda,
                        "Weight on cross-entropy; below 1 enables the auxiliary loss")
      ->capture_default_str();
  auto* ablate = app.add_subcommand("ablate", "Compare input schemes and the auxiliary loss");
  add_toy_options(ablate);
  ablate->add_option("--lambda", lambda, "Weight on cross-entropy for the aux-loss row")
      ->capture_default_str();

  auto* schema_cmd = app.add_subcommand("schema", "Print the keys of every JSON report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  if (schema_flag) {
    out << dump(schema());
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    err << "error: a subcommand is required\n" << app.help();
    return kExitUsage;
  }

  try {
    if (tokenize->parsed()) {
      for (const auto& t : lexer::tokenize(text, lexer::parse_scheme(scheme_name))) {
        out << lexer::render(t) << "\n";
      }
    } else if (synth->parsed()) {
      const auto table = synth_table(dim, seed);
      save_table(table, out_path);
      out << dump({{"out", out_path}, {"dim", dim}, {"seed", seed}, {"vocab_count", table.size()}});
    } else if (weights_cmd->parsed()) {
      const auto w = weights(n_digits);
      if (format == "json") {
        emit(dump(json(w.values)), out_path, out);
      } else {
        std::string csv = "position,weight,power_of_two,fraction_num,fraction_den\n";
        char buf[160];
        for (std::size_t i = 0; i < w.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%lld,%lld\n", i + 1, w.values[i],
                        w.exponents[i], static_cast<long long>(w.fractions[i].num()),
                        static_cast<long long>(w.fractions[i].den()));
          csv += buf;
        }
        emit(csv, out_path, out);
      }
    } else if (aggregate_cmd->parsed()) {
      const auto table = load_table(embeddings);
      const auto a = aggregate(number, table, parse_method(method));
      emit(dump({{"number", number}, {"method", method_name(a.method)}, {"dim", table.dim()},
                 {"vector", a.vector}}),
           out_path, out);
    } else if (knn->parsed()) {
      neighborhood::SweepOptions options;
      options.methods = parse_methods(methods);
      options.digit_lengths = parse_lengths(lengths);
      options.k = k;
      options.sample_cap = knn->count("--no-sample") > 0 ? std::nullopt : sample;
      options.seed = seed;
      options.distance = neighborhood::parse_distance(distance);
      options.workers = worker_count();
      const auto table = load_table(embeddings);
      const auto rows = neighborhood::bucket_sweep(table, options);

      json report = {{"embeddings", embeddings},
                     {"dim", table.dim()},
                     {"k", k},
                     {"distance", distance},
                     {"sample_cap", options.sample_cap ? json(*options.sample_cap) : json()},
                     {"seed", seed}};
      json summaries = json::array();
      for (const auto& r : rows) {
        summaries.push_back({{"digit_length", r.digit_length}, {"method", method_name(r.method)},
                             {"mean_f1", r.mean_f1}, {"count", r.count}, {"k", r.k}});
      }
      report["summaries"] = summaries;

      json diagnostics = json::array();
      const auto& dl = options.digit_lengths;
      if (std::find(dl.begin(), dl.end(), 4) != dl.end()) {
        for (Method m : options.methods) {
          diagnostics.push_back(knn_diagnostics(table, m, k, options.distance));
        }
      }
      report["diagnostics"] = diagnostics;

      // Weighted mean F1 over lengths 2..6 against the published 0.69.
      double total = 0.0;
      std::vector<int> used;
      for (const auto& r : rows) {
        if (r.method == Method::Weighted && r.digit_length >= 2 && r.digit_length <= 6) {
          total += r.mean_f1;
          used.push_back(r.digit_length);
        }
      }
      if (used.empty()) {
        report["reference"] = nullptr;
      } else {
        const double observed = total / static_cast<double>(used.size());
        report["reference"] = {{"method", "weighted"},
                               {"digit_lengths", used},
                               {"observed_mean_f1", observed},
                               {"target_mean_f1", 0.69},
                               {"tolerance", 0.05},
                               {"within_tolerance", std::abs(observed - 0.69) <= 0.05}};
      }
      emit(dump(report), out_path, out);
      if (!csv_path.empty()) emit(knn_csv(rows), csv_path, out);
    } else if (loss_cmd->parsed()) {
      const auto table = load_table(embeddings);
      const double aux = loss::aux_loss(pred, gold, table);
      const auto b = loss::combined_loss(ce, aux, lambda);
      emit(dump({{"pred", pred}, {"gold", gold}, {"ce", b.ce}, {"aux", b.aux},
                 {"lambda", b.lambda}, {"total", b.total}}),
           out_path, out);
    } else if (score->parsed()) {
      const auto preds = read_lines(pred_path);
      const auto golds = read_lines(gold_path);
      if (preds.size() != golds.size()) {
        throw DomainError("prediction file has " + std::to_string(preds.size()) +
                          " lines, gold file has " + std::to_string(golds.size()));
      }
      std::vector<std::pair<std::string, std::string>> pairs;
      for (std::size_t i = 0; i < preds.size(); ++i) pairs.emplace_back(preds[i], golds[i]);
      const auto scores = metrics::batch_scores(pairs);
      json records = json::array();
      for (std::size_t i = 0; i < scores.records.size(); ++i) {
        const auto& r = scores.records[i];
        records.push_back({{"line", i + 1}, {"exact_match", r.exact_match},
                           {"cer_percent", r.cer_percent}, {"edit_distance", r.edit_distance},
                           {"target_length", r.target_length}});
      }
      emit(dump({{"count", scores.count}, {"accuracy_percent", scores.accuracy_percent},
                 {"mean_cer_percent", scores.mean_cer_percent}, {"records", records}}),
           out_path, out);
    } else if (train_cmd->parsed()) {
      task.operation = toy::parse_operation(task_name);
      task.seed = seed;
      model_config.scheme = lexer::parse_scheme(scheme_name);
      model_config.seed = seed;
      train_config.seed = seed;
      train_config.lambda = lambda;
      train_config.use_aux_loss = lambda < 1.0;
      toy::ToyModel model(model_config);
      const auto trace = toy::train(model, toy::make_dataset(task, model_config.scheme), train_config);
      emit(toy::trace_csv(trace), out_path, out);
      if (!out_path.empty() && out_path != "-") {
        const auto& f = trace.back();
        out << dump({{"task", task_name},
                     {"scheme", scheme_name},
                     {"lambda", lambda},
                     {"use_aux_loss", train_config.use_aux_loss},
                     {"epochs", train_config.epochs},
                     {"final",
                      {{"epoch", f.epoch}, {"total", f.total}, {"ce", f.ce}, {"aux", f.aux},
                       {"dev_accuracy", f.dev_accuracy}, {"dev_cer", f.dev_cer}}}});
      }
    } else if (ablate->parsed()) {
      task.operation = toy::parse_operation(task_name);
      task.seed = seed;
      model_config.seed = seed;
      train_config.seed = seed;
      train_config.lambda = lambda;
      const auto configs = toy::default_ablation_configs();
      const auto rows = toy::ablation_report(task, configs, train_config, model_config);
      emit(toy::ablation_csv(rows), out_path, out);
    } else if (schema_cmd->parsed()) {
      out << dump(schema());
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace numbra::cli
