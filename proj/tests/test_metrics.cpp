#include "numbra/error.hpp"
#include "numbra/metrics.hpp"
#include "numbra/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <string>
#include <utility>
#include <vector>

using namespace numbra;
using namespace numbra::metrics;

namespace {

std::string random_string(Rng& rng, std::size_t max_len) {
  static const std::string alphabet = "0123456789.-ab";
  std::string s;
  for (auto n = rng.below(max_len + 1); n > 0; --n) s += alphabet[rng.below(alphabet.size())];
  return s;
}

}  // namespace

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein("321", "321") == 0);
  CHECK(levenshtein("32", "321") == 1);
  CHECK(levenshtein("123456", "1") == 5);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("levenshtein matches the table oracle and the metric axioms") {
  Rng rng(31);
  for (int c = 0; c < 300; ++c) {
    const auto a = random_string(rng, 12);
    const auto b = random_string(rng, 12);
    const auto x = random_string(rng, 12);
    CHECK(levenshtein(a, b) == oracle::levenshtein_table(a, b));
    CHECK((levenshtein(a, b) == 0) == (a == b));
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK(levenshtein(a, x) <= levenshtein(a, b) + levenshtein(b, x));
    CHECK(levenshtein(a, b) <= std::max(a.size(), b.size()));
  }
}

TEST_CASE("cer does not change when both sides are normalized first") {
  // numeric answers only: on strings like "5.0.0" stripping one ".0" is not idempotent
  Rng rng(37);
  const std::vector<std::string> pads = {"", " ", "\t", "\n "};
  auto answer = [&] {
    std::string s = std::to_string(rng.below(100000));
    switch (rng.below(3)) {
      case 0: s += ".0"; break;
      case 1: s += "." + std::to_string(rng.below(100)); break;
      default: break;
    }
    return pads[rng.below(pads.size())] + s + pads[rng.below(pads.size())];
  };
  for (int c = 0; c < 300; ++c) {
    const auto p = answer();
    const auto g = answer();
    const auto raw = cer(p, g);
    const auto norm = cer(normalize_answer(p), normalize_answer(g));
    CHECK(raw.cer_percent == norm.cer_percent);
    CHECK(raw.exact_match == norm.exact_match);
  }
}

TEST_CASE("answer normalization") {
  CHECK(normalize_answer(" 2.0 ") == "2");
  CHECK(normalize_answer("2.00") == "2.00");
  CHECK(normalize_answer("\t12\n") == "12");
  CHECK(normalize_answer("1.5") == "1.5");
  CHECK(normalize_answer("") == "");
}

TEST_CASE("character error rate") {
  CHECK(cer("321", "321").cer_percent == 0.0);
  CHECK(cer("321", "321").exact_match);
  CHECK(cer("123456", "1").cer_percent == 500.0);
  const auto r = cer("320", "321");
  CHECK(r.cer_percent == doctest::Approx(100.0 / 3.0).epsilon(1e-15));
  CHECK(r.edit_distance == 1);
  CHECK(r.target_length == 3);
  CHECK_FALSE(r.exact_match);
  CHECK(cer("2.0", "2").exact_match);
  CHECK_THROWS_AS(cer("1", " "), DomainError);
}

TEST_CASE("batch scores") {
  const std::vector<std::pair<std::string, std::string>> same = {{"1", "1"}, {"22", "22"}};
  CHECK(batch_scores(same).accuracy_percent == 100.0);
  CHECK(batch_scores(same).mean_cer_percent == 0.0);

  const std::vector<std::pair<std::string, std::string>> half = {{"1", "1"}, {"3", "2"}};
  CHECK(batch_scores(half).accuracy_percent == 50.0);

  // reference values from an independent script
  const std::vector<std::pair<std::string, std::string>> mixed = {
      {"321", "321"}, {"320", "321"},   {" 2.0 ", "2"}, {"123456", "1"},
      {"cat", "42"},  {"1.5", "1.50"}, {"-12", "12"},  {"", "7"}};
  const auto s = batch_scores(mixed);
  CHECK(s.count == 8);
  CHECK(s.accuracy_percent == 25.0);
  CHECK(s.mean_cer_percent == doctest::Approx(107.29166666666667).epsilon(1e-11));
  const std::vector<double> per = {0.0, 100.0 / 3.0, 0.0, 500.0, 150.0, 25.0, 50.0, 100.0};
  for (std::size_t i = 0; i < per.size(); ++i) {
    CHECK(s.records[i].cer_percent == doctest::Approx(per[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(batch_scores({}), DomainError);
}
