#include "numbra/aggregation.hpp"
#include "numbra/error.hpp"
#include "numbra/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace numbra;

namespace {

EmbeddingTable two_dim_10() {
  EmbeddingTable t(2);
  t.add("1", std::vector<double>{1.0, 0.0});
  t.add("0", std::vector<double>{0.0, 1.0});
  return t;
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

std::vector<double> one_hot(char c) {
  std::vector<double> p(10, 0.0);
  p[static_cast<std::size_t>(c - '0')] = 1.0;
  return p;
}

}  // namespace

TEST_CASE("weights for small N") {
  CHECK(weights(1).values == std::vector<double>{1.0});
  CHECK(weights(2).values == std::vector<double>{1.5, 0.25});
  CHECK(weights(3).values == std::vector<double>{2.4, 0.6, 0.1});
  CHECK(weights(3).fractions == std::vector<Rational>{{3, 5}, {3, 10}, {1, 10}});
  CHECK(weights(3).exponents == std::vector<int>{2, 1, 0});
  CHECK_THROWS_AS(weights(0), DomainError);
  CHECK_THROWS_AS(weights(65), DomainError);
}

TEST_CASE("weights are exact for every N") {
  for (std::size_t n = 1; n <= WeightVector::kMaxDigits; ++n) {
    const auto w = weights(n);
    REQUIRE(w.size() == n);
    Rational total;
    for (std::size_t i = 0; i < n; ++i) {
      total = total + w.fractions[i];
      CHECK(w.exponents[i] == static_cast<int>(n - 1 - i));
      // num and den fit in 53 bits, so one division rounds once and ldexp is exact
      CHECK(w.values[i] == std::ldexp(w.fractions[i].to_double(), w.exponents[i]));
      const long double nn = static_cast<long double>(n);
      const long double ii = static_cast<long double>(i + 1);
      const long double direct = std::pow(2.0L, nn - ii) * 3.0L * (nn + 1 - ii) * (nn + 2 - ii) /
                                 (nn * (nn + 1) * (nn + 2));
      CHECK(std::abs(w.values[i] - direct) <= 1e-15L * direct);
    }
    CHECK(total == Rational(1, 1));
    // leftmost weighs most, strictly
    for (std::size_t i = 0; i + 1 < n; ++i) CHECK(w.values[i] > w.values[i + 1]);
    CHECK(w.values.back() > 0.0);
    double sum = 0.0;
    for (double x : w.values) sum += x;
    if (n >= 2) CHECK(sum != 1.0);
  }
}

TEST_CASE("triangular difference identity") {
  for (std::size_t n = 1; n <= WeightVector::kMaxDigits; ++n) {
    const auto w = weights(n);
    std::vector<Rational> g(w.fractions.rbegin(), w.fractions.rend());
    for (std::size_t k = 1; k < n; ++k) {
      CHECK(g[k] - g[k - 1] == g[0] * Rational(static_cast<std::int64_t>(k + 1), 1));
    }
  }
}

TEST_CASE("rational arithmetic") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -2) == Rational(-1, 2));
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK_THROWS_AS(Rational(1, 0), DomainError);
}

TEST_CASE("method names") {
  for (auto m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK(all_methods().size() == 6);
  CHECK_THROWS_AS(parse_method("mode"), DomainError);
}

TEST_CASE("weighted aggregation of 10 on a two-dim table") {
  CHECK(aggregate("10", two_dim_10(), Method::Weighted).vector == std::vector<double>{1.5, 0.25});
}

TEST_CASE("single digits are left intact") {
  const auto t = synth_table(16, 42);
  for (char c = '0'; c <= '9'; ++c) {
    for (auto m : all_methods()) {
      CHECK(aggregate(std::string(1, c), t, m).vector == vec(t.at(std::string(1, c))));
    }
  }
}

TEST_CASE("sum and mean ignore digit order") {
  const auto t = synth_table(16, 42);
  CHECK(aggregate("85", t, Method::Sum).vector == aggregate("58", t, Method::Sum).vector);
  Rng rng(5);
  for (int c = 0; c < 200; ++c) {
    std::string s = std::to_string(rng.below(100000000));
    std::string p = s;
    for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    for (auto m : {Method::Sum, Method::Mean, Method::Max, Method::Min, Method::Median}) {
      CHECK(aggregate(s, t, m).vector == aggregate(p, t, m).vector);
    }
  }
}

TEST_CASE("normalizing aggregators cannot tell 1 from 1111") {
  const auto t = synth_table(16, 42);
  for (auto m : {Method::Mean, Method::Max, Method::Min, Method::Median}) {
    for (char c = '0'; c <= '9'; ++c) {
      const auto one = aggregate(std::string(1, c), t, m).vector;
      CHECK(aggregate(std::string(2, c), t, m).vector == one);
      CHECK(aggregate(std::string(4, c), t, m).vector == one);
      CHECK(aggregate(std::string(7, c), t, m).vector == one);
    }
  }
  CHECK_FALSE(aggregate("11", t, Method::Weighted).vector == aggregate("1", t, Method::Weighted).vector);
}

TEST_CASE("median of an even count averages the middle pair") {
  EmbeddingTable t(1);
  for (int d = 0; d < 10; ++d) t.add(std::to_string(d), std::vector<double>{static_cast<double>(d)});
  CHECK(aggregate("1928", t, Method::Median).vector == std::vector<double>{5.0});
  CHECK(aggregate("192", t, Method::Median).vector == std::vector<double>{2.0});
}

TEST_CASE("agrees with the definition oracle") {
  const auto t = synth_table(16, 7);
  Rng rng(11);
  for (int c = 0; c < 300; ++c) {
    const auto s = std::to_string(rng.below(1000000000000ULL));
    for (auto m : all_methods()) {
      const auto got = aggregate(s, t, m).vector;
      CHECK(oracle::relative_error(got, oracle::aggregate_by_definition(s, t, m)) <= 1e-14);
      std::vector<double> into(t.dim());
      std::vector<double> scratch(s.size());
      aggregate_into(s, t, m, into, scratch);
      CHECK(into == got);
    }
  }
}

TEST_CASE("weighted separates every digit string up to length 4") {
  const auto t = synth_table(16, 42);
  std::set<std::vector<double>> seen;
  std::size_t strings = 0;
  for (int len = 1, count = 10; len <= 4; ++len, count *= 10) {
    for (int n = 0; n < count; ++n) {
      std::string s = std::to_string(n);
      s.insert(0, static_cast<std::size_t>(len) - s.size(), '0');  // leading zeros included
      seen.insert(aggregate(s, t, Method::Weighted).vector);
      ++strings;
    }
  }
  CHECK(strings == 11110);
  CHECK(seen.size() == strings);
}

TEST_CASE("aggregation errors") {
  const auto t = synth_table(4, 1);
  CHECK_THROWS_AS(aggregate("", t, Method::Sum), DomainError);
  CHECK_THROWS_AS(aggregate(std::string(65, '1'), t, Method::Weighted), DomainError);
  CHECK_NOTHROW(aggregate(std::string(65, '1'), t, Method::Sum));
  CHECK_THROWS_AS(aggregate("12a", t, Method::Sum), MissingToken);
  CHECK(aggregate("1.5", t, Method::Sum).vector.size() == 4);
}

TEST_CASE("soft aggregation") {
  const auto t = synth_table(8, 3);
  const std::vector<std::vector<double>> hot10 = {one_hot('1'), one_hot('0')};
  const auto hard = aggregate("10", t, Method::Weighted).vector;
  CHECK(oracle::relative_error(aggregate_soft(hot10, t).vector, hard) <= 1e-15);

  std::vector<double> half(10, 0.0);
  half[0] = half[1] = 0.5;
  const auto mixed = aggregate_soft(std::vector<std::vector<double>>{half}, t).vector;
  for (std::size_t j = 0; j < t.dim(); ++j) {
    CHECK(mixed[j] == doctest::Approx(0.5 * t.at("0")[j] + 0.5 * t.at("1")[j]).epsilon(1e-14));
  }

  const auto a = aggregate_soft(std::vector<std::vector<double>>{one_hot('8'), one_hot('5')}, t);
  const auto b = aggregate_soft(std::vector<std::vector<double>>{one_hot('5'), one_hot('8')}, t);
  CHECK_FALSE(a.vector == b.vector);
}

TEST_CASE("distribution validation") {
  std::vector<double> bad(10, 0.1);
  bad[0] = 0.2;
  CHECK_THROWS_AS(validate_distributions(std::vector<std::vector<double>>{bad}), DomainError);
  std::vector<double> neg(10, 0.0);
  neg[0] = 1.5;
  neg[1] = -0.5;
  CHECK_THROWS_AS(validate_distributions(std::vector<std::vector<double>>{neg}), DomainError);
  CHECK_THROWS_AS(validate_distributions(std::vector<std::vector<double>>{std::vector<double>(9, 1.0 / 9)}),
                  DomainError);
  CHECK_NOTHROW(validate_distributions(std::vector<std::vector<double>>{std::vector<double>(10, 0.1)}));
}
