#include "numbra/aggregation.hpp"
#include "numbra/error.hpp"
#include "numbra/loss.hpp"
#include "numbra/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

using namespace numbra;
using namespace numbra::loss;

namespace {

std::vector<double> random_distribution(Rng& rng) {
  std::vector<double> p(10);
  double z = 0.0;
  for (auto& x : p) z += (x = 0.05 + rng.uniform());
  for (auto& x : p) x /= z;
  return p;
}

std::string random_digits(Rng& rng, std::size_t max_len) {
  std::string s;
  const auto len = 1 + rng.below(max_len);
  for (std::uint64_t i = 0; i < len; ++i) s += static_cast<char>('0' + rng.below(10));
  return s;
}

}  // namespace

TEST_CASE("aux loss contracts") {
  const auto t = synth_table(16, 42);
  CHECK(aux_loss("cat", "321", t) == 20.0);
  CHECK(aux_loss("", "321", t) == 20.0);
  CHECK(aux_loss("-321", "321", t) == 20.0);
  CHECK(aux_loss(std::string(65, '1'), "321", t) == 20.0);
  CHECK(aux_loss("321", "321", t) == -20.0);
  const double near = aux_loss("320", "321", t);
  const double far = aux_loss("456", "321", t);
  CHECK(std::isfinite(near));
  CHECK(near > -20.0);
  CHECK(near < far);
  CHECK(aux_loss("1.5", "2", t) == aux_loss("2", "1.5", t));
  CHECK_THROWS_AS(aux_loss("1", "cat", t), DomainError);
}

TEST_CASE("aux loss is log2 of the aggregate distance") {
  const auto t = synth_table(16, 42);
  const auto a = aggregate("320", t, Method::Weighted).vector;
  const auto b = aggregate("321", t, Method::Weighted).vector;
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  CHECK(aux_loss("320", "321", t) == doctest::Approx(std::log2(std::sqrt(s))).epsilon(1e-14));
}

TEST_CASE("aux grows with the embedding distance of a substituted digit") {
  const auto t = synth_table(16, 42);
  for (std::string gold : {"321", "900"}) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      const auto original = t.at(gold.substr(j, 1));
      std::vector<std::pair<double, double>> rows;  // (digit distance, aux)
      for (char c = '0'; c <= '9'; ++c) {
        if (c == gold[j]) continue;
        std::string pred = gold;
        pred[j] = c;
        const auto e = t.at(std::string(1, c));
        double s = 0.0;
        for (std::size_t k = 0; k < e.size(); ++k) s += (e[k] - original[k]) * (e[k] - original[k]);
        rows.emplace_back(std::sqrt(s), aux_loss(pred, gold, t));
      }
      std::sort(rows.begin(), rows.end());
      for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].second >= rows[i - 1].second);
    }
  }
}

TEST_CASE("combined loss") {
  CHECK(combined_loss(1.25, 7.0, 1.0).total == 1.25);
  CHECK(combined_loss(2.0, 5.0, 0.6).total == doctest::Approx(3.2).epsilon(1e-15));
  CHECK(combined_loss(2.0, 5.0, 0.0).total == 5.0);
  const auto b = combined_loss(0.5, -3.0, 0.75);
  CHECK(b.ce == 0.5);
  CHECK(b.aux == -3.0);
  CHECK(b.lambda == 0.75);
  // dyadic inputs keep every product exact
  CHECK(combined_loss(0.5 + 0.25, -3.0, 0.75).total - b.total == 0.75 * 0.25);
  CHECK_THROWS_AS(combined_loss(1.0, 1.0, 1.5), DomainError);
  CHECK_THROWS_AS(combined_loss(1.0, 1.0, -0.1), DomainError);
  CHECK_THROWS_AS(combined_loss(-1.0, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(combined_loss(NAN, 1.0, 0.5), DomainError);
}

TEST_CASE("lambda grid") {
  CHECK(lambda_grid() == std::vector<double>{0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8});
  for (double l : lambda_grid()) CHECK_NOTHROW(combined_loss(1.0, 1.0, l));
}

TEST_CASE("soft aux at the gold answer sits on the floor") {
  const auto t = synth_table(8, 2);
  std::vector<std::vector<double>> p(3, std::vector<double>(10, 0.0));
  p[0][3] = p[1][2] = p[2][1] = 1.0;
  const auto r = soft_aux_loss(p, "321", t);
  CHECK(r.loss == -20.0);
  CHECK(r.clamped);
  for (const auto& row : r.gradient) {
    for (double g : row) CHECK(g == 0.0);
  }
}

TEST_CASE("soft aux with uniform distributions") {
  const auto t = synth_table(2, 7);
  const std::vector<std::vector<double>> p(2, std::vector<double>(10, 0.1));
  // both positions carry the mean digit vector; weights for N=2 sum to 1.75
  long double dx = 0.0L;
  long double dy = 0.0L;
  for (char c = '0'; c <= '9'; ++c) {
    dx += t.at(std::string(1, c))[0] / 10.0L;
    dy += t.at(std::string(1, c))[1] / 10.0L;
  }
  dx = 1.75L * (dx - t.at("1")[0]);
  dy = 1.75L * (dy - t.at("1")[1]);
  const double expected = static_cast<double>(std::log2(std::sqrt(dx * dx + dy * dy)));
  CHECK(soft_aux_loss(p, "11", t).loss == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("soft aux gradient matches finite differences") {
  const auto t = synth_table(16, 42);
  Rng rng(17);
  for (int c = 0; c < 25; ++c) {
    const auto gold = random_digits(rng, 5);
    std::vector<std::vector<double>> p;
    for (std::size_t i = 0; i < gold.size(); ++i) p.push_back(random_distribution(rng));
    const auto r = soft_aux_loss(p, gold, t);
    REQUIRE_FALSE(r.clamped);
    const auto fd = oracle::central_differences(
        [&](const std::vector<double>& x) {
          return soft_aux_loss(oracle::unflatten(x, 10), gold, t, DistributionCheck::None).loss;
        },
        oracle::flatten(p));
    CHECK(oracle::relative_error(oracle::flatten(r.gradient), fd) <= 1e-4);
  }
}

TEST_CASE("soft aux errors") {
  const auto t = synth_table(8, 2);
  const std::vector<std::vector<double>> one(1, std::vector<double>(10, 0.1));
  CHECK_THROWS_AS(soft_aux_loss(one, "12", t), DomainError);
  CHECK_THROWS_AS(soft_aux_loss(one, "-", t), DomainError);
  CHECK_THROWS_AS(soft_aux_loss(one, "", t), DomainError);
  const std::vector<std::vector<double>> bad(1, std::vector<double>(10, 0.2));
  CHECK_THROWS_AS(soft_aux_loss(bad, "1", t), DomainError);
  CHECK_NOTHROW(soft_aux_loss(bad, "1", t, DistributionCheck::None));
}

TEST_CASE("cross entropy closed forms") {
  const std::vector<std::vector<double>> uniform(3, std::vector<double>(12, 0.0));
  const std::vector<std::size_t> targets = {0, 5, 11};
  CHECK(cross_entropy(uniform, targets).loss == doctest::Approx(std::log(12.0)).epsilon(1e-15));

  std::vector<std::vector<double>> sharp(3, std::vector<double>(12, 0.0));
  for (std::size_t p = 0; p < 3; ++p) sharp[p][targets[p]] = 50.0;
  CHECK(cross_entropy(sharp, targets).loss < 1e-3);

  CHECK_THROWS_AS(cross_entropy({}, {}), DomainError);
  CHECK_THROWS_AS(cross_entropy(uniform, std::vector<std::size_t>{0, 1}), DomainError);
  CHECK_THROWS_AS(cross_entropy(uniform, std::vector<std::size_t>{0, 1, 12}), DomainError);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  Rng rng(23);
  for (int c = 0; c < 25; ++c) {
    const std::size_t positions = 1 + rng.below(5);
    std::vector<std::vector<double>> logits(positions, std::vector<double>(12));
    std::vector<std::size_t> targets;
    for (auto& row : logits) {
      for (auto& x : row) x = rng.uniform(-3.0, 3.0);
      targets.push_back(rng.below(12));
    }
    const auto r = cross_entropy(logits, targets);
    const auto fd = oracle::central_differences(
        [&](const std::vector<double>& x) { return cross_entropy(oracle::unflatten(x, 12), targets).loss; },
        oracle::flatten(logits));
    CHECK(oracle::relative_error(oracle::flatten(r.gradient), fd) <= 1e-4);
  }
}

TEST_CASE("softmax is stable") {
  const auto p = softmax(std::vector<double>{1000.0, 1000.0, -1000.0});
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
  CHECK(p[2] == 0.0);
  const auto q = softmax(std::vector<double>{0.3, -1.2, 2.0, 0.0});
  CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(softmax(std::vector<double>{}).empty());
}
