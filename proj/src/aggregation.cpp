#include "numbra/aggregation.hpp"

#include "numbra/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace numbra {

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g == 0 ? 0 : num / g;
  den_ = g == 0 ? 1 : den / g;
}

Rational operator+(const Rational& a, const Rational& b) {
  const std::int64_t l = std::lcm(a.den_, b.den_);
  return Rational(a.num_ * (l / a.den_) + b.num_ * (l / b.den_), l);
}

Rational operator-(const Rational& a, const Rational& b) {
  return a + Rational(-b.num_, b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  const std::int64_t g1 = std::gcd(a.num_, b.den_);
  const std::int64_t g2 = std::gcd(b.num_, a.den_);
  const std::int64_t n1 = g1 == 0 ? a.num_ : a.num_ / g1;
  const std::int64_t d2 = g1 == 0 ? b.den_ : b.den_ / g1;
  const std::int64_t n2 = g2 == 0 ? b.num_ : b.num_ / g2;
  const std::int64_t d1 = g2 == 0 ? a.den_ : a.den_ / g2;
  return Rational(n1 * n2, d1 * d2);
}

bool operator<(const Rational& a, const Rational& b) { return a.num_ * b.den_ < b.num_ * a.den_; }

WeightVector weights(std::size_t n_digits) {
  if (n_digits < 1 || n_digits > WeightVector::kMaxDigits) {
    throw DomainError("digit count " + std::to_string(n_digits) + " outside 1.." +
                      std::to_string(WeightVector::kMaxDigits));
  }
  const auto n = static_cast<std::int64_t>(n_digits);
  WeightVector w;
  w.n_digits = n_digits;
  const std::int64_t denom = n * (n + 1) * (n + 2);
  for (std::int64_t i = 1; i <= n; ++i) {
    Rational fraction(3 * (n + 1 - i) * (n + 2 - i), denom);
    const int exponent = static_cast<int>(n - i);
    // Power-of-two scaling is exact, so this is the correctly rounded weight.
    w.values.push_back(std::ldexp(fraction.to_double(), exponent));
    w.exponents.push_back(exponent);
    w.fractions.push_back(fraction);
  }
  return w;
}

namespace {

const WeightVector& cached_weights(std::size_t n_digits) {
  static const auto table = [] {
    std::array<WeightVector, WeightVector::kMaxDigits + 1> t{};
    for (std::size_t n = 1; n <= WeightVector::kMaxDigits; ++n) t[n] = weights(n);
    return t;
  }();
  if (n_digits < 1 || n_digits > WeightVector::kMaxDigits) {
    throw DomainError("digit count " + std::to_string(n_digits) + " outside 1.." +
                      std::to_string(WeightVector::kMaxDigits));
  }
  return table[n_digits];
}

struct MethodSpelling {
  Method method;
  std::string_view name;
};

constexpr std::array<MethodSpelling, 6> kMethodNames{{
    {Method::Weighted, "weighted"},
    {Method::Sum, "sum"},
    {Method::Mean, "mean"},
    {Method::Max, "max"},
    {Method::Min, "min"},
    {Method::Median, "median"},
}};

}  // namespace

std::string_view method_name(Method method) {
  for (const auto& m : kMethodNames) {
    if (m.method == method) return m.name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& m : kMethodNames) {
    if (m.name == name) return m.method;
  }
  throw DomainError("unknown aggregation method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& m : kMethodNames) out.push_back(m.method);
  return out;
}

void aggregate_into(std::string_view digits, const EmbeddingTable& table, Method method,
                    std::span<double> out, std::vector<double>& scratch) {
  if (digits.empty()) throw DomainError("cannot aggregate an empty digit string");
  const std::size_t n = digits.size();
  const std::size_t dim = table.dim();

  // Resolve rows once; MissingToken surfaces here for any method.
  std::array<std::size_t, WeightVector::kMaxDigits> small_rows{};
  std::vector<std::size_t> large_rows;
  std::span<std::size_t> rows;
  if (n <= small_rows.size()) {
    rows = std::span<std::size_t>(small_rows.data(), n);
  } else {
    large_rows.resize(n);
    rows = large_rows;
  }
  for (std::size_t i = 0; i < n; ++i) rows[i] = table.index_of(digits.substr(i, 1));

  if (method == Method::Weighted) {
    const WeightVector& w = cached_weights(n);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = table.row(rows[i]);
      for (std::size_t j = 0; j < dim; ++j) out[j] += w.values[i] * e[j];
    }
    return;
  }

  // The remaining methods are order statistics or sums of the per-component
  // values; sorting them first makes the result depend only on the multiset.
  scratch.resize(n);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < n; ++i) scratch[i] = table.row(rows[i])[j];
    std::sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n));
    double value = 0.0;
    switch (method) {
      case Method::Sum:
        for (std::size_t i = 0; i < n; ++i) value += scratch[i];
        break;
      case Method::Mean: {
        // Offsets from the minimum, so repeated values average back exactly.
        double offset = 0.0;
        for (std::size_t i = 1; i < n; ++i) offset += scratch[i] - scratch[0];
        value = scratch[0] + offset / static_cast<double>(n);
        break;
      }
      case Method::Max:
        value = scratch[n - 1];
        break;
      case Method::Min:
        value = scratch[0];
        break;
      case Method::Median:
        value = n % 2 == 1 ? scratch[n / 2] : (scratch[n / 2 - 1] + scratch[n / 2]) / 2.0;
        break;
      case Method::Weighted:
        break;
    }
    out[j] = value;
  }
}

AggregatedEmbedding aggregate(std::string_view digits, const EmbeddingTable& table,
                              Method method) {
  AggregatedEmbedding result;
  result.vector.resize(table.dim());
  result.source_number = std::string(digits);
  result.method = method;
  std::vector<double> scratch;
  aggregate_into(digits, table, method, result.vector, scratch);
  return result;
}

void validate_distributions(std::span<const std::vector<double>> distributions) {
  if (distributions.empty()) throw DomainError("no digit distributions given");
  for (std::size_t i = 0; i < distributions.size(); ++i) {
    const auto& p = distributions[i];
    const std::string where = "distribution " + std::to_string(i);
    if (p.size() != kDigitAlphabet.size()) {
      throw DomainError(where + " has " + std::to_string(p.size()) + " entries, expected " +
                        std::to_string(kDigitAlphabet.size()));
    }
    double total = 0.0;
    for (double x : p) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError(where + " has a negative entry");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError(where + " does not sum to 1");
  }
}

AggregatedEmbedding aggregate_soft(std::span<const std::vector<double>> distributions,
                                   const EmbeddingTable& table) {
  validate_distributions(distributions);
  const std::size_t n = distributions.size();
  const WeightVector w = weights(n);
  AggregatedEmbedding result;
  result.method = Method::Weighted;
  result.vector.assign(table.dim(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t argmax = 0;
    for (std::size_t s = 0; s < kDigitAlphabet.size(); ++s) {
      const double p = distributions[i][s];
      if (p > distributions[i][argmax]) argmax = s;
      if (p == 0.0) continue;
      const auto e = table.at(kDigitAlphabet.substr(s, 1));
      for (std::size_t j = 0; j < e.size(); ++j) result.vector[j] += w.values[i] * (p * e[j]);
    }
    result.source_number += kDigitAlphabet[argmax];
  }
  return result;
}

}  // namespace numbra
