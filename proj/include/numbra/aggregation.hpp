#pragma once

#include "numbra/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace numbra {

/// Reduced fraction over 64-bit integers. Only used for the small rationals
/// that appear in the positional weights, so overflow is not checked beyond
/// the cross-multiplication in comparisons.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend bool operator<(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// w_i = 2^(N-i) * 3(N+1-i)(N+2-i) / (N(N+1)(N+2)), i = 1..N left to right.
///
/// Each weight is kept exactly as a power of two times a triangular fraction;
/// `values` holds the correctly rounded doubles. The fraction sequence read
/// right to left is T_k / S with T_k = k(k+1)/2 and S = N(N+1)(N+2)/6.
struct WeightVector {
  static constexpr std::size_t kMaxDigits = 64;

  std::size_t n_digits = 0;
  std::vector<double> values;
  std::vector<int> exponents;       // N - i
  std::vector<Rational> fractions;  // 3(N+1-i)(N+2-i) / (N(N+1)(N+2))

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// DomainError unless 1 <= n_digits <= 64.
WeightVector weights(std::size_t n_digits);

enum class Method { Weighted, Sum, Mean, Max, Min, Median };

std::string_view method_name(Method method);
/// Accepts weighted, sum, mean, max, min, median. DomainError otherwise.
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

struct AggregatedEmbedding {
  std::vector<double> vector;
  std::string source_number;
  Method method = Method::Weighted;
};

/// Componentwise aggregation of the digit vectors of `digits`. Each character
/// (a decimal point included) is looked up in the table as a one-character
/// token. Sum and Mean are exactly invariant under digit permutation, and all
/// methods return e(c) bit-for-bit for a single character c.
///
/// DomainError on an empty string or more than 64 characters under Weighted;
/// MissingToken when a character has no vector.
AggregatedEmbedding aggregate(std::string_view digits, const EmbeddingTable& table, Method method);

/// Writes the aggregation into `out` (size table.dim()) without allocating a
/// result object. `scratch` must hold at least digits.size() doubles for
/// the order-statistic methods.
void aggregate_into(std::string_view digits, const EmbeddingTable& table, Method method,
                    std::span<double> out, std::vector<double>& scratch);

inline constexpr std::string_view kDigitAlphabet = "0123456789";

/// Soft weighted aggregation: position i contributes
///   weights(N)[i] * sum_s p_i(s) e(s)
/// over the digit alphabet "0".."9". Each distribution must have 10 entries,
/// be nonnegative and sum to 1 within 1e-9 (DomainError otherwise).
AggregatedEmbedding aggregate_soft(std::span<const std::vector<double>> distributions,
                                   const EmbeddingTable& table);

/// Throws DomainError if the distributions are not valid probability vectors
/// over the digit alphabet.
void validate_distributions(std::span<const std::vector<double>> distributions);

}  // namespace numbra
