#pragma once

#include "numbra/aggregation.hpp"
#include "numbra/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace numbra::neighborhood {

/// Inclusive integer interval of non-negative numbers.
struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::size_t size() const noexcept { return hi < lo ? 0 : static_cast<std::size_t>(hi - lo + 1); }
  bool contains(std::int64_t n) const noexcept { return n >= lo && n <= hi; }
};

/// All integers with exactly `digit_length` digits and no leading zero;
/// length 1 is 0..9. DomainError outside 1..9.
IntRange digit_length_universe(int digit_length);

enum class Distance { Euclidean, Cosine };

std::string_view distance_name(Distance d);
Distance parse_distance(std::string_view name);

/// The k members of universe \ {n} closest to n in value, nearest first;
/// equal distances resolve toward the smaller number.
/// DomainError if n is outside the universe or the universe has <= k members.
std::vector<std::int64_t> natural_knn(std::int64_t n, std::size_t k, IntRange universe);

/// Exhaustive nearest neighbours of n among universe \ {n} by distance
/// between aggregated embeddings, nearest first, ties toward the smaller
/// number.
std::vector<std::int64_t> embedded_knn(std::int64_t n, std::size_t k, IntRange universe,
                                       const EmbeddingTable& table, Method method,
                                       Distance distance = Distance::Euclidean);

/// Batched form of embedded_knn: one scan of the universe serves every
/// query. Results are independent of the worker count.
std::vector<std::vector<std::int64_t>> embedded_knn_batch(std::span<const std::int64_t> queries,
                                                          std::size_t k, IntRange universe,
                                                          const EmbeddingTable& table,
                                                          Method method, Distance distance,
                                                          std::size_t workers);

/// Harmonic mean of precision and recall between two k-element sets, which
/// reduces to |natural ∩ embedded| / k. DomainError on a size mismatch.
double f1_alignment(std::span<const std::int64_t> natural, std::span<const std::int64_t> embedded,
                    std::size_t k);

struct NeighborhoodReport {
  std::int64_t number = 0;
  std::size_t k = 0;
  std::vector<std::int64_t> natural;
  std::vector<std::int64_t> embedded;
  double f1 = 0.0;
};

NeighborhoodReport evaluate_number(std::int64_t n, std::size_t k, IntRange universe,
                                   const EmbeddingTable& table, Method method,
                                   Distance distance = Distance::Euclidean);

struct SweepOptions {
  std::vector<Method> methods = all_methods();
  std::vector<int> digit_lengths = {1, 2, 3, 4, 5, 6};
  std::size_t k = 10;
  // Buckets larger than this are evaluated on a seeded uniform sample.
  std::optional<std::size_t> sample_cap = 2000;
  std::uint64_t seed = 42;
  Distance distance = Distance::Euclidean;
  std::size_t workers = 1;
};

struct BucketSummary {
  int digit_length = 0;
  Method method = Method::Weighted;
  double mean_f1 = 0.0;
  std::size_t count = 0;
  // Neighbourhood size used; smaller than the requested k only when the
  // bucket has no more than k members (the 1-digit bucket under k=10).
  std::size_t k = 0;
};

/// Members evaluated for one bucket: the whole universe, or `cap` distinct
/// members drawn uniformly with the seed, in ascending order.
std::vector<std::int64_t> bucket_members(IntRange universe, std::optional<std::size_t> cap,
                                         std::uint64_t seed);

/// Mean F1 per (method, digit length), ordered method-major in the order
/// given by the options. A bucket with at most k members is evaluated with
/// k = size - 1.
std::vector<BucketSummary> bucket_sweep(const EmbeddingTable& table, const SweepOptions& options);

}  // namespace numbra::neighborhood
