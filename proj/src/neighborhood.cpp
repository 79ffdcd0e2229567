#include "numbra/neighborhood.hpp"

#include "numbra/error.hpp"
#include "numbra/parallel.hpp"
#include "numbra/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

namespace numbra::neighborhood {

namespace {

// Small enough that a block of aggregated vectors stays cache-resident while
// every query scans it.
constexpr std::size_t kBlockSize = 1 << 12;

void check_universe(std::int64_t n, std::size_t k, IntRange universe) {
  if (universe.lo < 0) throw DomainError("universe must be non-negative");
  if (!universe.contains(n)) {
    throw DomainError(std::to_string(n) + " is outside the universe " +
                      std::to_string(universe.lo) + ".." + std::to_string(universe.hi));
  }
  if (k == 0) throw DomainError("k must be positive");
  if (universe.size() <= k) {
    throw DomainError("universe of " + std::to_string(universe.size()) +
                      " members is too small for k=" + std::to_string(k));
  }
}

using Candidate = std::pair<double, std::int64_t>;  // (distance, number)

// Keeps the k smallest candidates under lexicographic (distance, number).
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  bool full() const noexcept { return heap_.size() == k_; }
  double worst() const noexcept { return heap_.front().first; }

  void offer(double distance, std::int64_t number) {
    const Candidate c{distance, number};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  std::vector<std::int64_t> ranked() const {
    auto sorted = heap_;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::int64_t> out;
    out.reserve(sorted.size());
    for (const auto& c : sorted) out.push_back(c.second);
    return out;
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

double squared_euclidean(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

double cosine_distance(const double* a, double norm_a, const double* b, double norm_b,
                       std::size_t dim) {
  if (norm_a == 0.0 || norm_b == 0.0) return 1.0;
  double dot = 0.0;
  for (std::size_t j = 0; j < dim; ++j) dot += a[j] * b[j];
  return 1.0 - dot / (norm_a * norm_b);
}

double norm_of(const double* a, std::size_t dim) {
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) s += a[j] * a[j];
  return std::sqrt(s);
}

// Row-major aggregated embeddings for a list of numbers.
void embed_numbers(std::span<const std::int64_t> numbers, const EmbeddingTable& table,
                   Method method, std::vector<double>& out, std::size_t workers) {
  const std::size_t dim = table.dim();
  out.resize(numbers.size() * dim);
  parallel_for(numbers.size(), workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch;
    for (std::size_t i = begin; i < end; ++i) {
      aggregate_into(std::to_string(numbers[i]), table, method,
                     std::span<double>(out.data() + i * dim, dim), scratch);
    }
  });
}

}  // namespace

IntRange digit_length_universe(int digit_length) {
  if (digit_length < 1 || digit_length > 9) {
    throw DomainError("digit length " + std::to_string(digit_length) + " outside 1..9");
  }
  if (digit_length == 1) return {0, 9};
  std::int64_t lo = 1;
  for (int i = 1; i < digit_length; ++i) lo *= 10;
  return {lo, lo * 10 - 1};
}

std::string_view distance_name(Distance d) {
  return d == Distance::Euclidean ? "euclidean" : "cosine";
}

Distance parse_distance(std::string_view name) {
  if (name == "euclidean") return Distance::Euclidean;
  if (name == "cosine") return Distance::Cosine;
  throw DomainError("unknown distance '" + std::string(name) + "'");
}

std::vector<std::int64_t> natural_knn(std::int64_t n, std::size_t k, IntRange universe) {
  check_universe(n, k, universe);
  std::vector<std::int64_t> out;
  out.reserve(k);
  std::int64_t left = n - 1;
  std::int64_t right = n + 1;
  while (out.size() < k) {
    const bool left_ok = left >= universe.lo;
    const bool right_ok = right <= universe.hi;
    // Equal distance goes left, i.e. toward the smaller value.
    if (left_ok && (!right_ok || n - left <= right - n)) {
      out.push_back(left--);
    } else {
      out.push_back(right++);
    }
  }
  return out;
}

std::vector<std::vector<std::int64_t>> embedded_knn_batch(std::span<const std::int64_t> queries,
                                                          std::size_t k, IntRange universe,
                                                          const EmbeddingTable& table,
                                                          Method method, Distance distance,
                                                          std::size_t workers) {
  for (auto q : queries) check_universe(q, k, universe);
  const std::size_t dim = table.dim();

  std::vector<double> query_vecs;
  embed_numbers(queries, table, method, query_vecs, workers);
  std::vector<double> query_norms(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    query_norms[q] = norm_of(query_vecs.data() + q * dim, dim);
  }

  std::vector<TopK> best(queries.size(), TopK(k));
  std::vector<std::int64_t> block;
  std::vector<double> block_vecs;
  std::vector<double> block_norms;
  for (std::int64_t start = universe.lo; start <= universe.hi;
       start += static_cast<std::int64_t>(kBlockSize)) {
    const std::int64_t stop = std::min(universe.hi, start + static_cast<std::int64_t>(kBlockSize) - 1);
    block.clear();
    for (std::int64_t m = start; m <= stop; ++m) block.push_back(m);
    embed_numbers(block, table, method, block_vecs, workers);
    if (distance == Distance::Cosine) {
      block_norms.resize(block.size());
      for (std::size_t i = 0; i < block.size(); ++i) {
        block_norms[i] = norm_of(block_vecs.data() + i * dim, dim);
      }
    }

    parallel_for(queries.size(), workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t q = begin; q < end; ++q) {
        const double* qv = query_vecs.data() + q * dim;
        for (std::size_t i = 0; i < block.size(); ++i) {
          if (block[i] == queries[q]) continue;
          const double* mv = block_vecs.data() + i * dim;
          if (distance == Distance::Cosine) {
            best[q].offer(cosine_distance(qv, query_norms[q], mv, block_norms[i], dim), block[i]);
            continue;
          }
          const double sq = squared_euclidean(qv, mv, dim);
          // Skip the sqrt for candidates clearly beyond the current k-th.
          if (best[q].full()) {
            const double worst = best[q].worst();
            if (sq > worst * worst * (1.0 + 1e-9)) continue;
          }
          best[q].offer(std::sqrt(sq), block[i]);
        }
      }
    });
  }

  std::vector<std::vector<std::int64_t>> out;
  out.reserve(queries.size());
  for (const auto& b : best) out.push_back(b.ranked());
  return out;
}

std::vector<std::int64_t> embedded_knn(std::int64_t n, std::size_t k, IntRange universe,
                                       const EmbeddingTable& table, Method method,
                                       Distance distance) {
  const std::int64_t query[1] = {n};
  return std::move(embedded_knn_batch(query, k, universe, table, method, distance, 1).front());
}

double f1_alignment(std::span<const std::int64_t> natural, std::span<const std::int64_t> embedded,
                    std::size_t k) {
  if (k == 0) throw DomainError("k must be positive");
  if (natural.size() != k || embedded.size() != k) {
    throw DomainError("neighbour sets must both have k=" + std::to_string(k) + " members");
  }
  std::unordered_set<std::int64_t> lookup(natural.begin(), natural.end());
  if (lookup.size() != k) throw DomainError("natural neighbour set has duplicates");
  std::unordered_set<std::int64_t> seen;
  std::size_t overlap = 0;
  for (auto m : embedded) {
    if (!seen.insert(m).second) throw DomainError("embedded neighbour set has duplicates");
    overlap += lookup.count(m);
  }
  // Both sets have k members, so precision == recall == overlap / k.
  return static_cast<double>(overlap) / static_cast<double>(k);
}

NeighborhoodReport evaluate_number(std::int64_t n, std::size_t k, IntRange universe,
                                   const EmbeddingTable& table, Method method,
                                   Distance distance) {
  NeighborhoodReport r;
  r.number = n;
  r.k = k;
  r.natural = natural_knn(n, k, universe);
  r.embedded = embedded_knn(n, k, universe, table, method, distance);
  r.f1 = f1_alignment(r.natural, r.embedded, k);
  return r;
}

std::vector<std::int64_t> bucket_members(IntRange universe, std::optional<std::size_t> cap,
                                         std::uint64_t seed) {
  const std::size_t size = universe.size();
  std::vector<std::int64_t> out;
  if (!cap || size <= *cap) {
    out.reserve(size);
    for (std::int64_t m = universe.lo; m <= universe.hi; ++m) out.push_back(m);
    return out;
  }
  // Floyd's algorithm: `cap` distinct offsets, each subset equally likely.
  Rng rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  for (std::uint64_t j = size - *cap; j < size; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.reserve(chosen.size());
  for (auto off : chosen) out.push_back(universe.lo + static_cast<std::int64_t>(off));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BucketSummary> bucket_sweep(const EmbeddingTable& table, const SweepOptions& options) {
  if (options.sample_cap && *options.sample_cap == 0) throw DomainError("sample cap must be positive");
  std::vector<BucketSummary> out;
  for (Method method : options.methods) {
    for (int length : options.digit_lengths) {
      const IntRange universe = digit_length_universe(length);
      const auto members = bucket_members(
          universe, options.sample_cap,
          options.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(length)));
      const std::size_t k = std::min(options.k, universe.size() - 1);
      const auto embedded = embedded_knn_batch(members, k, universe, table, method,
                                               options.distance, options.workers);
      double total = 0.0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const auto natural = natural_knn(members[i], k, universe);
        total += f1_alignment(natural, embedded[i], k);
      }
      out.push_back(
          {length, method, total / static_cast<double>(members.size()), members.size(), k});
    }
  }
  return out;
}

}  // namespace numbra::neighborhood
