#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace numbra::metrics {

/// Unit-cost edit distance (insertions, deletions, substitutions) over bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Trims surrounding whitespace and one trailing ".0". Applied to both sides
/// before any comparison.
std::string normalize_answer(std::string_view s);

struct MetricRecord {
  bool exact_match = false;
  double cer_percent = 0.0;  // 100 * edit_distance / target_length, may exceed 100
  std::size_t edit_distance = 0;
  std::size_t target_length = 0;
};

/// Character error rate of a prediction against the gold answer.
/// DomainError when the normalized gold string is empty.
MetricRecord cer(std::string_view pred, std::string_view gold);

struct BatchScores {
  double accuracy_percent = 0.0;
  double mean_cer_percent = 0.0;
  std::size_t count = 0;
  std::vector<MetricRecord> records;
};

/// DomainError on an empty batch.
BatchScores batch_scores(std::span<const std::pair<std::string, std::string>> pairs);

}  // namespace numbra::metrics
