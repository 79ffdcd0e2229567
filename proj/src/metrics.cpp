#include "numbra/metrics.hpp"

#include "numbra/error.hpp"

#include <algorithm>
#include <numeric>

namespace numbra::metrics {

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();

  std::vector<std::size_t> costs(b.size() + 1);
  std::iota(costs.begin(), costs.end(), std::size_t{0});
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t diagonal = costs[0];
    costs[0] = i + 1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t above = costs[j + 1];
      const std::size_t substitution = diagonal + (a[i] == b[j] ? 0 : 1);
      costs[j + 1] = std::min({above + 1, costs[j] + 1, substitution});
      diagonal = above;
    }
  }
  return costs[b.size()];
}

std::string normalize_answer(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  s = s.substr(first, s.find_last_not_of(kSpace) - first + 1);
  if (s.size() > 2 && s.ends_with(".0")) s.remove_suffix(2);
  return std::string(s);
}

MetricRecord cer(std::string_view pred, std::string_view gold) {
  const std::string p = normalize_answer(pred);
  const std::string g = normalize_answer(gold);
  if (g.empty()) throw DomainError("gold answer is empty");
  MetricRecord r;
  r.edit_distance = levenshtein(p, g);
  r.target_length = g.size();
  r.exact_match = r.edit_distance == 0;
  r.cer_percent = 100.0 * static_cast<double>(r.edit_distance) / static_cast<double>(r.target_length);
  return r;
}

BatchScores batch_scores(std::span<const std::pair<std::string, std::string>> pairs) {
  if (pairs.empty()) throw DomainError("cannot score an empty batch");
  BatchScores out;
  out.count = pairs.size();
  std::size_t exact = 0;
  double cer_total = 0.0;
  for (const auto& [pred, gold] : pairs) {
    out.records.push_back(cer(pred, gold));
    exact += out.records.back().exact_match ? 1 : 0;
    cer_total += out.records.back().cer_percent;
  }
  const auto n = static_cast<double>(pairs.size());
  out.accuracy_percent = 100.0 * static_cast<double>(exact) / n;
  out.mean_cer_percent = cer_total / n;
  return out;
}

}  // namespace numbra::metrics
