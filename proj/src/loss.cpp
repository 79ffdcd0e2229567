#include "numbra/loss.hpp"

#include "numbra/aggregation.hpp"
#include "numbra/error.hpp"
#include "numbra/lexer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace numbra::loss {

namespace {

const double kMinDistance = std::exp2(kAuxFloor);
const double kMaxDistance = std::exp2(kAuxPenalty);

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

double clamped_log2(double d) {
  if (d <= kMinDistance) return kAuxFloor;
  if (d >= kMaxDistance) return kAuxPenalty;
  return std::log2(d);
}

}  // namespace

double aux_loss(std::string_view predicted, std::string_view gold, const EmbeddingTable& table) {
  if (!lexer::is_number(gold)) {
    throw DomainError("gold label '" + std::string(gold) + "' is not a number");
  }
  if (!lexer::is_number(predicted) || predicted.size() > WeightVector::kMaxDigits) {
    return kAuxPenalty;
  }
  const auto wp = aggregate(predicted, table, Method::Weighted);
  const auto wl = aggregate(gold, table, Method::Weighted);
  return clamped_log2(distance(wp.vector, wl.vector));
}

LossBreakdown combined_loss(double ce, double aux, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("lambda " + std::to_string(lambda) + " outside [0, 1]");
  }
  if (!(ce >= 0.0) || !std::isfinite(ce)) throw DomainError("cross-entropy must be finite and >= 0");
  return {ce, aux, lambda, lambda * ce + (1.0 - lambda) * aux};
}

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int i = 8; i <= 16; ++i) grid.push_back(i / 20.0);
  return grid;
}

SoftAuxResult soft_aux_loss(std::span<const std::vector<double>> distributions,
                            std::string_view gold, const EmbeddingTable& table,
                            DistributionCheck check) {
  if (gold.empty() || !std::all_of(gold.begin(), gold.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DomainError("soft aux loss needs a digits-only gold label, got '" + std::string(gold) + "'");
  }
  if (distributions.size() != gold.size()) {
    throw DomainError("expected " + std::to_string(gold.size()) + " distributions, got " +
                      std::to_string(distributions.size()));
  }
  if (check == DistributionCheck::Strict) {
    validate_distributions(distributions);
  } else {
    for (const auto& p : distributions) {
      if (p.size() != kDigitAlphabet.size()) throw DomainError("distribution has wrong length");
    }
  }

  const std::size_t n = distributions.size();
  const std::size_t dim = table.dim();
  const WeightVector w = weights(n);
  std::vector<std::span<const double>> symbol_vecs;
  for (std::size_t s = 0; s < kDigitAlphabet.size(); ++s) {
    symbol_vecs.push_back(table.at(kDigitAlphabet.substr(s, 1)));
  }

  // diff = sum_i w_i sum_s p_i(s) e(s) - W(gold)
  std::vector<double> diff = aggregate(gold, table, Method::Weighted).vector;
  for (auto& x : diff) x = -x;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < symbol_vecs.size(); ++s) {
      const double c = w.values[i] * distributions[i][s];
      for (std::size_t j = 0; j < dim; ++j) diff[j] += c * symbol_vecs[s][j];
    }
  }
  double sq = 0.0;
  for (double x : diff) sq += x * x;
  const double d = std::sqrt(sq);

  SoftAuxResult result;
  result.gradient.assign(n, std::vector<double>(kDigitAlphabet.size(), 0.0));
  result.loss = clamped_log2(d);
  result.clamped = d <= kMinDistance || d >= kMaxDistance;
  if (result.clamped) return result;

  // d log2(d) / d p_i(s) = w_i <diff, e(s)> / (d^2 ln 2)
  const double scale = 1.0 / (sq * std::numbers::ln2);
  for (std::size_t s = 0; s < symbol_vecs.size(); ++s) {
    double dot = 0.0;
    for (std::size_t j = 0; j < dim; ++j) dot += diff[j] * symbol_vecs[s][j];
    for (std::size_t i = 0; i < n; ++i) result.gradient[i][s] = w.values[i] * dot * scale;
  }
  return result;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (auto& x : out) {
    x = std::exp(x - top);
    z += x;
  }
  for (auto& x : out) x /= z;
  return out;
}

CrossEntropyResult cross_entropy(std::span<const std::vector<double>> logits,
                                 std::span<const std::size_t> targets) {
  if (logits.empty()) throw DomainError("cross-entropy over zero positions");
  if (logits.size() != targets.size()) throw DomainError("logits and targets differ in length");
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  CrossEntropyResult result;
  result.gradient.reserve(logits.size());
  for (std::size_t p = 0; p < logits.size(); ++p) {
    const auto& row = logits[p];
    if (targets[p] >= row.size()) {
      throw DomainError("target " + std::to_string(targets[p]) + " outside alphabet of " +
                        std::to_string(row.size()));
    }
    const double top = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double x : row) z += std::exp(x - top);
    const double log_z = top + std::log(z);
    result.loss += (log_z - row[targets[p]]) * inv_n;

    std::vector<double> g(row.size());
    for (std::size_t s = 0; s < row.size(); ++s) g[s] = std::exp(row[s] - log_z) * inv_n;
    g[targets[p]] -= inv_n;
    result.gradient.push_back(std::move(g));
  }
  return result;
}

}  // namespace numbra::loss
