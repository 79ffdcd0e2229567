#pragma once

#include "numbra/embedding.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace numbra::loss {

/// The zero-distance clamp: distances below 2^-20 score -20.
inline constexpr double kAuxFloor = -20.0;
/// Score for a prediction that is not a number; also the upper clamp.
inline constexpr double kAuxPenalty = 20.0;

/// log2 of the Euclidean distance between the weighted aggregations of the
/// predicted and gold number strings, clamped to [-20, 20]. A prediction
/// that does not match the number pattern scores 20, as does one longer
/// than the 64-digit weight range. DomainError if `gold` is not a number.
double aux_loss(std::string_view predicted, std::string_view gold, const EmbeddingTable& table);

struct LossBreakdown {
  double ce = 0.0;      // nats
  double aux = 0.0;     // log2 units
  double lambda = 1.0;
  double total = 0.0;   // lambda * ce + (1 - lambda) * aux
};

/// DomainError when lambda is outside [0, 1] or ce is negative / non-finite.
LossBreakdown combined_loss(double ce, double aux, double lambda);

/// The interpolation weights searched during tuning: 0.40, 0.45, ..., 0.80.
std::vector<double> lambda_grid();

enum class DistributionCheck { Strict, None };

struct SoftAuxResult {
  double loss = 0.0;
  // d loss / d p_i(s), one row per position, one column per digit symbol.
  std::vector<std::vector<double>> gradient;
  // True when the distance was clamped, in which case the gradient is zero.
  bool clamped = false;
};

/// Differentiable surrogate of aux_loss for per-position digit
/// distributions: log2 of the clamped distance between the soft weighted
/// aggregation and W(gold). The position count must equal the gold length
/// and gold must be digits only. DistributionCheck::None skips the
/// probability-simplex check, which finite-difference probes need.
SoftAuxResult soft_aux_loss(std::span<const std::vector<double>> distributions,
                            std::string_view gold, const EmbeddingTable& table,
                            DistributionCheck check = DistributionCheck::Strict);

struct CrossEntropyResult {
  double loss = 0.0;
  std::vector<std::vector<double>> gradient;  // d loss / d logits
};

/// Mean over positions of -log softmax(logits)[target], in nats.
/// DomainError on empty input, mismatched lengths or an out-of-range target.
CrossEntropyResult cross_entropy(std::span<const std::vector<double>> logits,
                                 std::span<const std::size_t> targets);

/// Numerically stable softmax of one logit vector.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace numbra::loss
