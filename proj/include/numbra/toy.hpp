#pragma once

#include "numbra/embedding.hpp"
#include "numbra/lexer.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace numbra::toy {

enum class Operation { Add, Sub };

std::string_view operation_name(Operation op);
Operation parse_operation(std::string_view name);

struct ToyTask {
  Operation operation = Operation::Add;
  int operand_digits = 1;  // operands drawn uniformly from [0, 10^digits - 1]
  std::size_t size = 400;
  std::uint64_t seed = 42;
};

struct Instance {
  std::int64_t lhs = 0;
  std::int64_t rhs = 0;
  std::string text;
  lexer::TokenSequence tokens;
  std::string gold;
};

/// Exact integer result as a decimal string ("-" prefix for negatives).
std::string gold_answer(Operation op, std::int64_t lhs, std::int64_t rhs);

/// Worded problem for one operand pair, tokenized under `scheme`.
Instance make_instance(Operation op, std::int64_t lhs, std::int64_t rhs, lexer::TokenScheme scheme);

/// `task.size` instances, reproducible from the task fields alone.
/// DomainError when operand_digits is outside 1..3 or size is zero.
std::vector<Instance> generate_task(const ToyTask& task, lexer::TokenScheme scheme);

struct Dataset {
  std::vector<Instance> train;
  std::vector<Instance> dev;
};

/// Training split from the task; dev split of size/4 (at least 1) drawn with
/// a derived seed.
Dataset make_dataset(const ToyTask& task, lexer::TokenScheme scheme);

/// Output symbols per position: ten digits, minus sign, padding.
inline constexpr std::string_view kOutputAlphabet = "0123456789-_";
inline constexpr std::size_t kMinusSymbol = 10;
inline constexpr std::size_t kPadSymbol = 11;
/// One sign slot followed by four right-aligned digit slots.
inline constexpr std::size_t kOutputPositions = 5;

/// Per-position target symbols for an answer string such as "-12".
/// DomainError if the answer does not fit the output layout.
std::vector<std::size_t> encode_answer(std::string_view answer);
/// Concatenates the non-padding symbols.
std::string decode_answer(std::span<const std::size_t> symbols);

enum class AggPosition { None, Prepend, Append };

struct ModelConfig {
  lexer::TokenScheme scheme = lexer::TokenScheme::FDigits;
  std::size_t dim = 8;
  std::size_t hidden = 48;
  int max_operand_digits = 3;
  std::uint64_t seed = 42;
};

struct Objective {
  double total = 0.0;
  double ce = 0.0;
  double aux = 0.0;
};

/// Minimal two-operand model. Each operand's tokens are laid out in fixed
/// slots ([F], pre-digit placeholder, right-aligned digits, post-digit
/// placeholder, [/F]) and concatenated; one tanh hidden layer feeds an affine
/// head per output position.
///
/// Digit and marker embeddings are learnable. An [AGG] slot is not a
/// parameter: it is recomputed as the weighted aggregation of the current
/// digit embeddings on every forward pass, so gradients reach the digits
/// through it. The auxiliary loss scores against a frozen copy of the
/// initial embeddings.
class ToyModel {
 public:
  explicit ToyModel(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  AggPosition agg_position() const noexcept;
  bool uses_agg_token() const noexcept { return agg_position() != AggPosition::None; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  /// Current learnable embedding of a vocabulary token.
  std::span<double> embedding(std::string_view token);
  std::span<const double> embedding(std::string_view token) const;
  EmbeddingTable digit_embeddings() const;
  const EmbeddingTable& reference_table() const noexcept { return reference_; }

  /// The vector an [AGG] slot receives for these digits right now.
  std::vector<double> agg_vector(std::string_view digits) const;

  /// Logits, kOutputPositions rows of kOutputAlphabet.size() entries.
  std::vector<std::vector<double>> logits(const lexer::TokenSequence& tokens) const;
  std::string predict(const lexer::TokenSequence& tokens) const;

  /// Mean objective over the batch: lambda * CE + (1 - lambda) * soft aux
  /// when use_aux, CE alone otherwise (aux is reported either way). When
  /// `gradient` is non-null it receives d total / d parameters.
  Objective objective(std::span<const Instance* const> batch, double lambda, bool use_aux,
                      std::vector<double>* gradient) const;

 private:
  struct Activations;

  std::size_t input_size() const noexcept;
  std::size_t slot_width() const noexcept;
  std::size_t vocab_row(std::string_view token) const;
  Activations forward(const lexer::TokenSequence& tokens) const;
  void backward(const Activations& act, std::span<const std::vector<double>> dlogits,
                std::span<double> grad) const;

  ModelConfig config_;
  EmbeddingTable reference_;
  std::vector<std::string> vocab_;
  std::vector<double> params_;
  std::size_t w1_offset_ = 0;
  std::size_t b1_offset_ = 0;
  std::size_t w2_offset_ = 0;
  std::size_t b2_offset_ = 0;
};

struct TrainConfig {
  double lambda = 0.65;
  double learning_rate = 0.3;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  std::uint64_t seed = 42;
  bool use_aux_loss = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double total = 0.0;
  double ce = 0.0;
  double aux = 0.0;
  double dev_accuracy = 0.0;
  double dev_cer = 0.0;
};

using TrainingTrace = std::vector<EpochRecord>;

/// Dev accuracy (percent) and mean CER (percent) of greedy predictions.
std::pair<double, double> evaluate(const ToyModel& model, std::span<const Instance> data);

/// Minibatch gradient descent with a fixed step. After each epoch the
/// objective is re-evaluated on the full training split and the model is
/// scored on dev. Bitwise reproducible for a fixed seed.
/// DomainError on an invalid config, DivergenceError on a non-finite loss.
TrainingTrace train(ToyModel& model, const Dataset& data, const TrainConfig& config);

/// CSV with header epoch,total,ce,aux,dev_accuracy,dev_cer.
std::string trace_csv(const TrainingTrace& trace);

struct AblationConfig {
  std::string name;
  lexer::TokenScheme scheme = lexer::TokenScheme::FDigits;
  bool use_aux_loss = false;
};

/// Digits, [AGG] + Digits, Digits + [AGG], [PAUSE] + Digits, Digits + Aux Loss.
std::vector<AblationConfig> default_ablation_configs();

struct AblationRow {
  AblationConfig config;
  double lambda = 1.0;
  double accuracy = 0.0;
  double cer = 0.0;
  double accuracy_delta = 0.0;  // vs the first row
  double cer_delta = 0.0;
};

/// Trains one fresh model per config with identical seeds and
/// hyperparameters; deltas are relative to the first config.
/// DomainError with fewer than two configs.
std::vector<AblationRow> ablation_report(const ToyTask& task,
                                         std::span<const AblationConfig> configs,
                                         const TrainConfig& train_config,
                                         const ModelConfig& model_config);

/// CSV with header row,scheme,aux_loss,lambda,accuracy,cer,accuracy_delta,cer_delta.
std::string ablation_csv(std::span<const AblationRow> rows);

}  // namespace numbra::toy
