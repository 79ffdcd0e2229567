#include "numbra/toy.hpp"

#include "numbra/aggregation.hpp"
#include "numbra/error.hpp"
#include "numbra/loss.hpp"
#include "numbra/metrics.hpp"
#include "numbra/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace numbra::toy {

namespace {

constexpr std::size_t kOperands = 2;
constexpr std::size_t kAlphabet = kOutputAlphabet.size();

std::int64_t pow10(int digits) {
  std::int64_t v = 1;
  for (int i = 0; i < digits; ++i) v *= 10;
  return v;
}

std::string problem_text(Operation op, std::int64_t lhs, std::int64_t rhs) {
  const std::string a = std::to_string(lhs);
  const std::string b = std::to_string(rhs);
  if (op == Operation::Add) {
    return "A has " + a + " apples, B gives A " + b + " more. How many apples does A have now?";
  }
  return "A has " + a + " apples, B takes " + b + " of them. How many apples does A have left?";
}

void check_train_config(const TrainConfig& c) {
  if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) throw DomainError("lambda outside [0, 1]");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw DomainError("learning rate must be positive");
  }
  if (c.epochs == 0) throw DomainError("epochs must be positive");
  if (c.batch_size == 0) throw DomainError("batch size must be positive");
}

}  // namespace

std::string_view operation_name(Operation op) { return op == Operation::Add ? "add" : "sub"; }

Operation parse_operation(std::string_view name) {
  if (name == "add") return Operation::Add;
  if (name == "sub") return Operation::Sub;
  throw DomainError("unknown operation '" + std::string(name) + "'");
}

std::string gold_answer(Operation op, std::int64_t lhs, std::int64_t rhs) {
  return std::to_string(op == Operation::Add ? lhs + rhs : lhs - rhs);
}

Instance make_instance(Operation op, std::int64_t lhs, std::int64_t rhs,
                       lexer::TokenScheme scheme) {
  if (lhs < 0 || rhs < 0) throw DomainError("operands must be non-negative");
  Instance inst;
  inst.lhs = lhs;
  inst.rhs = rhs;
  inst.text = problem_text(op, lhs, rhs);
  inst.tokens = lexer::tokenize(inst.text, scheme);
  inst.gold = gold_answer(op, lhs, rhs);
  return inst;
}

std::vector<Instance> generate_task(const ToyTask& task, lexer::TokenScheme scheme) {
  if (task.operand_digits < 1 || task.operand_digits > 3) {
    throw DomainError("operand digit count must be in 1..3");
  }
  if (task.size == 0) throw DomainError("task size must be positive");
  Rng rng(task.seed);
  const std::int64_t hi = pow10(task.operand_digits) - 1;
  std::vector<Instance> out;
  out.reserve(task.size);
  for (std::size_t i = 0; i < task.size; ++i) {
    const std::int64_t a = rng.between(0, hi);
    const std::int64_t b = rng.between(0, hi);
    out.push_back(make_instance(task.operation, a, b, scheme));
  }
  return out;
}

Dataset make_dataset(const ToyTask& task, lexer::TokenScheme scheme) {
  ToyTask dev = task;
  dev.size = std::max<std::size_t>(1, task.size / 4);
  dev.seed = task.seed ^ 0xD1B54A32D192ED03ULL;
  return {generate_task(task, scheme), generate_task(dev, scheme)};
}

std::vector<std::size_t> encode_answer(std::string_view answer) {
  bool negative = false;
  if (!answer.empty() && answer.front() == '-') {
    negative = true;
    answer.remove_prefix(1);
  }
  if (answer.empty() || answer.size() > kOutputPositions - 1 ||
      !std::all_of(answer.begin(), answer.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DomainError("answer '" + std::string(answer) + "' does not fit the output layout");
  }
  std::vector<std::size_t> out(kOutputPositions, kPadSymbol);
  if (negative) out[0] = kMinusSymbol;
  const std::size_t first = kOutputPositions - answer.size();
  for (std::size_t i = 0; i < answer.size(); ++i) {
    out[first + i] = static_cast<std::size_t>(answer[i] - '0');
  }
  return out;
}

std::string decode_answer(std::span<const std::size_t> symbols) {
  std::string out;
  for (auto s : symbols) {
    if (s < kAlphabet && s != kPadSymbol) out += kOutputAlphabet[s];
  }
  return out;
}

// Where a slot's input vector comes from.
struct SlotSource {
  enum class Kind { Empty, Token, Agg };
  Kind kind = Kind::Empty;
  std::size_t row = 0;  // vocabulary row for Token
  std::string digits;   // operand digits for Agg
};

struct ToyModel::Activations {
  std::vector<SlotSource> slots;
  std::vector<double> input;
  std::vector<double> hidden;
  std::vector<std::vector<double>> logits;
};

ToyModel::ToyModel(const ModelConfig& config)
    : config_(config), reference_(synth_table(config.dim, config.seed)) {
  if (config.hidden == 0) throw DomainError("hidden width must be positive");
  if (config.max_operand_digits < 1 || config.max_operand_digits > 3) {
    throw DomainError("max operand digits must be in 1..3");
  }
  vocab_ = reference_.tokens();
  const std::size_t emb = vocab_.size() * config.dim;
  const std::size_t in = input_size();
  w1_offset_ = emb;
  b1_offset_ = w1_offset_ + config.hidden * in;
  w2_offset_ = b1_offset_ + config.hidden;
  b2_offset_ = w2_offset_ + kOutputPositions * kAlphabet * config.hidden;
  params_.assign(b2_offset_ + kOutputPositions * kAlphabet, 0.0);

  for (std::size_t r = 0; r < vocab_.size(); ++r) {
    std::copy_n(reference_.row(r).begin(), config.dim, params_.begin() + static_cast<std::ptrdiff_t>(r * config.dim));
  }
  // Glorot-uniform weights, zero biases.
  Rng rng(config.seed ^ 0xA0761D6478BD642FULL);
  const double a1 = std::sqrt(6.0 / static_cast<double>(in + config.hidden));
  for (std::size_t i = w1_offset_; i < b1_offset_; ++i) params_[i] = rng.uniform(-a1, a1);
  const double a2 = std::sqrt(6.0 / static_cast<double>(config.hidden + kAlphabet));
  for (std::size_t i = w2_offset_; i < b2_offset_; ++i) params_[i] = rng.uniform(-a2, a2);
}

AggPosition ToyModel::agg_position() const noexcept {
  switch (config_.scheme) {
    case lexer::TokenScheme::FAggDigits:
      return AggPosition::Prepend;
    case lexer::TokenScheme::FDigitsAgg:
      return AggPosition::Append;
    default:
      return AggPosition::None;
  }
}

std::size_t ToyModel::slot_width() const noexcept {
  return static_cast<std::size_t>(config_.max_operand_digits) + 4;
}

std::size_t ToyModel::input_size() const noexcept {
  return kOperands * slot_width() * config_.dim;
}

std::size_t ToyModel::vocab_row(std::string_view token) const {
  auto it = std::find(vocab_.begin(), vocab_.end(), token);
  if (it == vocab_.end()) throw MissingToken(std::string(token));
  return static_cast<std::size_t>(it - vocab_.begin());
}

std::span<double> ToyModel::embedding(std::string_view token) {
  return {params_.data() + vocab_row(token) * config_.dim, config_.dim};
}

std::span<const double> ToyModel::embedding(std::string_view token) const {
  return {params_.data() + vocab_row(token) * config_.dim, config_.dim};
}

EmbeddingTable ToyModel::digit_embeddings() const {
  EmbeddingTable t(config_.dim);
  for (const auto& token : vocab_) t.add(token, embedding(token));
  return t;
}

std::vector<double> ToyModel::agg_vector(std::string_view digits) const {
  const WeightVector w = weights(digits.size());
  std::vector<double> out(config_.dim, 0.0);
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const auto e = embedding(digits.substr(i, 1));
    for (std::size_t j = 0; j < config_.dim; ++j) out[j] += w.values[i] * e[j];
  }
  return out;
}

ToyModel::Activations ToyModel::forward(const lexer::TokenSequence& tokens) const {
  using Kind = lexer::Token::Kind;
  const std::size_t width = slot_width();
  const std::size_t max_digits = static_cast<std::size_t>(config_.max_operand_digits);
  const std::size_t dim = config_.dim;

  std::vector<std::vector<const lexer::Token*>> spans;
  for (const auto& t : tokens) {
    if (!t.span) continue;
    if (*t.span >= spans.size()) spans.resize(*t.span + 1);
    spans[*t.span].push_back(&t);
  }
  if (spans.size() != kOperands) {
    throw DomainError("toy model expects exactly two numbers, got " + std::to_string(spans.size()));
  }

  Activations act;
  act.slots.resize(kOperands * width);
  for (std::size_t j = 0; j < kOperands; ++j) {
    std::string digits;
    for (const auto* t : spans[j]) {
      if (t->kind == Kind::Digit) digits += t->text;
    }
    if (digits.empty() || digits.size() > max_digits ||
        digits.find('.') != std::string::npos) {
      throw DomainError("operand '" + digits + "' does not fit the model's digit slots");
    }
    SlotSource* slot = act.slots.data() + j * width;
    bool after_digits = false;
    std::size_t digit_index = 0;
    for (const auto* t : spans[j]) {
      switch (t->kind) {
        case Kind::Open:
          slot[0] = {SlotSource::Kind::Token, vocab_row(lexer::kOpenMarker), {}};
          break;
        case Kind::Close:
          slot[width - 1] = {SlotSource::Kind::Token, vocab_row(lexer::kCloseMarker), {}};
          break;
        case Kind::Digit: {
          const std::size_t pos = 2 + max_digits - digits.size() + digit_index++;
          slot[pos] = {SlotSource::Kind::Token, vocab_row(t->text), {}};
          after_digits = true;
          break;
        }
        case Kind::Agg:
          slot[after_digits ? width - 2 : 1] = {SlotSource::Kind::Agg, 0, digits};
          break;
        case Kind::Pause:
          slot[after_digits ? width - 2 : 1] = {SlotSource::Kind::Token,
                                                vocab_row(lexer::kPauseToken), {}};
          break;
        case Kind::Text:
          break;
      }
    }
  }

  act.input.assign(input_size(), 0.0);
  for (std::size_t s = 0; s < act.slots.size(); ++s) {
    const auto& src = act.slots[s];
    double* dst = act.input.data() + s * dim;
    if (src.kind == SlotSource::Kind::Token) {
      std::copy_n(params_.data() + src.row * dim, dim, dst);
    } else if (src.kind == SlotSource::Kind::Agg) {
      const auto agg = agg_vector(src.digits);
      std::copy(agg.begin(), agg.end(), dst);
    }
  }

  const std::size_t in = input_size();
  const std::size_t hid = config_.hidden;
  act.hidden.resize(hid);
  for (std::size_t k = 0; k < hid; ++k) {
    const double* row = params_.data() + w1_offset_ + k * in;
    double z = params_[b1_offset_ + k];
    for (std::size_t i = 0; i < in; ++i) z += row[i] * act.input[i];
    act.hidden[k] = std::tanh(z);
  }
  act.logits.assign(kOutputPositions, std::vector<double>(kAlphabet));
  for (std::size_t p = 0; p < kOutputPositions; ++p) {
    for (std::size_t s = 0; s < kAlphabet; ++s) {
      const std::size_t unit = p * kAlphabet + s;
      const double* row = params_.data() + w2_offset_ + unit * hid;
      double v = params_[b2_offset_ + unit];
      for (std::size_t k = 0; k < hid; ++k) v += row[k] * act.hidden[k];
      act.logits[p][s] = v;
    }
  }
  return act;
}

void ToyModel::backward(const Activations& act, std::span<const std::vector<double>> dlogits,
                        std::span<double> grad) const {
  const std::size_t in = input_size();
  const std::size_t hid = config_.hidden;
  const std::size_t dim = config_.dim;

  std::vector<double> dh(hid, 0.0);
  for (std::size_t p = 0; p < kOutputPositions; ++p) {
    for (std::size_t s = 0; s < kAlphabet; ++s) {
      const double g = dlogits[p][s];
      if (g == 0.0) continue;
      const std::size_t unit = p * kAlphabet + s;
      const double* row = params_.data() + w2_offset_ + unit * hid;
      double* grow = grad.data() + w2_offset_ + unit * hid;
      grad[b2_offset_ + unit] += g;
      for (std::size_t k = 0; k < hid; ++k) {
        grow[k] += g * act.hidden[k];
        dh[k] += g * row[k];
      }
    }
  }

  std::vector<double> dx(in, 0.0);
  for (std::size_t k = 0; k < hid; ++k) {
    const double dz = dh[k] * (1.0 - act.hidden[k] * act.hidden[k]);
    if (dz == 0.0) continue;
    grad[b1_offset_ + k] += dz;
    const double* row = params_.data() + w1_offset_ + k * in;
    double* grow = grad.data() + w1_offset_ + k * in;
    for (std::size_t i = 0; i < in; ++i) {
      grow[i] += dz * act.input[i];
      dx[i] += dz * row[i];
    }
  }

  for (std::size_t s = 0; s < act.slots.size(); ++s) {
    const auto& src = act.slots[s];
    const double* g = dx.data() + s * dim;
    if (src.kind == SlotSource::Kind::Token) {
      double* dst = grad.data() + src.row * dim;
      for (std::size_t j = 0; j < dim; ++j) dst[j] += g[j];
    } else if (src.kind == SlotSource::Kind::Agg) {
      // AGG = sum_i w_i e(d_i), so each digit receives w_i times the slot gradient.
      const WeightVector w = weights(src.digits.size());
      for (std::size_t i = 0; i < src.digits.size(); ++i) {
        double* dst = grad.data() + vocab_row(std::string_view(src.digits).substr(i, 1)) * dim;
        for (std::size_t j = 0; j < dim; ++j) dst[j] += w.values[i] * g[j];
      }
    }
  }
}

std::vector<std::vector<double>> ToyModel::logits(const lexer::TokenSequence& tokens) const {
  return forward(tokens).logits;
}

std::string ToyModel::predict(const lexer::TokenSequence& tokens) const {
  const auto l = logits(tokens);
  std::vector<std::size_t> symbols;
  for (const auto& row : l) {
    symbols.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return decode_answer(symbols);
}

Objective ToyModel::objective(std::span<const Instance* const> batch, double lambda, bool use_aux,
                              std::vector<double>* gradient) const {
  if (batch.empty()) throw DomainError("empty batch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda outside [0, 1]");
  if (gradient) gradient->assign(params_.size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double ce_weight = use_aux ? lambda : 1.0;
  const double aux_weight = use_aux ? 1.0 - lambda : 0.0;

  Objective obj;
  for (const Instance* inst : batch) {
    const Activations act = forward(inst->tokens);
    const auto targets = encode_answer(inst->gold);
    const auto ce = loss::cross_entropy(act.logits, targets);

    // Aux loss over the digit positions the gold answer occupies; the
    // distributions are softmaxes restricted to the ten digit logits.
    const std::string_view gold_digits =
        std::string_view(inst->gold).substr(inst->gold.front() == '-' ? 1 : 0);
    const std::size_t first = kOutputPositions - gold_digits.size();
    std::vector<std::vector<double>> q;
    for (std::size_t p = first; p < kOutputPositions; ++p) {
      q.push_back(loss::softmax(std::span<const double>(act.logits[p]).first(10)));
    }
    const auto aux = loss::soft_aux_loss(q, gold_digits, reference_, loss::DistributionCheck::None);

    obj.ce += ce.loss;
    obj.aux += aux.loss;
    obj.total += ce_weight * ce.loss + aux_weight * aux.loss;

    if (!gradient) continue;
    std::vector<std::vector<double>> dlogits(kOutputPositions, std::vector<double>(kAlphabet, 0.0));
    for (std::size_t p = 0; p < kOutputPositions; ++p) {
      for (std::size_t s = 0; s < kAlphabet; ++s) {
        dlogits[p][s] = ce_weight * ce.gradient[p][s] * inv_b;
      }
    }
    if (aux_weight != 0.0 && !aux.clamped) {
      for (std::size_t i = 0; i < q.size(); ++i) {
        const auto& qi = q[i];
        const auto& gi = aux.gradient[i];
        double mean = 0.0;
        for (std::size_t s = 0; s < qi.size(); ++s) mean += qi[s] * gi[s];
        for (std::size_t s = 0; s < qi.size(); ++s) {
          dlogits[first + i][s] += aux_weight * inv_b * qi[s] * (gi[s] - mean);
        }
      }
    }
    backward(act, dlogits, *gradient);
  }
  // divide once so a batch of identical losses averages back exactly
  const auto b = static_cast<double>(batch.size());
  obj.ce /= b;
  obj.aux /= b;
  obj.total /= b;
  return obj;
}

std::pair<double, double> evaluate(const ToyModel& model, std::span<const Instance> data) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(data.size());
  for (const auto& inst : data) pairs.emplace_back(model.predict(inst.tokens), inst.gold);
  const auto scores = metrics::batch_scores(pairs);
  return {scores.accuracy_percent, scores.mean_cer_percent};
}

TrainingTrace train(ToyModel& model, const Dataset& data, const TrainConfig& config) {
  check_train_config(config);
  if (data.train.empty() || data.dev.empty()) throw DomainError("train and dev splits must be non-empty");

  std::vector<const Instance*> order;
  for (const auto& inst : data.train) order.push_back(&inst);
  const std::vector<const Instance*> all = order;

  Rng rng(config.seed);
  std::vector<double> grad;
  TrainingTrace trace;
  auto params = model.parameters();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const auto batch = std::span<const Instance* const>(order).subspan(start, end - start);
      const auto obj = model.objective(batch, config.lambda, config.use_aux_loss, &grad);
      if (!std::isfinite(obj.total)) {
        throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch));
      }
      for (std::size_t p = 0; p < params.size(); ++p) params[p] -= config.learning_rate * grad[p];
    }

    const auto obj = model.objective(all, config.lambda, config.use_aux_loss, nullptr);
    if (!std::isfinite(obj.total)) {
      throw DivergenceError("non-finite loss after epoch " + std::to_string(epoch));
    }
    const auto [accuracy, cer] = evaluate(model, data.dev);
    trace.push_back({epoch, obj.total, obj.ce, obj.aux, accuracy, cer});
  }
  return trace;
}

std::string trace_csv(const TrainingTrace& trace) {
  std::string out = "epoch,total,ce,aux,dev_accuracy,dev_cer\n";
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.total, r.ce,
                  r.aux, r.dev_accuracy, r.dev_cer);
    out += buf;
  }
  return out;
}

std::vector<AblationConfig> default_ablation_configs() {
  using lexer::TokenScheme;
  return {
      {"Digits", TokenScheme::FDigits, false},
      {"[AGG] + Digits", TokenScheme::FAggDigits, false},
      {"Digits + [AGG]", TokenScheme::FDigitsAgg, false},
      {"[PAUSE] + Digits", TokenScheme::FPauseDigits, false},
      {"Digits + Aux Loss", TokenScheme::FDigits, true},
  };
}

std::vector<AblationRow> ablation_report(const ToyTask& task,
                                         std::span<const AblationConfig> configs,
                                         const TrainConfig& train_config,
                                         const ModelConfig& model_config) {
  if (configs.size() < 2) throw DomainError("an ablation needs at least two configs");
  std::vector<AblationRow> rows;
  for (const auto& c : configs) {
    ModelConfig mc = model_config;
    mc.scheme = c.scheme;
    TrainConfig tc = train_config;
    tc.use_aux_loss = c.use_aux_loss;
    if (!c.use_aux_loss) tc.lambda = 1.0;

    ToyModel model(mc);
    const Dataset data = make_dataset(task, c.scheme);
    train(model, data, tc);
    const auto [accuracy, cer] = evaluate(model, data.dev);
    rows.push_back({c, tc.lambda, accuracy, cer, 0.0, 0.0});
  }
  for (auto& r : rows) {
    r.accuracy_delta = r.accuracy - rows.front().accuracy;
    r.cer_delta = r.cer - rows.front().cer;
  }
  return rows;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "row,scheme,aux_loss,lambda,accuracy,cer,accuracy_delta,cer_delta\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "\"%s\",%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.config.name.c_str(), std::string(lexer::scheme_name(r.config.scheme)).c_str(),
                  r.config.use_aux_loss ? 1 : 0, r.lambda, r.accuracy, r.cer, r.accuracy_delta,
                  r.cer_delta);
    out += buf;
  }
  return out;
}

}  // namespace numbra::toy
