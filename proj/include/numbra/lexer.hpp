#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace numbra::lexer {

// Number detection follows the pattern (\d*\.)?\d+ with ASCII digits,
// scanned leftmost-longest. Signs and thousands separators stay literal.

enum class TokenScheme {
  DigitsOnly,    // 1 2 3
  FDigits,       // [F] 1 2 3 [/F]
  FAggDigits,    // [F] [AGG] 1 2 3 [/F]
  FDigitsAgg,    // [F] 1 2 3 [AGG] [/F]
  FPauseDigits,  // [F] [PAUSE] 1 2 3 [/F]
};

/// CLI spelling: digits, f-digits, f-agg-digits, f-digits-agg, f-pause-digits.
std::string_view scheme_name(TokenScheme scheme);
/// Inverse of scheme_name; throws DomainError on an unknown name.
TokenScheme parse_scheme(std::string_view name);

inline constexpr std::string_view kOpenMarker = "[F]";
inline constexpr std::string_view kCloseMarker = "[/F]";
inline constexpr std::string_view kAggToken = "[AGG]";
inline constexpr std::string_view kPauseToken = "[PAUSE]";

struct Segment {
  enum class Kind { Literal, Number };
  Kind kind = Kind::Literal;
  std::string text;
  std::size_t offset = 0;  // byte offset in the source text

  bool is_number() const noexcept { return kind == Kind::Number; }
};

/// Source text split into literal runs and number spans. Concatenating the
/// segment texts reproduces the source exactly.
struct LexedText {
  std::vector<Segment> segments;

  std::size_t number_count() const noexcept;
  std::vector<std::string> numbers() const;
  std::string surface() const;
};

/// Length of the longest match of the number pattern starting at `pos`, or 0.
std::size_t match_number_at(std::string_view text, std::size_t pos) noexcept;

/// True when the whole string is one match of the number pattern.
bool is_number(std::string_view text) noexcept;

LexedText detect_numbers(std::string_view text);

struct Token {
  enum class Kind { Text, Digit, Open, Close, Agg, Pause };
  Kind kind = Kind::Text;
  std::string text;  // surface for Text and Digit; marker spelling otherwise
  // Index of the number span (0-based, in order of appearance) that this
  // token belongs to. Empty for Text tokens.
  std::optional<std::size_t> span;

  bool operator==(const Token&) const = default;
};

using TokenSequence = std::vector<Token>;

/// Expands every number span into single-character tokens (a decimal point is
/// its own token) and wraps it per the scheme. Empty literal segments vanish.
TokenSequence emit_tokens(const LexedText& lexed, TokenScheme scheme);

inline TokenSequence tokenize(std::string_view text, TokenScheme scheme) {
  return emit_tokens(detect_numbers(text), scheme);
}

/// Inverse of emit_tokens. Throws MalformedSequence on unbalanced markers,
/// placeholders outside a number, or text inside one.
std::string round_trip(const TokenSequence& tokens);

/// Rendering used by the CLI: markers literally, digits and text as-is.
const std::string& render(const Token& token);

}  // namespace numbra::lexer
