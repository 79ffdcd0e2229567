#include "numbra/lexer.hpp"

#include "numbra/error.hpp"

#include <array>

namespace numbra::lexer {

namespace {

constexpr bool is_ascii_digit(char c) noexcept { return c >= '0' && c <= '9'; }

struct SchemeSpelling {
  TokenScheme scheme;
  std::string_view name;
};

constexpr std::array<SchemeSpelling, 5> kSchemeNames{{
    {TokenScheme::DigitsOnly, "digits"},
    {TokenScheme::FDigits, "f-digits"},
    {TokenScheme::FAggDigits, "f-agg-digits"},
    {TokenScheme::FDigitsAgg, "f-digits-agg"},
    {TokenScheme::FPauseDigits, "f-pause-digits"},
}};

Token marker(Token::Kind kind, std::string_view spelling, std::size_t span) {
  return Token{kind, std::string(spelling), span};
}

}  // namespace

std::string_view scheme_name(TokenScheme scheme) {
  for (const auto& s : kSchemeNames) {
    if (s.scheme == scheme) return s.name;
  }
  return "unknown";
}

TokenScheme parse_scheme(std::string_view name) {
  for (const auto& s : kSchemeNames) {
    if (s.name == name) return s.scheme;
  }
  throw DomainError("unknown token scheme '" + std::string(name) + "'");
}

std::size_t LexedText::number_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.is_number() ? 1 : 0;
  return n;
}

std::vector<std::string> LexedText::numbers() const {
  std::vector<std::string> out;
  for (const auto& s : segments) {
    if (s.is_number()) out.push_back(s.text);
  }
  return out;
}

std::string LexedText::surface() const {
  std::string out;
  for (const auto& s : segments) out += s.text;
  return out;
}

std::size_t match_number_at(std::string_view text, std::size_t pos) noexcept {
  std::size_t i = pos;
  while (i < text.size() && is_ascii_digit(text[i])) ++i;
  const std::size_t integer_digits = i - pos;
  // Optional group (\d*\.) only counts when at least one digit follows it.
  if (i + 1 < text.size() && text[i] == '.' && is_ascii_digit(text[i + 1])) {
    std::size_t j = i + 1;
    while (j < text.size() && is_ascii_digit(text[j])) ++j;
    return j - pos;
  }
  return integer_digits;
}

bool is_number(std::string_view text) noexcept {
  return !text.empty() && match_number_at(text, 0) == text.size();
}

LexedText detect_numbers(std::string_view text) {
  LexedText out;
  std::size_t literal_start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t len = match_number_at(text, pos);
    if (len == 0) {
      ++pos;
      continue;
    }
    if (pos > literal_start) {
      out.segments.push_back({Segment::Kind::Literal,
                              std::string(text.substr(literal_start, pos - literal_start)),
                              literal_start});
    }
    out.segments.push_back({Segment::Kind::Number, std::string(text.substr(pos, len)), pos});
    pos += len;
    literal_start = pos;
  }
  if (literal_start < text.size() || out.segments.empty()) {
    out.segments.push_back(
        {Segment::Kind::Literal, std::string(text.substr(literal_start)), literal_start});
  }
  return out;
}

TokenSequence emit_tokens(const LexedText& lexed, TokenScheme scheme) {
  TokenSequence out;
  const bool marked = scheme != TokenScheme::DigitsOnly;
  std::size_t span = 0;
  for (const auto& seg : lexed.segments) {
    if (!seg.is_number()) {
      if (!seg.text.empty()) out.push_back({Token::Kind::Text, seg.text, std::nullopt});
      continue;
    }
    if (marked) out.push_back(marker(Token::Kind::Open, kOpenMarker, span));
    if (scheme == TokenScheme::FAggDigits) out.push_back(marker(Token::Kind::Agg, kAggToken, span));
    if (scheme == TokenScheme::FPauseDigits) {
      out.push_back(marker(Token::Kind::Pause, kPauseToken, span));
    }
    for (char c : seg.text) out.push_back({Token::Kind::Digit, std::string(1, c), span});
    if (scheme == TokenScheme::FDigitsAgg) out.push_back(marker(Token::Kind::Agg, kAggToken, span));
    if (marked) out.push_back(marker(Token::Kind::Close, kCloseMarker, span));
    ++span;
  }
  return out;
}

std::string round_trip(const TokenSequence& tokens) {
  std::string out;
  bool open = false;
  for (const auto& t : tokens) {
    switch (t.kind) {
      case Token::Kind::Open:
        if (open) throw MalformedSequence("nested [F] marker");
        open = true;
        break;
      case Token::Kind::Close:
        if (!open) throw MalformedSequence("[/F] without matching [F]");
        open = false;
        break;
      case Token::Kind::Agg:
      case Token::Kind::Pause:
        if (!open) throw MalformedSequence("placeholder outside a number");
        break;
      case Token::Kind::Text:
        if (open) throw MalformedSequence("text token inside a number");
        out += t.text;
        break;
      case Token::Kind::Digit:
        out += t.text;
        break;
    }
  }
  if (open) throw MalformedSequence("[F] without matching [/F]");
  return out;
}

const std::string& render(const Token& token) { return token.text; }

}  // namespace numbra::lexer
