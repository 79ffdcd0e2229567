#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace numbra {

/// Token -> vector store. Vectors are contiguous rows of `dim` doubles;
/// tokens keep insertion order so saved files are stable.
class EmbeddingTable {
 public:
  /// dim must be positive (DomainError otherwise).
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool contains(std::string_view token) const;

  /// Appends a row. DomainError on a duplicate token or wrong length.
  void add(std::string token, std::span<const double> values);

  /// MissingToken if absent.
  std::span<const double> at(std::string_view token) const;
  std::span<double> at(std::string_view token);

  std::span<const double> row(std::size_t index) const;
  std::span<double> row(std::size_t index);

  /// Row index of the token, MissingToken if absent.
  std::size_t index_of(std::string_view token) const;

  bool operator==(const EmbeddingTable& other) const;

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::size_t dim_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
  std::vector<double> values_;
};

/// Digits "0".."9", "." and the marker tokens produced by synth_table.
std::vector<std::string> synth_vocabulary();

/// Deterministic unit-norm vectors for synth_vocabulary(); the same
/// (dim, seed) yields a bit-identical table on every platform. dim >= 2.
EmbeddingTable synth_table(std::size_t dim, std::uint64_t seed);

/// Reads the word2vec-style text format:
///   line 1: "<vocab_count> <dim>"
///   then one "<token> <v1> ... <vdim>" line per token.
/// FormatError on malformed content, IoError when the file can't be read.
EmbeddingTable load_table(const std::filesystem::path& path);
EmbeddingTable parse_table(std::string_view text);

/// Writes the same format with 17 significant digits per value.
void save_table(const EmbeddingTable& table, const std::filesystem::path& path);
std::string format_table(const EmbeddingTable& table);

}  // namespace numbra
