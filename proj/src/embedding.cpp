#include "numbra/embedding.hpp"

#include "numbra/error.hpp"
#include "numbra/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace numbra {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DomainError("embedding dim must be positive");
}

bool EmbeddingTable::contains(std::string_view token) const {
  return index_.find(token) != index_.end();
}

void EmbeddingTable::add(std::string token, std::span<const double> values) {
  if (values.size() != dim_) {
    throw DomainError("vector for '" + token + "' has " + std::to_string(values.size()) +
                      " components, table dim is " + std::to_string(dim_));
  }
  if (token.empty() || token.find_first_of(" \t\r\n") != std::string::npos) {
    throw DomainError("token '" + token + "' is empty or contains whitespace");
  }
  if (contains(token)) throw DomainError("duplicate token '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  values_.insert(values_.end(), values.begin(), values.end());
}

std::size_t EmbeddingTable::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw MissingToken(std::string(token));
  return it->second;
}

std::span<const double> EmbeddingTable::at(std::string_view token) const {
  return row(index_of(token));
}

std::span<double> EmbeddingTable::at(std::string_view token) { return row(index_of(token)); }

std::span<const double> EmbeddingTable::row(std::size_t index) const {
  return {values_.data() + index * dim_, dim_};
}

std::span<double> EmbeddingTable::row(std::size_t index) {
  return {values_.data() + index * dim_, dim_};
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
  return dim_ == other.dim_ && tokens_ == other.tokens_ && values_ == other.values_;
}

std::vector<std::string> synth_vocabulary() {
  return {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9", ".", "[F]", "[/F]", "[PAUSE]"};
}

EmbeddingTable synth_table(std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw DomainError("synth_table requires dim >= 2");
  EmbeddingTable table(dim);
  Rng rng(seed);
  std::vector<double> v(dim);
  for (auto& token : synth_vocabulary()) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& x : v) {
        x = rng.uniform(-1.0, 1.0);
        norm += x * x;
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-6);
    for (auto& x : v) x /= norm;
    table.add(std::move(token), v);
  }
  return table;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

EmbeddingTable parse_table(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && split_fields(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw FormatError("empty embedding file");

  auto header = split_fields(lines[0]);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) ||
      dim == 0) {
    throw FormatError("bad header line '" + std::string(lines[0]) + "'");
  }
  if (lines.size() - 1 != count) {
    throw FormatError("header declares " + std::to_string(count) + " tokens, file has " +
                      std::to_string(lines.size() - 1));
  }

  EmbeddingTable table(dim);
  std::vector<double> v(dim);
  for (std::size_t n = 1; n < lines.size(); ++n) {
    auto fields = split_fields(lines[n]);
    const std::string where = "line " + std::to_string(n + 1);
    if (fields.size() != dim + 1) {
      throw FormatError(where + ": expected " + std::to_string(dim + 1) + " fields, got " +
                        std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      if (!parse_number(fields[j + 1], v[j])) {
        throw FormatError(where + ": bad value '" + std::string(fields[j + 1]) + "'");
      }
      if (!std::isfinite(v[j])) throw FormatError(where + ": non-finite value");
    }
    std::string token(fields[0]);
    if (table.contains(token)) throw FormatError(where + ": duplicate token '" + token + "'");
    table.add(std::move(token), v);
  }
  return table;
}

EmbeddingTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return parse_table(buf.str());
}

std::string format_table(const EmbeddingTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.tokens()[i];
    for (double x : table.row(i)) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << format_table(table);
  out.flush();
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

}  // namespace numbra
