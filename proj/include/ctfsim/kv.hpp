#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctfsim::kv {

// One record of "key = value" lines. Field order is preserved so that a
// parse/serialize round trip is byte-stable, which reproducible artifact
// files depend on.
struct Record {
  std::vector<std::pair<std::string, std::string>> fields;

  bool has(std::string_view key) const;
  // Throw DataError when the key is absent or the value does not parse.
  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  long long get_int(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;

  // Replaces an existing field in place, appends otherwise.
  void set(std::string_view key, std::string value);
  void set_double(std::string_view key, double v);
  void set_int(std::string_view key, long long v);

  bool operator==(const Record&) const = default;
};

// Records separated by blank lines; '#' lines are comments.
struct Document {
  std::vector<Record> records;

  bool operator==(const Document&) const = default;
};

// Shortest decimal form that parses back to the identical double
// (at most 17 significant digits).
std::string format_double(double v);

Document parse(std::istream& in);
Document parse_string(const std::string& text);
Document load_file(const std::string& path);  // DataError on I/O failure
std::string serialize(const Document& doc);
void save_file(const std::string& path, const Document& doc);

}  // namespace ctfsim::kv
