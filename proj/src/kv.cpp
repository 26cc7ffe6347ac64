#include "ctfsim/kv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ctfsim/errors.hpp"

namespace ctfsim::kv {

namespace {

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

bool Record::has(std::string_view key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return true;
  return false;
}

const std::string& Record::get(std::string_view key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  throw DataError("missing key '" + std::string(key) + "' in record");
}

double Record::get_double(std::string_view key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || !trim(std::string_view(end)).empty())
    throw DataError("value of '" + std::string(key) + "' is not a number: '" + s + "'");
  return v;
}

long long Record::get_int(std::string_view key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || !trim(std::string_view(end)).empty())
    throw DataError("value of '" + std::string(key) + "' is not an integer: '" + s + "'");
  return v;
}

std::string Record::get_or(std::string_view key, std::string fallback) const {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  return fallback;
}

void Record::set(std::string_view key, std::string value) {
  for (auto& [k, v] : fields) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  fields.emplace_back(std::string(key), std::move(value));
}

void Record::set_double(std::string_view key, double v) { set(key, format_double(v)); }

void Record::set_int(std::string_view key, long long v) { set(key, std::to_string(v)); }

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

Document parse(std::istream& in) {
  Document doc;
  Record cur;
  std::string line;
  int lineno = 0;
  auto flush = [&] {
    if (!cur.fields.empty()) {
      doc.records.push_back(std::move(cur));
      cur = Record{};
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (s.empty()) {
      flush();
      continue;
    }
    if (s.front() == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      throw DataError("line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                      std::string(s) + "'");
    std::string_view k = trim(s.substr(0, eq));
    std::string_view v = trim(s.substr(eq + 1));
    if (k.empty())
      throw DataError("line " + std::to_string(lineno) + ": empty key");
    cur.fields.emplace_back(std::string(k), std::string(v));
  }
  flush();
  return doc;
}

Document parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

Document load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse(in);
}

std::string serialize(const Document& doc) {
  std::string out;
  for (size_t i = 0; i < doc.records.size(); ++i) {
    if (i) out += '\n';
    for (const auto& [k, v] : doc.records[i].fields) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
  }
  return out;
}

void save_file(const std::string& path, const Document& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << serialize(doc);
  if (!out) throw DataError("write failed: '" + path + "'");
}

}  // namespace ctfsim::kv
