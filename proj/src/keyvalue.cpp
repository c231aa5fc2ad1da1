#include "fairdtd/keyvalue.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairdtd/error.hpp"

namespace fairdtd {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void KeyValue::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void KeyValue::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValue::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void KeyValue::set(const std::string& key, unsigned long long value) {
  set(key, std::to_string(value));
}

std::optional<std::string> KeyValue::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string KeyValue::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw SchemaError("manifest is missing key '" + key + "'");
  return *v;
}

double KeyValue::require_double(const std::string& key) const {
  const std::string s = require(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    throw SchemaError("manifest key '" + key + "' is not a number: " + s);
  }
}

unsigned long long KeyValue::require_uint(const std::string& key) const {
  const std::string s = require(key);
  try {
    std::size_t pos = 0;
    if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("manifest key '" + key + "' is not an unsigned integer: " + s);
  }
}

long long KeyValue::require_int(const std::string& key) const {
  const std::string s = require(key);
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("manifest key '" + key + "' is not an integer: " + s);
  }
}

std::string KeyValue::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

KeyValue KeyValue::parse(const std::string& text) {
  KeyValue kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("manifest line " + std::to_string(lineno) + " has no '='");
    }
    kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

void KeyValue::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_string();
  if (!out) throw IoError("write failed for " + path.string());
}

KeyValue KeyValue::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace fairdtd
