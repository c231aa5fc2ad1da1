#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fairdtd {

/// Ordered `key = value` text used for manifests. Lines starting with '#'
/// are comments. Insertion order is preserved on write.
class KeyValue {
 public:
  void set(const std::string& key, std::string value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, unsigned long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, std::size_t value) {
    set(key, static_cast<unsigned long long>(value));
  }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  std::optional<std::string> get(const std::string& key) const;
  /// Throws SchemaError when missing.
  std::string require(const std::string& key) const;
  double require_double(const std::string& key) const;
  long long require_int(const std::string& key) const;
  unsigned long long require_uint(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  static KeyValue parse(const std::string& text);

  void write(const std::filesystem::path& path) const;
  static KeyValue read(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal form that round-trips exactly ("%.17g").
std::string format_double(double v);

}  // namespace fairdtd
