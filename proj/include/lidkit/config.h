#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lidkit {

// Flat `key = value` configuration. Lines starting with '#' are comments,
// trailing `# ...` is stripped, list values are comma separated.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  const std::string& raw(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::map<std::string, std::size_t> lines_;
};

double parse_double(const std::string& text);
long parse_long(const std::string& text);
std::string trim(const std::string& text);
std::vector<std::string> split(const std::string& text, char sep);

}  // namespace lidkit
