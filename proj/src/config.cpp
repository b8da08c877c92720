#include "lidkit/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lidkit/error.h"

namespace lidkit {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw ParseError("not a number: '" + text + "'");
  }
  return value;
}

long parse_long(const std::string& text) {
  const std::string t = trim(text);
  long value = 0;
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw ParseError("not an integer: '" + text + "'");
  }
  return value;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    if (cfg.entries_.count(key)) throw ParseError("duplicate key '" + key + "'", lineno);
    cfg.entries_[key] = trim(line.substr(eq + 1));
    cfg.lines_[key] = lineno;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& KeyValueConfig::raw(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidArgument("missing config key '" + key + "'");
  return it->second;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {
template <typename F>
auto with_key(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError("config key '" + key + "': " + e.what());
  }
}
}  // namespace

double KeyValueConfig::number(const std::string& key) const {
  return with_key(key, [&] { return parse_double(raw(key)); });
}

double KeyValueConfig::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long KeyValueConfig::integer(const std::string& key) const {
  return with_key(key, [&] { return parse_long(raw(key)); });
}

long KeyValueConfig::integer_or(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool KeyValueConfig::boolean_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::string KeyValueConfig::string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

std::vector<std::string> KeyValueConfig::list(const std::string& key) const {
  const std::string& v = raw(key);
  if (v.empty()) return {};
  return split(v, ',');
}

std::vector<double> KeyValueConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    out.push_back(with_key(key, [&] { return parse_double(item); }));
  }
  return out;
}

}  // namespace lidkit
