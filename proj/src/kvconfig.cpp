#include "crashforge/kvconfig.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crashforge/errors.hpp"

namespace crashforge {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text, std::string_view origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(kv.origin_ + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(kv.origin_ + ":" + std::to_string(line_no) + ": empty key");
    }
    if (kv.entries_.contains(key)) {
      throw ConfigError(kv.origin_ + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.lines_[key] = line_no;
    kv.entries_.emplace(std::move(key), std::move(value));
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

const std::string& KeyValueFile::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
  return it->second;
}

double KeyValueFile::number(const std::string& key) const {
  const std::string& value = text(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError(origin_ + ":" + std::to_string(lines_.at(key)) + ": '" + key +
                      "' is not a finite number: '" + value + "'");
  }
  return out;
}

bool KeyValueFile::boolean(const std::string& key) const {
  const std::string& value = text(key);
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError(origin_ + ":" + std::to_string(lines_.at(key)) + ": '" + key +
                    "' is not a boolean: '" + value + "'");
}

}  // namespace crashforge
