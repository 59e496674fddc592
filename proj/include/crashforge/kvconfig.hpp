#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace crashforge {

/// Flat `key = value` text: one entry per line, `#` starts a comment, blank
/// lines ignored. Duplicate keys and lines without `=` are ConfigErrors.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, std::string_view origin = "<text>");
  static KeyValueFile load(const std::filesystem::path& path);

  const std::map<std::string, std::string>& entries() const { return entries_; }
  bool contains(const std::string& key) const { return entries_.contains(key); }

  /// Numeric value of key; ConfigError naming the origin and line if the
  /// text is not a finite number.
  double number(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const std::string& text(const std::string& key) const;

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> entries_;
  std::map<std::string, int> lines_;
};

}  // namespace crashforge
