#pragma once

#include <map>
#include <string>
#include <vector>

namespace textvae {

// Flat key=value run configuration.  Lines are `key = value`, `#` starts a
// comment, blank lines are skipped.  Later assignments override earlier ones,
// so CLI overrides can be applied by re-setting keys after parsing.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Keys present in the file but never read by any getter; used to reject
  // typos.  Getters mark keys as consumed.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> entries_;
  mutable std::map<std::string, bool> consumed_;
};

}  // namespace textvae
